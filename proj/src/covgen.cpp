// SPDX-License-Identifier: Apache-2.0
#include "covcsi/covgen.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "covcsi/matrix_io.hpp"

namespace covcsi::covgen {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Eigendecompose a Hermitian PSD matrix, clip round-off negatives, keep
// eigenpairs above the relative cutoff, descending order.
void decompose(CovarianceProfile& p, double rel_threshold) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(p.sigma);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    VectorXd vals = es.eigenvalues(); // ascending
    const int M = p.dim();
    const double lmax = vals(M - 1);
    if (!(lmax > 0.0)) throw std::domain_error("covariance matrix has no positive eigenvalue");
    int r = 0;
    for (int i = 0; i < M; ++i)
        if (vals(i) > 0.0 && vals(i) / lmax > rel_threshold) ++r;
    p.rank = r;
    p.eigenvalues.resize(r);
    p.eigenvectors.resize(M, r);
    for (int i = 0; i < r; ++i) {
        p.eigenvalues(i) = vals(M - 1 - i);
        p.eigenvectors.col(i) = es.eigenvectors().col(M - 1 - i);
    }
}

} // namespace

int effective_rank(const VectorXd& eigenvalues, double rel_threshold) {
    if (eigenvalues.size() == 0) throw std::domain_error("effective_rank: empty eigenvalue list");
    if (!(eigenvalues(0) > 0.0)) throw std::domain_error("effective_rank: leading eigenvalue must be positive");
    int r = 0;
    for (int i = 0; i < eigenvalues.size(); ++i)
        if (eigenvalues(i) / eigenvalues(0) > rel_threshold) ++r;
    return r;
}

double default_rank_threshold(int M) {
    return static_cast<double>(M) * std::numeric_limits<double>::epsilon();
}

CovarianceProfile gen_max_entropy(int M, int r, Rng& rng) {
    if (M < 1) throw std::domain_error("gen_max_entropy: M must be >= 1");
    if (r < 1 || r > M) throw std::domain_error("gen_max_entropy: need 1 <= r <= M");
    MatrixXcd X(M, r);
    for (int j = 0; j < r; ++j)
        for (int i = 0; i < M; ++i) X(i, j) = rng.cnormal();
    CovarianceProfile p;
    p.model = CovModel::max_entropy;
    p.sigma = (X * X.adjoint()) / static_cast<double>(r);
    p.sigma = 0.5 * (p.sigma + p.sigma.adjoint()).eval();
    decompose(p, default_rank_threshold(M));
    return p;
}

QuadRule gauss_legendre(int n) {
    if (n < 1) throw std::domain_error("gauss_legendre: n must be >= 1");
    // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights
    // come from the first eigenvector components.
    VectorXd diag = VectorXd::Zero(n);
    VectorXd sub(n > 1 ? n - 1 : 0);
    for (int i = 1; i < n; ++i) sub(i - 1) = i / std::sqrt(4.0 * i * i - 1.0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    QuadRule q;
    q.nodes = es.eigenvalues();
    q.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        const double v = es.eigenvectors()(0, i);
        q.weights(i) = 2.0 * v * v;
    }
    return q;
}

CovarianceProfile gen_one_ring_uca(int M, double azimuth, double angular_spread,
                                   int quadrature_nodes) {
    if (M < 1) throw std::domain_error("gen_one_ring_uca: M must be >= 1");
    if (!(angular_spread > 0.0)) throw std::domain_error("gen_one_ring_uca: angular_spread must be > 0");
    if (quadrature_nodes < 16) throw std::domain_error("gen_one_ring_uca: need >= 16 quadrature nodes");

    const QuadRule q = gauss_legendre(quadrature_nodes);
    const double half_width = std::sqrt(3.0) * angular_spread;

    // Sigma = sum_q (w_q/2) a(v_q) a(v_q)^dagger with steering vector
    // [a(v)]_n = exp(-j M/2 cos(azimuth + v - theta_n)); PSD by construction.
    MatrixXcd A(M, quadrature_nodes);
    for (int iq = 0; iq < quadrature_nodes; ++iq) {
        const double v = azimuth + half_width * q.nodes(iq);
        const double amp = std::sqrt(0.5 * q.weights(iq));
        for (int n = 0; n < M; ++n) {
            const double theta_n = n * 2.0 * kPi / M;
            const double arg = -0.5 * M * std::cos(v - theta_n);
            A(n, iq) = amp * cplx(std::cos(arg), std::sin(arg));
        }
    }
    CovarianceProfile p;
    p.model = CovModel::one_ring_uca;
    p.sigma = A * A.adjoint();
    p.sigma = 0.5 * (p.sigma + p.sigma.adjoint()).eval();
    decompose(p, default_rank_threshold(M));

    // Exact trace normalization on the retained spectrum.
    const double scale = static_cast<double>(M) / p.eigenvalues.sum();
    p.eigenvalues *= scale;
    p.sigma = p.eigenvectors * p.eigenvalues.asDiagonal() * p.eigenvectors.adjoint();
    p.sigma = 0.5 * (p.sigma + p.sigma.adjoint()).eval();
    return p;
}

CovarianceProfile gen_one_ring_uca_random_azimuth(int M, double angular_spread, Rng& rng,
                                                  int quadrature_nodes) {
    return gen_one_ring_uca(M, rng.phase(), angular_spread, quadrature_nodes);
}

CovarianceProfile make_profile(const MatrixXcd& sigma, CovModel tag, double rel_threshold) {
    if (sigma.rows() != sigma.cols()) throw std::domain_error("make_profile: matrix must be square");
    CovarianceProfile p;
    p.model = tag;
    p.sigma = 0.5 * (sigma + sigma.adjoint());
    decompose(p, rel_threshold < 0.0 ? default_rank_threshold(static_cast<int>(sigma.rows()))
                                     : rel_threshold);
    return p;
}

double assumption3_norm(const std::vector<CovarianceProfile>& covs, int L) {
    if (covs.empty()) return 0.0;
    const int M = covs.front().dim();
    MatrixXcd S = MatrixXcd::Zero(M, M);
    for (const auto& c : covs) {
        if (c.dim() != M) throw std::domain_error("assumption3_norm: mixed dimensions");
        S.noalias() += c.eigenvectors * c.eigenvectors.adjoint();
    }
    S /= static_cast<double>(L);
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

void save_profile(const std::string& path, const CovarianceProfile& profile) {
    std::ostringstream header;
    header << profile.dim() << ' ' << profile.rank << ' ' << to_string(profile.model);
    io::save_complex_matrix(path, profile.sigma, header.str());
}

CovarianceProfile load_profile(const std::string& path) {
    std::string header;
    const MatrixXcd sigma = io::load_complex_matrix(path, &header);
    std::istringstream hs(header);
    int M = 0, r = 0;
    std::string tag;
    hs >> M >> r >> tag;
    if (M != sigma.rows() || sigma.rows() != sigma.cols())
        throw std::runtime_error("covariance file header inconsistent with matrix body");
    CovModel model = CovModel::explicit_matrix;
    if (tag == "max_entropy") model = CovModel::max_entropy;
    else if (tag == "one_ring_uca") model = CovModel::one_ring_uca;
    CovarianceProfile p = make_profile(sigma, model);
    return p;
}

} // namespace covcsi::covgen
