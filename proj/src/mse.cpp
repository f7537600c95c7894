// SPDX-License-Identifier: Apache-2.0
#include "covcsi/mse.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "covcsi/detail/lowrank.hpp"

namespace covcsi::mse {

using detail::LowRankFactor;

namespace {

void validate_instance(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                       const SystemParams& params) {
    params.validate();
    if (pilots.length() != params.pilot_length || pilots.num_users() != params.num_users())
        throw std::domain_error("pilot matrix dimensions inconsistent with params");
    if (static_cast<int>(covs.size()) != params.num_users())
        throw std::domain_error("need one covariance profile per user (0..K)");
    for (const auto& c : covs)
        if (c.dim() != params.num_antennas)
            throw std::domain_error("covariance dimension inconsistent with params");
}

VectorXd sinr_from_quadform(const VectorXd& quad, const CovarianceProfile& cov0, double rho0) {
    VectorXd sinr(cov0.rank);
    for (int i = 0; i < cov0.rank; ++i)
        sinr(i) = rho0 * cov0.eigenvalues(i) * std::max(quad(i), 0.0);
    return sinr;
}

MseBreakdown breakdown_from_sinr(const VectorXd& sinr, const CovarianceProfile& cov0, double beta0,
                                 int M) {
    MseBreakdown out;
    out.per_mode_sinr = sinr;
    out.per_mode_contribution.resize(cov0.rank);
    for (int i = 0; i < cov0.rank; ++i)
        out.per_mode_contribution(i) = beta0 * cov0.eigenvalues(i) / (1.0 + sinr(i)) / M;
    out.total_mse = out.per_mode_contribution.sum();
    return out;
}

} // namespace

double mse_conventional(double beta0, double rho0, double L) {
    if (!(beta0 > 0.0) || !(rho0 > 0.0) || !(L >= 1.0))
        throw std::domain_error("mse_conventional: need beta0 > 0, rho0 > 0, L >= 1");
    return beta0 / (1.0 + L * rho0);
}

MatrixXcd error_cov_conventional(const CovarianceProfile& cov0, double beta0, double rho0, int L,
                                 bool* trace_warning) {
    const int M = cov0.dim();
    if (trace_warning) {
        const double tr = cov0.sigma.trace().real();
        *trace_warning = std::abs(tr - M) > 1e-6 * M;
    }
    const double c = beta0 / ((1.0 + L * rho0) * (1.0 + L * rho0));
    return c * (cov0.sigma + L * rho0 * MatrixXcd::Identity(M, M));
}

// The SINR of mode i is rho0 l_{0,i} s_i with s_i = v_i^H A_i^{-1} v_i,
// v_i = p0 (x) u_{0,i}, and A_i the full received-signal correlation with
// only mode i's own rank-one term removed. Removing that term from the
// full matrix F via the rank-one inversion identity gives
//   s_i = t_i / (1 - rho0 l_{0,i} t_i),   t_i = v_i^H F^{-1} v_i,
// so one factorization of F serves every mode.
VectorXd sinr_modes(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                    const SystemParams& params) {
    validate_instance(pilots, covs, params);
    const CovarianceProfile& cov0 = covs[0];
    const double p0_norm2 = pilots.matrix.col(0).squaredNorm();

    LowRankFactor fac(pilots, covs, params, 0);
    VectorXd t = VectorXd::Constant(cov0.rank, p0_norm2);
    const MatrixXcd W0 = fac.project(pilots, covs, 0, cov0.eigenvectors); // R x r0
    const MatrixXcd S = fac.capacitance.solve(W0);
    for (int i = 0; i < cov0.rank; ++i) t(i) -= W0.col(i).dot(S.col(i)).real();

    VectorXd quad(cov0.rank);
    for (int i = 0; i < cov0.rank; ++i) {
        const double denom = 1.0 - params.snr(0) * cov0.eigenvalues(i) * t(i);
        quad(i) = t(i) / std::max(denom, 1e-300);
    }
    return sinr_from_quadform(quad, cov0, params.snr(0));
}

MatrixXcd interference_matrix_dense(const PilotSet& pilots,
                                    const std::vector<CovarianceProfile>& covs,
                                    const SystemParams& params, int first_user) {
    const int M = params.num_antennas;
    const int L = params.pilot_length;
    const Eigen::Index N = static_cast<Eigen::Index>(M) * L;
    MatrixXcd A = MatrixXcd::Identity(N, N);
    for (int k = first_user; k < params.num_users(); ++k)
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j)
                A.block(static_cast<Eigen::Index>(i) * M, static_cast<Eigen::Index>(j) * M, M, M) +=
                    params.snr(k) * pilots.matrix(i, k) * std::conj(pilots.matrix(j, k)) *
                    covs[k].sigma;
    return A;
}

VectorXd sinr_modes_dense(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                          const SystemParams& params) {
    validate_instance(pilots, covs, params);
    const int M = params.num_antennas;
    const int L = params.pilot_length;
    const Eigen::Index N = static_cast<Eigen::Index>(M) * L;
    const CovarianceProfile& cov0 = covs[0];

    // explicit inverse is acceptable here: this is the reference path
    const MatrixXcd Finv = interference_matrix_dense(pilots, covs, params, 0).inverse();
    VectorXd quad(cov0.rank);
    for (int i = 0; i < cov0.rank; ++i) {
        VectorXcd v(N);
        for (int ell = 0; ell < L; ++ell)
            v.segment(static_cast<Eigen::Index>(ell) * M, M) =
                pilots.matrix(ell, 0) * cov0.eigenvectors.col(i);
        const double t = v.dot(Finv * v).real();
        const double denom = 1.0 - params.snr(0) * cov0.eigenvalues(i) * t;
        quad(i) = t / std::max(denom, 1e-300);
    }
    return sinr_from_quadform(quad, cov0, params.snr(0));
}

MseBreakdown mse_cov_aided_exact(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                                 const SystemParams& params) {
    const VectorXd sinr = sinr_modes(pilots, covs, params);
    return breakdown_from_sinr(sinr, covs[0], params.pathloss(0), params.num_antennas);
}

MatrixXcd error_cov_cov_aided(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                              const SystemParams& params) {
    validate_instance(pilots, covs, params);
    const CovarianceProfile& cov0 = covs[0];
    const double beta0 = params.pathloss(0);
    const double rho0 = params.snr(0);
    const double p0_norm2 = pilots.matrix.col(0).squaredNorm();

    // full interference-plus-signal factor, users 0..K
    LowRankFactor fac(pilots, covs, params, 0);
    const MatrixXcd p0_sigma0 = cov0.sigma; // P0~ Sigma_0 collapses to Sigma_0 blocks
    const MatrixXcd W = fac.project(pilots, covs, 0, p0_sigma0); // B^H (p0 (x) Sigma_0)
    MatrixXcd inner = p0_norm2 * cov0.sigma * cov0.sigma;
    inner.noalias() -= W.adjoint() * fac.capacitance.solve(W);
    MatrixXcd C = beta0 * (cov0.sigma - rho0 * inner);
    return 0.5 * (C + C.adjoint()).eval();
}

double mse_interference_free(const VectorXd& eigenvalues, double beta0, double rho0, double L,
                             int M) {
    double acc = 0.0;
    for (int i = 0; i < eigenvalues.size(); ++i)
        acc += beta0 * eigenvalues(i) / (1.0 + L * rho0 * eigenvalues(i));
    return acc / M;
}

double jensen_upper_bound(double beta0, double rho0, double L, int M, int r0) {
    if (r0 < 1 || r0 > M) throw std::domain_error("jensen_upper_bound: need 1 <= r0 <= M");
    return beta0 / (1.0 + L * rho0 * static_cast<double>(M) / r0);
}

double pairwise_sum(const std::vector<double>& values) {
    struct Impl {
        static double run(const double* v, size_t n) {
            if (n <= 8) {
                double s = 0.0;
                for (size_t i = 0; i < n; ++i) s += v[i];
                return s;
            }
            const size_t h = n / 2;
            return run(v, h) + run(v + h, n - h);
        }
    };
    return Impl::run(values.data(), values.size());
}

SimResult simulate_mse(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                       const SystemParams& params, Estimator estimator, long trials,
                       const Rng& rng) {
    validate_instance(pilots, covs, params);
    if (trials < 1) throw std::domain_error("simulate_mse: trials must be >= 1");
    const int M = params.num_antennas;
    const int L = params.pilot_length;
    const int n = params.num_users();
    const double sigma2 = params.noise_var.value_or(1.0);
    const double noise_std = std::sqrt(0.5 * sigma2);

    VectorXd tx_power(n);
    for (int k = 0; k < n; ++k)
        tx_power(k) =
            params.tx_power ? (*params.tx_power)(k) : params.snr(k) * sigma2 / params.pathloss(k);

    // Estimator (ii) through the low-rank factor. With B the scaled mode
    // stack (F = I + B B^H) and z = (I + B^H B)^{-1} B^H y,
    //   h0^ = (rho0/sqrt(P0)) Sigma_0 P0~^H F^{-1} y
    //       = U_0 diag(sqrt(rho0 l_{0,i} / P0)) z_{block 0},
    // which avoids forming the near-cancelling difference y - B z.
    std::optional<LowRankFactor> fac;
    VectorXd mode_scale;
    if (estimator == Estimator::cov_aided) {
        fac.emplace(pilots, covs, params, 0);
        mode_scale = (params.snr(0) * covs[0].eigenvalues.array() / tx_power(0)).sqrt().matrix();
    }

    const double conv_scale = params.snr(0) / std::sqrt(tx_power(0)) / (1.0 + L * params.snr(0));
    const VectorXcd p0_conj = pilots.matrix.col(0).conjugate();

    std::vector<double> values(static_cast<size_t>(trials));
    MatrixXcd Y(M, L);
    VectorXcd h0(M), hhat(M);
    for (long t = 0; t < trials; ++t) {
        Rng tr = rng.substream(static_cast<std::uint64_t>(t));
        Y.setZero();
        for (int k = 0; k < n; ++k) {
            VectorXcd eta(covs[k].rank);
            for (int i = 0; i < covs[k].rank; ++i) eta(i) = tr.cnormal();
            const VectorXcd hk = std::sqrt(params.pathloss(k)) *
                                 (covs[k].eigenvectors *
                                  (covs[k].eigenvalues.array().sqrt() * eta.array()).matrix());
            if (k == 0) h0 = hk;
            Y.noalias() += std::sqrt(tx_power(k)) * hk * pilots.matrix.col(k).transpose();
        }
        for (int ell = 0; ell < L; ++ell)
            for (int m = 0; m < M; ++m) Y(m, ell) += cplx(noise_std * tr.normal(), noise_std * tr.normal());

        if (estimator == Estimator::conventional) {
            hhat.noalias() = conv_scale * (Y * p0_conj);
        } else {
            // z = B^H y, computed column-wise against Y
            VectorXcd z(fac->total_rank);
            for (size_t idx = 0; idx < fac->users.size(); ++idx) {
                const int k = fac->users[idx];
                const VectorXcd yk = Y * pilots.matrix.col(k).conjugate();
                z.segment(fac->offsets[idx], covs[k].rank).noalias() =
                    fac->scaled_vectors.middleCols(fac->offsets[idx], covs[k].rank).adjoint() * yk;
            }
            const VectorXcd w = fac->capacitance.solve(z);
            hhat.noalias() =
                covs[0].eigenvectors *
                (mode_scale.array() * w.segment(0, covs[0].rank).array()).matrix();
        }
        values[static_cast<size_t>(t)] = (h0 - hhat).squaredNorm() / M;
    }

    SimResult res;
    res.trials = trials;
    res.mse = pairwise_sum(values) / static_cast<double>(trials);
    if (trials > 1) {
        std::vector<double> sq(values.size());
        for (size_t i = 0; i < values.size(); ++i) {
            const double d = values[i] - res.mse;
            sq[i] = d * d;
        }
        const double var = pairwise_sum(sq) / static_cast<double>(trials - 1);
        res.std_error = std::sqrt(var / static_cast<double>(trials));
    }
    return res;
}

} // namespace covcsi::mse
