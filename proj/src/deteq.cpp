// SPDX-License-Identifier: Apache-2.0
#include "covcsi/deteq.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "covcsi/detail/lowrank.hpp"
#include "covcsi/mse.hpp"

namespace covcsi::deteq {

namespace {

// Damped fixed-point driver. Map must write F(x) into `next`; distance
// returns the norm of (next - x) relative to max(norm(next), 1e-300).
// Stops on the undamped map residual, so converged solutions satisfy
// their defining equation to tol directly.
template <class State, class MapFn, class RelDistFn, class BlendFn>
FixedPointDiag iterate(State& x, State& next, double tol, int max_iters, double damping,
                       MapFn&& map, RelDistFn&& rel_dist, BlendFn&& blend) {
    FixedPointDiag diag;
    diag.damping_used = damping;
    double prev_res = std::numeric_limits<double>::infinity();
    int growth_streak = 0;
    for (int it = 1; it <= max_iters; ++it) {
        map(x, next);
        const double res = rel_dist(x, next);
        diag.iterations = it;
        diag.residual = res;
        if (res <= tol) {
            blend(x, next, 1.0); // land on the converged map value
            diag.converged = true;
            return diag;
        }
        if (res > prev_res) {
            if (++growth_streak >= 3 && diag.damping_used > 0.25) {
                diag.damping_used = std::max(0.25, diag.damping_used * 0.5);
                growth_streak = 0;
            }
        } else {
            growth_streak = 0;
        }
        prev_res = res;
        blend(x, next, diag.damping_used);
    }
    diag.converged = false;
    return diag;
}

double rel_norm(double diff, double scale) { return diff / std::max(scale, 1e-300); }

} // namespace

MatrixXcd block_trace(const MatrixXcd& B, int M) {
    if (B.rows() != B.cols()) throw std::domain_error("block_trace: matrix must be square");
    if (M < 1 || B.rows() % M != 0) throw std::domain_error("block_trace: dimension not divisible by M");
    const int L = static_cast<int>(B.rows()) / M;
    MatrixXcd out = MatrixXcd::Zero(M, M);
    for (int i = 0; i < L; ++i)
        out += B.block(static_cast<Eigen::Index>(i) * M, static_cast<Eigen::Index>(i) * M, M, M);
    return out;
}

Thm1Result solve_thm1(const PilotSet& pilots, const CovarianceProfile& cov0,
                      const SystemParams& params, const std::vector<int>& interferer_ranks,
                      const FixedPointOptions& opts, const std::optional<VectorXd>& init) {
    params.validate();
    const int K = params.num_interferers;
    const int M = params.num_antennas;
    const int L = params.pilot_length;
    if (pilots.length() != L || pilots.num_users() != K + 1)
        throw std::domain_error("solve_thm1: pilot dimensions inconsistent with params");
    if (static_cast<int>(interferer_ranks.size()) != K)
        throw std::domain_error("solve_thm1: need K interferer ranks");
    const double beta0 = params.pathloss(0);
    const double rho0 = params.snr(0);

    Thm1Result out;
    if (K == 0) {
        // empty interference: S_L = I, p0^H S^{-1} p0 = ||p0||^2
        const double q0 = pilots.matrix.col(0).squaredNorm();
        out.xi = 0.0;
        for (int i = 0; i < cov0.rank; ++i)
            out.xi += beta0 * cov0.eigenvalues(i) / (1.0 + rho0 * cov0.eigenvalues(i) * q0);
        out.xi /= M;
        out.diag.converged = true;
        return out;
    }

    VectorXd taus(K);
    for (int k = 0; k < K; ++k) {
        if (interferer_ranks[k] < 1 || interferer_ranks[k] > M)
            throw std::domain_error("solve_thm1: interferer rank out of [1, M]");
        taus(k) = static_cast<double>(interferer_ranks[k]) / M;
    }

    const double tol = opts.tol.value_or(kVectorTol);
    VectorXd iota = init.value_or(VectorXd::Zero(K));
    if (iota.size() != K) throw std::domain_error("solve_thm1: init has wrong size");
    VectorXd next(K);

    // One iteration: factor S_L (L x L), push all pilots through S^{-1},
    // then refresh every iota_k.
    double q0 = 0.0;
    auto map = [&](const VectorXd& cur, VectorXd& dst) {
        MatrixXcd S = MatrixXcd::Identity(L, L);
        for (int k = 0; k < K; ++k) {
            const double w = params.snr(k + 1) / (1.0 + cur(k));
            S.noalias() += w * pilots.matrix.col(k + 1) * pilots.matrix.col(k + 1).adjoint();
        }
        Eigen::LLT<MatrixXcd> llt(S);
        const MatrixXcd Sp = llt.solve(pilots.matrix); // S^{-1} [p_0 .. p_K]
        q0 = pilots.matrix.col(0).dot(Sp.col(0)).real();
        double c0 = 0.0; // (1/M) sum_i rho0 l_i / (1 + rho0 l_i q0)
        for (int i = 0; i < cov0.rank; ++i) {
            const double rl = rho0 * cov0.eigenvalues(i);
            c0 += rl / (1.0 + rl * q0);
        }
        c0 /= M;
        for (int k = 0; k < K; ++k) {
            const double a = pilots.matrix.col(k + 1).dot(Sp.col(k + 1)).real();
            const cplx b = pilots.matrix.col(k + 1).dot(Sp.col(0));
            dst(k) = params.snr(k + 1) / taus(k) * (a - std::norm(b) * c0);
        }
    };
    out.diag = iterate(
        iota, next, tol, opts.max_iters, opts.damping, map,
        [](const VectorXd& a, const VectorXd& b) { return rel_norm((b - a).norm(), b.norm()); },
        [](VectorXd& a, const VectorXd& b, double d) { a += d * (b - a); });

    map(iota, next); // refresh q0 at the final iota
    out.iota = iota;
    out.xi = 0.0;
    for (int i = 0; i < cov0.rank; ++i)
        out.xi += beta0 * cov0.eigenvalues(i) / (1.0 + rho0 * cov0.eigenvalues(i) * q0);
    out.xi /= M;
    return out;
}

Thm3Result solve_thm3(const std::vector<CovarianceProfile>& interferer_covs,
                      const SystemParams& params, const FixedPointOptions& opts,
                      const std::optional<MatrixXcd>& init) {
    params.validate();
    const int K = params.num_interferers;
    const int M = params.num_antennas;
    const int L = params.pilot_length;
    if (static_cast<int>(interferer_covs.size()) != K)
        throw std::domain_error("solve_thm3: need K interferer covariances");
    for (const auto& c : interferer_covs)
        if (c.dim() != M) throw std::domain_error("solve_thm3: covariance dimension mismatch");

    Thm3Result out;
    if (K == 0) {
        out.gamma_matrix = MatrixXcd::Zero(M, M);
        out.diag.converged = true;
        return out;
    }

    int total_rank = 0;
    for (const auto& c : interferer_covs) total_rank += c.rank;
    MatrixXcd stacked(M, total_rank); // [U_1 .. U_K]
    {
        int ofs = 0;
        for (const auto& c : interferer_covs) {
            stacked.middleCols(ofs, c.rank) = c.eigenvectors;
            ofs += c.rank;
        }
    }

    const double tol = opts.tol.value_or(kMatrixTol);
    MatrixXcd gamma = init.value_or(MatrixXcd::Zero(M, M));
    if (gamma.rows() != M || gamma.cols() != M) throw std::domain_error("solve_thm3: init has wrong size");
    gamma = 0.5 * (gamma + gamma.adjoint()).eval();
    MatrixXcd next(M, M);

    // RHS term k rewritten on the eigenbasis of Sigma_k:
    //   rho_k Sigma_k (I + L rho_k W Sigma_k)^{-1} = rho_k U_k (Lambda_k^{-1}
    //   + L rho_k U_k^H W U_k)^{-1} U_k^H,   W = (Gamma+I)^{-1},
    // which keeps every iterate Hermitian PSD by construction.
    MatrixXcd scaled(M, total_rank);
    auto map = [&](const MatrixXcd& cur, MatrixXcd& dst) {
        Eigen::LLT<MatrixXcd> llt(cur + MatrixXcd::Identity(M, M));
        const MatrixXcd WU = llt.solve(stacked);
        int ofs = 0;
        for (int k = 0; k < K; ++k) {
            const auto& c = interferer_covs[k];
            const double rho = params.snr(k + 1);
            MatrixXcd inner = L * rho * (stacked.middleCols(ofs, c.rank).adjoint() *
                                         WU.middleCols(ofs, c.rank));
            inner.diagonal() += c.eigenvalues.cwiseInverse().cast<cplx>();
            inner = 0.5 * (inner + inner.adjoint()).eval();
            scaled.middleCols(ofs, c.rank).noalias() =
                stacked.middleCols(ofs, c.rank) * (rho * inner.llt().solve(MatrixXcd::Identity(c.rank, c.rank)));
            ofs += c.rank;
        }
        dst.noalias() = scaled * stacked.adjoint();
        dst = 0.5 * (dst + dst.adjoint()).eval();
    };
    out.diag = iterate(
        gamma, next, tol, opts.max_iters, opts.damping, map,
        [](const MatrixXcd& a, const MatrixXcd& b) { return rel_norm((b - a).norm(), b.norm()); },
        [](MatrixXcd& a, const MatrixXcd& b, double d) { a += d * (b - a); });
    out.gamma_matrix = gamma;
    return out;
}

double xi_thm3(const MatrixXcd& gamma_matrix, const CovarianceProfile& cov0,
               const SystemParams& params) {
    const int M = params.num_antennas;
    if (gamma_matrix.rows() != M || gamma_matrix.cols() != M)
        throw std::domain_error("xi_thm3: gamma matrix dimension mismatch");
    const double beta0 = params.pathloss(0);
    const double rho0 = params.snr(0);
    const int L = params.pilot_length;
    Eigen::LLT<MatrixXcd> llt(gamma_matrix + MatrixXcd::Identity(M, M));
    const MatrixXcd WU = llt.solve(cov0.eigenvectors);
    double xi = 0.0;
    for (int i = 0; i < cov0.rank; ++i) {
        const double q = cov0.eigenvectors.col(i).dot(WU.col(i)).real();
        xi += beta0 * cov0.eigenvalues(i) / (1.0 + L * rho0 * cov0.eigenvalues(i) * q);
    }
    return xi / M;
}

ALResult compute_A_L(const PilotSet& pilots, const std::vector<CovarianceProfile>& interferer_covs,
                     const SystemParams& params, int dense_threshold) {
    params.validate();
    const int M = params.num_antennas;
    const int L = params.pilot_length;
    const int K = params.num_interferers;
    if (static_cast<int>(interferer_covs.size()) != K)
        throw std::domain_error("compute_A_L: need K interferer covariances");

    ALResult out;
    if (K == 0) {
        out.a_matrix = MatrixXcd::Identity(M, M);
        out.lambda_min = 1.0;
        return out;
    }

    if (static_cast<long>(M) * L <= dense_threshold) {
        std::vector<CovarianceProfile> covs;
        covs.reserve(K + 1);
        covs.push_back(interferer_covs.front()); // placeholder for user 0, unused (first_user = 1)
        for (const auto& c : interferer_covs) covs.push_back(c);
        const MatrixXcd A = mse::interference_matrix_dense(pilots, covs, params, 1);
        out.a_matrix = block_trace(A.inverse(), M) / static_cast<double>(L);
    } else {
        // blktr[A^{-1}] = L I_M - sum_l B^(l) (I + B^H B)^{-1} B^(l)^H
        std::vector<CovarianceProfile> covs;
        covs.reserve(K + 1);
        covs.push_back(interferer_covs.front());
        for (const auto& c : interferer_covs) covs.push_back(c);
        detail::LowRankFactor fac(pilots, covs, params, 1);
        MatrixXcd acc = MatrixXcd::Zero(M, M);
        for (int ell = 0; ell < L; ++ell) {
            const MatrixXcd Bl = fac.block_row(pilots, ell);
            acc.noalias() += Bl * fac.capacitance.solve(Bl.adjoint());
        }
        out.a_matrix = (static_cast<double>(L) * MatrixXcd::Identity(M, M) - acc) / static_cast<double>(L);
    }
    out.a_matrix = 0.5 * (out.a_matrix + out.a_matrix.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(out.a_matrix, Eigen::EigenvaluesOnly);
    out.lambda_min = es.eigenvalues().minCoeff();
    return out;
}

Prop1Report check_prop1(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                        const SystemParams& params) {
    params.validate();
    const int n = params.num_users();
    if (static_cast<int>(covs.size()) != n) throw std::domain_error("check_prop1: need covs for users 0..K");
    Prop1Report rep;
    rep.snr_sum = params.snr.sum();
    for (const auto& c : covs) rep.max_cov_norm = std::max(rep.max_cov_norm, c.eigenvalues(0));

    int total = 0;
    for (const auto& c : covs) total += c.rank;
    MatrixXcd gram(total, total); // U^H P~^H P~ U, blocks (p_k^H p_k') U_k^H U_k'
    int ra = 0;
    for (int a = 0; a < n; ++a) {
        int rb = 0;
        for (int b = 0; b < n; ++b) {
            const cplx pg = pilots.matrix.col(a).dot(pilots.matrix.col(b));
            gram.block(ra, rb, covs[a].rank, covs[b].rank) =
                pg * (covs[a].eigenvectors.adjoint() * covs[b].eigenvectors);
            rb += covs[b].rank;
        }
        ra += covs[a].rank;
    }
    gram /= static_cast<double>(n);
    gram = 0.5 * (gram + gram.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
    rep.cond_b_stat = es.eigenvalues().minCoeff();
    const double scale = std::max(1.0, es.eigenvalues().maxCoeff());
    rep.b_satisfied = rep.cond_b_stat > 1e-12 * scale;
    return rep;
}

GammaResult solve_gamma_scalar(const VectorXd& taus, const VectorXd& snrs, int L,
                               const FixedPointOptions& opts, double init) {
    if (taus.size() != snrs.size()) throw std::domain_error("solve_gamma_scalar: taus/snrs size mismatch");
    if (L < 1) throw std::domain_error("solve_gamma_scalar: L must be >= 1");
    const int K = static_cast<int>(taus.size());
    GammaResult out;
    for (int k = 0; k < K; ++k) {
        if (!(taus(k) > 0.0) || taus(k) > 1.0)
            throw std::domain_error("solve_gamma_scalar: tau must lie in (0, 1]");
        if (taus(k) == 1.0) out.diag.warning = "tau = 1 lies outside the lim sup tau < 1 regime";
    }
    if (K == 0) {
        out.diag.converged = true;
        return out;
    }

    const double tol = opts.tol.value_or(kScalarTol);
    double gamma = init;
    double next = 0.0;
    auto map = [&](const double& cur, double& dst) {
        double acc = 0.0;
        for (int k = 0; k < K; ++k) {
            const double t = taus(k);
            const double a = 1.0 + t + t * (1.0 + cur) / (L * snrs(k));
            acc += 2.0 * t * (1.0 + cur) / (a + std::sqrt(a * a - 4.0 * t));
        }
        dst = acc / L;
    };
    auto diag = iterate(
        gamma, next, tol, opts.max_iters, opts.damping, map,
        [](const double& a, const double& b) { return rel_norm(std::abs(b - a), std::max(std::abs(b), 1.0)); },
        [](double& a, const double& b, double d) { a += d * (b - a); });
    diag.warning = out.diag.warning;
    out.diag = diag;
    out.gamma = gamma;
    return out;
}

double xi_thm4(const VectorXd& cov0_eigenvalues, double beta0, double rho0, int L, int M,
               double gamma) {
    return mse::mse_interference_free(cov0_eigenvalues, beta0, rho0, L / (1.0 + gamma), M);
}

GammaInfinityResult gamma_infinity(const model::AsymptoticRatios& ratios, const VectorXd& snrs,
                                   int L, double threshold_a, double threshold_b) {
    GammaInfinityResult out;
    const int K = static_cast<int>(snrs.size());
    if (K == 0) {
        out.regime = Regime::interference_free;
        out.gamma_inf = 0.0;
        return out;
    }
    if (!ratios.alpha_L) throw std::domain_error("gamma_infinity: alpha_L required when K > 0");
    const double alpha = *ratios.alpha_L;
    const double tb = ratios.tau_bar;
    for (int k = 0; k < K; ++k) {
        out.stat_a += 1.0 / (1.0 - tb / alpha + 1.0 / (L * snrs(k)));
        out.stat_b += std::sqrt(1.0 / (L * snrs(k)));
    }
    out.stat_a /= K;
    out.stat_b /= K;
    if (out.stat_b < threshold_b) {
        out.regime = Regime::pilot_contaminated;
        out.gamma_inf = tb / (alpha - tb);
    } else if (out.stat_a < threshold_a) {
        out.regime = Regime::interference_free;
        out.gamma_inf = 0.0;
    }
    return out;
}

ProbeStats trace_lemma_probe(const MatrixXcd& A, int M, int L, int trials, const Rng& rng) {
    if (A.rows() != static_cast<Eigen::Index>(M) * L || A.rows() != A.cols())
        throw std::domain_error("trace_lemma_probe: A must be ML x ML");
    if (trials < 1) throw std::domain_error("trace_lemma_probe: trials must be >= 1");
    const MatrixXcd bt = block_trace(A, M);
    ProbeStats stats;
    double acc = 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng tr = rng.substream(static_cast<std::uint64_t>(t));
        VectorXcd x(L);
        for (int i = 0; i < L; ++i) x(i) = tr.unit_phase();
        MatrixXcd quad = MatrixXcd::Zero(M, M);
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j)
                quad += std::conj(x(i)) * x(j) *
                        A.block(static_cast<Eigen::Index>(i) * M, static_cast<Eigen::Index>(j) * M, M, M);
        MatrixXcd diff = quad - bt;
        diff = 0.5 * (diff + diff.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(diff, Eigen::EigenvaluesOnly);
        const double dev = es.eigenvalues().cwiseAbs().maxCoeff() / L;
        acc += dev;
        stats.max_deviation = std::max(stats.max_deviation, dev);
    }
    stats.mean_deviation = acc / trials;
    return stats;
}

} // namespace covcsi::deteq
