// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "covcsi/common.hpp"
#include "covcsi/model.hpp"
#include "covcsi/rng.hpp"

namespace covcsi::deteq {

struct FixedPointOptions {
    std::optional<double> tol; // solver default when unset
    int max_iters = 10000;
    double damping = 1.0;
};

/// Convergence diagnostics shared by every fixed-point solver. residual
/// is the relative norm of the last map update F(x) - x; converged means
/// residual <= tol. damping_used is the final damping factor (halved
/// automatically to 0.5 then 0.25 when the residual grows for three
/// consecutive iterations).
struct FixedPointDiag {
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
    double damping_used = 1.0;
    std::string warning;
};

constexpr double kScalarTol = 1e-12;
constexpr double kVectorTol = 1e-12;
constexpr double kMatrixTol = 1e-10;

/// Sum of the L diagonal M x M blocks of an ML x ML matrix.
MatrixXcd block_trace(const MatrixXcd& B, int M);

/// Deterministic equivalent for random interferer covariances and the
/// given deterministic pilots. Solves the K coupled scalar fixed-point
/// equations for the interference loadings iota_k (only L x L solves are
/// required), then evaluates
///   xi = (1/M) sum_i beta0 l_{0,i} / (1 + rho0 l_{0,i} p0^H S_L^{-1} p0),
///   S_L = sum_k rho_k/(1+iota_k) p_k p_k^H + I_L.
/// interferer_ranks holds r_1..r_K (ratios tau_k = r_k / M).
struct Thm1Result {
    VectorXd iota;    // size K
    double xi = 0.0;
    FixedPointDiag diag;
};
Thm1Result solve_thm1(const PilotSet& pilots, const CovarianceProfile& cov0,
                      const SystemParams& params, const std::vector<int>& interferer_ranks,
                      const FixedPointOptions& opts = {},
                      const std::optional<VectorXd>& init = std::nullopt);

/// Deterministic equivalent for deterministic covariances and random
/// pilots: iterates Gamma <- sum_k rho_k Sigma_k (I + L rho_k
/// (Gamma+I)^{-1} Sigma_k)^{-1} from Gamma = 0, symmetrizing each step.
/// covs holds interferers 1..K; params.snr(k) is indexed by user, so
/// interferer j uses snr(j+1).
struct Thm3Result {
    MatrixXcd gamma_matrix; // M x M Hermitian PSD
    FixedPointDiag diag;
};
Thm3Result solve_thm3(const std::vector<CovarianceProfile>& interferer_covs,
                      const SystemParams& params, const FixedPointOptions& opts = {},
                      const std::optional<MatrixXcd>& init = std::nullopt);

/// xi = (1/M) sum_i beta0 l_{0,i} / (1 + L rho0 l_{0,i} u_{0,i}^H (Gamma+I)^{-1} u_{0,i}).
double xi_thm3(const MatrixXcd& gamma_matrix, const CovarianceProfile& cov0,
               const SystemParams& params);

/// A_L = (1/L) blktr[(sum_k rho_k P_k~ Sigma_k P_k~^H + I_{ML})^{-1}] and
/// its smallest eigenvalue. Uses the dense ML x ML inverse when
/// ML <= dense_threshold, the low-rank resolvent otherwise.
struct ALResult {
    MatrixXcd a_matrix;
    double lambda_min = 0.0;
};
ALResult compute_A_L(const PilotSet& pilots, const std::vector<CovarianceProfile>& interferer_covs,
                     const SystemParams& params, int dense_threshold = 4096);

/// Finite-size statistics of the two sufficient conditions backing the
/// lambda_min(A_L) hypothesis: the summable-SNR statistic sum_k rho_k,
/// the largest covariance spectral norm, and the strong-identifiability
/// statistic lambda_min(U^H P~^H P~ U / (K+1)). covs holds users 0..K.
struct Prop1Report {
    double snr_sum = 0.0;
    double max_cov_norm = 0.0;
    double cond_b_stat = 0.0;
    bool b_satisfied = false;
};
Prop1Report check_prop1(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                        const SystemParams& params);

/// Scalar equivalent of the Gamma_L fixed point under random covariances:
///   gamma = (1/L) sum_k 2 tau_k (1+gamma) /
///           (1 + tau_k + tau_k(1+gamma)/(L rho_k)
///            + sqrt((1 + tau_k + tau_k(1+gamma)/(L rho_k))^2 - 4 tau_k)).
/// taus/snrs hold interferers 1..K. tau_k = 1 is accepted with a warning
/// (outside the proposition's regime but still evaluable).
struct GammaResult {
    double gamma = 0.0;
    FixedPointDiag diag;
};
GammaResult solve_gamma_scalar(const VectorXd& taus, const VectorXd& snrs, int L,
                               const FixedPointOptions& opts = {}, double init = 0.0);

/// xi = (1/M) sum_i beta0 l_{0,i} / (1 + (1+gamma)^{-1} L rho0 l_{0,i});
/// the interference-free MSE at equivalent pilot length (1+gamma)^{-1} L.
double xi_thm4(const VectorXd& cov0_eigenvalues, double beta0, double rho0, int L, int M,
               double gamma);

enum class Regime { interference_free, pilot_contaminated, indeterminate };

/// Finite-size classification of the gamma limit: stat_a =
/// (1/K) sum_k 1/(1 - tau_bar/alpha + 1/(L rho_k)), stat_b =
/// (1/K) sum_k (1/(L rho_k))^{1/2}. gamma_inf is 0 (interference-free)
/// or tau_bar/(alpha - tau_bar) (pilot-contaminated), absent when
/// indeterminate. snrs holds interferers 1..K.
struct GammaInfinityResult {
    Regime regime = Regime::indeterminate;
    std::optional<double> gamma_inf;
    double stat_a = 0.0;
    double stat_b = 0.0;
};
GammaInfinityResult gamma_infinity(const model::AsymptoticRatios& ratios, const VectorXd& snrs,
                                   int L, double threshold_a = 0.1, double threshold_b = 0.1);

/// Samples unit-modulus x and measures (1/L)||X^H A X - blktr A|| with
/// X = x (x) I_M; reports mean and max over trials.
struct ProbeStats {
    double mean_deviation = 0.0;
    double max_deviation = 0.0;
};
ProbeStats trace_lemma_probe(const MatrixXcd& A, int M, int L, int trials, const Rng& rng);

} // namespace covcsi::deteq
