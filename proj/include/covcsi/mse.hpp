// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "covcsi/common.hpp"
#include "covcsi/rng.hpp"

namespace covcsi::mse {

/// Per-eigenmode decomposition of the covariance-aided estimation MSE of
/// user 0. total_mse = sum of per_mode_contribution;
/// per_mode_contribution_i = beta_0 lambda_{0,i} / (1 + sinr_i) / M.
struct MseBreakdown {
    double total_mse = 0.0;
    VectorXd per_mode_sinr;
    VectorXd per_mode_contribution;
};

enum class Estimator { conventional, cov_aided };

struct SimResult {
    double mse = 0.0;
    double std_error = 0.0;
    long trials = 0;
};

/// Covariance-agnostic LMMSE with orthogonal pilots: beta0 / (1 + L rho0).
double mse_conventional(double beta0, double rho0, double L);

/// Error covariance of the conventional estimate of h_0:
/// beta0 / (1+L rho0)^2 * (Sigma_0 + L rho0 I). When Tr(Sigma_0) strays
/// from M by more than 1e-6*M, *trace_warning is set (result unchanged).
MatrixXcd error_cov_conventional(const CovarianceProfile& cov0, double beta0, double rho0, int L,
                                 bool* trace_warning = nullptr);

/// Exact per-mode SINRs of the covariance-aided estimator:
///   sinr_i = rho0 l_{0,i} v_i^H A_i^{-1} v_i,  v_i = p0 (x) u_{0,i},
/// where A_i sums every received rank-one mode except v_i's own
/// (interferers k = 1..K plus user 0's other eigenmodes) plus I_{ML}.
/// (1/M) sum beta0 l_i / (1 + sinr_i) is exactly the error-covariance
/// trace. Evaluated through the low-rank factorization of the full
/// matrix (an R x R solve, R = sum of all retained ranks).
VectorXd sinr_modes(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                    const SystemParams& params);

/// Same quantity from the assembled ML x ML system; reference path for
/// the low-rank route.
VectorXd sinr_modes_dense(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                          const SystemParams& params);

/// Assembled sum_{k >= first_user} rho_k (p_k p_k^H (x) Sigma_k) + I_{ML}.
MatrixXcd interference_matrix_dense(const PilotSet& pilots,
                                    const std::vector<CovarianceProfile>& covs,
                                    const SystemParams& params, int first_user);

MseBreakdown mse_cov_aided_exact(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                                 const SystemParams& params);

/// Error covariance of the covariance-aided estimate of h_0:
/// beta0 (Sigma_0 - rho0 Sigma_0 P0~^H (P~ D Sigma D P~^H + I)^{-1} P0~ Sigma_0).
/// (1/M) Tr of the result equals mse_cov_aided_exact().total_mse.
MatrixXcd error_cov_cov_aided(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                              const SystemParams& params);

/// Interference-free covariance-aided MSE, (1/M) sum beta0 l_i / (1 + L rho0 l_i).
/// L may be fractional (equivalent pilot length).
double mse_interference_free(const VectorXd& eigenvalues, double beta0, double rho0, double L, int M);

/// Jensen bound beta0 / (1 + L rho0 M / r0); tight iff all eigenvalues equal.
double jensen_upper_bound(double beta0, double rho0, double L, int M, int r0);

/// Estimator-level Monte Carlo: draws channels h_k = sqrt(beta_k) U_k
/// diag(sqrt(lambda_k)) eta_k and AWGN, runs the selected estimator for
/// user 0 and returns the empirical (1/M) E||h_0 - h_0^||^2 with its
/// standard error. Trial t uses substream (rng, t), so the result is
/// independent of any parallel schedule.
SimResult simulate_mse(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                       const SystemParams& params, Estimator estimator, long trials, const Rng& rng);

/// Order-independent sum (pairwise reduction).
double pairwise_sum(const std::vector<double>& values);

} // namespace covcsi::mse
