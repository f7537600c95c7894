// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "covcsi/common.hpp"

namespace covcsi::model {

/// Dimensionless ratios of the large-system regime.
struct AsymptoticRatios {
    std::optional<double> alpha_L;  // L/K, absent when K = 0
    VectorXd tau;                   // r_k/M per user, size K+1
    double tau_bar = 0.0;           // mean of tau over interferers 1..K
};

struct IdentifiabilityReport {
    double necessary_condition_value = 0.0; // (1/L) sum_k r_k/M
    bool necessary_ok = false;              // value <= 1
    int rank = 0;                           // numerical rank of (P kron I_M) U
    int sum_ranks = 0;
    bool identifiable = false;              // rank == sum_ranks
};

AsymptoticRatios derive_ratios(const SystemParams& params, const std::vector<int>& ranks);

IdentifiabilityReport check_identifiability(const SystemParams& params, const PilotSet& pilots,
                                            const std::vector<CovarianceProfile>& covs);

/// Stacked matrix [p_0 (x) U_0, ..., p_K (x) U_K] of size ML x sum r_k,
/// whose rank decides identifiability.
MatrixXcd stacked_pilot_eigvec_matrix(const PilotSet& pilots,
                                      const std::vector<CovarianceProfile>& covs);

} // namespace covcsi::model
