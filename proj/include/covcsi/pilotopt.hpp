// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "covcsi/common.hpp"
#include "covcsi/rng.hpp"

namespace covcsi::pilotopt {

struct LengthApprox {
    int l_approx = 1;                   // ceil((K+1) tau0 + K tau_bar)
    bool orthogonal_preferable = false; // tau0 + tau_bar >= 1
};

/// Closed-form approximation of the minimum pilot length.
LengthApprox approx_min_length(int K, double tau0, double tau_bar);

struct PilotLengthResult {
    int l_star = 0;        // first L in 1..K+1 meeting the target (K+1 when infeasible)
    int l_approx = 0;      // closed-form approximation from the realized ranks
    double delta = 0.0;    // (K+1) / l_star
    double delta_bar = 0.0;// 1 / (tau0 + tau_bar)
    bool feasible = false; // some L <= K+1 met the target
    double target_mse = 0.0;
    std::vector<double> mse_by_length; // exact MSE at each L tried, index L-1
};

struct SearchOptions {
    int quadrature_nodes = 512; // unused, kept for config symmetry
};

/// Exhaustive search for the minimum pilot length whose covariance-aided
/// MSE is at or below the conventional strategy with orthogonal pilots
/// of length K+1. The covariance realization stays fixed; each candidate
/// L draws a fresh random-phase pilot set from substream (rng, L).
/// params.pilot_length is ignored. Ties count as meeting the target.
PilotLengthResult search_min_length(const std::vector<CovarianceProfile>& covs,
                                    const SystemParams& params, const Rng& rng,
                                    const SearchOptions& opts = {});

/// (K+1) / L.
double reduction_ratio(int K, int L);

/// Large-system limit 1 / (tau0 + tau_bar).
double limit_ratio(double tau0, double tau_bar);

} // namespace covcsi::pilotopt
