// SPDX-License-Identifier: Apache-2.0
#include "covcsi/pilotopt.hpp"

#include <cmath>

#include "covcsi/mse.hpp"
#include "covcsi/pilots.hpp"

namespace covcsi::pilotopt {

LengthApprox approx_min_length(int K, double tau0, double tau_bar) {
    if (K < 0) throw std::domain_error("approx_min_length: K must be >= 0");
    if (!(tau0 > 0.0) || tau0 > 1.0) throw std::domain_error("approx_min_length: tau0 must lie in (0, 1]");
    if (tau_bar < 0.0 || tau_bar > 1.0) throw std::domain_error("approx_min_length: tau_bar must lie in [0, 1]");
    LengthApprox out;
    out.l_approx = std::max(1, static_cast<int>(std::ceil((K + 1) * tau0 + K * tau_bar)));
    out.orthogonal_preferable = tau0 + tau_bar >= 1.0;
    return out;
}

PilotLengthResult search_min_length(const std::vector<CovarianceProfile>& covs,
                                    const SystemParams& params, const Rng& rng,
                                    const SearchOptions&) {
    const int K = params.num_interferers;
    const int M = params.num_antennas;
    if (static_cast<int>(covs.size()) != K + 1)
        throw std::domain_error("search_min_length: need covariances for users 0..K");

    PilotLengthResult res;
    res.target_mse = mse::mse_conventional(params.pathloss(0), params.snr(0), K + 1);

    const double tau0 = static_cast<double>(covs[0].rank) / M;
    double tau_bar = 0.0;
    for (int k = 1; k <= K; ++k) tau_bar += static_cast<double>(covs[k].rank) / M;
    if (K > 0) tau_bar /= K;
    res.l_approx = approx_min_length(K, tau0, tau_bar).l_approx;
    res.delta_bar = limit_ratio(tau0, tau_bar);

    SystemParams point = params;
    for (int L = 1; L <= K + 1; ++L) {
        point.pilot_length = L;
        Rng stream = rng.substream(static_cast<std::uint64_t>(L));
        const PilotSet pilots = pilots::gen_random_phase(L, K + 1, stream);
        const double value = mse::mse_cov_aided_exact(pilots, covs, point).total_mse;
        res.mse_by_length.push_back(value);
        if (value <= res.target_mse) {
            res.l_star = L;
            res.feasible = true;
            break;
        }
    }
    if (!res.feasible) res.l_star = K + 1;
    res.delta = reduction_ratio(K, res.l_star);
    return res;
}

double reduction_ratio(int K, int L) {
    if (L < 1) throw std::domain_error("reduction_ratio: L must be >= 1");
    return static_cast<double>(K + 1) / L;
}

double limit_ratio(double tau0, double tau_bar) {
    if (!(tau0 + tau_bar > 0.0)) throw std::domain_error("limit_ratio: tau0 + tau_bar must be > 0");
    return 1.0 / (tau0 + tau_bar);
}

} // namespace covcsi::pilotopt
