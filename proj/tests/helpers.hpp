// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "covcsi/common.hpp"
#include "covcsi/covgen.hpp"
#include "covcsi/pilots.hpp"
#include "covcsi/rng.hpp"

namespace covcsi::testing {

// Covariance profile supported on coordinate rows [offset, offset+r);
// eigenvalues positive descending with sum M (trace normalized).
inline CovarianceProfile block_profile(int M, int offset, int r, Rng& rng) {
    VectorXd lam(r);
    for (int i = 0; i < r; ++i) lam(i) = 0.2 + rng.uniform01();
    std::sort(lam.data(), lam.data() + r, std::greater<double>());
    lam *= static_cast<double>(M) / lam.sum();
    MatrixXcd sigma = MatrixXcd::Zero(M, M);
    for (int i = 0; i < r; ++i) sigma(offset + i, offset + i) = lam(i);
    return covgen::make_profile(sigma);
}

// Profile with prescribed eigenvalues on the leading coordinates.
inline CovarianceProfile diag_profile(int M, const VectorXd& lam) {
    MatrixXcd sigma = MatrixXcd::Zero(M, M);
    for (int i = 0; i < lam.size(); ++i) sigma(i, i) = lam(i);
    return covgen::make_profile(sigma);
}

struct Instance {
    SystemParams params;
    std::vector<CovarianceProfile> covs;
    PilotSet pilots;
};

// Random small instance with mixed covariance/pilot models:
// M in [4,16], K in [0,6], L in [1,8].
inline Instance random_instance(std::uint64_t seed) {
    Rng root(seed);
    Instance inst;
    const int M = 4 + static_cast<int>(root.bits() % 13);
    const int K = static_cast<int>(root.bits() % 7);
    const int L = 1 + static_cast<int>(root.bits() % 8);
    inst.params.num_antennas = M;
    inst.params.num_interferers = K;
    inst.params.pilot_length = L;
    inst.params.snr.resize(K + 1);
    inst.params.pathloss.resize(K + 1);
    for (int k = 0; k <= K; ++k) {
        inst.params.snr(k) = root.uniform(0.1, 30.0);
        inst.params.pathloss(k) = root.uniform(0.5, 2.0);
    }
    for (int k = 0; k <= K; ++k) {
        Rng cs = root.substream(100 + k);
        if (root.bits() % 2 == 0) {
            const int r = 1 + static_cast<int>(root.bits() % M);
            inst.covs.push_back(covgen::gen_max_entropy(M, r, cs));
        } else {
            inst.covs.push_back(
                covgen::gen_one_ring_uca_random_azimuth(M, root.uniform(0.05, 0.6), cs, 64));
        }
    }
    if (L >= K + 1 && root.bits() % 3 == 0) {
        inst.pilots = pilots::gen_orthogonal(L, K + 1);
    } else {
        Rng ps = root.substream(999);
        inst.pilots = pilots::gen_random_phase(L, K + 1, ps);
    }
    return inst;
}

} // namespace covcsi::testing
