// SPDX-License-Identifier: Apache-2.0
#include "covcsi/model.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

namespace covcsi {

void SystemParams::validate() const {
    if (num_antennas < 1) throw std::domain_error("num_antennas must be >= 1");
    if (pilot_length < 1) throw std::domain_error("pilot_length must be >= 1");
    if (num_interferers < 0) throw std::domain_error("num_interferers must be >= 0");
    const int n = num_users();
    if (snr.size() != n) throw std::domain_error("snr must have K+1 entries");
    if (pathloss.size() != n) throw std::domain_error("pathloss must have K+1 entries");
    for (int k = 0; k < n; ++k) {
        if (!(snr(k) > 0.0)) throw std::domain_error("snr must be strictly positive (user " + std::to_string(k) + ")");
        if (!(pathloss(k) > 0.0))
            throw std::domain_error("pathloss must be strictly positive (user " + std::to_string(k) + ")");
    }
    if (tx_power && noise_var) {
        if (tx_power->size() != n) throw std::domain_error("tx_power must have K+1 entries");
        if (!(*noise_var > 0.0)) throw std::domain_error("noise_var must be strictly positive");
        for (int k = 0; k < n; ++k) {
            const double implied = pathloss(k) * (*tx_power)(k) / *noise_var;
            if (std::abs(implied - snr(k)) > 1e-12 * std::abs(snr(k)))
                throw std::domain_error("snr inconsistent with beta*P/sigma^2 for user " + std::to_string(k));
        }
    }
}

const char* to_string(CovModel m) {
    switch (m) {
        case CovModel::max_entropy: return "max_entropy";
        case CovModel::one_ring_uca: return "one_ring_uca";
        default: return "explicit";
    }
}

const char* to_string(PilotModel m) {
    switch (m) {
        case PilotModel::orthogonal_dft: return "orthogonal_dft";
        case PilotModel::random_phase: return "random_phase";
        default: return "explicit";
    }
}

} // namespace covcsi

namespace covcsi::model {

AsymptoticRatios derive_ratios(const SystemParams& params, const std::vector<int>& ranks) {
    params.validate();
    const int n = params.num_users();
    if (static_cast<int>(ranks.size()) != n) throw std::domain_error("ranks must have K+1 entries");

    AsymptoticRatios out;
    out.tau.resize(n);
    for (int k = 0; k < n; ++k) {
        if (ranks[k] < 1 || ranks[k] > params.num_antennas)
            throw std::domain_error("rank out of [1, M] for user " + std::to_string(k));
        out.tau(k) = static_cast<double>(ranks[k]) / params.num_antennas;
    }
    const int K = params.num_interferers;
    if (K > 0) {
        out.alpha_L = static_cast<double>(params.pilot_length) / K;
        out.tau_bar = out.tau.tail(K).mean();
    } else {
        out.tau_bar = 0.0;
    }
    return out;
}

MatrixXcd stacked_pilot_eigvec_matrix(const PilotSet& pilots,
                                      const std::vector<CovarianceProfile>& covs) {
    const int L = pilots.length();
    const int M = covs.empty() ? 0 : covs.front().dim();
    int total = 0;
    for (const auto& c : covs) total += c.rank;
    MatrixXcd out(static_cast<Eigen::Index>(M) * L, total);
    int col = 0;
    for (int k = 0; k < static_cast<int>(covs.size()); ++k) {
        const auto& U = covs[k].eigenvectors;
        for (int ell = 0; ell < L; ++ell)
            out.block(static_cast<Eigen::Index>(ell) * M, col, M, covs[k].rank) = pilots.matrix(ell, k) * U;
        col += covs[k].rank;
    }
    return out;
}

IdentifiabilityReport check_identifiability(const SystemParams& params, const PilotSet& pilots,
                                            const std::vector<CovarianceProfile>& covs) {
    params.validate();
    const int M = params.num_antennas;
    const int L = params.pilot_length;
    if (pilots.length() != L || pilots.num_users() != params.num_users())
        throw std::domain_error("pilot matrix dimensions inconsistent with params");
    if (static_cast<int>(covs.size()) != params.num_users())
        throw std::domain_error("need one covariance profile per user");
    for (const auto& c : covs)
        if (c.dim() != M) throw std::domain_error("covariance dimension inconsistent with params");

    IdentifiabilityReport rep;
    for (const auto& c : covs) rep.sum_ranks += c.rank;
    rep.necessary_condition_value = static_cast<double>(rep.sum_ranks) / (static_cast<double>(L) * M);
    rep.necessary_ok = rep.necessary_condition_value <= 1.0 + 1e-15;

    const MatrixXcd PU = stacked_pilot_eigvec_matrix(pilots, covs);
    Eigen::JacobiSVD<MatrixXcd> svd(PU);
    const VectorXd sv = svd.singularValues();
    // scaled-epsilon rank rule
    const double tol = (sv.size() > 0 ? sv(0) : 0.0) * static_cast<double>(M) * L *
                       std::numeric_limits<double>::epsilon();
    rep.rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rep.rank;
    rep.identifiable = (rep.rank == rep.sum_ranks);
    return rep;
}

} // namespace covcsi::model
