// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <Eigen/Cholesky>

#include "covcsi/common.hpp"

namespace covcsi::detail {

// Low-rank factorization of A = I_{ML} + sum_{k >= first_user} rho_k
// (p_k p_k^H (x) Sigma_k) = I + B B^H, where B has one column
// sqrt(rho_k l_{k,i}) p_k (x) u_{k,i} per retained eigenmode. Only Gram
// matrices of size R = sum r_k are ever formed, so A^{-1}-quadratic
// forms cost an R x R solve instead of an ML x ML one.
struct LowRankFactor {
    std::vector<int> users;
    std::vector<int> offsets;
    int total_rank = 0;
    MatrixXcd scaled_vectors;          // M x R, columns U_k diag(sqrt(rho_k l_k))
    Eigen::LLT<MatrixXcd> capacitance; // factor of I_R + B^H B

    LowRankFactor(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                  const SystemParams& params, int first_user) {
        const int n = params.num_users();
        for (int k = first_user; k < n; ++k) users.push_back(k);
        offsets.resize(users.size(), 0);
        for (size_t idx = 0; idx < users.size(); ++idx) {
            offsets[idx] = total_rank;
            total_rank += covs[users[idx]].rank;
        }
        const int M = params.num_antennas;
        scaled_vectors.resize(M, total_rank);
        for (size_t idx = 0; idx < users.size(); ++idx) {
            const int k = users[idx];
            const VectorXd d = (params.snr(k) * covs[k].eigenvalues.array()).sqrt().matrix();
            scaled_vectors.middleCols(offsets[idx], covs[k].rank).noalias() =
                covs[k].eigenvectors * d.asDiagonal();
        }
        if (total_rank == 0) return;

        MatrixXcd gram = scaled_vectors.adjoint() * scaled_vectors;
        for (size_t a = 0; a < users.size(); ++a)
            for (size_t b = 0; b < users.size(); ++b) {
                const cplx pg = pilots.matrix.col(users[a]).dot(pilots.matrix.col(users[b]));
                gram.block(offsets[a], offsets[b], covs[users[a]].rank, covs[users[b]].rank) *= pg;
            }
        gram += MatrixXcd::Identity(total_rank, total_rank);
        capacitance.compute(gram);
        if (capacitance.info() != Eigen::Success)
            throw std::runtime_error("low-rank capacitance factorization failed");
    }

    // B^H (p_target (x) C) for an M x c block C; rows grouped per user.
    MatrixXcd project(const PilotSet& pilots, const std::vector<CovarianceProfile>& covs,
                      int target_user, const MatrixXcd& C) const {
        MatrixXcd W(total_rank, C.cols());
        for (size_t idx = 0; idx < users.size(); ++idx) {
            const int k = users[idx];
            const cplx pg = pilots.matrix.col(k).dot(pilots.matrix.col(target_user));
            W.middleRows(offsets[idx], covs[k].rank).noalias() =
                pg * (scaled_vectors.middleCols(offsets[idx], covs[k].rank).adjoint() * C);
        }
        return W;
    }

    // Block row ell of B, an M x R matrix [p_k(ell) V_k]_k.
    MatrixXcd block_row(const PilotSet& pilots, int ell) const {
        MatrixXcd out(scaled_vectors.rows(), total_rank);
        for (size_t idx = 0; idx < users.size(); ++idx) {
            const int k = users[idx];
            const int r = (idx + 1 < offsets.size() ? offsets[idx + 1] : total_rank) - offsets[idx];
            out.middleCols(offsets[idx], r) =
                pilots.matrix(ell, k) * scaled_vectors.middleCols(offsets[idx], r);
        }
        return out;
    }
};

} // namespace covcsi::detail
