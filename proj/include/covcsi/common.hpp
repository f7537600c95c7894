// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace covcsi {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Global system parameters shared by every module. Users are indexed
/// 0..K where user 0 is the one whose channel is estimated and users
/// 1..K act as interferers.
struct SystemParams {
    int num_antennas = 1;    // M
    int num_interferers = 0; // K, total users = K+1
    int pilot_length = 1;    // L
    VectorXd snr;            // rho_k, linear scale, size K+1
    VectorXd pathloss;       // beta_k, size K+1
    std::optional<VectorXd> tx_power; // P_k, informational
    std::optional<double> noise_var;  // sigma^2, informational

    int num_users() const { return num_interferers + 1; }

    // Throws std::domain_error on any violated invariant. When both
    // tx_power and noise_var are present, rho_k must equal
    // beta_k*P_k/sigma^2 to relative tolerance 1e-12.
    void validate() const;
};

inline SystemParams make_params(int M, int K, int L, double snr_linear, double beta = 1.0) {
    SystemParams p;
    p.num_antennas = M;
    p.num_interferers = K;
    p.pilot_length = L;
    p.snr = VectorXd::Constant(K + 1, snr_linear);
    p.pathloss = VectorXd::Constant(K + 1, beta);
    return p;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

enum class CovModel { max_entropy, one_ring_uca, explicit_matrix };
enum class PilotModel { orthogonal_dft, random_phase, explicit_matrix };

const char* to_string(CovModel m);
const char* to_string(PilotModel m);

/// One user's spatial covariance with its eigenstructure. sigma is
/// M x M Hermitian PSD; eigenvalues are the rank retained ones, sorted
/// descending and strictly positive; eigenvectors has orthonormal
/// columns spanning the retained subspace.
struct CovarianceProfile {
    MatrixXcd sigma;
    int rank = 0;
    VectorXd eigenvalues;    // size rank, descending
    MatrixXcd eigenvectors;  // M x rank
    CovModel model = CovModel::explicit_matrix;

    int dim() const { return static_cast<int>(sigma.rows()); }
};

/// L x (K+1) pilot matrix; column k is user k's sequence.
struct PilotSet {
    MatrixXcd matrix;
    PilotModel model = PilotModel::explicit_matrix;
    std::optional<std::uint64_t> seed;

    int length() const { return static_cast<int>(matrix.rows()); }
    int num_users() const { return static_cast<int>(matrix.cols()); }
};

} // namespace covcsi
