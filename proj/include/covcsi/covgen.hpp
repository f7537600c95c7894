// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "covcsi/common.hpp"
#include "covcsi/rng.hpp"

namespace covcsi::covgen {

/// Number of eigenvalues whose ratio with the strongest one exceeds
/// rel_threshold. Input must be sorted descending with lambda_1 > 0.
int effective_rank(const VectorXd& eigenvalues, double rel_threshold);

/// Default relative eigenvalue cutoff for rank decisions: M * eps.
double default_rank_threshold(int M);

/// Rank-r Wishart-type covariance Sigma = (1/r) X X^dagger with X an
/// M x r matrix of i.i.d. CN(0,1) entries. E[Tr(Sigma)] = M.
CovarianceProfile gen_max_entropy(int M, int r, Rng& rng);

/// One-ring correlation for a uniform circular array with half-wavelength
/// spacing. Entries average exp(-j M/2 (cos(phi+v-theta_n)-cos(phi+v-theta_m)))
/// over v in [-sqrt(3) s, sqrt(3) s] (s = angular_spread, radians); the
/// average is taken by Gauss-Legendre quadrature. The result is
/// symmetrized, clipped to PSD, and trace-renormalized to exactly M.
CovarianceProfile gen_one_ring_uca(int M, double azimuth, double angular_spread,
                                   int quadrature_nodes = 512);

/// Same, drawing the azimuth uniformly in [0, 2 pi).
CovarianceProfile gen_one_ring_uca_random_azimuth(int M, double angular_spread, Rng& rng,
                                                  int quadrature_nodes = 512);

/// Wraps an arbitrary Hermitian PSD matrix into a profile (eigendecomposition,
/// descending order, rank by rel_threshold; rel_threshold < 0 uses the default).
CovarianceProfile make_profile(const MatrixXcd& sigma, CovModel tag = CovModel::explicit_matrix,
                               double rel_threshold = -1.0);

/// Spectral norm of (1/L) sum_k U_k U_k^dagger over the given profiles;
/// values below 1 indicate the pilot length can resolve the union of
/// covariance subspaces.
double assumption3_norm(const std::vector<CovarianceProfile>& covs, int L);

/// Gauss-Legendre nodes/weights on [-1, 1] (Golub-Welsch).
struct QuadRule {
    VectorXd nodes;
    VectorXd weights;
};
QuadRule gauss_legendre(int n);

/// Dense complex text format: header "M r model_tag", then M rows of M
/// whitespace-separated "re,im" cells.
void save_profile(const std::string& path, const CovarianceProfile& profile);
CovarianceProfile load_profile(const std::string& path);

} // namespace covcsi::covgen
