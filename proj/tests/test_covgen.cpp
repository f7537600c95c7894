// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>

#include <Eigen/QR>

#include "covcsi/covgen.hpp"
#include "helpers.hpp"

using namespace covcsi;

namespace {

void check_profile_invariants(const CovarianceProfile& p) {
    const MatrixXcd rebuilt =
        p.eigenvectors * p.eigenvalues.asDiagonal() * p.eigenvectors.adjoint();
    CHECK((rebuilt - p.sigma).norm() <= 1e-10 * p.sigma.norm());
    const MatrixXcd eye = p.eigenvectors.adjoint() * p.eigenvectors;
    CHECK((eye - MatrixXcd::Identity(p.rank, p.rank)).cwiseAbs().maxCoeff() <= 1e-10);
    for (int i = 0; i + 1 < p.rank; ++i) CHECK(p.eigenvalues(i) >= p.eigenvalues(i + 1));
    CHECK(p.eigenvalues(p.rank - 1) > 0.0);
}

} // namespace

TEST_SUITE("covgen") {

TEST_CASE("max entropy rank-1 is an outer product") {
    Rng rng(42);
    const auto p = covgen::gen_max_entropy(8, 1, rng);
    CHECK(p.rank == 1);
    CHECK(p.eigenvalues(0) == doctest::Approx(p.sigma.trace().real()).epsilon(1e-12));
    check_profile_invariants(p);
}

TEST_CASE("max entropy trace concentrates at M") {
    Rng rng(7);
    double acc = 0.0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        Rng s = rng.substream(t);
        acc += covgen::gen_max_entropy(64, 16, s).sigma.trace().real() / 64.0;
    }
    const double mean = acc / trials;
    CHECK(mean > 0.95);
    CHECK(mean < 1.05);
}

TEST_CASE("max entropy square case is full rank with positive determinant") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        const auto p = covgen::gen_max_entropy(8, 8, rng);
        CHECK(p.rank == 8);
        CHECK(p.eigenvalues.minCoeff() > 0.0); // det = prod of eigenvalues > 0
        check_profile_invariants(p);
    }
}

TEST_CASE("max entropy rejects r > M") {
    Rng rng(1);
    CHECK_THROWS_AS(covgen::gen_max_entropy(4, 5, rng), std::domain_error);
}

TEST_CASE("one-ring with vanishing spread is a rank-1 steering profile") {
    const auto p = covgen::gen_one_ring_uca(16, 0.7, 1e-9, 64);
    CHECK(p.rank == 1);
    CHECK(p.eigenvalues(0) == doctest::Approx(16.0).epsilon(1e-9));
}

TEST_CASE("one-ring trace and diagonal normalization") {
    const auto p = covgen::gen_one_ring_uca(16, 1.3, 10.0 * 3.14159265358979 / 180.0, 256);
    CHECK(p.sigma.trace().real() == doctest::Approx(16.0).epsilon(1e-10));
    for (int n = 0; n < 16; ++n)
        CHECK(p.sigma(n, n).real() == doctest::Approx(1.0).epsilon(1e-9));
    check_profile_invariants(p);
    CHECK(p.eigenvalues.minCoeff() >= 0.0);
}

TEST_CASE("one-ring rejects non-positive spread") {
    CHECK_THROWS_AS(covgen::gen_one_ring_uca(8, 0.0, 0.0, 64), std::domain_error);
    CHECK_THROWS_AS(covgen::gen_one_ring_uca(8, 0.0, -0.1, 64), std::domain_error);
}

TEST_CASE("one-ring mean normalized rank decreases with M at 10 degrees") {
    const double spread = 10.0 * 3.14159265358979 / 180.0;
    Rng rng(5);
    double prev = 2.0;
    for (int M : {32, 64, 96, 128}) {
        double acc = 0.0;
        const int trials = 5;
        for (int t = 0; t < trials; ++t) {
            Rng s = rng.substream(M, t);
            acc += static_cast<double>(
                       covgen::gen_one_ring_uca_random_azimuth(M, spread, s).rank) /
                   M;
        }
        const double mean = acc / trials;
        CHECK(mean < prev);
        prev = mean;
    }
}

TEST_CASE("quadrature converges: N and 2N nodes differ below 1e-8") {
    const double spread = 10.0 * 3.14159265358979 / 180.0;
    const auto a = covgen::gen_one_ring_uca(32, 0.9, spread, 256);
    const auto b = covgen::gen_one_ring_uca(32, 0.9, spread, 512);
    CHECK((a.sigma - b.sigma).norm() < 1e-8);
}

TEST_CASE("effective_rank counting") {
    VectorXd v3(3);
    v3 << 4.0, 2.0, 1e-18;
    CHECK(covgen::effective_rank(v3, 1e-12) == 2);
    VectorXd v1(1);
    v1 << 1.0;
    CHECK(covgen::effective_rank(v1, 0.5) == 1);
    VectorXd veq = VectorXd::Constant(6, 3.14);
    CHECK(covgen::effective_rank(veq, 1e-12) == 6);
    CHECK_THROWS_AS(covgen::effective_rank(VectorXd(), 1e-12), std::domain_error);
}

TEST_CASE("assumption3 norm on disjoint rank-1 subspaces is 1/L") {
    const int M = 8, L = 4;
    Rng rng(3);
    std::vector<CovarianceProfile> covs;
    for (int k = 0; k < 3; ++k) covs.push_back(testing::block_profile(M, k, 1, rng));
    CHECK(covgen::assumption3_norm(covs, L) == doctest::Approx(1.0 / L).epsilon(1e-12));
}

TEST_CASE("assumption3 norm with a repeated subspace reaches 1") {
    const int M = 8, K = 3;
    Rng rng(4);
    const auto base = testing::block_profile(M, 2, 2, rng);
    std::vector<CovarianceProfile> covs(K + 1, base);
    CHECK(covgen::assumption3_norm(covs, K + 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("assumption3 norm stays below 1 in the benchmark regime") {
    // tau = 1/4, alpha_L = 3/4, max-entropy covariances
    const int M = 128, K = 31, L = 23, r = 32;
    Rng rng(99);
    int ok = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        std::vector<CovarianceProfile> covs;
        for (int k = 0; k <= K; ++k) {
            Rng s = rng.substream(t, k);
            covs.push_back(covgen::gen_max_entropy(M, r, s));
        }
        if (covgen::assumption3_norm(covs, L) < 1.0) ++ok;
    }
    CHECK(ok >= 95);
}

TEST_CASE("assumption3 norm is invariant under per-user unitary rotations") {
    Rng rng(12);
    std::vector<CovarianceProfile> covs;
    for (int k = 0; k < 4; ++k) {
        Rng s = rng.substream(k);
        covs.push_back(covgen::gen_max_entropy(12, 3, s));
    }
    const double base = covgen::assumption3_norm(covs, 5);
    std::vector<CovarianceProfile> rotated = covs;
    for (auto& c : rotated) {
        MatrixXcd G(c.rank, c.rank);
        for (int i = 0; i < c.rank; ++i)
            for (int j = 0; j < c.rank; ++j) G(i, j) = rng.cnormal();
        const Eigen::HouseholderQR<MatrixXcd> qr(G);
        const MatrixXcd Q = qr.householderQ() * MatrixXcd::Identity(c.rank, c.rank);
        c.eigenvectors = c.eigenvectors * Q;
    }
    CHECK(covgen::assumption3_norm(rotated, 5) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("profile save/load round trip") {
    Rng rng(21);
    const auto p = covgen::gen_max_entropy(6, 3, rng);
    const std::string path = "covgen_roundtrip.tmp";
    covgen::save_profile(path, p);
    const auto q = covgen::load_profile(path);
    std::remove(path.c_str());
    CHECK(q.dim() == 6);
    CHECK(q.rank == 3);
    CHECK(q.model == CovModel::max_entropy);
    CHECK((q.sigma - p.sigma).norm() <= 1e-12 * p.sigma.norm());
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
    const auto q = covgen::gauss_legendre(8);
    CHECK(q.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
    double acc = 0.0;
    for (int i = 0; i < 8; ++i) acc += q.weights(i) * std::pow(q.nodes(i), 10);
    CHECK(acc == doctest::Approx(2.0 / 11.0).epsilon(1e-13)); // degree 10 < 2*8-1
}

} // TEST_SUITE
