// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "covcsi/covgen.hpp"
#include "covcsi/harness.hpp"
#include "covcsi/mse.hpp"

using namespace covcsi;
using nlohmann::json;

namespace {

json tiny_sweep_config() {
    return json{{"name", "tiny"},
                {"sweep", {{"variable", "M"}, {"values", {8, 12}}}},
                {"K", "M/4-1"},
                {"L", {{"alpha", 0.75}}},
                {"snr_db", 15.0},
                {"covariance", {{"model", "max_entropy"}, {"tau", 0.25}}},
                {"pilots", {{"model", "random_phase"}}},
                {"trials", 3},
                {"seed", 4242},
                {"outputs", {"exact_mse", "thm1", "thm3", "thm4", "gamma"}}};
}

std::string read_stripped(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') out << line << '\n';
    return out.str();
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("config validation catches structural errors") {
    CHECK_THROWS_AS(harness::parse_config(json::array()), harness::ConfigError);
    json missing = tiny_sweep_config();
    missing.erase("outputs");
    CHECK_THROWS_AS(harness::parse_config(missing), harness::ConfigError);
    json unknown = tiny_sweep_config();
    unknown["bogus"] = 1;
    CHECK_THROWS_AS(harness::parse_config(unknown), harness::ConfigError);
    json bad_output = tiny_sweep_config();
    bad_output["outputs"] = {"nonsense"};
    CHECK_THROWS_AS(harness::parse_config(bad_output), harness::ConfigError);
    json bad_model = tiny_sweep_config();
    bad_model["covariance"]["model"] = "mystery";
    CHECK_THROWS_AS(harness::parse_config(bad_model), harness::ConfigError);
    json short_pilots = tiny_sweep_config();
    short_pilots["pilots"]["model"] = "orthogonal_dft"; // L = 3alpha*K < K+1
    const auto cfg = harness::parse_config(short_pilots);
    CHECK_THROWS_AS(harness::resolve_points(cfg), harness::ConfigError);
}

TEST_CASE("K=0 single-trial sweep returns the interference-free MSE") {
    // pin the covariance through a file so the expected value is known
    Rng rng(9);
    const auto prof = covgen::gen_max_entropy(8, 2, rng);
    const std::string cov_path = "harness_k0_cov.tmp";
    covgen::save_profile(cov_path, prof);

    json cfg_json{{"name", "k0"},
                  {"sweep", {{"variable", "M"}, {"values", {8}}}},
                  {"K", 0},
                  {"L", 3},
                  {"snr_db", 10.0},
                  {"covariance", {{"model", "files"}, {"paths", {cov_path}}}},
                  {"pilots", {{"model", "random_phase"}}},
                  {"trials", 1},
                  {"seed", 7},
                  {"outputs", {"exact_mse", "thm3"}}};
    const auto records = harness::run_experiment(harness::parse_config(cfg_json));
    std::remove(cov_path.c_str());
    REQUIRE(records.size() == 2); // one trial + one aggregate
    const double expect =
        mse::mse_interference_free(prof.eigenvalues, 1.0, std::pow(10.0, 1.0), 3, 8);
    CHECK(records[0].metrics.at("mse_exact") == doctest::Approx(expect).epsilon(1e-9));
    CHECK(records[0].metrics.at("xi_thm3") == doctest::Approx(expect).epsilon(1e-9));
    CHECK(records[1].trial == -1);
}

TEST_CASE("orthogonal pilots make the thm1 normalized error vanish") {
    json cfg_json{{"name", "degenerate"},
                  {"sweep", {{"variable", "M"}, {"values", {8}}}},
                  {"K", 1},
                  {"L", 4},
                  {"snr_db", 12.0},
                  {"covariance", {{"model", "max_entropy"}, {"tau", 0.25}}},
                  {"pilots", {{"model", "orthogonal_dft"}}},
                  {"trials", 4},
                  {"seed", 11},
                  {"outputs", {"exact_mse", "thm1"}}};
    const auto records = harness::run_experiment(harness::parse_config(cfg_json));
    const auto& agg = records.back();
    CHECK(agg.metrics.at("nerr_thm1") <= 1e-12);
    CHECK(harness::normalized_approx_error(records, "xi_thm1") <= 1e-12);
}

TEST_CASE("CSV output is reproducible and schedule independent") {
    json a = tiny_sweep_config();
    a["out"] = "harness_repro_a.csv";
    json b = tiny_sweep_config();
    b["out"] = "harness_repro_b.csv";

    harness::RunOptions serial;
    serial.threads = 1;
    harness::RunOptions parallel;
    parallel.threads = 8;

    harness::run_experiment(harness::parse_config(a), serial);
    harness::run_experiment(harness::parse_config(b), serial);
    const std::string sa = read_stripped("harness_repro_a.csv");
    const std::string sb = read_stripped("harness_repro_b.csv");
    CHECK(sa == sb);

    json c = tiny_sweep_config();
    c["out"] = "harness_repro_c.csv";
    harness::run_experiment(harness::parse_config(c), parallel);
    const std::string sc = read_stripped("harness_repro_c.csv");
    CHECK(sa == sc);

    std::remove("harness_repro_a.csv");
    std::remove("harness_repro_b.csv");
    std::remove("harness_repro_c.csv");
}

TEST_CASE("rank-only sweep with both covariance families") {
    json cfg_json{{"name", "ranks"},
                  {"sweep", {{"variable", "M"}, {"values", {16}}}},
                  {"K", 3},
                  {"L", 2},
                  {"snr_db", 15.0},
                  {"covariance", {{"model", "both"}, {"tau", 0.25}, {"angular_spread_deg", 10.0}}},
                  {"pilots", {{"model", "random_phase"}}},
                  {"trials", 2},
                  {"seed", 3},
                  {"outputs", {"rank_stats"}}};
    const auto records = harness::run_experiment(harness::parse_config(cfg_json));
    CHECK(records.front().metrics.at("rank_norm_max_entropy") == doctest::Approx(0.25));
    CHECK(records.front().metrics.count("rank_norm_one_ring") == 1);

    json bad = cfg_json;
    bad["outputs"] = {"rank_stats", "exact_mse"};
    CHECK_THROWS_AS(harness::parse_config(bad), harness::ConfigError);
}

TEST_CASE("recipes parse and resolve") {
    for (const auto& name : harness::recipe_names()) {
        const auto cfg = harness::parse_config(harness::recipe(name));
        const auto points = harness::resolve_points(cfg);
        CHECK(points.size() == 4);
        if (name == "fig2") {
            CHECK(points.back().M == 128);
            CHECK(points.back().K == 31);
            CHECK(points.back().L == 23);
        }
        if (name == "fig2_prose") CHECK(points.back().L == 7); // floor(31/4)
    }
    CHECK_THROWS_AS(harness::recipe("fig99"), harness::ConfigError);
}

TEST_CASE("pilot-length sweep emits search metrics") {
    json cfg_json{{"name", "lensweep"},
                  {"sweep", {{"variable", "M"}, {"values", {16}}}},
                  {"K", "M/4-1"},
                  {"L", "search"},
                  {"snr_db", 15.0},
                  {"covariance", {{"model", "max_entropy"}, {"tau", 0.25}}},
                  {"pilots", {{"model", "random_phase"}}},
                  {"trials", 3},
                  {"seed", 5},
                  {"outputs", {"pilot_length"}}};
    const auto records = harness::run_experiment(harness::parse_config(cfg_json));
    for (const auto& r : records) {
        if (r.trial < 0) continue;
        CHECK(r.metrics.at("l_star") >= 1.0);
        CHECK(r.metrics.at("l_star") <= 4.0);
        CHECK(r.metrics.at("delta_bar") == doctest::Approx(2.0));
    }
}

} // TEST_SUITE
