// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "covcsi/common.hpp"
#include "covcsi/rng.hpp"

namespace covcsi::harness {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SweepVariable { antennas, pilot_length, snr_db };

struct LRule {
    enum class Kind { fixed, alpha_k, search } kind = Kind::alpha_k;
    int fixed = 0;
    double alpha = 0.75; // L = floor(alpha * K), at least 1
};

struct KRule {
    bool quarter_m = false; // K = floor(M/4) - 1
    int fixed = 0;
};

struct CovarianceConfig {
    std::string model = "max_entropy"; // max_entropy | one_ring_uca | both | files
    double tau = 0.25;                 // rank ratio for max_entropy, r = max(1, floor(tau M))
    double angular_spread_deg = 10.0;
    int quadrature_nodes = 512;
    std::vector<std::string> paths;
};

struct PilotConfig {
    std::string model = "random_phase"; // random_phase | orthogonal_dft | file
    std::string path;
};

struct ExperimentConfig {
    std::string name = "custom";
    SweepVariable sweep_variable = SweepVariable::antennas;
    std::vector<double> sweep_values;
    int fixed_M = 64;
    int fixed_L = 0;
    double fixed_snr_db = 15.0;
    std::vector<double> snr_db_per_user; // empty: scalar fixed_snr_db for everyone
    double beta = 1.0;
    std::vector<double> beta_per_user;
    KRule k_rule;
    LRule l_rule;
    CovarianceConfig covariance;
    PilotConfig pilots;
    long trials = 1;
    std::uint64_t seed = 1;
    std::vector<std::string> outputs;
    std::string out_path;
    std::string raw_json; // canonical dump, hashed into the CSV header
};

/// One sweep point with every rule resolved.
struct ResolvedPoint {
    int index = 0;
    int M = 0;
    int K = 0;
    int L = 0;
    double snr_db = 0.0; // user-0 SNR in dB (reporting)
    VectorXd snr;        // linear, per user
    VectorXd beta;
    bool search_length = false;
};

/// One (sweep point, trial) worth of results; aggregate rows use
/// trial = -1 and carry means, standard errors, and normalized errors.
struct ExperimentRecord {
    int point_index = 0;
    int M = 0;
    int K = 0;
    int L = 0;
    double snr_db = 0.0;
    long trial = 0;
    std::map<std::string, double> metrics;
    std::string notes;
};

struct RunOptions {
    int threads = 1;
    bool strict = false; // solver non-convergence raises NumericalError
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

std::vector<ResolvedPoint> resolve_points(const ExperimentConfig& cfg);

/// Runs every (point, trial) task, appends one aggregate record per point,
/// and writes the CSV (atomically) when cfg.out_path is set. Results are
/// identical for any thread count and any task schedule.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg,
                                             const RunOptions& opts = {});

/// L * mean |mse_exact - xi_metric| over the per-trial records of one point.
double normalized_approx_error(const std::vector<ExperimentRecord>& point_records,
                               const std::string& xi_metric);

void write_csv(const std::string& path, const ExperimentConfig& cfg,
               const std::vector<ExperimentRecord>& records);

std::vector<std::string> recipe_names();
nlohmann::json recipe(const std::string& name);

/// FNV-1a 64-bit, used for the config hash in the CSV header.
std::uint64_t fnv1a64(const std::string& s);

} // namespace covcsi::harness
