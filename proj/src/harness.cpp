// SPDX-License-Identifier: Apache-2.0
#include "covcsi/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "covcsi/covgen.hpp"
#include "covcsi/deteq.hpp"
#include "covcsi/model.hpp"
#include "covcsi/mse.hpp"
#include "covcsi/pilotopt.hpp"
#include "covcsi/pilots.hpp"

namespace covcsi::harness {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

const std::set<std::string>& valid_outputs() {
    static const std::set<std::string> v = {"exact_mse", "thm1",        "thm3",
                                            "thm4",      "gamma",       "A_L_lambda_min",
                                            "assumption3", "rank_stats", "pilot_length"};
    return v;
}

// canonical CSV column order for metrics
const std::vector<std::string>& metric_order() {
    static const std::vector<std::string> v = {
        "mse_exact",      "mse_exact_se",      "xi_thm1",   "xi_thm1_se", "xi_thm3",
        "xi_thm3_se",     "xi_thm4",           "xi_thm4_se", "nerr_thm1", "nerr_thm3",
        "nerr_thm4",      "gamma_l",           "gamma_l_se", "tau_bar",   "a_l_lambda_min",
        "a_l_lambda_min_se", "assumption3_norm", "assumption3_norm_se",   "rank_norm",
        "rank_norm_se",   "rank_norm_max_entropy", "rank_norm_max_entropy_se",
        "rank_norm_one_ring", "rank_norm_one_ring_se", "l_star", "l_star_se", "l_approx",
        "delta",          "delta_se",          "delta_bar", "feasible",  "iters_thm1",
        "converged_thm1", "iters_thm3",        "converged_thm3", "iters_gamma",
        "converged_gamma"};
    return v;
}

const std::set<std::string>& se_metrics() {
    static const std::set<std::string> v = {"mse_exact",     "xi_thm1",  "xi_thm3",
                                            "xi_thm4",       "gamma_l",  "a_l_lambda_min",
                                            "assumption3_norm", "rank_norm",
                                            "rank_norm_max_entropy", "rank_norm_one_ring",
                                            "l_star",        "delta"};
    return v;
}

bool wants(const ExperimentConfig& cfg, const std::string& name) {
    return std::find(cfg.outputs.begin(), cfg.outputs.end(), name) != cfg.outputs.end();
}

std::vector<CovarianceProfile> generate_covs(const CovarianceConfig& cc, const std::string& model,
                                             int M, int users, const Rng& cov_rng) {
    std::vector<CovarianceProfile> covs;
    covs.reserve(users);
    if (model == "max_entropy") {
        const int r = std::max(1, static_cast<int>(std::floor(cc.tau * M + 1e-9)));
        for (int k = 0; k < users; ++k) {
            Rng s = cov_rng.substream(static_cast<std::uint64_t>(k), 0);
            covs.push_back(covgen::gen_max_entropy(M, r, s));
        }
    } else if (model == "one_ring_uca") {
        const double spread = cc.angular_spread_deg * kDegToRad;
        for (int k = 0; k < users; ++k) {
            Rng s = cov_rng.substream(static_cast<std::uint64_t>(k), 1);
            covs.push_back(covgen::gen_one_ring_uca_random_azimuth(M, spread, s, cc.quadrature_nodes));
        }
    } else if (model == "files") {
        for (const auto& path : cc.paths) covs.push_back(covgen::load_profile(path));
    } else {
        throw ConfigError("unknown covariance model: " + model);
    }
    return covs;
}

void add_note(ExperimentRecord& rec, const std::string& note) {
    if (!rec.notes.empty()) rec.notes += ';';
    rec.notes += note;
}

ExperimentRecord compute_trial(const ExperimentConfig& cfg, const ResolvedPoint& pt, long trial,
                               const Rng& master) {
    ExperimentRecord rec;
    rec.point_index = pt.index;
    rec.M = pt.M;
    rec.K = pt.K;
    rec.L = pt.L;
    rec.snr_db = pt.snr_db;
    rec.trial = trial;

    const Rng cov_rng = master.substream(static_cast<std::uint64_t>(pt.index),
                                         static_cast<std::uint64_t>(trial),
                                         static_cast<std::uint64_t>(StreamRole::covariance));
    const Rng pilot_rng = master.substream(static_cast<std::uint64_t>(pt.index),
                                           static_cast<std::uint64_t>(trial),
                                           static_cast<std::uint64_t>(StreamRole::pilot));
    const int users = pt.K + 1;

    SystemParams params;
    params.num_antennas = pt.M;
    params.num_interferers = pt.K;
    params.pilot_length = pt.L;
    params.snr = pt.snr;
    params.pathloss = pt.beta;

    if (cfg.covariance.model == "both") {
        // rank statistics only; both covariance families are generated
        const auto me = generate_covs(cfg.covariance, "max_entropy", pt.M, users, cov_rng);
        const auto or_ = generate_covs(cfg.covariance, "one_ring_uca", pt.M, users, cov_rng);
        double a = 0.0, b = 0.0;
        for (const auto& c : me) a += static_cast<double>(c.rank) / pt.M;
        for (const auto& c : or_) b += static_cast<double>(c.rank) / pt.M;
        rec.metrics["rank_norm_max_entropy"] = a / users;
        rec.metrics["rank_norm_one_ring"] = b / users;
        return rec;
    }

    const auto covs = generate_covs(cfg.covariance, cfg.covariance.model, pt.M, users, cov_rng);
    if (cfg.covariance.model == "files" && trial > 0) add_note(rec, "covariance:files-fixed-across-trials");

    if (wants(cfg, "rank_stats")) {
        double a = 0.0;
        for (const auto& c : covs) a += static_cast<double>(c.rank) / pt.M;
        rec.metrics["rank_norm"] = a / users;
    }

    std::vector<int> interferer_ranks;
    for (int k = 1; k < users; ++k) interferer_ranks.push_back(covs[k].rank);
    std::vector<CovarianceProfile> interferers(covs.begin() + 1, covs.end());

    const bool needs_pilots = wants(cfg, "exact_mse") || wants(cfg, "thm1") ||
                              wants(cfg, "A_L_lambda_min");
    PilotSet pilots;
    if (needs_pilots) {
        if (cfg.pilots.model == "random_phase") {
            Rng s = pilot_rng.substream(0);
            pilots = pilots::gen_random_phase(pt.L, users, s);
        } else if (cfg.pilots.model == "orthogonal_dft") {
            pilots = pilots::gen_orthogonal(pt.L, users);
        } else if (cfg.pilots.model == "file") {
            pilots = pilots::load_pilots(cfg.pilots.path);
        } else {
            throw ConfigError("unknown pilot model: " + cfg.pilots.model);
        }
    }

    if (wants(cfg, "exact_mse"))
        rec.metrics["mse_exact"] = mse::mse_cov_aided_exact(pilots, covs, params).total_mse;

    if (wants(cfg, "thm1")) {
        const auto t1 = deteq::solve_thm1(pilots, covs[0], params, interferer_ranks);
        rec.metrics["xi_thm1"] = t1.xi;
        rec.metrics["iters_thm1"] = t1.diag.iterations;
        rec.metrics["converged_thm1"] = t1.diag.converged ? 1.0 : 0.0;
        if (cfg.covariance.model != "max_entropy")
            add_note(rec, "thm1:model-mismatch(" + cfg.covariance.model + ")");
    }

    if (wants(cfg, "thm3")) {
        const auto t3 = deteq::solve_thm3(interferers, params);
        rec.metrics["xi_thm3"] = deteq::xi_thm3(t3.gamma_matrix, covs[0], params);
        rec.metrics["iters_thm3"] = t3.diag.iterations;
        rec.metrics["converged_thm3"] = t3.diag.converged ? 1.0 : 0.0;
        if (cfg.pilots.model != "random_phase")
            add_note(rec, "thm3:model-mismatch(" + cfg.pilots.model + ")");
    }

    if (wants(cfg, "thm4") || wants(cfg, "gamma")) {
        VectorXd taus(pt.K), snrs(pt.K);
        for (int k = 0; k < pt.K; ++k) {
            taus(k) = static_cast<double>(covs[k + 1].rank) / pt.M;
            snrs(k) = params.snr(k + 1);
        }
        const auto g = deteq::solve_gamma_scalar(taus, snrs, pt.L);
        if (wants(cfg, "gamma")) {
            rec.metrics["gamma_l"] = g.gamma;
            rec.metrics["tau_bar"] = pt.K > 0 ? taus.mean() : 0.0;
            rec.metrics["iters_gamma"] = g.diag.iterations;
            rec.metrics["converged_gamma"] = g.diag.converged ? 1.0 : 0.0;
        }
        if (wants(cfg, "thm4")) {
            rec.metrics["xi_thm4"] = deteq::xi_thm4(covs[0].eigenvalues, params.pathloss(0),
                                                    params.snr(0), pt.L, pt.M, g.gamma);
            if (cfg.covariance.model != "max_entropy")
                add_note(rec, "thm4:model-mismatch(" + cfg.covariance.model + ")");
            else if (cfg.pilots.model != "random_phase")
                add_note(rec, "thm4:model-mismatch(" + cfg.pilots.model + ")");
        }
    }

    if (wants(cfg, "A_L_lambda_min"))
        rec.metrics["a_l_lambda_min"] = deteq::compute_A_L(pilots, interferers, params).lambda_min;

    if (wants(cfg, "assumption3"))
        rec.metrics["assumption3_norm"] = covgen::assumption3_norm(covs, pt.L);

    if (wants(cfg, "pilot_length")) {
        const auto r = pilotopt::search_min_length(covs, params, pilot_rng.substream(1));
        rec.metrics["l_star"] = r.l_star;
        rec.metrics["l_approx"] = r.l_approx;
        rec.metrics["delta"] = r.delta;
        rec.metrics["delta_bar"] = r.delta_bar;
        rec.metrics["feasible"] = r.feasible ? 1.0 : 0.0;
    }
    return rec;
}

ExperimentRecord aggregate_point(const ResolvedPoint& pt,
                                 const std::vector<ExperimentRecord>& trials) {
    ExperimentRecord agg;
    agg.point_index = pt.index;
    agg.M = pt.M;
    agg.K = pt.K;
    agg.L = pt.L;
    agg.snr_db = pt.snr_db;
    agg.trial = -1;

    std::set<std::string> names;
    for (const auto& r : trials)
        for (const auto& kv : r.metrics) names.insert(kv.first);

    const long n = static_cast<long>(trials.size());
    for (const auto& name : names) {
        std::vector<double> vals;
        vals.reserve(trials.size());
        for (const auto& r : trials) {
            auto it = r.metrics.find(name);
            if (it != r.metrics.end()) vals.push_back(it->second);
        }
        if (vals.empty()) continue;
        const double mean = mse::pairwise_sum(vals) / static_cast<double>(vals.size());
        agg.metrics[name] = mean;
        if (se_metrics().count(name) && vals.size() > 1) {
            std::vector<double> sq(vals.size());
            for (size_t i = 0; i < vals.size(); ++i) sq[i] = (vals[i] - mean) * (vals[i] - mean);
            const double var = mse::pairwise_sum(sq) / static_cast<double>(vals.size() - 1);
            agg.metrics[name + "_se"] = std::sqrt(var / static_cast<double>(vals.size()));
        }
    }
    for (const char* xi : {"xi_thm1", "xi_thm3", "xi_thm4"}) {
        if (names.count(xi) && names.count("mse_exact")) {
            std::vector<double> diffs;
            diffs.reserve(trials.size());
            for (const auto& r : trials) {
                auto a = r.metrics.find("mse_exact");
                auto b = r.metrics.find(xi);
                if (a != r.metrics.end() && b != r.metrics.end())
                    diffs.push_back(std::abs(a->second - b->second));
            }
            if (!diffs.empty())
                agg.metrics[std::string("nerr_") + (xi + 3)] =
                    pt.L * mse::pairwise_sum(diffs) / static_cast<double>(diffs.size());
        }
    }
    (void)n;
    return agg;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

ExperimentConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig cfg;
    try {
        static const std::set<std::string> known = {
            "name", "sweep", "M", "K", "L", "snr_db", "beta", "covariance",
            "pilots", "trials", "seed", "outputs", "out"};
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!known.count(it.key())) throw ConfigError("unknown config field: " + it.key());

        cfg.name = j.value("name", std::string("custom"));

        if (!j.contains("sweep")) throw ConfigError("missing 'sweep'");
        const auto& sw = j.at("sweep");
        const std::string var = sw.at("variable").get<std::string>();
        if (var == "M") cfg.sweep_variable = SweepVariable::antennas;
        else if (var == "L") cfg.sweep_variable = SweepVariable::pilot_length;
        else if (var == "snr_db") cfg.sweep_variable = SweepVariable::snr_db;
        else throw ConfigError("sweep.variable must be M, L, or snr_db");
        cfg.sweep_values = sw.at("values").get<std::vector<double>>();
        if (cfg.sweep_values.empty()) throw ConfigError("sweep.values must be nonempty");

        if (j.contains("M")) cfg.fixed_M = j.at("M").get<int>();
        if (cfg.sweep_variable != SweepVariable::antennas && cfg.fixed_M < 1)
            throw ConfigError("M must be >= 1");

        if (j.contains("K")) {
            const auto& k = j.at("K");
            if (k.is_string()) {
                if (k.get<std::string>() != "M/4-1")
                    throw ConfigError("K rule must be an integer or \"M/4-1\"");
                cfg.k_rule.quarter_m = true;
            } else {
                cfg.k_rule.fixed = k.get<int>();
                if (cfg.k_rule.fixed < 0) throw ConfigError("K must be >= 0");
            }
        }

        if (cfg.sweep_variable != SweepVariable::pilot_length) {
            if (!j.contains("L")) throw ConfigError("missing 'L'");
            const auto& l = j.at("L");
            if (l.is_string()) {
                if (l.get<std::string>() != "search") throw ConfigError("L must be an int, {\"alpha\":x}, or \"search\"");
                cfg.l_rule.kind = LRule::Kind::search;
            } else if (l.is_object()) {
                cfg.l_rule.kind = LRule::Kind::alpha_k;
                cfg.l_rule.alpha = l.at("alpha").get<double>();
                if (!(cfg.l_rule.alpha > 0.0)) throw ConfigError("L.alpha must be > 0");
            } else {
                cfg.l_rule.kind = LRule::Kind::fixed;
                cfg.l_rule.fixed = l.get<int>();
                if (cfg.l_rule.fixed < 1) throw ConfigError("L must be >= 1");
            }
        }

        if (j.contains("snr_db")) {
            const auto& s = j.at("snr_db");
            if (s.is_array()) cfg.snr_db_per_user = s.get<std::vector<double>>();
            else cfg.fixed_snr_db = s.get<double>();
        }
        if (j.contains("beta")) {
            const auto& b = j.at("beta");
            if (b.is_array()) cfg.beta_per_user = b.get<std::vector<double>>();
            else cfg.beta = b.get<double>();
            if (!b.is_array() && !(cfg.beta > 0.0)) throw ConfigError("beta must be > 0");
        }

        if (j.contains("covariance")) {
            const auto& c = j.at("covariance");
            cfg.covariance.model = c.at("model").get<std::string>();
            cfg.covariance.tau = c.value("tau", 0.25);
            cfg.covariance.angular_spread_deg = c.value("angular_spread_deg", 10.0);
            cfg.covariance.quadrature_nodes = c.value("quadrature_nodes", 512);
            if (c.contains("paths")) cfg.covariance.paths = c.at("paths").get<std::vector<std::string>>();
            static const std::set<std::string> cov_models = {"max_entropy", "one_ring_uca", "both",
                                                             "files"};
            if (!cov_models.count(cfg.covariance.model))
                throw ConfigError("unknown covariance model: " + cfg.covariance.model);
            if (!(cfg.covariance.tau > 0.0) || cfg.covariance.tau > 1.0)
                throw ConfigError("covariance.tau must lie in (0, 1]");
            if (!(cfg.covariance.angular_spread_deg > 0.0))
                throw ConfigError("covariance.angular_spread_deg must be > 0");
            if (cfg.covariance.quadrature_nodes < 16)
                throw ConfigError("covariance.quadrature_nodes must be >= 16");
            if (cfg.covariance.model == "files" && cfg.covariance.paths.empty())
                throw ConfigError("covariance.paths required for the files model");
        }
        if (j.contains("pilots")) {
            const auto& p = j.at("pilots");
            cfg.pilots.model = p.at("model").get<std::string>();
            cfg.pilots.path = p.value("path", std::string());
            static const std::set<std::string> pilot_models = {"random_phase", "orthogonal_dft",
                                                               "file"};
            if (!pilot_models.count(cfg.pilots.model))
                throw ConfigError("unknown pilot model: " + cfg.pilots.model);
            if (cfg.pilots.model == "file" && cfg.pilots.path.empty())
                throw ConfigError("pilots.path required for the file model");
        }

        cfg.trials = j.value("trials", 1L);
        if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
        cfg.seed = j.value("seed", 1ULL);
        if (!j.contains("outputs")) throw ConfigError("missing 'outputs'");
        cfg.outputs = j.at("outputs").get<std::vector<std::string>>();
        if (cfg.outputs.empty()) throw ConfigError("outputs must be nonempty");
        for (const auto& o : cfg.outputs)
            if (!valid_outputs().count(o)) throw ConfigError("unknown output: " + o);
        if (cfg.covariance.model == "both")
            for (const auto& o : cfg.outputs)
                if (o != "rank_stats")
                    throw ConfigError("covariance model 'both' supports only rank_stats outputs");
        if (cfg.l_rule.kind == LRule::Kind::search && !wants(cfg, "pilot_length"))
            throw ConfigError("L rule 'search' requires the pilot_length output");
        cfg.out_path = j.value("out", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    cfg.raw_json = j.dump();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

std::vector<ResolvedPoint> resolve_points(const ExperimentConfig& cfg) {
    std::vector<ResolvedPoint> points;
    int index = 0;
    for (const double value : cfg.sweep_values) {
        ResolvedPoint pt;
        pt.index = index++;
        pt.M = cfg.sweep_variable == SweepVariable::antennas ? static_cast<int>(value) : cfg.fixed_M;
        if (pt.M < 1) throw ConfigError("resolved M must be >= 1");
        pt.K = cfg.k_rule.quarter_m ? std::max(0, pt.M / 4 - 1) : cfg.k_rule.fixed;
        const int users = pt.K + 1;

        if (cfg.sweep_variable == SweepVariable::pilot_length) {
            pt.L = static_cast<int>(value);
        } else {
            switch (cfg.l_rule.kind) {
                case LRule::Kind::fixed: pt.L = cfg.l_rule.fixed; break;
                case LRule::Kind::alpha_k:
                    pt.L = std::max(1, static_cast<int>(std::floor(cfg.l_rule.alpha * pt.K + 1e-9)));
                    break;
                case LRule::Kind::search:
                    pt.L = users; // baseline length; the search tries 1..K+1
                    pt.search_length = true;
                    break;
            }
        }
        if (pt.L < 1) throw ConfigError("resolved L must be >= 1");

        const double snr_db =
            cfg.sweep_variable == SweepVariable::snr_db ? value : cfg.fixed_snr_db;
        pt.snr.resize(users);
        if (!cfg.snr_db_per_user.empty()) {
            if (static_cast<int>(cfg.snr_db_per_user.size()) != users)
                throw ConfigError("snr_db array must have K+1 entries");
            for (int k = 0; k < users; ++k) pt.snr(k) = db_to_linear(cfg.snr_db_per_user[k]);
            pt.snr_db = cfg.snr_db_per_user[0];
        } else {
            pt.snr.setConstant(db_to_linear(snr_db));
            pt.snr_db = snr_db;
        }
        pt.beta.resize(users);
        if (!cfg.beta_per_user.empty()) {
            if (static_cast<int>(cfg.beta_per_user.size()) != users)
                throw ConfigError("beta array must have K+1 entries");
            for (int k = 0; k < users; ++k) pt.beta(k) = cfg.beta_per_user[k];
        } else {
            pt.beta.setConstant(cfg.beta);
        }

        if (cfg.pilots.model == "orthogonal_dft" && pt.L < users)
            throw ConfigError("orthogonal pilots need L >= K+1 at every sweep point");
        if (cfg.covariance.model == "files" &&
            static_cast<int>(cfg.covariance.paths.size()) != users)
            throw ConfigError("covariance.paths must list exactly K+1 files");
        points.push_back(std::move(pt));
    }
    return points;
}

double normalized_approx_error(const std::vector<ExperimentRecord>& point_records,
                               const std::string& xi_metric) {
    std::vector<double> diffs;
    int L = 0;
    for (const auto& r : point_records) {
        if (r.trial < 0) continue;
        auto a = r.metrics.find("mse_exact");
        auto b = r.metrics.find(xi_metric);
        if (a == r.metrics.end() || b == r.metrics.end()) continue;
        diffs.push_back(std::abs(a->second - b->second));
        L = r.L;
    }
    if (diffs.empty()) throw std::domain_error("normalized_approx_error: no usable records");
    return L * mse::pairwise_sum(diffs) / static_cast<double>(diffs.size());
}

void write_csv(const std::string& path, const ExperimentConfig& cfg,
               const std::vector<ExperimentRecord>& records) {
    namespace fs = std::filesystem;
    std::set<std::string> present;
    for (const auto& r : records)
        for (const auto& kv : r.metrics) present.insert(kv.first);
    std::vector<std::string> columns;
    for (const auto& name : metric_order())
        if (present.count(name)) columns.push_back(name);
    for (const auto& name : present)
        if (std::find(columns.begin(), columns.end(), name) == columns.end())
            columns.push_back(name);

    const fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        char stamp[64] = "unknown";
        const std::time_t now = std::time(nullptr);
        std::tm tm_utc{};
        gmtime_r(&now, &tm_utc);
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

        char hash[32];
        std::snprintf(hash, sizeof hash, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(cfg.raw_json)));
        out << "# covcsi sweep v" << kVersion << " name=" << cfg.name << " config=fnv64:" << hash
            << " seed=" << cfg.seed << "\n";
        out << "# generated " << stamp << "\n";
        out << "M,K,L,snr_db,trial";
        for (const auto& c : columns) out << ',' << c;
        out << ",notes\n";
        for (const auto& r : records) {
            out << r.M << ',' << r.K << ',' << r.L << ',' << format_double(r.snr_db) << ','
                << r.trial;
            for (const auto& c : columns) {
                auto it = r.metrics.find(c);
                out << ',';
                if (it != r.metrics.end()) out << format_double(it->second);
            }
            out << ',' << r.notes << '\n';
        }
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot move CSV into place: " + ec.message());
}

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    const std::vector<ResolvedPoint> points = resolve_points(cfg);
    const Rng master(cfg.seed);
    const long trials = cfg.trials;

    struct Task {
        int point;
        long trial;
    };
    std::vector<Task> tasks;
    tasks.reserve(points.size() * static_cast<size_t>(trials));
    for (size_t p = 0; p < points.size(); ++p)
        for (long t = 0; t < trials; ++t) tasks.push_back({static_cast<int>(p), t});

    std::vector<ExperimentRecord> slots(tasks.size());
    std::atomic<size_t> cursor{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;

    const int nthreads = std::max(1, opts.threads);
    auto worker = [&]() {
        for (;;) {
            const size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) return;
            if (first_error) return;
            try {
                const Task& task = tasks[i];
                slots[i] = compute_trial(cfg, points[task.point], task.trial, master);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    // deterministic order: trials of point 0, aggregate, trials of point 1, ...
    std::vector<ExperimentRecord> records;
    records.reserve(tasks.size() + points.size());
    long nonconverged = 0;
    for (size_t p = 0; p < points.size(); ++p) {
        std::vector<ExperimentRecord> per_point(slots.begin() + p * trials,
                                                slots.begin() + (p + 1) * trials);
        for (const auto& r : per_point) {
            for (const auto& kv : r.metrics)
                if (kv.first.rfind("converged_", 0) == 0 && kv.second == 0.0) ++nonconverged;
            records.push_back(r);
        }
        records.push_back(aggregate_point(points[p], per_point));
    }

    if (!cfg.out_path.empty()) write_csv(cfg.out_path, cfg, records);
    if (opts.strict && nonconverged > 0)
        throw NumericalError(std::to_string(nonconverged) + " solver run(s) did not converge");
    return records;
}

std::vector<std::string> recipe_names() {
    return {"fig1", "fig2", "fig2_prose", "fig3", "fig4", "fig5"};
}

nlohmann::json recipe(const std::string& name) {
    using nlohmann::json;
    const json sweep = {{"variable", "M"}, {"values", {32, 64, 96, 128}}};
    if (name == "fig1") {
        return json{{"name", "fig1"},
                    {"sweep", sweep},
                    {"K", "M/4-1"},
                    {"L", {{"alpha", 0.75}}},
                    {"snr_db", 15.0},
                    {"covariance",
                     {{"model", "both"}, {"tau", 0.25}, {"angular_spread_deg", 10.0}}},
                    {"pilots", {{"model", "random_phase"}}},
                    {"trials", 100},
                    {"seed", 20260810},
                    {"outputs", {"rank_stats"}},
                    {"out", "fig1_rank.csv"}};
    }
    if (name == "fig2" || name == "fig2_caption" || name == "fig2_prose") {
        const double alpha = name == "fig2_prose" ? 0.25 : 0.75;
        return json{{"name", name == "fig2_caption" ? "fig2" : name},
                    {"sweep", sweep},
                    {"K", "M/4-1"},
                    {"L", {{"alpha", alpha}}},
                    {"snr_db", 15.0},
                    {"beta", 1.0},
                    {"covariance", {{"model", "max_entropy"}, {"tau", 0.25}}},
                    {"pilots", {{"model", "random_phase"}}},
                    {"trials", 100},
                    {"seed", 20260810},
                    {"outputs", {"exact_mse", "thm1", "thm3", "thm4", "gamma", "assumption3"}},
                    {"out", name == "fig2_prose" ? "fig2_prose_mse_max_entropy.csv"
                                                 : "fig2_mse_max_entropy.csv"}};
    }
    if (name == "fig3") {
        return json{{"name", "fig3"},
                    {"sweep", sweep},
                    {"K", "M/4-1"},
                    {"L", {{"alpha", 0.75}}},
                    {"snr_db", 15.0},
                    {"beta", 1.0},
                    {"covariance", {{"model", "one_ring_uca"}, {"angular_spread_deg", 10.0}}},
                    {"pilots", {{"model", "random_phase"}}},
                    {"trials", 100},
                    {"seed", 20260810},
                    {"outputs", {"exact_mse", "thm1", "thm3", "thm4", "gamma", "assumption3"}},
                    {"out", "fig3_mse_one_ring.csv"}};
    }
    if (name == "fig4" || name == "fig5") {
        const bool one_ring = name == "fig5";
        return json{{"name", name},
                    {"sweep", sweep},
                    {"K", "M/4-1"},
                    {"L", "search"},
                    {"snr_db", 15.0},
                    {"beta", 1.0},
                    {"covariance", one_ring ? json{{"model", "one_ring_uca"}, {"angular_spread_deg", 10.0}}
                                            : json{{"model", "max_entropy"}, {"tau", 0.25}}},
                    {"pilots", {{"model", "random_phase"}}},
                    {"trials", 100},
                    {"seed", 20260810},
                    {"outputs", {"pilot_length", "rank_stats"}},
                    {"out", one_ring ? "fig5_pilot_length_one_ring.csv"
                                     : "fig4_pilot_length_max_entropy.csv"}};
    }
    throw ConfigError("unknown recipe: " + name + " (try `recipes`)");
}

} // namespace covcsi::harness
