#include "persist/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "persist/errors.hpp"
#include "persist/scenery.hpp"

namespace persist {

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <class F>
auto config_value(const std::string& key, const std::string& value, F&& parse) {
    try {
        return parse(value);
    } catch (const std::exception& e) {
        throw ConfigError("config key '" + key + "': cannot use '" + value + "' (" + e.what() + ")");
    }
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw DataError("expected true or false");
}

std::string join_doubles(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ";" : "") + format_double(xs[i]);
    return out;
}

std::string join_ints(const std::vector<std::int64_t>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ";" : "") + std::to_string(xs[i]);
    return out;
}

// Lists are written with ';' so that config values never contain the CSV separator.
std::vector<std::string> split_any(const std::string& value) {
    std::string v = value;
    std::replace(v.begin(), v.end(), ';', ',');
    return split_list(v);
}

}  // namespace

// ------------------------------------------------------------------- config

const std::vector<std::string>& ExperimentConfig::keys() {
    static const std::vector<std::string> k{"process", "walk",       "hurst",  "corr_file", "ell",
                                            "boundary", "tmin",      "tmax",   "replicas",  "seed",
                                            "log_c",    "exploratory", "tail_gamma", "tail_n", "max_paths",
                                            "workers",  "out"};
    return k;
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
    const std::string value = trim(raw);
    if (key == "process") {
        process = value;
    } else if (key == "walk") {
        walk = value;
    } else if (key == "hurst") {
        if (value.empty()) {
            hurst.reset();
        } else {
            hurst = config_value(key, value, parse_double);
        }
    } else if (key == "corr_file") {
        corr_file = value;
    } else if (key == "ell") {
        ell = value;
    } else if (key == "boundary") {
        boundaries.clear();
        for (const auto& item : split_any(value)) boundaries.push_back(config_value(key, item, parse_double));
    } else if (key == "tmin") {
        tmin = static_cast<int>(config_value(key, value, parse_int));
    } else if (key == "tmax") {
        tmax = static_cast<int>(config_value(key, value, parse_int));
    } else if (key == "replicas") {
        // accept 1e6 as well as 1000000
        const double r = config_value(key, value, parse_double);
        if (r != std::floor(r) || r < 0 || r > 9e18) throw ConfigError("config key 'replicas': not a count");
        replicas = static_cast<std::int64_t>(r);
    } else if (key == "seed") {
        seed = static_cast<std::uint64_t>(config_value(key, value, parse_int));
    } else if (key == "workers") {
        workers = static_cast<int>(config_value(key, value, parse_int));
    } else if (key == "out") {
        out = value;
    } else if (key == "log_c") {
        log_c = config_value(key, value, parse_double);
    } else if (key == "exploratory") {
        exploratory = config_value(key, value, parse_bool);
    } else if (key == "tail_gamma") {
        tail_gamma = config_value(key, value, parse_double);
    } else if (key == "tail_n") {
        tail_n.clear();
        for (const auto& item : split_any(value)) tail_n.push_back(config_value(key, item, parse_int));
    } else if (key == "max_paths") {
        max_paths = config_value(key, value, parse_int);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

std::string ExperimentConfig::get(const std::string& key) const {
    if (key == "process") return process;
    if (key == "walk") return walk;
    if (key == "hurst") return hurst ? format_double(*hurst) : "";
    if (key == "corr_file") return corr_file;
    if (key == "ell") return ell;
    if (key == "boundary") return join_doubles(boundaries);
    if (key == "tmin") return std::to_string(tmin);
    if (key == "tmax") return std::to_string(tmax);
    if (key == "replicas") return std::to_string(replicas);
    if (key == "seed") return std::to_string(seed);
    if (key == "workers") return std::to_string(workers);
    if (key == "out") return out;
    if (key == "log_c") return format_double(log_c);
    if (key == "exploratory") return exploratory ? "true" : "false";
    if (key == "tail_gamma") return format_double(tail_gamma);
    if (key == "tail_n") return join_ints(tail_n);
    if (key == "max_paths") return std::to_string(max_paths);
    throw ConfigError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::serialize(bool include_runtime) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& key : keys()) {
        if (!include_runtime && (key == "workers" || key == "out")) continue;
        out.emplace_back(key, get(key));
    }
    return out;
}

std::string ExperimentConfig::to_text(bool include_runtime) const {
    std::string text;
    for (const auto& [k, v] : serialize(include_runtime)) text += k + " = " + v + "\n";
    return text;
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return config;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    return parse_text(read_file(path));
}

void ExperimentConfig::validate() const {
    if (process != "lrd" && process != "rwrs") throw ConfigError("process must be 'lrd' or 'rwrs', got '" + process + "'");
    if (process == "rwrs") {
        try {
            (void)WalkKind::parse(walk);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    } else {
        if (hurst && !(*hurst > 0.0 && *hurst < 1.0)) throw ConfigError("hurst must lie in (0, 1)");
        if (hurst && *hurst < 0.5 && !exploratory) {
            throw ConfigError("hurst < 1/2 gives negative correlations; pass --exploratory to run it anyway");
        }
        try {
            (void)parse_slow_variation(ell);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    if (tmin < 0 || tmax < tmin || tmax > 30) throw ConfigError("need 0 <= tmin <= tmax <= 30");
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (boundaries.empty()) throw ConfigError("at least one boundary is required");
    for (double a : boundaries) {
        if (!std::isfinite(a)) throw ConfigError("boundaries must be finite");
    }
    if (!(log_c > 0.0)) throw ConfigError("log_c must be positive");
    if (!(tail_gamma > 0.0 && tail_gamma <= 1.0)) throw ConfigError("tail_gamma must lie in (0, 1]");
    for (auto n : tail_n) {
        if (n < 1) throw ConfigError("tail_n values must be >= 1");
    }
    if (max_paths < 1) throw ConfigError("max_paths must be >= 1");
}

double estimate_hurst(const CorrelationSpec& spec, std::int64_t n) {
    const double ratio = variance_sum(spec, 2 * n) / variance_sum(spec, n);
    return 0.5 * std::log2(ratio);
}

ProcessSpec make_process(const ExperimentConfig& config) {
    config.validate();
    if (config.process == "rwrs") return ProcessSpec::rwrs(WalkKind::parse(config.walk));
    const SlowVariation ell = parse_slow_variation(config.ell);
    ProcessSpec spec;
    if (config.corr_file.empty()) {
        spec = ProcessSpec::fgn(config.hurst.value_or(0.75));
    } else {
        const auto table = read_correlation_table(config.corr_file);
        const auto n = std::int64_t{1} << config.tmax;
        const auto probe = CorrelationSpec::from_table(table, 0.5, 1.0, ell);
        const double H = config.hurst ? *config.hurst : estimate_hurst(probe, n);
        if (!(H > 0.0 && H < 1.0)) {
            throw ConfigError("estimated Hurst index " + format_double(H) + " is outside (0, 1); pass --hurst");
        }
        const double K = variance_sum(probe, n) / (std::pow(static_cast<double>(n), 2.0 * H) *
                                                   slowly_varying(ell, static_cast<double>(n)));
        spec = ProcessSpec::lrd(CorrelationSpec::from_table(table, H, K, ell));
    }
    spec.allow_negative_correlation = config.exploratory;
    return spec;
}

// ------------------------------------------------------------------- tables

void add_metadata(CsvTable& table, const std::string& kind, const ExperimentConfig& config) {
    std::vector<std::pair<std::string, std::string>> meta{
        {"persist", kind + " v1"},
        {"seed", std::to_string(config.seed)},
        {"generator", std::string(kGeneratorVersion)},
    };
    for (const auto& [k, v] : config.serialize()) meta.emplace_back("config." + k, v);
    table.metadata.insert(table.metadata.begin(), meta.begin(), meta.end());
}

CsvTable persistence_table(const ProcessSpec& process, const std::vector<PersistenceEstimate>& estimates) {
    CsvTable t;
    t.columns = {"process", "params", "T", "a", "n", "hits", "p_hat", "ci_low", "ci_high"};
    for (const auto& e : estimates) {
        t.rows.push_back({process.family_name(), process.params(), std::to_string(e.horizon), format_double(e.boundary),
                          std::to_string(e.replicas), std::to_string(e.hits), format_double(e.p_hat),
                          format_double(e.ci_low), format_double(e.ci_high)});
    }
    return t;
}

std::vector<PersistenceEstimate> persistence_from_table(const CsvTable& t) {
    std::vector<PersistenceEstimate> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        PersistenceEstimate e;
        e.horizon = parse_int(t.at(r, "T"));
        e.boundary = parse_double(t.at(r, "a"));
        e.replicas = parse_int(t.at(r, "n"));
        e.hits = parse_int(t.at(r, "hits"));
        e.p_hat = parse_double(t.at(r, "p_hat"));
        e.ci_low = parse_double(t.at(r, "ci_low"));
        e.ci_high = parse_double(t.at(r, "ci_high"));
        e.zero_hits = e.hits == 0;
        out.push_back(e);
    }
    return out;
}

CsvTable phi_table(const ProcessSpec& process, std::int64_t replicas, const std::vector<PhiEstimate>& rows) {
    CsvTable t;
    t.columns = {"process",      "params",       "T",        "n",      "mean_from0",       "se_from0",
                 "mean_from1",   "se_from1",     "scaled_from0", "scaled_from1", "psi", "psi_se",
                 "mean_exp_neg_max", "order_violations", "bound_violations"};
    for (const auto& e : rows) {
        t.rows.push_back({process.family_name(), process.params(), std::to_string(e.horizon), std::to_string(replicas),
                          format_double(e.mean_from0), format_double(e.se_from0), format_double(e.mean_from1),
                          format_double(e.se_from1), format_double(e.scaled_from0), format_double(e.scaled_from1),
                          format_double(e.psi_mean), format_double(e.psi_se), format_double(e.mean_exp_neg_max),
                          std::to_string(e.order_violations), std::to_string(e.bound_violations)});
    }
    return t;
}

std::vector<PhiEstimate> phi_from_table(const CsvTable& t) {
    std::vector<PhiEstimate> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        PhiEstimate e;
        e.horizon = parse_int(t.at(r, "T"));
        e.mean_from0 = parse_double(t.at(r, "mean_from0"));
        e.se_from0 = parse_double(t.at(r, "se_from0"));
        e.mean_from1 = parse_double(t.at(r, "mean_from1"));
        e.se_from1 = parse_double(t.at(r, "se_from1"));
        e.scaled_from0 = parse_double(t.at(r, "scaled_from0"));
        e.scaled_from1 = parse_double(t.at(r, "scaled_from1"));
        e.psi_mean = parse_double(t.at(r, "psi"));
        e.psi_se = parse_double(t.at(r, "psi_se"));
        e.mean_exp_neg_max = parse_double(t.at(r, "mean_exp_neg_max"));
        e.order_violations = parse_int(t.at(r, "order_violations"));
        e.bound_violations = parse_int(t.at(r, "bound_violations"));
        out.push_back(e);
    }
    return out;
}

CsvTable sup_table(const ProcessSpec& process, std::int64_t replicas, const std::vector<SupExpectationEstimate>& rows) {
    CsvTable t;
    t.columns = {"process", "params", "T", "n", "raw_mean", "raw_se", "kappa_hat", "se"};
    for (const auto& e : rows) {
        t.rows.push_back({process.family_name(), process.params(), std::to_string(e.horizon), std::to_string(replicas),
                          format_double(e.raw_mean), format_double(e.raw_se), format_double(e.kappa_hat),
                          format_double(e.se)});
    }
    return t;
}

std::vector<SupExpectationEstimate> sup_from_table(const CsvTable& t) {
    std::vector<SupExpectationEstimate> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        SupExpectationEstimate e;
        e.horizon = parse_int(t.at(r, "T"));
        e.raw_mean = parse_double(t.at(r, "raw_mean"));
        e.raw_se = parse_double(t.at(r, "raw_se"));
        e.kappa_hat = parse_double(t.at(r, "kappa_hat"));
        e.se = parse_double(t.at(r, "se"));
        out.push_back(e);
    }
    return out;
}

CsvTable tails_table(const ProcessSpec& process, const std::vector<TailRow>& rows) {
    CsvTable t;
    t.columns = {"process",      "params",   "T",     "rule",       "n_tail",       "n",
                 "persist_hits", "tau_hits", "occupation_hits", "p_persist", "p_tau", "p_occupation",
                 "sandwich_violations"};
    for (const auto& e : rows) {
        t.rows.push_back({process.family_name(), process.params(), std::to_string(e.horizon), e.rule,
                          std::to_string(e.n), std::to_string(e.replicas), std::to_string(e.persist_hits),
                          std::to_string(e.tau_hits), std::to_string(e.occupation_hits), format_double(e.p_persist),
                          format_double(e.p_tau), format_double(e.p_occupation),
                          std::to_string(e.sandwich_violations)});
    }
    return t;
}

std::vector<TailRow> tails_from_table(const CsvTable& t) {
    std::vector<TailRow> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        TailRow e;
        e.horizon = parse_int(t.at(r, "T"));
        e.rule = t.at(r, "rule");
        e.n = parse_int(t.at(r, "n_tail"));
        e.replicas = parse_int(t.at(r, "n"));
        e.persist_hits = parse_int(t.at(r, "persist_hits"));
        e.tau_hits = parse_int(t.at(r, "tau_hits"));
        e.occupation_hits = parse_int(t.at(r, "occupation_hits"));
        e.p_persist = parse_double(t.at(r, "p_persist"));
        e.p_tau = parse_double(t.at(r, "p_tau"));
        e.p_occupation = parse_double(t.at(r, "p_occupation"));
        e.sandwich_violations = parse_int(t.at(r, "sandwich_violations"));
        out.push_back(e);
    }
    return out;
}

CsvTable boundary_shift_table(const ProcessSpec& process, const BoundaryShiftReport& report) {
    CsvTable t;
    t.columns = {"process", "params", "T", "a", "b", "p_a", "p_b_prev", "factor", "lower_bound", "joint_se",
                 "violated"};
    for (const auto& r : report.rows) {
        t.rows.push_back({process.family_name(), process.params(), std::to_string(r.horizon), format_double(r.a),
                          format_double(r.b), format_double(r.p_a), format_double(r.p_b_prev), format_double(r.factor),
                          format_double(r.lower_bound), format_double(r.joint_se), r.violated ? "1" : "0"});
    }
    return t;
}

std::vector<BoundaryShiftRow> boundary_shift_from_table(const CsvTable& t) {
    std::vector<BoundaryShiftRow> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        BoundaryShiftRow r;
        r.horizon = parse_int(t.at(i, "T"));
        r.a = parse_double(t.at(i, "a"));
        r.b = parse_double(t.at(i, "b"));
        r.p_a = parse_double(t.at(i, "p_a"));
        r.p_b_prev = parse_double(t.at(i, "p_b_prev"));
        r.factor = parse_double(t.at(i, "factor"));
        r.lower_bound = parse_double(t.at(i, "lower_bound"));
        r.joint_se = parse_double(t.at(i, "joint_se"));
        r.violated = t.at(i, "violated") == "1";
        out.push_back(r);
    }
    return out;
}

// --------------------------------------------------------------------- json

using json = nlohmann::ordered_json;

json fit_to_json(const ExponentFit& fit) {
    json j;
    j["theta_hat"] = fit.theta_hat;
    j["stderr"] = fit.stderr_;
    j["intercept"] = fit.intercept;
    j["chi2"] = fit.chi2;
    j["correction"] = fit.correction == LogCorrection::none ? "none" : "sqrt-log-band";
    j["band_constant"] = fit.band_constant;
    j["drift"] = fit.drift;
    j["theta_theory"] = fit.theta_theory ? json(*fit.theta_theory) : json(nullptr);
    j["theory_in_band"] = fit.theory_in_band ? json(*fit.theory_in_band) : json(nullptr);
    j["points"] = json::array();
    for (std::size_t i = 0; i < fit.horizons.size(); ++i) {
        j["points"].push_back(json{{"T", fit.horizons[i]},
                                   {"p_hat", fit.p_hat[i]},
                                   {"weight", fit.weights[i]},
                                   {"residual", fit.residuals[i]}});
    }
    j["dropped"] = fit.dropped;
    j["warnings"] = fit.warnings;
    return j;
}

ExponentFit fit_from_json(const json& j) {
    ExponentFit fit;
    fit.theta_hat = j.at("theta_hat").get<double>();
    fit.stderr_ = j.at("stderr").get<double>();
    fit.intercept = j.at("intercept").get<double>();
    fit.chi2 = j.at("chi2").get<double>();
    fit.correction = j.at("correction") == "none" ? LogCorrection::none : LogCorrection::sqrt_log_band;
    fit.band_constant = j.at("band_constant").get<double>();
    fit.drift = j.at("drift").get<double>();
    if (!j.at("theta_theory").is_null()) fit.theta_theory = j.at("theta_theory").get<double>();
    if (!j.at("theory_in_band").is_null()) fit.theory_in_band = j.at("theory_in_band").get<bool>();
    for (const auto& p : j.at("points")) {
        fit.horizons.push_back(p.at("T").get<std::int64_t>());
        fit.p_hat.push_back(p.at("p_hat").get<double>());
        fit.weights.push_back(p.at("weight").get<double>());
        fit.residuals.push_back(p.at("residual").get<double>());
    }
    fit.dropped = j.at("dropped").get<std::vector<std::int64_t>>();
    fit.warnings = j.at("warnings").get<std::vector<std::string>>();
    return fit;
}

// ----------------------------------------------------------------- commands

namespace {

json process_json(const ProcessSpec& process, const ExperimentConfig& config) {
    json j;
    j["family"] = process.family_name();
    j["params"] = process.params();
    j["hurst"] = process.hurst();
    j["ell"] = to_string(process.ell());
    if (process.family == ProcessFamily::rwrs) {
        j["walk"] = process.walk.label();
        j["dimension"] = process.walk.dimension();
        if (process.walk.family == WalkFamily::simple_2d) {
            j["sigma2"] = planar_srw_sigma2();
            j["sigma2_formula"] = "1/(pi sqrt(det Sigma)) with Sigma = I/2";
        } else if (!process.walk.recurrent()) {
            const std::int64_t truncation = 1 << 14;
            const auto green = green_at_origin(process.walk, truncation, 4000,
                                               hash_key(StreamKey(config.seed, 0, Substream::auxiliary)));
            // P[S_i = 0] ~ (3/(2 pi i))^{3/2} beyond the truncation
            const double tail = 2.0 * std::pow(3.0 / (2.0 * std::numbers::pi), 1.5) /
                                std::sqrt(static_cast<double>(truncation));
            const double G = green.mean + tail;
            j["green_estimate"] = G;
            j["green_se"] = green.stderr_;
            j["green_truncation"] = truncation;
            j["sigma2"] = transient_sigma2(G);
            j["sigma2_formula"] = "2 G(0,0) - 1";
        }
    } else {
        j["scale_k"] = process.correlation->scale_k();
        j["correlation"] = process.correlation->label();
    }
    return j;
}

json header_json(const std::string& command, const ProcessSpec& process, const ExperimentConfig& config) {
    json j;
    j["schema"] = "persist-summary/1";
    j["command"] = command;
    j["generator"] = std::string(kGeneratorVersion);
    j["seed"] = config.seed;
    j["replicas"] = config.replicas;
    json cfg = json::object();
    for (const auto& [k, v] : config.serialize()) cfg[k] = v;
    j["config"] = cfg;
    j["process"] = process_json(process, config);
    return j;
}

std::filesystem::path write_table(CsvTable table, const std::string& kind, const ExperimentConfig& config) {
    add_metadata(table, kind, config);
    const auto path = std::filesystem::path(config.out) / (kind + ".csv");
    write_file_atomic(path, to_csv(table));
    return path;
}

std::filesystem::path write_summary(const json& summary, const ExperimentConfig& config) {
    const auto path = std::filesystem::path(config.out) / "summary.json";
    write_file_atomic(path, summary.dump(2) + "\n");
    return path;
}

json ratio_list(const std::vector<double>& values) {
    json out = json::array();
    for (std::size_t i = 1; i < values.size(); ++i) out.push_back(values[i] / values[i - 1]);
    return out;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

CommandResult run_persistence(const ExperimentConfig& config) {
    Stopwatch clock;
    const auto process = make_process(config);
    if (config.replicas < 100) throw ConfigError("persistence needs at least 100 replicas");
    const auto grid = config.grid();

    // T-1 horizons come for free on shared prefixes and feed the one-step bound.
    std::set<std::int64_t> horizons(grid.begin(), grid.end());
    for (auto T : grid) {
        if (T > 1) horizons.insert(T - 1);
    }
    std::set<double> bset(config.boundaries.begin(), config.boundaries.end());
    bset.insert(0.0);

    ScanRequest req;
    req.horizons.assign(horizons.begin(), horizons.end());
    req.boundaries.assign(bset.begin(), bset.end());
    const auto scan = run_scan(process, req, config.run_options());
    const auto all = persistence_estimates(scan);

    std::vector<PersistenceEstimate> reported;
    for (const auto& e : all) {
        const bool on_grid = std::binary_search(grid.begin(), grid.end(), e.horizon);
        const bool requested =
            std::find(config.boundaries.begin(), config.boundaries.end(), e.boundary) != config.boundaries.end();
        if (on_grid && requested) reported.push_back(e);
    }

    std::vector<std::pair<double, double>> pairs;
    for (double a : config.boundaries) pairs.emplace_back(a, 0.0);
    const auto shift = boundary_shift_check(all, pairs);

    CommandResult result;
    result.files.push_back(write_table(persistence_table(process, reported), "persistence", config));
    result.files.push_back(write_table(boundary_shift_table(process, shift), "boundary_shift", config));

    json summary = header_json("persistence", process, config);
    summary["theory"] = {{"theta", process.theta()}};
    summary["fits"] = json::array();
    std::vector<ExponentFit> fits;
    for (double a : config.boundaries) {
        std::vector<PersistenceEstimate> cells;
        for (const auto& e : reported) {
            if (e.boundary == a) cells.push_back(e);
        }
        json entry;
        entry["boundary"] = a;
        try {
            fits.push_back(fit_exponent(cells, LogCorrection::sqrt_log_band, config.log_c, process.theta(),
                                        process.ell()));
            entry["fit"] = fit_to_json(fits.back());
        } catch (const FitError& e) {
            entry["fit"] = nullptr;
            entry["error"] = e.what();
        }
        summary["fits"].push_back(entry);
    }
    json agreement = json::array();
    for (std::size_t i = 1; i < fits.size(); ++i) {
        const double diff = fits[i].theta_hat - fits[0].theta_hat;
        const double se = std::hypot(fits[i].stderr_, fits[0].stderr_);
        agreement.push_back(json{{"a", config.boundaries[i]},
                                 {"reference_a", config.boundaries[0]},
                                 {"difference", diff},
                                 {"combined_se", se},
                                 {"agree", std::fabs(diff) <= se}});
    }
    summary["exponent_agreement"] = agreement;
    json ratios = json::array();
    for (const auto& r : shift.ratios) {
        if (std::binary_search(grid.begin(), grid.end(), r.horizon)) {
            ratios.push_back(json{{"T", r.horizon}, {"a", r.a}, {"ratio", r.ratio}});
        }
    }
    std::int64_t violations = 0;
    for (const auto& r : shift.rows) violations += r.violated ? 1 : 0;
    summary["boundary_shift"] = {{"rows", shift.rows.size()}, {"violations", violations}, {"ratios", ratios}};
    result.ok = violations == 0;
    summary["ok"] = result.ok;
    result.files.push_back(write_summary(summary, config));
    result.summary = std::move(summary);
    result.wall_seconds = clock.seconds();
    return result;
}

CommandResult run_phi(const ExperimentConfig& config) {
    Stopwatch clock;
    const auto process = make_process(config);
    ScanRequest req;
    req.horizons = config.grid();
    req.exponential = true;
    const auto scan = run_scan(process, req, config.run_options());
    const auto rows = phi_estimates(process, scan);

    CommandResult result;
    result.files.push_back(write_table(phi_table(process, config.replicas, rows), "phi", config));
    json summary = header_json("phi", process, config);
    std::vector<double> scaled;
    std::int64_t order = 0, bound = 0;
    for (const auto& e : rows) {
        scaled.push_back(e.scaled_from0);
        order += e.order_violations;
        bound += e.bound_violations;
    }
    summary["scaled_from0_ratios"] = ratio_list(scaled);
    summary["order_violations"] = order;
    summary["bound_violations"] = bound;
    result.ok = order == 0 && bound == 0;
    summary["ok"] = result.ok;
    result.files.push_back(write_summary(summary, config));
    result.summary = std::move(summary);
    result.wall_seconds = clock.seconds();
    return result;
}

CommandResult run_sup(const ExperimentConfig& config) {
    Stopwatch clock;
    const auto process = make_process(config);
    ScanRequest req;
    req.horizons = config.grid();
    req.supremum = true;
    const auto scan = run_scan(process, req, config.run_options());
    const auto rows = sup_estimates(process, scan);

    CommandResult result;
    result.files.push_back(write_table(sup_table(process, config.replicas, rows), "sup", config));
    json summary = header_json("sup", process, config);
    std::vector<double> kappa;
    for (const auto& e : rows) kappa.push_back(e.kappa_hat);
    summary["kappa_ratios"] = ratio_list(kappa);
    summary["ok"] = true;
    result.files.push_back(write_summary(summary, config));
    result.summary = std::move(summary);
    result.wall_seconds = clock.seconds();
    return result;
}

CommandResult run_tails(const ExperimentConfig& config) {
    Stopwatch clock;
    const auto process = make_process(config);
    ScanRequest req;
    req.horizons = config.grid();
    req.boundaries = {0.0};
    req.tails.push_back(TailRule::power(config.tail_gamma));
    for (auto n : config.tail_n) req.tails.push_back(TailRule::fixed(n));
    const auto scan = run_scan(process, req, config.run_options());
    const auto rows = tail_rows(scan);

    CommandResult result;
    result.files.push_back(write_table(tails_table(process, rows), "tails", config));
    json summary = header_json("tails", process, config);
    std::int64_t violations = 0;
    json per_rule = json::array();
    for (const auto& rule : req.tails) {
        std::vector<double> x, tau, occ;
        for (const auto& r : rows) {
            violations += r.rule == rule.label() ? r.sandwich_violations : 0;
            if (r.rule != rule.label() || r.persist_hits == 0) continue;
            x.push_back(std::log(static_cast<double>(r.horizon)));
            tau.push_back(std::log(r.p_tau / r.p_persist));
            occ.push_back(std::log(r.p_occupation / r.p_persist));
        }
        json entry{{"rule", rule.label()}};
        if (x.size() >= 3) {
            const auto ft = line_fit(x, tau);
            const auto fo = line_fit(x, occ);
            entry["tau_ratio_exponent"] = ft.slope;
            entry["tau_ratio_exponent_se"] = ft.slope_se;
            entry["occupation_ratio_exponent"] = fo.slope;
            entry["occupation_ratio_exponent_se"] = fo.slope_se;
        } else {
            entry["tau_ratio_exponent"] = nullptr;
            entry["occupation_ratio_exponent"] = nullptr;
        }
        per_rule.push_back(entry);
    }
    summary["ratio_fits"] = per_rule;
    summary["sandwich_violations"] = violations;
    result.ok = violations == 0;
    summary["ok"] = result.ok;
    result.files.push_back(write_summary(summary, config));
    result.summary = std::move(summary);
    result.wall_seconds = clock.seconds();
    return result;
}

std::vector<double> replica_path(const ProcessSpec& process, std::int64_t horizon, std::uint64_t seed,
                                 std::int64_t replica) {
    const auto r = static_cast<std::uint64_t>(replica);
    if (process.family == ProcessFamily::rwrs) {
        auto stream = derive_stream(StreamKey(seed, r, Substream::walk));
        return rwrs_path(simulate_walk(process.walk, horizon, stream), scenery_seed(seed, r)).values;
    }
    CirculantGenerator gen(*process.correlation, horizon, process.allow_negative_correlation);
    CirculantGenerator::Workspace ws(gen);
    std::vector<double> first(static_cast<std::size_t>(horizon)), second(first.size());
    auto stream = derive_stream(StreamKey(seed, r / 2, Substream::noise));
    gen.generate_pair(stream, ws, first, second);
    return partial_sums(r % 2 == 0 ? first : second).values;
}

CommandResult run_simulate(const ExperimentConfig& config) {
    Stopwatch clock;
    const auto process = make_process(config);
    const std::int64_t T = std::int64_t{1} << config.tmax;
    const std::int64_t count = std::min(config.replicas, config.max_paths);

    CsvTable table;
    table.columns = {"process", "params", "path", "k", "Z"};
    std::unique_ptr<CirculantGenerator> gen;
    std::unique_ptr<CirculantGenerator::Workspace> ws;
    std::vector<double> first, second;
    if (process.family == ProcessFamily::lrd) {
        gen = std::make_unique<CirculantGenerator>(*process.correlation, T, process.allow_negative_correlation);
        ws = std::make_unique<CirculantGenerator::Workspace>(*gen);
        first.resize(static_cast<std::size_t>(T));
        second.resize(static_cast<std::size_t>(T));
    }
    for (std::int64_t r = 0; r < count; ++r) {
        std::vector<double> z;
        if (gen) {
            if (r % 2 == 0) {
                auto stream = derive_stream(StreamKey(config.seed, static_cast<std::uint64_t>(r / 2), Substream::noise));
                gen->generate_pair(stream, *ws, first, second);
            }
            z = partial_sums(r % 2 == 0 ? first : second).values;
        } else {
            z = replica_path(process, T, config.seed, r);
        }
        for (std::size_t k = 0; k < z.size(); ++k) {
            table.rows.push_back({process.family_name(), process.params(), std::to_string(r), std::to_string(k),
                                  format_double(z[k])});
        }
    }
    CommandResult result;
    result.files.push_back(write_table(std::move(table), "paths", config));
    json summary = header_json("simulate", process, config);
    summary["paths"] = count;
    summary["horizon"] = T;
    summary["capped"] = count < config.replicas;
    summary["ok"] = true;
    result.files.push_back(write_summary(summary, config));
    result.summary = std::move(summary);
    result.wall_seconds = clock.seconds();
    return result;
}

CommandResult run_command(const std::string& command, const ExperimentConfig& config) {
    if (command == "persistence") return run_persistence(config);
    if (command == "phi") return run_phi(config);
    if (command == "sup") return run_sup(config);
    if (command == "tails") return run_tails(config);
    if (command == "simulate") return run_simulate(config);
    throw ConfigError("unknown command '" + command + "'");
}

}  // namespace persist
