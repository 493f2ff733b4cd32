#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "persist/errors.hpp"
#include "persist/experiment.hpp"
#include "persist/io.hpp"
#include "persist/validation.hpp"

using namespace persist;

namespace {

// Flag values kept as text and applied on top of the config file, so that
// the file and the command line go through the same parser.
struct FlagSet {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::vector<double> boundaries;
    std::vector<std::int64_t> tail_n;
    std::string config_file;
    bool exploratory = false;
};

void add_experiment_flags(CLI::App& cmd, FlagSet& f) {
    cmd.add_option("--config", f.config_file, "key = value file; flags override its entries");
    auto text = [&](const std::string& flag, const std::string& key, const std::string& help) {
        f.options[key] = cmd.add_option(flag, f.values[key], help);
    };
    text("--process", "process", "rwrs or lrd");
    text("--walk", "walk", "heavy:ALPHA, srw1, srw2 or srw3");
    text("--hurst", "hurst", "Hurst index H of the stationary sequence");
    text("--corr-file", "corr_file", "CSV of j,r rows defining the correlation");
    text("--ell", "ell", "slowly varying factor: one, log or sqrt-log");
    f.options["boundary"] = cmd.add_option("--boundary", f.boundaries, "boundary a (repeatable)");
    text("--tmin", "tmin", "smallest horizon exponent (T = 2^tmin)");
    text("--tmax", "tmax", "largest horizon exponent");
    text("--replicas", "replicas", "replicas per horizon (shared across the grid)");
    text("--seed", "seed", "master seed");
    text("--workers", "workers", "worker threads; results do not depend on it");
    text("--out", "out", "output directory");
    text("--log-c", "log_c", "constant c of the sqrt-log band");
    text("--tail-gamma", "tail_gamma", "tail tables use n = ceil(T^gamma)");
    f.options["tail_n"] = cmd.add_option("--tail-n", f.tail_n, "extra fixed n for tail tables (repeatable)");
    text("--max-paths", "max_paths", "cap on the number of dumped paths");
    f.options["exploratory"] = cmd.add_flag("--exploratory", f.exploratory, "allow H < 1/2 (no pass/fail contract)");
}

ExperimentConfig build_config(const FlagSet& f) {
    ExperimentConfig config = f.config_file.empty() ? ExperimentConfig{} : ExperimentConfig::load(f.config_file);
    for (const auto& [key, value] : f.values) {
        if (f.options.at(key)->count() > 0) config.set(key, value);
    }
    if (f.options.at("boundary")->count() > 0) config.boundaries = f.boundaries;
    if (f.options.at("tail_n")->count() > 0) config.tail_n = f.tail_n;
    if (f.exploratory) config.exploratory = true;
    // a lone --tmax below the default tmin (or --tmin above tmax) moves the other end along
    const bool tmin_given = f.options.at("tmin")->count() > 0;
    const bool tmax_given = f.options.at("tmax")->count() > 0;
    if (config.tmin > config.tmax) {
        if (tmax_given && !tmin_given) config.tmin = config.tmax;
        if (tmin_given && !tmax_given) config.tmax = config.tmin;
    }
    config.validate();
    return config;
}

void print_summary(const std::string& command, const CommandResult& result) {
    const auto& s = result.summary;
    if (command == "persistence") {
        for (const auto& entry : s["fits"]) {
            if (entry["fit"].is_null()) {
                std::printf("a=%s: no fit (%s)\n", entry["boundary"].dump().c_str(),
                            entry["error"].get<std::string>().c_str());
                continue;
            }
            const auto& fit = entry["fit"];
            std::printf("a=%s: theta_hat = %.4f +- %.4f (theory %.4f, band +-%.3f: %s)\n",
                        entry["boundary"].dump().c_str(), fit["theta_hat"].get<double>(),
                        fit["stderr"].get<double>(), s["theory"]["theta"].get<double>(), fit["drift"].get<double>(),
                        fit["theory_in_band"].get<bool>() ? "inside" : "outside");
        }
        std::printf("one-step bound violations: %lld\n",
                    static_cast<long long>(s["boundary_shift"]["violations"].get<std::int64_t>()));
    }
    if (s.contains("process") && s["process"].contains("sigma2")) {
        std::printf("sigma^2 = %.6f (%s)\n", s["process"]["sigma2"].get<double>(),
                    s["process"]["sigma2_formula"].get<std::string>().c_str());
    }
    for (const auto& path : result.files) std::printf("wrote %s\n", path.string().c_str());
}

int run_experiment(const std::string& command, const FlagSet& flags) {
    const auto config = build_config(flags);
    const auto result = run_command(command, config);
    print_summary(command, result);
    // Timing lives outside the result files so those stay byte-identical across runs.
    const std::string log = "command = " + command + "\nworkers = " + std::to_string(config.workers) +
                            "\nwall_seconds = " + format_double(result.wall_seconds) + "\n";
    write_file_atomic(std::filesystem::path(config.out) / "run.log", log);
    std::fprintf(stderr, "wall time %.2f s\n", result.wall_seconds);
    if (!result.ok) {
        std::fprintf(stderr, "a shared-sample inequality was violated; see summary.json\n");
        return 1;
    }
    return 0;
}

int run_validate(bool quick, bool list, std::uint64_t seed, int workers, const std::vector<std::string>& only) {
    if (list) {
        for (const auto& c : validation_checks()) {
            std::printf("%-20s %-11s %s\n", c.id.c_str(), c.tier == CheckTier::exact ? "exact" : "statistical",
                        c.description.c_str());
        }
        return 0;
    }
    ValidationOptions options;
    options.quick = quick;
    options.seed = seed;
    options.workers = workers;
    options.only = only;
    int failed = 0;
    const auto outcomes = run_validation(options, [&](const CheckOutcome& o) {
        std::printf("%s %-20s %6.2fs  %s\n", o.passed ? "PASS" : "FAIL", o.id.c_str(), o.seconds,
                    o.description.c_str());
        if (!o.passed) {
            std::printf("     %s: %s\n", o.id.c_str(), o.detail.c_str());
            ++failed;
        }
        std::fflush(stdout);
    });
    std::printf("%zu checks, %d failed\n", outcomes.size(), failed);
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo persistence probabilities for random walks in random scenery and "
                 "long-range-dependent Gaussian sums"};
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> experiments{
        {"persistence", "estimate P[max Z_k <= a] over a dyadic grid and fit the exponent"},
        {"phi", "exponential functional Phi(T) and Psi(T) tables"},
        {"sup", "scaled E[max Z_k] (kappa stabilisation)"},
        {"tails", "P[tau_T < n] and P[N_T < n] next to the persistence probability"},
        {"simulate", "dump raw paths Z_0..Z_T (capped count)"},
    };
    std::map<std::string, FlagSet> flags;
    for (const auto& [name, help] : experiments) {
        auto* cmd = app.add_subcommand(name, help);
        add_experiment_flags(*cmd, flags[name]);
    }

    bool quick = false, list = false;
    std::uint64_t seed = 1;
    int workers = 1;
    std::vector<std::string> only;
    auto* validate = app.add_subcommand("validate", "run the invariant suite; nonzero exit on any failure");
    validate->add_flag("--quick", quick, "exact checks only (well under a minute)");
    validate->add_flag("--list", list, "list check identifiers and exit");
    validate->add_option("--seed", seed, "master seed");
    validate->add_option("--workers", workers, "worker threads");
    validate->add_option("--check", only, "run only this check id (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (validate->parsed()) return run_validate(quick, list, seed, workers, only);
        for (const auto& [name, help] : experiments) {
            if (app.got_subcommand(name)) return run_experiment(name, flags[name]);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ParameterError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 2;
}
