#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "persist/estimation.hpp"
#include "persist/io.hpp"

namespace persist {

/// Every knob of one experiment. Loaded from a "key = value" file, then
/// overridden key by key from the command line.
struct ExperimentConfig {
    std::string process = "lrd";          // lrd | rwrs
    std::string walk = "srw1";            // heavy:A | srw1 | srw2 | srw3
    std::optional<double> hurst;          // lrd; 0.75 when neither hurst nor corr_file is given
    std::string corr_file;                // lrd with a tabulated correlation
    std::string ell = "one";              // one | log | sqrt-log
    std::vector<double> boundaries{0.0};
    int tmin = 6;
    int tmax = 13;
    std::int64_t replicas = 1'000'000;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out = "results";
    double log_c = 1.0;
    bool exploratory = false;
    double tail_gamma = 0.1;              // n = ceil(T^gamma)
    std::vector<std::int64_t> tail_n;     // extra fixed n for the tail tables
    std::int64_t max_paths = 1000;        // cap for `simulate`

    /// Keys in serialization order.
    static const std::vector<std::string>& keys();

    void set(const std::string& key, const std::string& value);  // throws ConfigError
    std::string get(const std::string& key) const;

    /// key=value pairs. Worker count and output directory are run-time choices
    /// that do not change results, so they are left out unless requested.
    std::vector<std::pair<std::string, std::string>> serialize(bool include_runtime = false) const;
    std::string to_text(bool include_runtime = true) const;

    static ExperimentConfig parse_text(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Rejects inconsistent combinations (H < 1/2 without `exploratory`, bad grid, ...).
    void validate() const;

    std::vector<std::int64_t> grid() const { return dyadic_grid(tmin, tmax); }
    RunOptions run_options() const { return RunOptions{replicas, seed, workers}; }
};

ProcessSpec make_process(const ExperimentConfig& config);

/// Hurst index read off the variance-sum growth between n and 2n.
double estimate_hurst(const CorrelationSpec& spec, std::int64_t n);

// ----------------------------------------------------------------- tables

CsvTable persistence_table(const ProcessSpec& process, const std::vector<PersistenceEstimate>& estimates);
std::vector<PersistenceEstimate> persistence_from_table(const CsvTable& table);

CsvTable phi_table(const ProcessSpec& process, std::int64_t replicas, const std::vector<PhiEstimate>& rows);
std::vector<PhiEstimate> phi_from_table(const CsvTable& table);

CsvTable sup_table(const ProcessSpec& process, std::int64_t replicas, const std::vector<SupExpectationEstimate>& rows);
std::vector<SupExpectationEstimate> sup_from_table(const CsvTable& table);

CsvTable tails_table(const ProcessSpec& process, const std::vector<TailRow>& rows);
std::vector<TailRow> tails_from_table(const CsvTable& table);

CsvTable boundary_shift_table(const ProcessSpec& process, const BoundaryShiftReport& report);
std::vector<BoundaryShiftRow> boundary_shift_from_table(const CsvTable& table);

/// Prepends kind, seed, generator version and the serialized config.
void add_metadata(CsvTable& table, const std::string& kind, const ExperimentConfig& config);

nlohmann::ordered_json fit_to_json(const ExponentFit& fit);
ExponentFit fit_from_json(const nlohmann::ordered_json& j);

// --------------------------------------------------------------- commands

struct CommandResult {
    nlohmann::ordered_json summary;
    std::vector<std::filesystem::path> files;
    bool ok = true;          // false when a shared-sample inequality was violated
    double wall_seconds = 0.0;
};

/// Runs one of persistence | phi | sup | tails | simulate and writes its CSV
/// files plus summary.json into config.out.
CommandResult run_command(const std::string& command, const ExperimentConfig& config);

CommandResult run_persistence(const ExperimentConfig& config);
CommandResult run_phi(const ExperimentConfig& config);
CommandResult run_sup(const ExperimentConfig& config);
CommandResult run_tails(const ExperimentConfig& config);
CommandResult run_simulate(const ExperimentConfig& config);

/// Path Z_0..Z_T of replica r exactly as the estimation engine sees it.
std::vector<double> replica_path(const ProcessSpec& process, std::int64_t horizon, std::uint64_t seed,
                                 std::int64_t replica);

}  // namespace persist
