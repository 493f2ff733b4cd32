#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "persist/lattice_walks.hpp"
#include "persist/path_functionals.hpp"
#include "persist/stationary_gaussian.hpp"
#include "persist/statistics.hpp"

namespace persist {

enum class ProcessFamily { rwrs, lrd };

/// Which process to simulate: RWRS over a walk kind, or partial sums of a
/// stationary Gaussian sequence.
struct ProcessSpec {
    ProcessFamily family = ProcessFamily::lrd;
    WalkKind walk;
    std::shared_ptr<const CorrelationSpec> correlation;
    bool allow_negative_correlation = false;  // exploratory runs with H < 1/2

    static ProcessSpec rwrs(const WalkKind& walk);
    static ProcessSpec lrd(CorrelationSpec correlation);
    static ProcessSpec fgn(double hurst) { return lrd(CorrelationSpec::fgn(hurst)); }

    /// Scaling index H of the process (1 - 1/(2 alpha) for d=1 RWRS, 1/2 for d=2
    /// and transient RWRS, the Hurst index for LRD sums).
    double hurst() const;
    SlowVariation ell() const;
    /// Predicted persistence exponent 1 - H.
    double theta() const { return 1.0 - hurst(); }

    std::string family_name() const;
    /// "walk=srw1", "hurst=0.75", "corr=table(J=..)"; no commas.
    std::string params() const;
};

/// n as a function of T for the tau/N tail queries: fixed n, or ceil(T^gamma).
struct TailRule {
    enum class Kind { fixed, power };
    Kind kind = Kind::fixed;
    double value = 1.0;

    static TailRule fixed(std::int64_t n) { return {Kind::fixed, static_cast<double>(n)}; }
    static TailRule power(double gamma) { return {Kind::power, gamma}; }
    std::int64_t n_at(std::int64_t horizon) const;
    std::string label() const;
};

/// What a scan over shared sample paths accumulates at every grid horizon.
struct ScanRequest {
    std::vector<std::int64_t> horizons;  // ascending, each >= 1
    std::vector<double> boundaries{0.0};
    bool exponential = false;  // Phi from 0 and from 1, Psi at integer T
    bool supremum = false;     // max_{0<=k<=T} Z_k
    std::vector<TailRule> tails;

    /// True when nothing but persistence indicators is needed, which lets RWRS
    /// replicas stop as soon as the running maximum clears every boundary.
    bool persistence_only() const noexcept { return !exponential && !supremum && tails.empty(); }
};

struct HorizonTotals {
    std::int64_t horizon = 0;
    std::vector<std::int64_t> hits;  // per boundary
    MomentAccumulator phi_from0;
    MomentAccumulator phi_from1;
    MomentAccumulator psi;           // Psi(T) integrand
    MomentAccumulator exp_neg_max;   // e^{-max(0, max Z)}
    MomentAccumulator supremum;      // max_{0<=k<=T} Z_k
    std::int64_t phi_order_violations = 0;  // paths with phi_from1 < phi_from0
    std::int64_t phi_bound_violations = 0;  // paths with phi_from0 > e^{-max(0,max Z)}
    std::vector<std::int64_t> tau_below;        // per tail rule: #{tau_T < n}
    std::vector<std::int64_t> occupation_below; // per tail rule: #{N_T < n}
    std::vector<std::int64_t> sandwich_violations; // persists(0) but not (tau < n and N < n)

    void merge(const HorizonTotals& other);
};

struct ScanResult {
    ScanRequest request;
    std::int64_t replicas = 0;
    std::vector<HorizonTotals> totals;  // aligned with request.horizons
};

struct RunOptions {
    std::int64_t replicas = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
};

/// Replicas per batch. Fixed (not derived from the worker count) so that the
/// fold order, and with it every floating-point sum, is reproducible.
inline constexpr std::int64_t kBatchSize = 512;

/**
 * Simulates `replicas` independent paths up to the largest horizon and folds
 * the per-horizon functionals. Replica r draws from StreamKey(seed, r, walk)
 * and the scenery seeded by (seed, r) for RWRS, or from the FFT pair
 * StreamKey(seed, r/2, noise) for LRD. Batches are folded in index order.
 */
ScanResult run_scan(const ProcessSpec& process, const ScanRequest& request, const RunOptions& options);

/// Shared-sample persistence estimates for every (T, a) in the request.
std::vector<PersistenceEstimate> persistence_estimates(const ScanResult& scan);

/// P[max_{k=1..T} Z_k <= a]; Wilson 95% interval. Requires replicas >= 100.
PersistenceEstimate estimate_persistence(const ProcessSpec& process, std::int64_t horizon, double boundary,
                                         std::int64_t replicas, std::uint64_t seed, int workers = 1);

struct PhiEstimate {
    std::int64_t horizon = 0;
    double mean_from0 = 1.0;
    double mean_from1 = 1.0;
    double se_from0 = 0.0;
    double se_from1 = 0.0;
    double scaled_from0 = 1.0;  // mean_from0 * T^{1-H} / l(T)
    double scaled_from1 = 1.0;
    double psi_mean = 0.0;      // Psi(T)
    double psi_se = 0.0;
    double mean_exp_neg_max = 1.0;
    std::int64_t order_violations = 0;
    std::int64_t bound_violations = 0;
};

std::vector<PhiEstimate> phi_estimates(const ProcessSpec& process, const ScanResult& scan);

/// Phi and Psi over an ascending grid; T = 0 gives mean_from0 = 1 exactly.
std::vector<PhiEstimate> estimate_phi(const ProcessSpec& process, const std::vector<std::int64_t>& grid,
                                      std::int64_t replicas, std::uint64_t seed, int workers = 1);

struct SupExpectationEstimate {
    std::int64_t horizon = 0;
    double raw_mean = 0.0;  // E[max_{0<=k<=T} Z_k]
    double raw_se = 0.0;
    double kappa_hat = 0.0; // raw_mean / (T^H l(T))
    double se = 0.0;
};

std::vector<SupExpectationEstimate> sup_estimates(const ProcessSpec& process, const ScanResult& scan);

std::vector<SupExpectationEstimate> estimate_sup_expectation(const ProcessSpec& process,
                                                             const std::vector<std::int64_t>& grid,
                                                             std::int64_t replicas, std::uint64_t seed,
                                                             int workers = 1);

enum class LogCorrection { none, sqrt_log_band };

struct ExponentFit {
    double theta_hat = 0.0;
    double intercept = 0.0;
    double stderr_ = 0.0;      // inflated by sqrt(chi2/dof) when the fit is worse than its weights
    double chi2 = 0.0;
    std::vector<std::int64_t> horizons;
    std::vector<double> p_hat;
    std::vector<double> weights;
    std::vector<double> residuals;
    std::vector<std::int64_t> dropped;  // zero-hit horizons left out
    std::vector<std::string> warnings;

    LogCorrection correction = LogCorrection::none;
    double band_constant = 1.0;
    double drift = 0.0;  // c sqrt(log T_max) / log T_max
    std::optional<double> theta_theory;
    std::optional<bool> theory_in_band;
};

/**
 * Weighted least squares of log p_hat on log T with weights p n / (1 - p)
 * (delta-method variance floored at n^-2). log l(T) is subtracted first when
 * `ell` is not constant. Reports -slope as theta_hat.
 */
ExponentFit fit_exponent(const std::vector<PersistenceEstimate>& estimates,
                         LogCorrection correction = LogCorrection::none, double band_constant = 1.0,
                         std::optional<double> theta_theory = std::nullopt,
                         SlowVariation ell = SlowVariation::one);

struct TailRow {
    std::int64_t horizon = 0;
    std::string rule;
    std::int64_t n = 0;
    std::int64_t replicas = 0;
    std::int64_t persist_hits = 0;
    std::int64_t tau_hits = 0;
    std::int64_t occupation_hits = 0;
    double p_persist = 0.0;
    double p_tau = 0.0;
    double p_occupation = 0.0;
    std::int64_t sandwich_violations = 0;
};

std::vector<TailRow> tail_rows(const ScanResult& scan);

/// P[tau_T < n] and P[N_T < n] next to P[max Z <= 0], all from the same replicas.
std::vector<TailRow> estimate_tail_tau_N(const ProcessSpec& process, std::int64_t horizon,
                                         const std::vector<TailRule>& rules, std::int64_t replicas,
                                         std::uint64_t seed, int workers = 1);

/// Dyadic grid {2^lo, ..., 2^hi}.
std::vector<std::int64_t> dyadic_grid(int lo, int hi);

}  // namespace persist
