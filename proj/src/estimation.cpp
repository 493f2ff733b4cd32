#include "persist/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "persist/errors.hpp"
#include "persist/io.hpp"

namespace persist {

namespace {

void validate_request(const ScanRequest& req) {
    if (req.horizons.empty()) throw ParameterError("scan request needs at least one horizon");
    for (std::size_t i = 0; i < req.horizons.size(); ++i) {
        if (req.horizons[i] < 1) throw ParameterError("scan horizons must be >= 1");
        if (i > 0 && req.horizons[i] <= req.horizons[i - 1]) {
            throw ParameterError("scan horizons must be strictly ascending");
        }
    }
    for (const auto& rule : req.tails) {
        if (rule.kind == TailRule::Kind::fixed && rule.value < 1.0) throw ParameterError("tail n must be >= 1");
    }
}

std::vector<HorizonTotals> empty_totals(const ScanRequest& req) {
    std::vector<HorizonTotals> totals(req.horizons.size());
    for (std::size_t h = 0; h < totals.size(); ++h) {
        totals[h].horizon = req.horizons[h];
        totals[h].hits.assign(req.boundaries.size(), 0);
        totals[h].tau_below.assign(req.tails.size(), 0);
        totals[h].occupation_below.assign(req.tails.size(), 0);
        totals[h].sandwich_violations.assign(req.tails.size(), 0);
    }
    return totals;
}

// Walks one path Z_1..Z_Tmax (values supplied by `next`) and records every horizon.
class PathScanner {
public:
    explicit PathScanner(const ScanRequest& req, bool may_stop_early)
        : req_(req), may_stop_(may_stop_early && req.persistence_only()) {
        max_boundary_ = *std::max_element(req.boundaries.begin(), req.boundaries.end());
        tail_n_.resize(req.horizons.size());
        for (std::size_t h = 0; h < req.horizons.size(); ++h) {
            for (const auto& rule : req.tails) tail_n_[h].push_back(rule.n_at(req.horizons[h]));
        }
    }

    template <class Next>
    void scan(Next&& next, std::vector<HorizonTotals>& acc) const {
        RunningPathStats run(req_.exponential);
        std::size_t h = 0;
        const std::int64_t last = req_.horizons.back();
        for (std::int64_t k = 1; k <= last; ++k) {
            const double z = next();
            if (!std::isfinite(z)) throw DataError("non-finite process value at step " + std::to_string(k));
            const double log_before = run.log_sum_from0();
            run.push(z);
            if (k == req_.horizons[h]) {
                record(run, log_before, h, acc[h]);
                ++h;
            }
            if (may_stop_ && run.max_from1() > max_boundary_) return;
        }
    }

private:
    void record(const RunningPathStats& run, double log_before, std::size_t h, HorizonTotals& out) const {
        const double max1 = run.max_from1();
        for (std::size_t i = 0; i < req_.boundaries.size(); ++i) {
            if (max1 <= req_.boundaries[i]) ++out.hits[i];
        }
        if (req_.exponential) {
            const double phi0 = run.phi_from0();
            const double phi1 = run.phi_from1();
            const double bound = std::exp(-std::max(0.0, max1));
            out.phi_from0.add(phi0);
            out.phi_from1.add(phi1);
            out.psi.add(log_before);
            out.exp_neg_max.add(bound);
            if (phi1 < phi0) ++out.phi_order_violations;
            if (phi0 > bound * (1.0 + 1e-12)) ++out.phi_bound_violations;
        }
        if (req_.supremum) out.supremum.add(run.max_from0());
        const bool persists = max1 <= 0.0;
        for (std::size_t j = 0; j < req_.tails.size(); ++j) {
            const std::int64_t n = tail_n_[h][j];
            const bool tau_small = run.argmax() < n;
            const bool occ_small = run.occupation() < n;
            if (tau_small) ++out.tau_below[j];
            if (occ_small) ++out.occupation_below[j];
            if (persists && !(tau_small && occ_small)) ++out.sandwich_violations[j];
        }
    }

    const ScanRequest& req_;
    bool may_stop_;
    double max_boundary_ = 0.0;
    std::vector<std::vector<std::int64_t>> tail_n_;
};

// Per-worker simulation state for one process family.
class ReplicaSource {
public:
    ReplicaSource(const ProcessSpec& process, const CirculantGenerator* gen, std::uint64_t seed,
                  std::int64_t length)
        : process_(process), gen_(gen), seed_(seed), length_(length) {
        if (process.family == ProcessFamily::rwrs) {
            rwrs_.emplace(process.walk, Stream(0), 0);
        } else {
            ws_ = std::make_unique<CirculantGenerator::Workspace>(*gen_);
            first_.resize(static_cast<std::size_t>(length));
            second_.resize(static_cast<std::size_t>(length));
        }
    }

    void run_batch(std::int64_t begin, std::int64_t end, const PathScanner& scanner,
                   std::vector<HorizonTotals>& acc) {
        if (process_.family == ProcessFamily::rwrs) {
            for (std::int64_t r = begin; r < end; ++r) {
                const auto id = static_cast<std::uint64_t>(r);
                rwrs_->reset(derive_stream(StreamKey(seed_, id, Substream::walk)), scenery_seed(seed_, id));
                scanner.scan([this] { return rwrs_->next(); }, acc);
            }
            return;
        }
        for (std::int64_t r = begin; r < end; r += 2) {
            auto stream = derive_stream(StreamKey(seed_, static_cast<std::uint64_t>(r / 2), Substream::noise));
            gen_->generate_pair(stream, *ws_, first_, second_);
            scan_increments(first_, scanner, acc);
            if (r + 1 < end) scan_increments(second_, scanner, acc);
        }
    }

private:
    static void scan_increments(const std::vector<double>& x, const PathScanner& scanner,
                                std::vector<HorizonTotals>& acc) {
        double z = 0.0;
        std::size_t i = 0;
        scanner.scan([&] { return z += x[i++]; }, acc);
    }

    const ProcessSpec& process_;
    const CirculantGenerator* gen_;
    std::uint64_t seed_;
    std::int64_t length_;
    std::optional<RwrsStepper> rwrs_;
    std::unique_ptr<CirculantGenerator::Workspace> ws_;
    std::vector<double> first_;
    std::vector<double> second_;
};

}  // namespace

// ------------------------------------------------------------- ProcessSpec

ProcessSpec ProcessSpec::rwrs(const WalkKind& walk) {
    ProcessSpec spec;
    spec.family = ProcessFamily::rwrs;
    spec.walk = walk;
    return spec;
}

ProcessSpec ProcessSpec::lrd(CorrelationSpec correlation) {
    ProcessSpec spec;
    spec.family = ProcessFamily::lrd;
    spec.correlation = std::make_shared<const CorrelationSpec>(std::move(correlation));
    return spec;
}

double ProcessSpec::hurst() const {
    if (family == ProcessFamily::rwrs) return walk.rwrs_hurst();
    if (!correlation) throw ParameterError("LRD process without a correlation function");
    return correlation->hurst();
}

SlowVariation ProcessSpec::ell() const {
    if (family == ProcessFamily::rwrs) return SlowVariation::one;
    return correlation ? correlation->ell() : SlowVariation::one;
}

std::string ProcessSpec::family_name() const { return family == ProcessFamily::rwrs ? "rwrs" : "lrd"; }

std::string ProcessSpec::params() const {
    if (family == ProcessFamily::rwrs) return "walk=" + walk.label();
    if (correlation->is_fgn()) return "hurst=" + format_double(correlation->hurst());
    return "corr=table;J=" + std::to_string(correlation->table().size() - 1) +
           ";hurst=" + format_double(correlation->hurst()) + ";ell=" + to_string(correlation->ell());
}

// ---------------------------------------------------------------- TailRule

std::int64_t TailRule::n_at(std::int64_t horizon) const {
    if (kind == Kind::fixed) return static_cast<std::int64_t>(value);
    const double n = std::ceil(std::pow(static_cast<double>(horizon), value) - 1e-12);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(n));
}

std::string TailRule::label() const {
    if (kind == Kind::fixed) return "n=" + std::to_string(static_cast<std::int64_t>(value));
    return "n=ceil(T^" + format_double(value) + ")";
}

void HorizonTotals::merge(const HorizonTotals& other) {
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += other.hits[i];
    phi_from0.merge(other.phi_from0);
    phi_from1.merge(other.phi_from1);
    psi.merge(other.psi);
    exp_neg_max.merge(other.exp_neg_max);
    supremum.merge(other.supremum);
    phi_order_violations += other.phi_order_violations;
    phi_bound_violations += other.phi_bound_violations;
    for (std::size_t j = 0; j < tau_below.size(); ++j) {
        tau_below[j] += other.tau_below[j];
        occupation_below[j] += other.occupation_below[j];
        sandwich_violations[j] += other.sandwich_violations[j];
    }
}

// ----------------------------------------------------------------- run_scan

ScanResult run_scan(const ProcessSpec& process, const ScanRequest& request, const RunOptions& options) {
    validate_request(request);
    if (request.boundaries.empty()) throw ParameterError("scan request needs at least one boundary");
    if (options.replicas < 1) throw ParameterError("replica count must be >= 1");
    const int workers = std::max(1, options.workers);
    const std::int64_t length = request.horizons.back();

    std::unique_ptr<CirculantGenerator> generator;
    if (process.family == ProcessFamily::lrd) {
        generator = std::make_unique<CirculantGenerator>(*process.correlation, length,
                                                         process.allow_negative_correlation);
    }

    const PathScanner scanner(request, process.family == ProcessFamily::rwrs);
    const std::int64_t batches = (options.replicas + kBatchSize - 1) / kBatchSize;

    ScanResult result;
    result.request = request;
    result.replicas = options.replicas;
    result.totals = empty_totals(request);

    std::atomic<std::int64_t> next_batch{0};
    std::atomic<bool> failed{false};
    std::mutex fold_mutex;
    std::exception_ptr error;
    std::vector<std::optional<std::vector<HorizonTotals>>> pending(static_cast<std::size_t>(batches));
    std::int64_t next_fold = 0;

    auto work = [&] {
        try {
            ReplicaSource source(process, generator.get(), options.seed, length);
            for (;;) {
                const std::int64_t b = next_batch.fetch_add(1);
                if (b >= batches || failed.load()) break;
                auto acc = empty_totals(request);
                const std::int64_t begin = b * kBatchSize;
                const std::int64_t end = std::min(options.replicas, begin + kBatchSize);
                source.run_batch(begin, end, scanner, acc);

                std::scoped_lock lock(fold_mutex);
                pending[static_cast<std::size_t>(b)] = std::move(acc);
                while (next_fold < batches && pending[static_cast<std::size_t>(next_fold)]) {
                    auto& ready = *pending[static_cast<std::size_t>(next_fold)];
                    for (std::size_t h = 0; h < ready.size(); ++h) result.totals[h].merge(ready[h]);
                    pending[static_cast<std::size_t>(next_fold)].reset();
                    ++next_fold;
                }
            }
        } catch (...) {
            std::scoped_lock lock(fold_mutex);
            if (!error) error = std::current_exception();
            failed.store(true);
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
    return result;
}

std::vector<PersistenceEstimate> persistence_estimates(const ScanResult& scan) {
    std::vector<PersistenceEstimate> out;
    for (const auto& t : scan.totals) {
        for (std::size_t i = 0; i < scan.request.boundaries.size(); ++i) {
            out.push_back(make_persistence_estimate(t.horizon, scan.request.boundaries[i], t.hits[i], scan.replicas));
        }
    }
    return out;
}

PersistenceEstimate estimate_persistence(const ProcessSpec& process, std::int64_t horizon, double boundary,
                                         std::int64_t replicas, std::uint64_t seed, int workers) {
    if (replicas < 100) throw ParameterError("estimate_persistence: at least 100 replicas are required");
    ScanRequest req;
    req.horizons = {horizon};
    req.boundaries = {boundary};
    const auto scan = run_scan(process, req, RunOptions{replicas, seed, workers});
    return persistence_estimates(scan).front();
}

// ---------------------------------------------------------------------- Phi

std::vector<PhiEstimate> phi_estimates(const ProcessSpec& process, const ScanResult& scan) {
    const double H = process.hurst();
    std::vector<PhiEstimate> out;
    for (const auto& t : scan.totals) {
        PhiEstimate e;
        e.horizon = t.horizon;
        e.mean_from0 = t.phi_from0.mean();
        e.mean_from1 = t.phi_from1.mean();
        e.se_from0 = t.phi_from0.stderr_();
        e.se_from1 = t.phi_from1.stderr_();
        const double T = static_cast<double>(t.horizon);
        const double scale = std::pow(T, 1.0 - H) / slowly_varying(process.ell(), T);
        e.scaled_from0 = e.mean_from0 * scale;
        e.scaled_from1 = e.mean_from1 * scale;
        e.psi_mean = t.psi.mean();
        e.psi_se = t.psi.stderr_();
        e.mean_exp_neg_max = t.exp_neg_max.mean();
        e.order_violations = t.phi_order_violations;
        e.bound_violations = t.phi_bound_violations;
        out.push_back(e);
    }
    return out;
}

std::vector<PhiEstimate> estimate_phi(const ProcessSpec& process, const std::vector<std::int64_t>& grid,
                                      std::int64_t replicas, std::uint64_t seed, int workers) {
    std::vector<PhiEstimate> out;
    ScanRequest req;
    req.exponential = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0 && grid[i] <= grid[i - 1]) throw ParameterError("estimate_phi: grid must be ascending");
        if (grid[i] < 0) throw ParameterError("estimate_phi: negative horizon");
        if (grid[i] == 0) {
            PhiEstimate zero;  // only the l = 0 term, e^{Z_0} = 1
            zero.horizon = 0;
            zero.mean_from1 = std::numeric_limits<double>::infinity();
            zero.scaled_from1 = std::numeric_limits<double>::infinity();
            out.push_back(zero);
        } else {
            req.horizons.push_back(grid[i]);
        }
    }
    if (!req.horizons.empty()) {
        const auto scan = run_scan(process, req, RunOptions{replicas, seed, workers});
        for (auto& e : phi_estimates(process, scan)) out.push_back(e);
    }
    return out;
}

// ---------------------------------------------------------------------- sup

std::vector<SupExpectationEstimate> sup_estimates(const ProcessSpec& process, const ScanResult& scan) {
    const double H = process.hurst();
    std::vector<SupExpectationEstimate> out;
    for (const auto& t : scan.totals) {
        SupExpectationEstimate e;
        e.horizon = t.horizon;
        e.raw_mean = t.supremum.mean();
        e.raw_se = t.supremum.stderr_();
        const double T = static_cast<double>(t.horizon);
        const double scale = std::pow(T, H) * slowly_varying(process.ell(), T);
        e.kappa_hat = e.raw_mean / scale;
        e.se = e.raw_se / scale;
        out.push_back(e);
    }
    return out;
}

std::vector<SupExpectationEstimate> estimate_sup_expectation(const ProcessSpec& process,
                                                             const std::vector<std::int64_t>& grid,
                                                             std::int64_t replicas, std::uint64_t seed,
                                                             int workers) {
    ScanRequest req;
    req.horizons = grid;
    req.supremum = true;
    const auto scan = run_scan(process, req, RunOptions{replicas, seed, workers});
    return sup_estimates(process, scan);
}

// ------------------------------------------------------------ fit_exponent

ExponentFit fit_exponent(const std::vector<PersistenceEstimate>& estimates, LogCorrection correction,
                         double band_constant, std::optional<double> theta_theory, SlowVariation ell) {
    ExponentFit fit;
    fit.correction = correction;
    fit.band_constant = band_constant;
    fit.theta_theory = theta_theory;

    std::vector<double> x;
    std::vector<double> y;
    for (const auto& e : estimates) {
        if (e.p_hat <= 0.0) {
            fit.dropped.push_back(e.horizon);
            fit.warnings.push_back("horizon " + std::to_string(e.horizon) + " has zero hits; dropped from the fit");
            continue;
        }
        if (e.hits > 0 && e.hits < 30) {
            fit.warnings.push_back("horizon " + std::to_string(e.horizon) + " has only " + std::to_string(e.hits) +
                                   " hits");
        }
        const auto T = static_cast<double>(e.horizon);
        const auto n = static_cast<double>(e.replicas);
        const double floor = 1.0 / (n * n);
        const double var = std::max((1.0 - e.p_hat) / (n * e.p_hat), floor);
        fit.horizons.push_back(e.horizon);
        fit.p_hat.push_back(e.p_hat);
        fit.weights.push_back(1.0 / var);
        x.push_back(std::log(T));
        y.push_back(std::log(e.p_hat) - std::log(slowly_varying(ell, T)));
    }
    if (x.size() < 2) throw FitError("fit_exponent: fewer than two usable horizons");
    if (std::all_of(fit.horizons.begin(), fit.horizons.end(), [&](auto T) { return T == fit.horizons.front(); })) {
        throw FitError("fit_exponent: degenerate grid (single horizon)");
    }

    const LineFit line = weighted_line_fit(x, y, fit.weights);
    fit.theta_hat = -line.slope;
    fit.intercept = line.intercept;
    fit.chi2 = line.chi2;
    fit.residuals = line.residuals;
    double inflation = 1.0;
    if (x.size() > 2) inflation = std::max(1.0, line.chi2 / static_cast<double>(x.size() - 2));
    fit.stderr_ = line.slope_se * std::sqrt(inflation);

    const double log_tmax = std::log(static_cast<double>(*std::max_element(fit.horizons.begin(), fit.horizons.end())));
    fit.drift = band_constant * std::sqrt(log_tmax) / log_tmax;
    if (correction == LogCorrection::sqrt_log_band && theta_theory) {
        fit.theory_in_band = std::fabs(*theta_theory - fit.theta_hat) <= fit.drift;
    }
    return fit;
}

// -------------------------------------------------------------------- tails

std::vector<TailRow> tail_rows(const ScanResult& scan) {
    std::vector<TailRow> out;
    const auto zero = std::find(scan.request.boundaries.begin(), scan.request.boundaries.end(), 0.0);
    if (zero == scan.request.boundaries.end()) throw ParameterError("tail rows need boundary 0 in the scan");
    const auto zi = static_cast<std::size_t>(zero - scan.request.boundaries.begin());
    const auto n = static_cast<double>(scan.replicas);
    for (const auto& t : scan.totals) {
        for (std::size_t j = 0; j < scan.request.tails.size(); ++j) {
            TailRow row;
            row.horizon = t.horizon;
            row.rule = scan.request.tails[j].label();
            row.n = scan.request.tails[j].n_at(t.horizon);
            row.replicas = scan.replicas;
            row.persist_hits = t.hits[zi];
            row.tau_hits = t.tau_below[j];
            row.occupation_hits = t.occupation_below[j];
            row.p_persist = static_cast<double>(row.persist_hits) / n;
            row.p_tau = static_cast<double>(row.tau_hits) / n;
            row.p_occupation = static_cast<double>(row.occupation_hits) / n;
            row.sandwich_violations = t.sandwich_violations[j];
            out.push_back(row);
        }
    }
    return out;
}

std::vector<TailRow> estimate_tail_tau_N(const ProcessSpec& process, std::int64_t horizon,
                                         const std::vector<TailRule>& rules, std::int64_t replicas,
                                         std::uint64_t seed, int workers) {
    for (const auto& rule : rules) {
        const auto n = rule.n_at(horizon);
        if (n < 1 || n > horizon + 1) throw ParameterError("tail n must lie in [1, T+1]");
    }
    ScanRequest req;
    req.horizons = {horizon};
    req.boundaries = {0.0};
    req.tails = rules;
    const auto scan = run_scan(process, req, RunOptions{replicas, seed, workers});
    return tail_rows(scan);
}

std::vector<std::int64_t> dyadic_grid(int lo, int hi) {
    if (lo < 0 || hi < lo || hi > 40) throw ParameterError("dyadic grid exponents must satisfy 0 <= lo <= hi <= 40");
    std::vector<std::int64_t> grid;
    for (int e = lo; e <= hi; ++e) grid.push_back(std::int64_t{1} << e);
    return grid;
}

}  // namespace persist
