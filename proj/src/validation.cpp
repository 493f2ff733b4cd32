#include "persist/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "persist/errors.hpp"
#include "persist/estimation.hpp"
#include "persist/experiment.hpp"
#include "persist/io.hpp"
#include "persist/scenery.hpp"

namespace persist {

namespace {

class Checker {
public:
    void expect(bool ok, const std::string& what) {
        ++count_;
        if (ok) return;
        ++failures_;
        if (failures_ <= 5) {
            if (!detail_.empty()) detail_ += "; ";
            detail_ += what;
        }
    }
    void close(const std::string& what, double got, double want, double tol) {
        expect(std::fabs(got - want) <= tol,
               what + ": got " + format_double(got) + ", want " + format_double(want) + " +- " + format_double(tol));
    }
    bool passed() const noexcept { return failures_ == 0; }
    std::string detail() const {
        if (failures_ <= 5) return detail_;
        return detail_ + "; ... " + std::to_string(failures_ - 5) + " more";
    }

private:
    std::int64_t count_ = 0;
    std::int64_t failures_ = 0;
    std::string detail_;
};

using CheckFn = void (*)(Checker&, const ValidationOptions&);

struct Check {
    const char* id;
    CheckTier tier;
    const char* description;
    CheckFn run;
};

std::uint64_t sub_seed(const ValidationOptions& o, std::uint64_t tag) {
    return hash_key(StreamKey(o.seed, tag, Substream::auxiliary));
}

double binomial_central(int n) {
    // C(2n, n) 4^{-n}
    double p = 1.0;
    for (int k = 1; k <= n; ++k) p *= (2.0 * k - 1.0) / (2.0 * k);
    return p;
}

std::vector<double> gaussian_path(Stream& s, std::int64_t T, double scale) {
    std::vector<double> z{0.0};
    for (std::int64_t k = 0; k < T; ++k) z.push_back(z.back() + scale * s.gaussian());
    return z;
}

const std::vector<WalkKind>& all_kinds() {
    static const std::vector<WalkKind> kinds{WalkKind::simple(1), WalkKind::simple(2), WalkKind::simple(3),
                                             WalkKind::heavy(1.5), WalkKind::heavy(1.2)};
    return kinds;
}

// ------------------------------------------------------------------ exact

void rng_pure(Checker& c, const ValidationOptions& o) {
    auto a = derive_stream(StreamKey(o.seed, 7, Substream::walk));
    auto b = derive_stream(StreamKey(o.seed, 7, Substream::walk));
    auto d = derive_stream(StreamKey(o.seed, 8, Substream::walk));
    bool same = true, differ = false;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.next();
        same = same && x == b.next();
        differ = differ || x != d.next();
    }
    c.expect(same, "equal keys give different sequences");
    c.expect(differ, "neighbouring keys coincide");
    const auto seed = scenery_seed(o.seed, 3);
    const double first = site_gaussian(seed, SiteKey{5, -2});
    for (int i = 0; i < 100; ++i) (void)site_gaussian(seed, SiteKey{i, i});
    c.expect(site_gaussian(seed, SiteKey{5, -2}) == first, "site_gaussian depends on query order");
    c.expect(site_gaussian(seed, SiteKey{5}) != site_gaussian(seed, SiteKey{5, 0}),
             "sites of different dimension share a value");
}

void rng_range(Checker& c, const ValidationOptions&) {
    bool threw = false;
    try {
        (void)site_gaussian(1, SiteKey{kSiteCoordinateLimit});
    } catch (const RangeError&) {
        threw = true;
    }
    c.expect(threw, "coordinate 2^31 accepted");
    c.expect(std::isfinite(site_gaussian(1, SiteKey{kSiteCoordinateLimit - 1})), "largest coordinate rejected");
}

void walk_handbuilt(Checker& c, const ValidationOptions&) {
    std::vector<SiteKey> pos{SiteKey{0}, SiteKey{1}, SiteKey{0}, SiteKey{1}};
    const auto w = walk_from_positions(WalkKind::simple(1), pos);
    c.expect(w.V(1) == 1 && w.V(2) == 2 && w.V(3) == 5, "V_n for S=(0,1,0,1) is not (1,2,5)");
    c.expect(w.local_times.count(SiteKey{1}) == 2 && w.local_times.count(SiteKey{0}) == 1, "N_3 wrong");
    c.expect(conditional_covariance(w, 2, 3) == 3.0, "sum N_2 N_3 != 3");
    c.expect(conditional_covariance(w, 0, 3) == 0.0, "N_0 is not empty");
    c.expect(conditional_covariance(w, 3, 3) == 5.0, "Cov(Z_3, Z_3 | S) != V_3");
    for (const auto& k : all_kinds()) c.expect(WalkKind::parse(k.label()) == k, "label round trip " + k.label());
}

// Sum_x N_T(x) = T, n <= V_n <= n^2, incremental V equal to recomputed sum of N_n(x)^2,
// conditional covariances nonnegative.
void walk_invariants(Checker& c, const ValidationOptions& o) {
    const std::int64_t T = 256;
    for (const auto& kind : all_kinds()) {
        for (std::uint64_t r = 0; r < 1000; ++r) {
            auto stream = derive_stream(StreamKey(sub_seed(o, 10), r, Substream::walk));
            const auto walk = simulate_walk(kind, T, stream);
            std::int64_t total = 0;
            walk.local_times.for_each([&](const LocalTimeTable::Entry& e) { total += e.count; });
            c.expect(total == T, kind.label() + ": sum of local times != T");
            for (std::int64_t n = 1; n <= T; ++n) {
                const auto v = walk.V(n);
                c.expect(v >= n && v <= n * n, kind.label() + ": V_n outside [n, n^2]");
            }
            if (r % 50 == 0) {
                for (std::int64_t n : {std::int64_t{1}, std::int64_t{17}, T / 2, T}) {
                    std::int64_t sq = 0;
                    local_times_at(walk, n).for_each([&](const LocalTimeTable::Entry& e) { sq += e.count * e.count; });
                    c.expect(sq == walk.V(n), kind.label() + ": incremental V_n differs from sum N_n(x)^2");
                }
                for (std::int64_t l : {std::int64_t{0}, std::int64_t{5}, T / 3}) {
                    for (std::int64_t k : {T / 3, T}) {
                        c.expect(conditional_covariance(walk, l, k) >= 0.0, "negative sum N_l N_k");
                        c.expect(conditional_increment_covariance(walk, l, k) >= 0.0, "negative sum N_l (N_k - N_l)");
                    }
                }
            }
        }
    }
}

void rwrs_sum(Checker& c, const ValidationOptions& o) {
    for (const auto& kind : all_kinds()) {
        for (std::uint64_t r = 0; r < 20; ++r) {
            auto stream = derive_stream(StreamKey(sub_seed(o, 11), r, Substream::walk));
            const auto walk = simulate_walk(kind, 300, stream);
            const auto sc = scenery_seed(sub_seed(o, 11), r);
            const auto z = rwrs_path(walk, sc);
            double direct = 0.0;
            walk.local_times.for_each(
                [&](const LocalTimeTable::Entry& e) { direct += static_cast<double>(e.count) * site_gaussian(sc, e.site); });
            c.close(kind.label() + ": Z_T vs sum N_T(x) xi_x", z.values.back(), direct,
                    1e-9 * (1.0 + std::fabs(direct)));
            RwrsStepper stepper(kind, derive_stream(StreamKey(sub_seed(o, 11), r, Substream::walk)), sc);
            bool same = true;
            for (std::size_t k = 1; k < z.values.size(); ++k) same = same && stepper.next() == z.values[k];
            c.expect(same, kind.label() + ": streaming and stored RWRS paths differ");
        }
    }
}

void lrd_formulas(Checker& c, const ValidationOptions&) {
    c.expect(CorrelationSpec::fgn(0.3)(0) == 1.0, "r(0) != 1");
    c.close("H=0.5 r(1)", CorrelationSpec::fgn(0.5)(1), 0.0, 1e-15);
    c.close("H=0.75 r(1)", fgn_correlation(0.75, 1), (std::pow(2.0, 1.5) - 2.0) / 2.0, 1e-12);
    for (std::int64_t n : {10, 100, 1000}) {
        c.close("variance sum H=0.75", variance_sum(CorrelationSpec::fgn(0.75), n), std::pow(n, 1.5),
                1e-9 * std::pow(n, 1.5));
        c.close("variance sum H=0.5", variance_sum(CorrelationSpec::fgn(0.5), n), static_cast<double>(n), 1e-9);
    }
    const std::vector<double> x{1.0, -1.0};
    const auto z = partial_sums(x);
    c.expect(z.values == std::vector<double>{0.0, 1.0, 0.0}, "partial sums of (1,-1)");
    c.expect(partial_sums(std::vector<double>{}).values == std::vector<double>{0.0}, "partial sums of ()");
}

void lrd_reversal(Checker& c, const ValidationOptions&) {
    for (double H : {0.5, 0.6, 0.75, 0.9}) {
        const auto spec = CorrelationSpec::fgn(H);
        for (std::int64_t T : {1, 7, 64, 256}) {
            const auto fwd = partial_sum_covariance(spec, T);
            const auto rev = reversed_partial_sum_covariance(spec, T);
            double worst = 0.0;
            for (std::size_t i = 0; i < fwd.size(); ++i) {
                worst = std::max(worst, std::fabs(fwd[i] - rev[i]) / std::max(1.0, std::fabs(fwd[i])));
            }
            c.expect(worst < 1e-12, "H=" + format_double(H) + " T=" + std::to_string(T) +
                                        ": reversal identity off by " + format_double(worst));
        }
    }
}

void lrd_embedding(Checker& c, const ValidationOptions&) {
    for (double H : {0.5, 0.6, 0.75, 0.9, 0.99}) {
        for (std::int64_t T : {2, 3, 100, 1000, 8192}) {
            CirculantGenerator gen(CorrelationSpec::fgn(H), T);
            c.expect(gen.min_relative_eigenvalue() >= -1e-9, "FGN embedding has a material negative eigenvalue");
        }
    }
    bool threw = false;
    try {
        CirculantGenerator gen(CorrelationSpec::from_table({1.0, 0.9, 0.0}, 0.5, 1.0, SlowVariation::one), 3);
    } catch (const EmbeddingError&) {
        threw = true;
    }
    c.expect(threw, "invalid correlation table accepted");
    threw = false;
    try {
        CirculantGenerator gen(CorrelationSpec::fgn(0.3), 100);
    } catch (const ParameterError&) {
        threw = true;
    }
    c.expect(threw, "negative FGN correlations accepted outside exploratory runs");
}

void pf_examples(Checker& c, const ValidationOptions&) {
    auto s = compute_stats(std::vector<double>{0.0, -1.0, -2.0}, 0.0);
    c.expect(s.persists && s.tau == 0 && s.occupation == 0, "Z=(0,-1,-2) indicators");
    c.close("Z=(0,-1,-2) phi", s.phi_value_from0, 1.0 / (1.0 + std::exp(-1.0) + std::exp(-2.0)), 1e-15);
    s = compute_stats(std::vector<double>{0.0, 2.0, -1.0}, 0.0);
    c.expect(!s.persists && s.tau == 1 && s.occupation == 1, "Z=(0,2,-1) indicators");
    const std::vector<double> flat(10, 0.0);
    const std::vector<double> pts{1, 2, 5, 9};
    s = compute_stats(flat, 0.0, pts);
    c.close("zero path phi", s.phi_value_from0, 0.1, 1e-15);
    for (double x : pts) c.close("zero path psi", s.psi_value(x), std::log(x), 1e-14);
    bool threw = false;
    try {
        (void)compute_stats(std::vector<double>{0.0, std::numeric_limits<double>::quiet_NaN()}, 0.0);
    } catch (const DataError&) {
        threw = true;
    }
    c.expect(threw, "NaN accepted");
}

void pf_one_pass(Checker& c, const ValidationOptions& o) {
    auto stream = derive_stream(StreamKey(sub_seed(o, 12), 0, Substream::auxiliary));
    for (int rep = 0; rep < 1000; ++rep) {
        const auto T = static_cast<std::int64_t>(1 + stream.bounded(128));
        const auto z = gaussian_path(stream, T, rep % 3 == 0 ? 5.0 : 1.0);
        const double x = 1.0 + 0.37 * static_cast<double>(T - 1);
        const std::vector<double> pts{x};
        const auto s = compute_stats(z, 0.0, pts);
        double max1 = -std::numeric_limits<double>::infinity();
        std::int64_t occ = 0;
        long double s0 = 0, s1 = 0;
        for (std::int64_t k = 0; k <= T; ++k) {
            if (k >= 1) {
                max1 = std::max(max1, z[k]);
                occ += z[k] > 0.0;
                s1 += std::exp(static_cast<long double>(z[k]));
            }
            s0 += std::exp(static_cast<long double>(z[k]));
        }
        const auto tau = std::max_element(z.begin(), z.end()) - z.begin();
        const auto whole = static_cast<std::int64_t>(std::floor(x));
        long double psi = 0;
        for (std::int64_t k = 0; k < whole; ++k) psi += std::exp(static_cast<long double>(z[k]));
        psi += static_cast<long double>(x - whole) * std::exp(static_cast<long double>(z[whole]));
        c.expect(s.max_1_to_T == max1 && s.tau == tau && s.occupation == occ, "max/tau/occupation differ");
        c.expect(std::fabs(s.phi_value_from0 * static_cast<double>(s0) - 1.0) < 1e-12, "phi_from0 differs");
        c.expect(std::fabs(s.phi_value_from1 * static_cast<double>(s1) - 1.0) < 1e-12, "phi_from1 differs");
        const double ref = static_cast<double>(std::log(psi));
        c.expect(std::fabs(s.psi_value(x) - ref) <= 1e-12 * std::max(1.0, std::fabs(ref)), "psi differs");
    }
}

void pf_per_path(Checker& c, const ValidationOptions& o) {
    auto stream = derive_stream(StreamKey(sub_seed(o, 13), 0, Substream::auxiliary));
    for (int rep = 0; rep < 5000; ++rep) {
        const auto T = static_cast<std::int64_t>(1 + stream.bounded(200));
        const auto z = gaussian_path(stream, T, 1.0);
        const auto s = compute_stats(z, 0.0);
        if (s.persists) {
            c.expect(s.tau == 0, "persistence without tau = 0");
            c.expect(s.occupation == 0, "persistence without N_T = 0");
        }
        c.expect(s.phi_value_from0 > 0.0 && s.phi_value_from0 <= 1.0, "phi_from0 outside (0,1]");
        c.expect(s.phi_value_from1 >= s.phi_value_from0, "phi_from1 < phi_from0");
        const double m = std::max(0.0, s.max_1_to_T);
        c.expect(s.phi_value_from0 <= std::exp(-m) * (1 + 1e-12), "phi_from0 above e^{-max}");
        c.expect(s.phi_value_from0 >= std::exp(-m) / static_cast<double>(T + 1) * (1 - 1e-12),
                 "phi_from0 below e^{-max}/(T+1)");
        c.expect(!s.persists_at(-0.3) || s.persists_at(0.4), "persistence not monotone in a");
        const std::vector<double> prefix(z.begin(), z.end() - 1);
        if (T > 1) c.expect(compute_stats(prefix, 0.0).max_1_to_T <= s.max_1_to_T, "max decreases along prefixes");
    }
}

void est_fit_synthetic(Checker& c, const ValidationOptions&) {
    auto point = [](double T, double p) {
        PersistenceEstimate e;
        e.horizon = static_cast<std::int64_t>(T);
        e.replicas = 1'000'000'000'000;
        e.hits = static_cast<std::int64_t>(p * 1e12);
        e.p_hat = p;
        return e;
    };
    std::vector<PersistenceEstimate> exact, logged;
    for (int k = 6; k <= 12; ++k) {
        const double T = std::ldexp(1.0, k);
        exact.push_back(point(T, std::pow(T, -0.25)));
        logged.push_back(point(T, std::pow(T, -0.25) * std::sqrt(std::log(T))));
    }
    const auto f = fit_exponent(exact);
    c.close("exact power-law exponent", f.theta_hat, 0.25, 1e-10);
    c.expect(f.stderr_ > 0.0, "stderr not positive");
    const auto b = fit_exponent(logged, LogCorrection::sqrt_log_band, 1.0, 0.25);
    c.expect(b.theta_hat < 0.25, "log factor did not bias the exponent low");
    c.expect(b.theory_in_band.value_or(false), "0.25 outside the sqrt-log band");
    bool threw = false;
    try {
        (void)fit_exponent({point(64, 0.3), point(64, 0.3)});
    } catch (const FitError&) {
        threw = true;
    }
    c.expect(threw, "single-horizon fit accepted");
}

void est_shared_samples(Checker& c, const ValidationOptions& o) {
    for (const auto& process : {ProcessSpec::fgn(0.75), ProcessSpec::rwrs(WalkKind::simple(1)),
                                ProcessSpec::rwrs(WalkKind::heavy(1.5))}) {
        ScanRequest req;
        req.horizons = dyadic_grid(0, 9);
        req.boundaries = {-0.5, 0.0, 1.0};
        req.exponential = true;
        req.tails = {TailRule::fixed(1), TailRule::fixed(3), TailRule::power(0.1), TailRule::power(1.0)};
        const auto scan = run_scan(process, req, RunOptions{4000, sub_seed(o, 14), o.workers});
        const auto name = process.family_name() + " " + process.params();
        for (std::size_t h = 0; h < scan.totals.size(); ++h) {
            const auto& t = scan.totals[h];
            c.expect(t.hits[0] <= t.hits[1] && t.hits[1] <= t.hits[2], name + ": p not monotone in a");
            if (h > 0) {
                for (std::size_t i = 0; i < 3; ++i) c.expect(t.hits[i] <= scan.totals[h - 1].hits[i], name + ": p increases in T");
            }
            c.expect(t.phi_order_violations == 0 && t.phi_bound_violations == 0, name + ": Phi per-path bound violated");
            c.expect(t.phi_from0.mean() <= t.exp_neg_max.mean(), name + ": Phi above E[e^{-max}]");
            for (std::size_t j = 0; j < req.tails.size(); ++j) {
                c.expect(t.sandwich_violations[j] == 0, name + ": sandwich violated");
                c.expect(t.hits[1] <= t.tau_below[j] && t.hits[1] <= t.occupation_below[j], name + ": tail below p");
            }
            c.expect(t.tau_below[0] == t.hits[1], name + ": P[tau < 1] != p(T, 0)");
        }
    }
    const auto rows = estimate_tail_tau_N(ProcessSpec::fgn(0.6), 64, {TailRule::fixed(65)}, 1000, sub_seed(o, 15));
    c.expect(rows[0].p_tau == 1.0 && rows[0].p_occupation == 1.0, "tails at n = T+1 are not 1");
    const auto phi = estimate_phi(ProcessSpec::fgn(0.6), {0, 4}, 1000, sub_seed(o, 15));
    c.expect(phi[0].mean_from0 == 1.0, "Phi(0) != 1");
}

void est_determinism(Checker& c, const ValidationOptions& o) {
    ScanRequest req;
    req.horizons = {10, 64, 200};
    req.boundaries = {0.0, 1.0};
    req.exponential = true;
    req.supremum = true;
    req.tails = {TailRule::power(0.3)};
    for (const auto& process : {ProcessSpec::fgn(0.75), ProcessSpec::rwrs(WalkKind::simple(2))}) {
        const auto a = run_scan(process, req, RunOptions{2500, sub_seed(o, 16), 1});
        const auto b = run_scan(process, req, RunOptions{2500, sub_seed(o, 16), 4});
        for (std::size_t h = 0; h < a.totals.size(); ++h) {
            const auto& x = a.totals[h];
            const auto& y = b.totals[h];
            c.expect(x.hits == y.hits && x.tau_below == y.tau_below && x.occupation_below == y.occupation_below &&
                         x.phi_from0.sum == y.phi_from0.sum && x.psi.sum == y.psi.sum &&
                         x.supremum.sumsq == y.supremum.sumsq,
                     "totals depend on the worker count");
        }
    }
}

void io_round_trip(Checker& c, const ValidationOptions& o) {
    ExperimentConfig config;
    config.process = "lrd";
    config.hurst = 0.7;
    config.tmin = 3;
    config.tmax = 6;
    config.replicas = 2000;
    config.boundaries = {0.0, 1.0};
    config.seed = o.seed;
    config.workers = o.workers;
    config.out = (std::filesystem::temp_directory_path() / ("persist-validate-" + std::to_string(o.seed))).string();
    const auto again = ExperimentConfig::parse_text(config.to_text());
    c.expect(again.to_text() == config.to_text(), "config text does not round-trip");

    const auto result = run_persistence(config);
    const auto table = parse_csv(read_file(std::filesystem::path(config.out) / "persistence.csv"));
    const auto est = persistence_from_table(table);
    c.expect(to_csv(persistence_table(make_process(config), est)).size() > 0, "empty persistence table");
    auto reference = persistence_table(make_process(config), est);
    add_metadata(reference, "persistence", config);
    c.expect(to_csv(reference) == read_file(std::filesystem::path(config.out) / "persistence.csv"),
             "persistence CSV does not round-trip");
    c.expect(table.meta("seed") == std::to_string(config.seed), "seed missing from CSV header");
    const auto parsed = nlohmann::ordered_json::parse(read_file(std::filesystem::path(config.out) / "summary.json"));
    c.expect(parsed == result.summary, "summary JSON does not round-trip");
    const auto fit = fit_from_json(parsed["fits"][0]["fit"]);
    c.expect(fit_to_json(fit) == parsed["fits"][0]["fit"], "fit JSON does not round-trip");
    std::filesystem::remove_all(config.out);
}

void stat_wilson(Checker& c, const ValidationOptions&) {
    for (std::int64_t n : {1, 10, 1000}) {
        for (std::int64_t h = 0; h <= n; h += std::max<std::int64_t>(1, n / 7)) {
            const auto e = make_persistence_estimate(5, 0.0, h, n);
            c.expect(0.0 <= e.ci_low && e.ci_low <= e.p_hat && e.p_hat <= e.ci_high && e.ci_high <= 1.0,
                     "Wilson interval does not bracket p_hat");
        }
    }
    c.expect(make_persistence_estimate(5, 0.0, 0, 1000).zero_hits, "zero-hit flag missing");
}

// ------------------------------------------------------------ statistical

void rng_moments(Checker& c, const ValidationOptions& o) {
    auto s = derive_stream(StreamKey(sub_seed(o, 20), 0, Substream::noise));
    MomentAccumulator m;
    double m3 = 0, m4 = 0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        const double x = s.gaussian();
        m.add(x);
        m3 += x * x * x;
        m4 += x * x * x * x;
    }
    c.close("gaussian mean", m.mean(), 0.0, 0.004);
    c.close("gaussian variance", m.variance(), 1.0, 0.006);
    c.close("gaussian third moment", m3 / n, 0.0, 0.02);
    c.close("gaussian fourth moment", m4 / n, 3.0, 0.05);
}

void walk_heavy_law(Checker& c, const ValidationOptions& o) {
    for (double alpha : {1.2, 1.5, 1.8}) {
        // zeta(1 + alpha) bracketed by a partial sum and integral bounds
        const int N = 100'000;
        double partial = 0.0;
        for (int k = N; k >= 1; --k) partial += std::pow(static_cast<double>(k), -(1.0 + alpha));
        const double lo = partial + std::pow(N + 1.0, -alpha) / alpha;
        const double hi = partial + std::pow(static_cast<double>(N), -alpha) / alpha;
        const double z = HeavyTailStepSampler::get(alpha)->zeta();
        c.expect(z >= lo * (1 - 1e-12) && z <= hi * (1 + 1e-12), "zeta(1+alpha) outside its bracket");
        c.close("c_alpha", heavy_tail_c_alpha(alpha), 0.5 / z, 1e-12);
    }
    c.close("c_alpha at 1.5", heavy_tail_c_alpha(1.5), 0.3727206481, 1e-9);
    const auto sampler = HeavyTailStepSampler::get(1.5);
    auto s = derive_stream(StreamKey(sub_seed(o, 21), 0, Substream::walk));
    const int n = 1'000'000;
    std::int64_t pos = 0, big = 0;
    for (int i = 0; i < n; ++i) {
        const auto x = sampler->sample(s);
        pos += x > 0;
        big += std::llabs(x) > 100;
    }
    c.close("P[X > 0]", static_cast<double>(pos) / n, 0.5, 4.0 * std::sqrt(0.25 / n));
    const double tail = sampler->tail_probability(100);
    c.close("P[|X| > 100]", static_cast<double>(big) / n, tail, 4.0 * std::sqrt(tail / n));
}

void walk_green(Checker& c, const ValidationOptions& o) {
    const std::int64_t truncation = 1 << 14;
    const auto g = green_at_origin(WalkKind::simple(3), truncation, 20'000, sub_seed(o, 22));
    const double watson = 1.516386059151978;  // Watson's integral
    const double tail = 2.0 * std::pow(3.0 / (2.0 * std::numbers::pi), 1.5) / std::sqrt(static_cast<double>(truncation));
    c.close("truncated Green function", g.mean, watson - tail, 4.0 * g.stderr_ + 0.002);
    c.close("planar sigma^2", planar_srw_sigma2(), 2.0 / std::numbers::pi, 1e-15);
}

void rwrs_marginal(Checker& c, const ValidationOptions& o) {
    MomentAccumulator m;
    const auto seed = sub_seed(o, 23);
    RwrsStepper stepper(WalkKind::simple(1), Stream(0), 0);
    for (std::uint64_t r = 0; r < 1'000'000; ++r) {
        stepper.reset(derive_stream(StreamKey(seed, r, Substream::walk)), scenery_seed(seed, r));
        m.add(stepper.next());
    }
    c.close("Var Z_1", m.variance(), 1.0, 0.006);

    auto stream = derive_stream(StreamKey(seed, 0, Substream::auxiliary));
    const auto walk = simulate_walk(WalkKind::simple(1), 256, stream);
    MomentAccumulator zt;
    for (std::uint64_t r = 0; r < 100'000; ++r) zt.add(rwrs_path(walk, scenery_seed(seed + 1, r)).values.back());
    const auto V = static_cast<double>(walk.V(256));
    c.close("Var(Z_T | S) / V_T", zt.variance() / V, 1.0, 0.02);
}

void rwrs_association(Checker& c, const ValidationOptions& o) {
    const std::int64_t T = 64;
    for (std::uint64_t w = 0; w < 100; ++w) {
        const auto& kind = all_kinds()[w % all_kinds().size()];
        auto stream = derive_stream(StreamKey(sub_seed(o, 24), w, Substream::walk));
        const auto walk = simulate_walk(kind, T, stream);
        MomentAccumulator m;
        for (std::uint64_t r = 0; r < 2000; ++r) {
            const auto z = rwrs_path(walk, scenery_seed(sub_seed(o, 25) + w, r)).values;
            const double top = *std::max_element(z.begin() + 1, z.end());
            m.add(top * top);
        }
        const auto V = static_cast<double>(walk.V(T));
        c.expect(m.mean() <= V + 3.0 * m.stderr_(),
                 kind.label() + ": E[(max Z)^2 | S] = " + format_double(m.mean()) + " > V_T = " + format_double(V));
    }
}

void rwrs_reversibility(Checker& c, const ValidationOptions& o) {
    const std::int64_t T = 128;
    const std::int64_t half = 20'000;
    for (const auto& kind : all_kinds()) {
        std::vector<double> f[3], g[3];
        for (std::int64_t r = 0; r < 2 * half; ++r) {
            auto z = replica_path(ProcessSpec::rwrs(kind), T, sub_seed(o, 26), r);
            if (r >= half) {
                std::vector<double> y(z.size());
                for (std::int64_t k = 0; k <= T; ++k) y[k] = z[T - k] - z[T];
                z = std::move(y);
            }
            double mx = z[1], occ = 0;
            for (std::int64_t k = 1; k <= T; ++k) {
                mx = std::max(mx, z[k]);
                occ += z[k] > 0.0;
            }
            auto* dst = r < half ? f : g;
            dst[0].push_back(mx);
            dst[1].push_back(z[T]);
            dst[2].push_back(occ);
        }
        const char* names[3] = {"max", "final value", "occupation"};
        for (int i = 0; i < 3; ++i) {
            const auto ks = ks_two_sample(f[i], g[i]);
            c.expect(ks.p_value > 0.01 / 3.0, kind.label() + ": reversed " + names[i] + " differs in law (p = " +
                                                  format_double(ks.p_value) + ")");
        }
    }
}

void lrd_iid(Checker& c, const ValidationOptions& o) {
    auto s = derive_stream(StreamKey(sub_seed(o, 27), 0, Substream::noise));
    const auto x = generate_stationary(CorrelationSpec::fgn(0.5), 1'000'000, s);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        den += x[i] * x[i];
        if (i + 1 < x.size()) num += x[i] * x[i + 1];
    }
    c.close("H=0.5 lag-1 autocorrelation", num / den, 0.0, 0.004);
}

void lrd_lag_one(Checker& c, const ValidationOptions& o) {
    const std::int64_t T = 1 << 14;
    CirculantGenerator gen(CorrelationSpec::fgn(0.75), T);
    CirculantGenerator::Workspace ws(gen);
    std::vector<double> a(T), b(T);
    double num = 0, den = 0;
    for (std::uint64_t r = 0; r < 5000; ++r) {
        auto s = derive_stream(StreamKey(sub_seed(o, 28), r, Substream::noise));
        gen.generate_pair(s, ws, a, b);
        for (const auto* x : {&a, &b}) {
            for (std::int64_t i = 0; i + 1 < T; ++i) {
                num += (*x)[i] * (*x)[i + 1];
                den += (*x)[i] * (*x)[i];
            }
        }
    }
    c.close("H=0.75 r(1)", num / den, fgn_correlation(0.75, 1), 0.003);
}

void lrd_covariance_matrix(Checker& c, const ValidationOptions& o) {
    const std::int64_t T = 64;
    const std::int64_t n = 200'000;
    for (double H : {0.5, 0.6, 0.75, 0.9}) {
        CirculantGenerator gen(CorrelationSpec::fgn(H), T);
        CirculantGenerator::Workspace ws(gen);
        std::vector<double> a(T), b(T), sum(T * T, 0.0);
        for (std::int64_t r = 0; r < n / 2; ++r) {
            auto s = derive_stream(StreamKey(sub_seed(o, 29), static_cast<std::uint64_t>(r), Substream::noise));
            gen.generate_pair(s, ws, a, b);
            for (const auto* x : {&a, &b}) {
                for (std::int64_t i = 0; i < T; ++i) {
                    const double xi = (*x)[i];
                    for (std::int64_t j = i; j < T; ++j) sum[i * T + j] += xi * (*x)[j];
                }
            }
        }
        double worst = 0.0;
        for (std::int64_t i = 0; i < T; ++i) {
            for (std::int64_t j = i; j < T; ++j) {
                worst = std::max(worst, std::fabs(sum[i * T + j] / n - fgn_correlation(H, j - i)));
            }
        }
        c.expect(worst < 0.009, "H=" + format_double(H) + ": max |r_hat - r| = " + format_double(worst));
    }
}

void est_exact_oracle(Checker& c, const ValidationOptions& o) {
    ScanRequest req;
    req.horizons = {1, 2, 3, 4, 5, 6};
    const auto scan = run_scan(ProcessSpec::fgn(0.5), req, RunOptions{1'000'000, sub_seed(o, 30), o.workers});
    for (const auto& e : persistence_estimates(scan)) {
        const double p = binomial_central(static_cast<int>(e.horizon));
        c.expect(e.ci_low <= p && p <= e.ci_high, "T=" + std::to_string(e.horizon) + ": " + format_double(p) +
                                                      " outside [" + format_double(e.ci_low) + ", " +
                                                      format_double(e.ci_high) + "]");
    }
    for (const auto& process : {ProcessSpec::fgn(0.8), ProcessSpec::rwrs(WalkKind::simple(3))}) {
        const auto e = estimate_persistence(process, 1, 0.0, 200'000, sub_seed(o, 31), o.workers);
        c.close("p(1, 0)", e.p_hat, 0.5, 4.0 * std::sqrt(0.25 / 200'000));
        const auto s = estimate_sup_expectation(process, {1}, 200'000, sub_seed(o, 32), o.workers);
        c.close("E[max(0, Z_1)]", s[0].raw_mean, 1.0 / std::sqrt(2.0 * std::numbers::pi), 4.0 * s[0].raw_se);
    }
}

void est_boundary_shift(Checker& c, const ValidationOptions& o) {
    ScanRequest req;
    req.horizons = {1, 3, 4};
    req.boundaries = {0.0, 0.7, 1.0};
    const auto scan = run_scan(ProcessSpec::fgn(0.5), req, RunOptions{400'000, sub_seed(o, 33), o.workers});
    const auto est = persistence_estimates(scan);
    const std::vector<std::pair<double, double>> pairs{{0.0, 0.0}, {1.0, 0.0}};
    const auto report = boundary_shift_check(est, pairs);
    c.expect(!report.any_violation(), "one-step lower bound violated");
    for (const auto& e : est) {
        if (e.horizon == 1) {
            const double p = normal_cdf(e.boundary);
            c.close("P[Z_1 <= a]", e.p_hat, p, 4.0 * std::sqrt(p * (1 - p) / e.replicas));
        }
        if (e.horizon == 4 && e.boundary == 1.0) {
            const double bound = normal_cdf(1.0) * 0.3125;
            c.expect(e.p_hat >= bound - 3.0 * e.stderr_(), "p(4, 1) below Phi(1) p(3, 0)");
        }
    }
}

void est_stabilization(Checker& c, const ValidationOptions& o) {
    const auto phi = estimate_phi(ProcessSpec::fgn(0.5), {256, 1024, 4096}, 40'000, sub_seed(o, 34), o.workers);
    for (std::size_t i = 1; i < phi.size(); ++i) {
        const double ratio = phi[i].scaled_from0 / phi[i - 1].scaled_from0;
        c.expect(ratio > 0.75 && ratio < 1.25, "scaled Phi ratio " + format_double(ratio));
        c.expect(phi[i].mean_from1 >= phi[i].mean_from0, "Phi from 1 below Phi from 0");
    }
    const auto sup = estimate_sup_expectation(ProcessSpec::fgn(0.5), dyadic_grid(8, 14), 20'000, sub_seed(o, 35),
                                              o.workers);
    for (std::size_t i = 1; i < sup.size(); ++i) {
        const double ratio = sup[i].kappa_hat / sup[i - 1].kappa_hat;
        c.expect(ratio >= 0.85 && ratio <= 1.18, "kappa ratio " + format_double(ratio));
        c.expect(sup[i].raw_mean >= sup[i - 1].raw_mean - 2.0 * (sup[i].raw_se + sup[i - 1].raw_se),
                 "E[max Z] decreases in T");
    }
}

void stat_coverage(Checker& c, const ValidationOptions& o) {
    auto s = derive_stream(StreamKey(sub_seed(o, 36), 0, Substream::auxiliary));
    int covered = 0;
    for (int r = 0; r < 10'000; ++r) {
        std::int64_t hits = 0;
        for (int i = 0; i < 1000; ++i) hits += s.uniform() < 0.3;
        const auto ci = wilson_interval(hits, 1000);
        covered += ci.low <= 0.3 && 0.3 <= ci.high;
    }
    const double coverage = covered / 10'000.0;
    c.expect(coverage >= 0.93 && coverage <= 0.97, "Wilson coverage " + format_double(coverage));
}

const std::vector<Check>& checks() {
    static const std::vector<Check> all{
        {"RNG-PURE", CheckTier::exact, "streams and scenery are pure functions of their keys", rng_pure},
        {"RNG-RANGE", CheckTier::exact, "scenery coordinates beyond 2^31 are rejected", rng_range},
        {"WALK-HANDBUILT", CheckTier::exact, "local times, V_n and conditional covariances on S=(0,1,0,1)",
         walk_handbuilt},
        {"WALK-INVARIANTS", CheckTier::exact,
         "sum N_T = T, n <= V_n <= n^2, incremental V_n, nonnegative conditional covariances (10^3 walks per kind)",
         walk_invariants},
        {"RWRS-SUM", CheckTier::exact, "Z_T = sum_x N_T(x) xi_x; streaming path equals stored path", rwrs_sum},
        {"LRD-FORMULAS", CheckTier::exact, "FGN correlation, variance sums, partial sums", lrd_formulas},
        {"LRD-REVERSAL", CheckTier::exact, "time-reversal covariance identity for T <= 256", lrd_reversal},
        {"LRD-EMBEDDING", CheckTier::exact, "circulant spectra nonnegative for FGN; invalid tables rejected",
         lrd_embedding},
        {"PF-EXAMPLES", CheckTier::exact, "worked path-functional examples", pf_examples},
        {"PF-ONE-PASS", CheckTier::exact, "one-pass functionals equal naive recomputation", pf_one_pass},
        {"PF-PER-PATH", CheckTier::exact, "per-path implications, Phi bounds and monotonicity", pf_per_path},
        {"EST-FIT-SYNTHETIC", CheckTier::exact, "exponent fit on synthetic power laws", est_fit_synthetic},
        {"EST-SHARED-SAMPLES", CheckTier::exact, "shared-sample monotonicity, sandwich and Phi bounds",
         est_shared_samples},
        {"EST-DETERMINISM", CheckTier::exact, "totals independent of the worker count", est_determinism},
        {"IO-ROUND-TRIP", CheckTier::exact, "config, CSV and JSON outputs re-parse to the same results",
         io_round_trip},
        {"STAT-WILSON", CheckTier::exact, "Wilson intervals bracket the estimate", stat_wilson},
        {"RNG-MOMENTS", CheckTier::statistical, "gaussian moments over 10^6 draws", rng_moments},
        {"WALK-HEAVY-LAW", CheckTier::statistical, "discrete Pareto normalisation, symmetry and tail",
         walk_heavy_law},
        {"WALK-GREEN", CheckTier::statistical, "3d Green function against Watson's integral", walk_green},
        {"RWRS-MARGINAL", CheckTier::statistical, "Var Z_1 = 1 and Var(Z_T | S) = V_T", rwrs_marginal},
        {"RWRS-ASSOCIATION", CheckTier::statistical, "E[(max Z_k)^2 | S] <= V_T within 3 SE (100 walks)",
         rwrs_association},
        {"RWRS-REVERSIBILITY", CheckTier::statistical, "reversed paths agree in law (KS, Bonferroni 0.01)",
         rwrs_reversibility},
        {"LRD-IID", CheckTier::statistical, "H=0.5 increments are uncorrelated", lrd_iid},
        {"LRD-LAG-ONE", CheckTier::statistical, "H=0.75 lag-one correlation at T=2^14", lrd_lag_one},
        {"LRD-COVARIANCE", CheckTier::statistical, "empirical covariance matrix at T=64 for four H",
         lrd_covariance_matrix},
        {"EST-EXACT-ORACLE", CheckTier::statistical, "Sparre-Andersen values, p(1)=1/2, half-Gaussian mean",
         est_exact_oracle},
        {"EST-BOUNDARY-SHIFT", CheckTier::statistical, "one-step lower bound and P[Z_1 <= a] = Phi(a)",
         est_boundary_shift},
        {"EST-STABILIZATION", CheckTier::statistical, "scaled Phi and kappa stabilise for H=0.5",
         est_stabilization},
        {"STAT-COVERAGE", CheckTier::statistical, "Wilson coverage on a Bernoulli(0.3) stub", stat_coverage},
    };
    return all;
}

}  // namespace

std::vector<CheckInfo> validation_checks() {
    std::vector<CheckInfo> out;
    for (const auto& c : checks()) out.push_back({c.id, c.tier, c.description});
    return out;
}

std::vector<CheckOutcome> run_validation(const ValidationOptions& options,
                                         const std::function<void(const CheckOutcome&)>& report) {
    std::vector<CheckOutcome> out;
    for (const auto& check : checks()) {
        if (options.quick && check.tier != CheckTier::exact) continue;
        if (!options.only.empty() &&
            std::find(options.only.begin(), options.only.end(), check.id) == options.only.end()) {
            continue;
        }
        CheckOutcome outcome;
        outcome.id = check.id;
        outcome.tier = check.tier;
        outcome.description = check.description;
        const auto start = std::chrono::steady_clock::now();
        Checker c;
        try {
            check.run(c, options);
            outcome.passed = c.passed();
            outcome.detail = c.detail();
        } catch (const std::exception& e) {
            outcome.passed = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (report) report(outcome);
        out.push_back(std::move(outcome));
    }
    return out;
}

}  // namespace persist
