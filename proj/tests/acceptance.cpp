// Acceptance run: one PASS/FAIL line per criterion, indented detail lines below it.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "persist/estimation.hpp"
#include "persist/experiment.hpp"
#include "persist/io.hpp"
#include "persist/scenery.hpp"

using namespace persist;
namespace fs = std::filesystem;

namespace {

int g_workers = 1;
std::uint64_t g_seed = 1;

struct Verdict {
    bool pass = true;
    std::string summary;
    std::vector<std::string> details;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            details.push_back("failed: " + what);
        }
    }
    void note(const std::string& line) { details.push_back(line); }
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Everything a persistence scan over a dyadic grid yields, for reuse across criteria.
struct GridRun {
    ProcessSpec process;
    std::vector<std::int64_t> grid;
    ScanResult scan;
    std::vector<PersistenceEstimate> estimates;  // all horizons incl. T-1, all boundaries

    std::vector<PersistenceEstimate> on_grid(double a) const {
        std::vector<PersistenceEstimate> out;
        for (const auto& e : estimates) {
            if (e.boundary == a && std::binary_search(grid.begin(), grid.end(), e.horizon)) out.push_back(e);
        }
        return out;
    }
    ExponentFit fit(double a, double log_c = 1.0) const {
        return fit_exponent(on_grid(a), LogCorrection::sqrt_log_band, log_c, process.theta(), process.ell());
    }
};

GridRun grid_run(const ProcessSpec& process, int lo, int hi, std::int64_t replicas, std::vector<double> boundaries,
                 std::vector<TailRule> tails = {}) {
    GridRun run{process, dyadic_grid(lo, hi), {}, {}};
    std::set<std::int64_t> horizons(run.grid.begin(), run.grid.end());
    for (auto T : run.grid) {
        if (T > 1) horizons.insert(T - 1);
    }
    ScanRequest req;
    req.horizons.assign(horizons.begin(), horizons.end());
    req.boundaries = std::move(boundaries);
    req.tails = std::move(tails);
    run.scan = run_scan(process, req, RunOptions{replicas, g_seed, g_workers});
    run.estimates = persistence_estimates(run.scan);
    return run;
}

std::string fit_line(const std::string& label, const ExponentFit& f) {
    return label + ": theta_hat = " + fmt(f.theta_hat) + " +- " + fmt(f.stderr_) + " (theory " +
           fmt(f.theta_theory.value_or(NAN)) + ", sqrt-log band +-" + fmt(f.drift, 3) + ")";
}

// Criterion runs that are shared between several criteria.
std::map<std::string, GridRun> g_runs;

const GridRun& fgn075() {
    auto it = g_runs.find("fgn0.75");
    if (it == g_runs.end()) {
        it = g_runs.emplace("fgn0.75", grid_run(ProcessSpec::fgn(0.75), 6, 13, 1'000'000, {0.0, 1.0},
                                                {TailRule::power(0.1)}))
                 .first;
    }
    return it->second;
}

const GridRun& srw1() {
    auto it = g_runs.find("srw1");
    if (it == g_runs.end()) {
        it = g_runs.emplace("srw1", grid_run(ProcessSpec::rwrs(WalkKind::simple(1)), 6, 12, 1'000'000, {0.0, 1.0}))
                 .first;
    }
    return it->second;
}

std::int64_t sandwich_violations(const ScanResult& scan) {
    std::int64_t v = 0;
    for (const auto& t : scan.totals) {
        for (auto x : t.sandwich_violations) v += x;
    }
    return v;
}

// ------------------------------------------------------------------ criteria

Verdict exact_oracle() {
    Verdict v;
    ScanRequest req;
    req.horizons = {1, 2, 3, 4, 5, 6};
    const auto scan = run_scan(ProcessSpec::fgn(0.5), req, RunOptions{1'000'000, g_seed, g_workers});
    const double exact[] = {0.5, 0.375, 0.3125, 0.2734375, 0.24609375, 0.2255859375};
    int covered = 0;
    for (const auto& e : persistence_estimates(scan)) {
        const double p = exact[e.horizon - 1];
        const bool ok = e.ci_low <= p && p <= e.ci_high;
        covered += ok;
        v.note("T=" + std::to_string(e.horizon) + ": p_hat = " + fmt(e.p_hat, 6) + " [" + fmt(e.ci_low, 6) + ", " +
               fmt(e.ci_high, 6) + "] exact " + fmt(p, 6) + (ok ? "" : "  NOT COVERED"));
        v.require(ok, "T=" + std::to_string(e.horizon) + " not covered");
    }
    v.summary = "FGN H=0.5, n=10^6: " + std::to_string(covered) + "/6 Sparre-Andersen values inside their Wilson intervals";
    return v;
}

Verdict lrd_exponents() {
    Verdict v;
    const auto f75 = fgn075().fit(0.0);
    const auto r60 = grid_run(ProcessSpec::fgn(0.6), 6, 13, 1'000'000, {0.0});
    const auto f60 = r60.fit(0.0);
    v.note(fit_line("H=0.75", f75));
    v.note(fit_line("H=0.6 ", f60));
    v.require(f75.theta_hat >= 0.17 && f75.theta_hat <= 0.33, "H=0.75 theta_hat outside [0.17, 0.33]");
    v.require(f60.theta_hat >= 0.31 && f60.theta_hat <= 0.49, "H=0.6 theta_hat outside [0.31, 0.49]");
    v.summary = "FGN grid 2^6..2^13, n=10^6: theta_hat(0.75) = " + fmt(f75.theta_hat) + " in [0.17,0.33], theta_hat(0.6) = " +
                fmt(f60.theta_hat) + " in [0.31,0.49]";
    return v;
}

Verdict rwrs_1d_exponents() {
    Verdict v;
    const auto f1 = srw1().fit(0.0);
    const auto heavy = grid_run(ProcessSpec::rwrs(WalkKind::heavy(1.5)), 6, 12, 1'000'000, {0.0});
    const auto fh = heavy.fit(0.0);
    v.note(fit_line("srw1     ", f1));
    v.note(fit_line("heavy:1.5", fh));
    v.require(f1.theta_hat >= 0.15 && f1.theta_hat <= 0.35, "srw1 theta_hat outside [0.15, 0.35]");
    v.require(fh.theta_hat >= 0.21 && fh.theta_hat <= 0.45, "heavy:1.5 theta_hat outside [0.21, 0.45]");
    v.summary = "RWRS d=1 grid 2^6..2^12, n=10^6: srw1 theta_hat = " + fmt(f1.theta_hat) +
                " in [0.15,0.35], heavy:1.5 theta_hat = " + fmt(fh.theta_hat) + " in [0.21,0.45]";
    return v;
}

Verdict rwrs_3d_exponent() {
    Verdict v;
    const auto run = grid_run(ProcessSpec::rwrs(WalkKind::simple(3)), 6, 12, 10'000'000, {0.0});
    const auto f = run.fit(0.0);
    v.note(fit_line("srw3", f));
    for (const auto& e : run.on_grid(0.0)) {
        v.note("T=" + std::to_string(e.horizon) + ": p_hat = " + fmt(e.p_hat, 6) + " hits " + std::to_string(e.hits));
    }
    v.require(f.theta_hat >= 0.38 && f.theta_hat <= 0.62, "theta_hat outside [0.38, 0.62]");
    v.summary = "RWRS srw3 grid 2^6..2^12, n=10^7: theta_hat = " + fmt(f.theta_hat) + " in [0.38,0.62]";
    return v;
}

Verdict phi_stabilization() {
    Verdict v;
    std::string ratios_all;
    for (double H : {0.5, 0.75}) {
        const auto process = ProcessSpec::fgn(H);
        const auto phi = estimate_phi(process, dyadic_grid(8, 13), 200'000, g_seed, g_workers);
        std::string line = "H=" + fmt(H, 2) + " scaled Phi:";
        for (std::size_t i = 0; i < phi.size(); ++i) {
            line += " " + fmt(phi[i].scaled_from0);
            v.require(phi[i].order_violations == 0, "per-path Phi order violated");
            v.require(phi[i].mean_from1 >= phi[i].mean_from0, "mean_from1 < mean_from0");
            if (i > 0) {
                const double r = phi[i].scaled_from0 / phi[i - 1].scaled_from0;
                ratios_all += " " + fmt(r, 3);
                v.require(r >= 0.75 && r <= 1.3, "ratio " + fmt(r) + " outside [0.75, 1.3] at H=" + fmt(H, 2));
            }
        }
        v.note(line);
    }
    v.summary = "scaled Phi successive ratios (H=0.5 then 0.75):" + ratios_all + "; Phi from 1 >= from 0 on every path";
    return v;
}

Verdict tau_n_tails() {
    Verdict v;
    const auto& run = fgn075();
    std::int64_t violations = sandwich_violations(run.scan);
    // every other run with tail rules, on a second process family
    ScanRequest req;
    req.horizons = dyadic_grid(4, 10);
    req.boundaries = {0.0};
    req.tails = {TailRule::fixed(1), TailRule::fixed(2), TailRule::power(0.1), TailRule::power(0.5)};
    for (const auto& p : {ProcessSpec::rwrs(WalkKind::simple(1)), ProcessSpec::rwrs(WalkKind::heavy(1.5)),
                          ProcessSpec::rwrs(WalkKind::simple(3)), ProcessSpec::fgn(0.6)}) {
        violations += sandwich_violations(run_scan(p, req, RunOptions{100'000, g_seed, g_workers}));
    }
    v.require(violations == 0, std::to_string(violations) + " shared-sample sandwich violations");

    std::vector<double> x, tau, occ;
    for (const auto& row : tail_rows(run.scan)) {
        if (row.horizon < 256 || row.horizon > 4096) continue;
        if (!std::binary_search(run.grid.begin(), run.grid.end(), row.horizon)) continue;
        v.require(row.persist_hits <= row.tau_hits && row.persist_hits <= row.occupation_hits, "tail below p_hat");
        x.push_back(std::log(static_cast<double>(row.horizon)));
        tau.push_back(std::log(row.p_tau / row.p_persist));
        occ.push_back(std::log(row.p_occupation / row.p_persist));
        v.note("T=" + std::to_string(row.horizon) + " n=" + std::to_string(row.n) + ": p = " + fmt(row.p_persist, 5) +
               ", P[tau<n] = " + fmt(row.p_tau, 5) + ", P[N<n] = " + fmt(row.p_occupation, 5));
    }
    const auto ft = line_fit(x, tau);
    const auto fo = line_fit(x, occ);
    v.note("ratio exponents: tau " + fmt(ft.slope) + " +- " + fmt(ft.slope_se) + ", N " + fmt(fo.slope) + " +- " +
           fmt(fo.slope_se));
    v.require(std::fabs(ft.slope) < 0.1, "|tau ratio exponent| >= 0.1");
    v.summary = "sandwich violations " + std::to_string(violations) + "; FGN H=0.75 P[tau<T^0.1]/p exponent " +
                fmt(ft.slope) + " (|.| < 0.1)";
    return v;
}

Verdict synthesis_exactness() {
    Verdict v;
    const std::int64_t T = 64;
    const std::int64_t n = 200'000;
    std::string worst_all;
    for (double H : {0.5, 0.6, 0.75, 0.9}) {
        CirculantGenerator gen(CorrelationSpec::fgn(H), T);
        CirculantGenerator::Workspace ws(gen);
        std::vector<double> a(T), b(T), sum(T * T, 0.0);
        for (std::int64_t r = 0; r < n / 2; ++r) {
            auto s = derive_stream(StreamKey(g_seed, static_cast<std::uint64_t>(r), Substream::noise));
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
                worst = std::max(worst, std::fabs(sum[i * T + j] / static_cast<double>(n) - fgn_correlation(H, j - i)));
            }
        }
        worst_all += " " + fmt(worst);
        v.note("H=" + fmt(H, 2) + ": max |r_hat - r| = " + fmt(worst, 5));
        v.require(worst < 0.009, "H=" + fmt(H, 2) + " covariance error " + fmt(worst, 5));
    }
    double worst_rev = 0.0;
    for (double H : {0.5, 0.6, 0.75, 0.9}) {
        const auto spec = CorrelationSpec::fgn(H);
        for (std::int64_t T2 = 1; T2 <= 256; ++T2) {
            const auto fwd = partial_sum_covariance(spec, T2);
            const auto rev = reversed_partial_sum_covariance(spec, T2);
            for (std::size_t i = 0; i < fwd.size(); ++i) {
                worst_rev = std::max(worst_rev, std::fabs(fwd[i] - rev[i]) / std::max(1.0, std::fabs(fwd[i])));
            }
        }
    }
    v.note("reversal identity, T = 1..256: max relative error " + format_double(worst_rev));
    v.require(worst_rev < 1e-12, "reversal identity error " + format_double(worst_rev));
    v.summary = "T=64, n=2*10^5: max |r_hat - r| =" + worst_all + " (< 0.009); reversal identity error " +
                format_double(worst_rev);
    return v;
}

Verdict rwrs_invariants() {
    Verdict v;
    const std::vector<WalkKind> kinds{WalkKind::simple(1), WalkKind::simple(2), WalkKind::simple(3),
                                      WalkKind::heavy(1.5), WalkKind::heavy(1.2)};
    const std::int64_t T = 256;
    std::int64_t structural = 0;
    for (const auto& kind : kinds) {
        for (std::uint64_t r = 0; r < 1000; ++r) {
            auto stream = derive_stream(StreamKey(g_seed, r, Substream::walk));
            const auto walk = simulate_walk(kind, T, stream);
            std::int64_t total = 0;
            walk.local_times.for_each([&](const LocalTimeTable::Entry& e) { total += e.count; });
            structural += total != T;
            for (std::int64_t m = 1; m <= T; ++m) structural += walk.V(m) < m || walk.V(m) > m * m;
            for (std::int64_t m : {std::int64_t{1}, std::int64_t{2}, std::int64_t{37}, T / 2, T}) {
                std::int64_t sq = 0;
                local_times_at(walk, m).for_each([&](const LocalTimeTable::Entry& e) { sq += e.count * e.count; });
                structural += sq != walk.V(m);
            }
            for (std::int64_t l = 0; l <= T; l += 32) {
                for (std::int64_t k = l; k <= T; k += 48) {
                    structural += conditional_covariance(walk, l, k) < 0.0;
                    structural += conditional_increment_covariance(walk, l, k) < 0.0;
                }
            }
        }
    }
    v.require(structural == 0, std::to_string(structural) + " structural invariant failures");

    // E[(max_k Z_k)^2 | S] <= V_T over scenery replicas for fixed walks
    const std::int64_t TA = 128;
    std::int64_t above = 0, walks = 0;
    double worst = 0.0, worst_literal = 0.0;
    for (const auto& kind : kinds) {
        for (std::uint64_t w = 0; w < 100; ++w, ++walks) {
            auto stream = derive_stream(StreamKey(g_seed + 1, w, Substream::walk));
            const auto walk = simulate_walk(kind, TA, stream);
            MomentAccumulator max_sq, sq_max;
            for (std::uint64_t r = 0; r < 1000; ++r) {
                const auto z = rwrs_path(walk, scenery_seed(g_seed + 2 + w, r)).values;
                double top = z[1], top_sq = 0.0;
                for (std::int64_t k = 1; k <= TA; ++k) {
                    top = std::max(top, z[k]);
                    top_sq = std::max(top_sq, z[k] * z[k]);
                }
                max_sq.add(top * top);
                sq_max.add(top_sq);
            }
            const auto V = static_cast<double>(walk.V(TA));
            above += max_sq.mean() > V + 3.0 * max_sq.stderr_();
            worst = std::max(worst, max_sq.mean() / V);
            worst_literal = std::max(worst_literal, sq_max.mean() / V);
        }
    }
    v.note("largest E[(max Z)^2 | S] / V_T over " + std::to_string(walks) + " walks: " + fmt(worst));
    v.note("for reference, E[max Z^2 | S] / V_T (two-sided maximum) reaches " + fmt(worst_literal));
    v.require(above == 0, std::to_string(above) + " walks above the association bound");
    v.summary = "5 walk kinds x 10^3 walks: " + std::to_string(structural) +
                " structural failures; association bound exceeded on " + std::to_string(above) + "/" +
                std::to_string(walks) + " walks (max ratio " + fmt(worst) + ")";
    return v;
}

Verdict determinism() {
    Verdict v;
    const auto root = fs::temp_directory_path() / "persist-acceptance-determinism";
    fs::remove_all(root);
    int compared = 0, identical = 0;
    for (const std::string process : {"lrd", "rwrs"}) {
        ExperimentConfig c;
        c.process = process;
        c.hurst = 0.75;
        c.walk = "srw1";
        c.tmin = 6;
        c.tmax = 11;
        c.replicas = 200'000;
        c.seed = g_seed;
        c.boundaries = {0.0, 1.0};
        c.workers = 1;
        c.out = (root / (process + "-w1")).string();
        run_persistence(c);
        c.workers = 8;
        c.out = (root / (process + "-w8")).string();
        run_persistence(c);
        for (const char* file : {"persistence.csv", "boundary_shift.csv", "summary.json"}) {
            ++compared;
            const bool same = read_file(root / (process + "-w1") / file) == read_file(root / (process + "-w8") / file);
            identical += same;
            v.require(same, process + "/" + file + " differs between 1 and 8 workers");
        }
    }
    fs::remove_all(root);
    v.summary = "persistence outputs with 1 vs 8 workers: " + std::to_string(identical) + "/" +
                std::to_string(compared) + " files byte-identical";
    return v;
}

Verdict boundary_shift() {
    Verdict v;
    std::string parts;
    for (const auto* run : {&fgn075(), &srw1()}) {
        const std::string name = run->process.params();
        const std::vector<std::pair<double, double>> pairs{{0.0, 0.0}, {1.0, 0.0}};
        const auto report = boundary_shift_check(run->estimates, pairs);
        std::int64_t bad = 0;
        for (const auto& r : report.rows) {
            if (!std::binary_search(run->grid.begin(), run->grid.end(), r.horizon)) continue;
            bad += r.violated;
        }
        v.require(bad == 0, name + ": " + std::to_string(bad) + " one-step bound violations");
        const auto f0 = run->fit(0.0);
        const auto f1 = run->fit(1.0);
        const double diff = f1.theta_hat - f0.theta_hat;
        const double se = std::hypot(f0.stderr_, f1.stderr_);
        v.note(name + ": theta_hat(a=0) = " + fmt(f0.theta_hat) + " +- " + fmt(f0.stderr_) + ", theta_hat(a=1) = " +
               fmt(f1.theta_hat) + " +- " + fmt(f1.stderr_) + ", difference " + fmt(diff) + " vs combined SE " +
               fmt(se));
        std::string ratios;
        for (const auto& r : report.ratios) {
            if (std::binary_search(run->grid.begin(), run->grid.end(), r.horizon)) ratios += " " + fmt(r.ratio, 3);
        }
        v.note(name + ": p(T,1)/p(T,0) over the grid:" + ratios);
        v.require(std::fabs(diff) <= se, name + ": exponents at a=0 and a=1 differ by more than the combined SE");
        parts += (parts.empty() ? "" : "; ") + name + " bound violations " + std::to_string(bad) + ", |dtheta| = " +
                 fmt(std::fabs(diff)) + " vs SE " + fmt(se);
    }
    v.summary = parts;
    return v;
}

struct Criterion {
    int number;
    const char* title;
    Verdict (*run)();
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<int> only;
    app.add_option("--criterion", only, "run only these criteria (repeatable)");
    app.add_option("--workers", g_workers, "worker threads");
    app.add_option("--seed", g_seed, "master seed");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {1, "exact oracle, i.i.d. increments", exact_oracle},
        {2, "LRD persistence exponent 1-H", lrd_exponents},
        {3, "RWRS d=1 exponent 1/(2 alpha)", rwrs_1d_exponents},
        {4, "RWRS d=3 exponent 1/2", rwrs_3d_exponent},
        {5, "exponential functional stabilisation", phi_stabilization},
        {6, "argmax and occupation tails", tau_n_tails},
        {7, "synthesis exactness", synthesis_exactness},
        {8, "RWRS structural invariants", rwrs_invariants},
        {9, "determinism across worker counts", determinism},
        {10, "boundary shift", boundary_shift},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.number) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.pass = false;
            v.summary = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d (%s): %s [%.0f s]\n", v.pass ? "PASS" : "FAIL", c.number, c.title,
                    v.summary.c_str(), secs);
        for (const auto& d : v.details) std::printf("    %s\n", d.c_str());
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed == 0 ? 0 : 1;
}
