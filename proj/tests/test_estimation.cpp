#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "persist/errors.hpp"
#include "persist/estimation.hpp"
#include "persist/scenery.hpp"

using namespace persist;

namespace {

PersistenceEstimate exact_point(std::int64_t T, double p) {
    PersistenceEstimate e;
    e.horizon = T;
    e.replicas = 1'000'000'000'000;
    e.hits = static_cast<std::int64_t>(p * 1e12);
    e.p_hat = p;
    return e;
}

}  // namespace

TEST_CASE("i.i.d. increments reproduce the Sparre-Andersen values") {
    ScanRequest req;
    req.horizons = {1, 2, 3, 4, 5, 6};
    const auto scan = run_scan(ProcessSpec::fgn(0.5), req, RunOptions{200'000, 2024, 1});
    const auto est = persistence_estimates(scan);
    REQUIRE(est.size() == 6);
    for (const auto& e : est) {
        const double p = oracle::sparre_andersen(static_cast<int>(e.horizon));
        CHECK(std::fabs(e.p_hat - p) < 4.0 * std::sqrt(p * (1 - p) / 200'000.0));
    }
    CHECK(oracle::two_step_persistence_quadrature() == doctest::Approx(0.375).epsilon(1e-6));
    CHECK(oracle::three_step_persistence_quadrature() == doctest::Approx(0.3125).epsilon(1e-5));
}

TEST_CASE("T = 1 gives one half for every process") {
    const std::vector<ProcessSpec> processes{ProcessSpec::fgn(0.75), ProcessSpec::rwrs(WalkKind::simple(1)),
                                             ProcessSpec::rwrs(WalkKind::simple(3)),
                                             ProcessSpec::rwrs(WalkKind::heavy(1.2))};
    for (const auto& p : processes) {
        const auto e = estimate_persistence(p, 1, 0.0, 100'000, 5);
        CHECK(std::fabs(e.p_hat - 0.5) < 4.0 * std::sqrt(0.25 / 100'000));
        CHECK(e.ci_low <= e.p_hat);
        CHECK(e.p_hat <= e.ci_high);
    }
    CHECK_THROWS_AS(estimate_persistence(ProcessSpec::fgn(0.75), 4, 0.0, 99, 1), ParameterError);
}

TEST_CASE("half-Gaussian mean of the supremum at T = 1") {
    const auto sup = estimate_sup_expectation(ProcessSpec::rwrs(WalkKind::simple(2)), {1}, 200'000, 6);
    REQUIRE(sup.size() == 1);
    CHECK(std::fabs(sup[0].raw_mean - 1.0 / std::sqrt(2.0 * std::numbers::pi)) < 4.0 * sup[0].raw_se);
    const auto fgn = estimate_sup_expectation(ProcessSpec::fgn(0.5), {1, 4, 16, 64}, 20'000, 6);
    for (std::size_t i = 1; i < fgn.size(); ++i) {
        CHECK(fgn[i].raw_mean >= fgn[i - 1].raw_mean - 2.0 * (fgn[i].raw_se + fgn[i - 1].raw_se));
    }
}

TEST_CASE("Phi at T = 0 and its per-path bounds") {
    const auto phi = estimate_phi(ProcessSpec::fgn(0.6), {0, 8, 64}, 10'000, 7);
    REQUIRE(phi.size() == 3);
    CHECK(phi[0].mean_from0 == 1.0);
    for (std::size_t i = 1; i < phi.size(); ++i) {
        CHECK(phi[i].mean_from0 > 0.0);
        CHECK(phi[i].mean_from0 <= 1.0);
        CHECK(phi[i].mean_from1 >= phi[i].mean_from0);
        CHECK(phi[i].mean_from0 <= phi[i].mean_exp_neg_max);
        CHECK(phi[i].order_violations == 0);
        CHECK(phi[i].bound_violations == 0);
    }
}

TEST_CASE("exact power law in, exponent out") {
    std::vector<PersistenceEstimate> est;
    for (int e = 6; e <= 12; ++e) {
        const double T = std::ldexp(1.0, e);
        est.push_back(exact_point(static_cast<std::int64_t>(T), std::pow(T, -0.25)));
    }
    const auto fit = fit_exponent(est);
    CHECK(std::fabs(fit.theta_hat - 0.25) < 1e-10);
    CHECK(fit.stderr_ > 0.0);
    CHECK(fit.stderr_ < 1e-4);
    for (double r : fit.residuals) CHECK(std::fabs(r) < 1e-10);

    std::vector<PersistenceEstimate> logged;
    for (int e = 6; e <= 12; ++e) {
        const double T = std::ldexp(1.0, e);
        logged.push_back(exact_point(static_cast<std::int64_t>(T), std::pow(T, -0.25) * std::sqrt(std::log(T))));
    }
    const auto band = fit_exponent(logged, LogCorrection::sqrt_log_band, 1.0, 0.25);
    CHECK(band.theta_hat < 0.25);
    REQUIRE(band.theory_in_band.has_value());
    CHECK(*band.theory_in_band);

    CHECK_THROWS_AS(fit_exponent({exact_point(64, 0.3), exact_point(64, 0.31)}), FitError);
    auto with_zero = est;
    with_zero.back().hits = 0;
    with_zero.back().p_hat = 0.0;
    const auto dropped = fit_exponent(with_zero);
    CHECK(dropped.dropped.size() == 1);
    CHECK_FALSE(dropped.warnings.empty());
}

TEST_CASE("slowly varying factor is removed before fitting") {
    std::vector<PersistenceEstimate> est;
    for (int e = 6; e <= 12; ++e) {
        const double T = std::ldexp(1.0, e);
        est.push_back(exact_point(static_cast<std::int64_t>(T), 0.1 * std::pow(T, -0.4) * std::log(T)));
    }
    CHECK(std::fabs(fit_exponent(est, LogCorrection::none, 1.0, std::nullopt, SlowVariation::log).theta_hat - 0.4) <
          1e-10);
}

TEST_CASE("tail sandwich on shared samples") {
    const auto process = ProcessSpec::fgn(0.75);
    const std::int64_t T = 256;
    const std::vector<TailRule> rules{TailRule::fixed(1), TailRule::fixed(3), TailRule::power(0.1),
                                      TailRule::fixed(T + 1)};
    const auto rows = estimate_tail_tau_N(process, T, rules, 20'000, 8);
    REQUIRE(rows.size() == rules.size());
    for (const auto& row : rows) {
        CHECK(row.persist_hits <= row.tau_hits);
        CHECK(row.persist_hits <= row.occupation_hits);
        CHECK(row.sandwich_violations == 0);
    }
    CHECK(rows[0].tau_hits == rows[0].persist_hits);  // tau = 0 iff the path never rises above 0
    CHECK(rows[2].n == 2);
    CHECK(rows[3].p_tau == 1.0);
    CHECK(rows[3].p_occupation == 1.0);
    CHECK_THROWS_AS(estimate_tail_tau_N(process, T, {TailRule::fixed(T + 2)}, 1000, 1), ParameterError);

    const std::vector<TailRule> short_rules{TailRule::fixed(1), TailRule::fixed(3), TailRule::power(0.5)};
    const auto rw = estimate_tail_tau_N(ProcessSpec::rwrs(WalkKind::heavy(1.5)), 128, short_rules, 5000, 9);
    for (const auto& row : rw) CHECK(row.sandwich_violations == 0);
}

TEST_CASE("monotone in T and in a on shared samples") {
    for (const auto& process : {ProcessSpec::fgn(0.6), ProcessSpec::rwrs(WalkKind::simple(1))}) {
        ScanRequest req;
        req.horizons = dyadic_grid(0, 8);
        req.boundaries = {-0.5, 0.0, 1.0};
        const auto scan = run_scan(process, req, RunOptions{5000, 10, 1});
        for (std::size_t h = 0; h < scan.totals.size(); ++h) {
            const auto& t = scan.totals[h];
            CHECK(t.hits[0] <= t.hits[1]);
            CHECK(t.hits[1] <= t.hits[2]);
            if (h > 0) {
                for (std::size_t i = 0; i < 3; ++i) CHECK(t.hits[i] <= scan.totals[h - 1].hits[i]);
            }
        }
    }
}

TEST_CASE("worker count does not change any total") {
    ScanRequest req;
    req.horizons = {16, 100, 256};
    req.boundaries = {0.0, 0.5};
    req.exponential = true;
    req.supremum = true;
    req.tails = {TailRule::fixed(4), TailRule::power(0.3)};
    for (const auto& process : {ProcessSpec::fgn(0.75), ProcessSpec::rwrs(WalkKind::simple(3))}) {
        const auto a = run_scan(process, req, RunOptions{3001, 11, 1});
        const auto b = run_scan(process, req, RunOptions{3001, 11, 8});
        REQUIRE(a.totals.size() == b.totals.size());
        for (std::size_t h = 0; h < a.totals.size(); ++h) {
            CHECK(a.totals[h].hits == b.totals[h].hits);
            CHECK(a.totals[h].phi_from0.sum == b.totals[h].phi_from0.sum);
            CHECK(a.totals[h].phi_from1.sumsq == b.totals[h].phi_from1.sumsq);
            CHECK(a.totals[h].psi.sum == b.totals[h].psi.sum);
            CHECK(a.totals[h].supremum.sum == b.totals[h].supremum.sum);
            CHECK(a.totals[h].tau_below == b.totals[h].tau_below);
            CHECK(a.totals[h].occupation_below == b.totals[h].occupation_below);
        }
    }
}

TEST_CASE("engine totals equal per-path compute_stats on the same paths") {
    const std::int64_t T = 50;
    const std::int64_t n = 600;
    const std::uint64_t seed = 12;
    ScanRequest req;
    req.horizons = {T};
    req.exponential = true;

    const auto kind = WalkKind::heavy(1.5);
    auto scan = run_scan(ProcessSpec::rwrs(kind), req, RunOptions{n, seed, 1});
    std::int64_t hits = 0;
    double phi = 0.0;
    for (std::int64_t r = 0; r < n; ++r) {
        auto stream = derive_stream(StreamKey(seed, static_cast<std::uint64_t>(r), Substream::walk));
        const auto walk = simulate_walk(kind, T, stream);
        const auto stats = compute_stats(rwrs_path(walk, scenery_seed(seed, static_cast<std::uint64_t>(r))), 0.0);
        hits += stats.persists ? 1 : 0;
        phi += stats.phi_value_from0;
    }
    CHECK(scan.totals[0].hits[0] == hits);
    CHECK(scan.totals[0].phi_from0.sum == doctest::Approx(phi).epsilon(1e-12));

    const auto spec = CorrelationSpec::fgn(0.7);
    scan = run_scan(ProcessSpec::lrd(spec), req, RunOptions{n, seed, 1});
    CirculantGenerator gen(spec, T);
    CirculantGenerator::Workspace ws(gen);
    std::vector<double> x1(T), x2(T);
    hits = 0;
    phi = 0.0;
    for (std::int64_t r = 0; r < n; r += 2) {
        auto stream = derive_stream(StreamKey(seed, static_cast<std::uint64_t>(r / 2), Substream::noise));
        gen.generate_pair(stream, ws, x1, x2);
        for (const auto* x : {&x1, &x2}) {
            const auto stats = compute_stats(partial_sums(*x), 0.0);
            hits += stats.persists ? 1 : 0;
            phi += stats.phi_value_from0;
        }
    }
    CHECK(scan.totals[0].hits[0] == hits);
    CHECK(scan.totals[0].phi_from0.sum == doctest::Approx(phi).epsilon(1e-12));
}

TEST_CASE("process descriptions") {
    const auto f = ProcessSpec::fgn(0.75);
    CHECK(f.theta() == doctest::Approx(0.25));
    CHECK(f.family_name() == "lrd");
    CHECK(f.params().find(',') == std::string::npos);
    const auto s1 = ProcessSpec::rwrs(WalkKind::simple(1));
    CHECK(s1.theta() == doctest::Approx(0.25));
    CHECK(ProcessSpec::rwrs(WalkKind::heavy(1.5)).theta() == doctest::Approx(1.0 / 3.0));
    CHECK(ProcessSpec::rwrs(WalkKind::simple(3)).theta() == doctest::Approx(0.5));
    CHECK(ProcessSpec::rwrs(WalkKind::simple(2)).theta() == doctest::Approx(0.5));
    CHECK(TailRule::power(0.1).n_at(4096) == 3);
    CHECK(TailRule::fixed(5).n_at(4096) == 5);
    CHECK(dyadic_grid(6, 8) == std::vector<std::int64_t>{64, 128, 256});
    CHECK_THROWS_AS(dyadic_grid(5, 4), ParameterError);
}
