#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "persist/errors.hpp"
#include "persist/lattice_walks.hpp"
#include "persist/statistics.hpp"

using namespace persist;

namespace {

std::vector<SiteKey> line(std::initializer_list<std::int64_t> xs) {
    std::vector<SiteKey> out;
    for (auto x : xs) out.push_back(SiteKey{x});
    return out;
}

}  // namespace

TEST_CASE("walk kind spelling") {
    CHECK(WalkKind::parse("srw1") == WalkKind::simple(1));
    CHECK(WalkKind::parse("srw3").dimension() == 3);
    CHECK(WalkKind::parse("heavy:1.5").alpha == 1.5);
    CHECK(WalkKind::parse("heavy:1.5").label() == "heavy:1.5");
    CHECK_THROWS_AS(WalkKind::parse("heavy:2"), ParameterError);
    CHECK_THROWS_AS(WalkKind::parse("heavy:1"), ParameterError);
    CHECK_THROWS_AS(WalkKind::parse("heavy:x"), ParameterError);
    CHECK_THROWS_AS(WalkKind::parse("srw4"), ParameterError);
    CHECK(WalkKind::simple(1).rwrs_theta() == doctest::Approx(0.25));
    CHECK(WalkKind::heavy(1.5).rwrs_theta() == doctest::Approx(1.0 / 3.0));
    CHECK(WalkKind::simple(2).rwrs_theta() == 0.5);
    CHECK(WalkKind::simple(3).rwrs_theta() == 0.5);
}

TEST_CASE("discrete Pareto normalisation matches an independent zeta bracket") {
    const auto bracket = oracle::zeta_bracket(2.5, 20000);
    CHECK(bracket.low == doctest::Approx(1.341487).epsilon(1e-6));
    const double c = heavy_tail_c_alpha(1.5);
    CHECK(c >= 1.0 / (2.0 * bracket.high));
    CHECK(c <= 1.0 / (2.0 * bracket.low));
    CHECK(c == doctest::Approx(0.37272).epsilon(1e-4));
    const auto sampler = HeavyTailStepSampler::get(1.5);
    CHECK(sampler->probability(1) == doctest::Approx(c));
    CHECK(sampler->probability(-1) == sampler->probability(1));
    CHECK(sampler->probability(0) == 0.0);
    CHECK_THROWS_AS(heavy_tail_c_alpha(2.0), ParameterError);
    CHECK_THROWS_AS(heavy_tail_c_alpha(1.0), ParameterError);
    CHECK_THROWS_AS(HeavyTailStepSampler(0.5), ParameterError);
}

TEST_CASE("heavy-tailed steps: symmetry and tail") {
    const double alpha = 1.5;
    const auto sampler = HeavyTailStepSampler::get(alpha);
    auto stream = derive_stream(StreamKey(5, 0, Substream::walk));
    const int n = 10'000'000;
    MomentAccumulator m;
    std::int64_t beyond = 0;
    std::int64_t ones = 0;
    std::int64_t zeros = 0;
    for (int i = 0; i < n; ++i) {
        const auto x = sampler->sample(stream);
        m.add(static_cast<double>(x));
        if (x > 100 || x < -100) ++beyond;
        if (x == 1) ++ones;
        if (x == 0) ++zeros;
    }
    CHECK(zeros == 0);
    CHECK(std::fabs(m.mean()) < 4.0 * std::sqrt(m.variance()) / std::sqrt(static_cast<double>(n)));
    const double c = sampler->c_alpha();
    CHECK(std::fabs(ones - c * n) < 5.0 * std::sqrt(c * n));
    const double scaled = static_cast<double>(beyond) / n * std::pow(100.0, alpha);
    const double reference = 2.0 * c / alpha;
    CHECK(scaled >= 0.8 * reference);
    CHECK(scaled <= 1.25 * reference);
    // the table's own tail agrees with the direct sum
    double direct = 0.0;
    for (int k = 101; k <= 1'000'000; ++k) direct += 2.0 * c * std::pow(k, -(1.0 + alpha));
    direct += 2.0 * c * std::pow(1'000'000.5, -alpha) / alpha;
    CHECK(sampler->tail_probability(100) == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("hand-built walks: local times and self-intersections") {
    const auto w = walk_from_positions(WalkKind::simple(1), line({0, 1, 0}));
    CHECK(w.horizon() == 2);
    CHECK(w.local_times.count(SiteKey{1}) == 1);
    CHECK(w.local_times.count(SiteKey{0}) == 1);
    CHECK(w.V(2) == 2);

    const auto r = walk_from_positions(WalkKind::simple(1), line({0, 1, 0, 1}));
    CHECK(r.V(3) == 5);
    CHECK(r.V(1) == 1);
    CHECK(r.local_times.count(SiteKey{1}) == 2);

    CHECK_THROWS_AS(walk_from_positions(WalkKind::simple(1), line({1, 0})), ParameterError);
    Stream s(1);
    CHECK_THROWS_AS(simulate_walk(WalkKind::simple(1), 0, s), ParameterError);
}

TEST_CASE("simulated walks satisfy the counting invariants") {
    for (const auto& kind : {WalkKind::simple(1), WalkKind::simple(2), WalkKind::simple(3), WalkKind::heavy(1.5),
                             WalkKind::heavy(1.2)}) {
        CAPTURE(kind.label());
        for (std::uint64_t rep = 0; rep < 20; ++rep) {
            auto stream = derive_stream(StreamKey(17, rep, Substream::walk));
            const std::int64_t T = 300;
            const auto w = simulate_walk(kind, T, stream);
            REQUIRE(w.horizon() == T);
            std::int64_t total = 0;
            std::int64_t squares = 0;
            w.local_times.for_each([&](const LocalTimeTable::Entry& e) {
                total += e.count;
                squares += e.count * e.count;
            });
            CHECK(total == T);
            CHECK(squares == w.V(T));
            for (std::int64_t n = 1; n <= T; ++n) {
                CHECK(w.V(n) >= n);
                CHECK(w.V(n) <= n * n);
            }
            if (kind.dimension() == 1) {
                std::vector<std::int64_t> xs;
                for (const auto& p : w.positions) xs.push_back(p.coords[0]);
                for (std::int64_t n : {1, 7, 50, 300}) {
                    CHECK(w.V(n) == oracle::brute_self_intersections(xs, static_cast<std::size_t>(n)));
                }
            }
            if (kind.family != WalkFamily::heavy_tail_1d) {
                for (std::size_t i = 1; i < w.positions.size(); ++i) {
                    std::int64_t l1 = 0;
                    for (int d = 0; d < 3; ++d)
                        l1 += std::abs(w.positions[i].coords[d] - w.positions[i - 1].coords[d]);
                    CHECK(l1 == 1);
                }
            }
        }
    }
}

TEST_CASE("simple 3d steps are uniform over the six directions") {
    auto stream = derive_stream(StreamKey(2, 0, Substream::walk));
    WalkStepper stepper(WalkKind::simple(3), stream);
    std::vector<int> counts(6, 0);
    const int n = 600'000;
    for (int i = 0; i < n; ++i) {
        SiteKey pos;
        pos.dim = 3;
        stepper.step(pos);
        for (int d = 0; d < 3; ++d)
            if (pos.coords[d] != 0) ++counts[static_cast<std::size_t>(2 * d + (pos.coords[d] > 0 ? 1 : 0))];
    }
    for (int c : counts) CHECK(std::fabs(c - n / 6.0) < 5.0 * std::sqrt(n / 6.0));
}

TEST_CASE("local time table grows and clears") {
    LocalTimeTable t;
    bool fresh = false;
    for (int x = 0; x < 1000; ++x) t.visit(SiteKey{x, -x}, fresh);
    CHECK(fresh);
    t.visit(SiteKey{3, -3}, fresh);
    CHECK_FALSE(fresh);
    CHECK(t.distinct_sites() == 1000);
    CHECK(t.count(SiteKey{3, -3}) == 2);
    t.clear();
    CHECK(t.distinct_sites() == 0);
    CHECK(t.count(SiteKey{3, -3}) == 0);
    CHECK_THROWS_AS(pack_site(SiteKey{1 << 20, 0, 0}), RangeError);
    CHECK_NOTHROW(pack_site(SiteKey{(1 << 20) - 1, -(1 << 20), 0}));
}

TEST_CASE("mean self-intersection growth") {
    SUBCASE("T = 1 is exact") {
        const auto e = mean_self_intersection(WalkKind::simple(1), 1, 50, 3);
        CHECK(e.mean == 1.0);
        CHECK(e.stderr_ == 0.0);
    }
    SUBCASE("simple 1d grows like T^{3/2}") {
        std::vector<double> x, y;
        for (std::int64_t T : {1 << 10, 1 << 12, 1 << 14}) {
            const auto e = mean_self_intersection(WalkKind::simple(1), T, 2000, 21);
            x.push_back(std::log(static_cast<double>(T)));
            y.push_back(std::log(e.mean));
        }
        const auto fit = line_fit(x, y);
        CHECK(fit.slope == doctest::Approx(1.5).epsilon(0.1 / 1.5));
    }
    SUBCASE("simple 3d grows linearly") {
        const auto a = mean_self_intersection(WalkKind::simple(3), 1 << 12, 400, 22);
        const auto b = mean_self_intersection(WalkKind::simple(3), 1 << 14, 400, 23);
        const double ra = a.mean / (1 << 12);
        const double rb = b.mean / (1 << 14);
        CHECK(std::fabs(rb / ra - 1.0) < 0.10);
    }
}

TEST_CASE("Green function of the 3d simple walk") {
    CHECK(green_at_origin(WalkKind::simple(3), 0, 10, 1).mean == 1.0);
    CHECK_THROWS_AS(green_at_origin(WalkKind::simple(1), 100, 10, 1), ParameterError);
    CHECK_THROWS_AS(green_at_origin(WalkKind::simple(2), 100, 10, 1), ParameterError);

    const double watson = oracle::watson_green_3d();
    CHECK(watson == doctest::Approx(1.516386).epsilon(1e-5));

    const std::int64_t T = 10'000;
    const auto e = green_at_origin(WalkKind::simple(3), T, 20'000, 5);
    // sum_{n>T} P[S_n = 0] ~ int_T^inf (3/(2 pi n))^{3/2} dn
    const double tail = 2.0 * std::pow(3.0 / (2.0 * std::numbers::pi), 1.5) / std::sqrt(static_cast<double>(T));
    CHECK(std::fabs(e.mean - (watson - tail)) < 4.0 * e.stderr_ + 0.002);
    CHECK(transient_sigma2(watson) == doctest::Approx(2.0328).epsilon(1e-4));
}

TEST_CASE("planar variance constant") {
    CHECK(planar_srw_sigma2() == doctest::Approx(2.0 / std::numbers::pi));
    CHECK(planar_srw_sigma2() == doctest::Approx(0.63662).epsilon(1e-5));
}
