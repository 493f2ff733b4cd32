#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "persist/rng.hpp"

namespace persist {

enum class WalkFamily { heavy_tail_1d, simple_1d, simple_2d, simple_3d };

/// Increment law of the lattice walk S.
struct WalkKind {
    WalkFamily family = WalkFamily::simple_1d;
    double alpha = 2.0;  // stable index; 2 for every finite-variance kind

    static WalkKind heavy(double alpha);  // alpha in (1,2)
    static WalkKind simple(int dimension);

    int dimension() const noexcept { return family == WalkFamily::simple_2d ? 2 : family == WalkFamily::simple_3d ? 3 : 1; }
    bool recurrent() const noexcept { return family != WalkFamily::simple_3d; }

    /// Scaling index of the RWRS built on this walk: 1 - 1/(2 alpha) in d=1,
    /// 1/2 for d=2 and transient walks.
    double rwrs_hurst() const noexcept;

    /// Persistence exponent predicted for the RWRS: 1/(2 alpha) in d=1, else 1/2.
    double rwrs_theta() const noexcept { return 1.0 - rwrs_hurst(); }

    /// CLI spelling: heavy:ALPHA | srw1 | srw2 | srw3.
    std::string label() const;
    static WalkKind parse(std::string_view text);

    friend bool operator==(const WalkKind&, const WalkKind&) = default;
};

/**
 * Symmetric discrete Pareto law on Z \ {0}:
 *   P[X = k] = P[X = -k] = c_alpha |k|^{-(1+alpha)},  2 c_alpha zeta(1+alpha) = 1.
 *
 * Magnitudes up to kTableSize are drawn by inverse CDF on a cumulative table
 * (guide table + bisection); beyond that the conditional tail is drawn from the
 * continuous Pareto law on (K + 1/2, inf) and rounded. The tail carries mass
 * ~1e-9 at alpha = 1.5 and the rounding error is O(K^-2) relative to it.
 */
class HeavyTailStepSampler {
public:
    static constexpr std::int64_t kTableSize = 1'000'000;

    explicit HeavyTailStepSampler(double alpha);

    /// Shared read-only instance per alpha.
    static std::shared_ptr<const HeavyTailStepSampler> get(double alpha);

    double alpha() const noexcept { return alpha_; }
    double c_alpha() const noexcept { return c_alpha_; }
    double zeta() const noexcept { return zeta_; }

    /// P[X = k]; zero at k = 0.
    double probability(std::int64_t k) const noexcept;

    /// P[|X| > k] for k <= kTableSize.
    double tail_probability(std::int64_t k) const;

    std::int64_t sample(Stream& stream) const noexcept;

private:
    std::int64_t sample_magnitude(double u, Stream& stream) const noexcept;

    double alpha_;
    double zeta_;
    double c_alpha_;
    std::vector<double> cdf_;  // cdf_[k] = P[|X| <= k], k = 0..kTableSize
    std::vector<std::int32_t> guide_;
};

/// Throws ParameterError unless alpha in (1,2).
double heavy_tail_c_alpha(double alpha);

/// Packs a lattice site into a 64-bit key, injective over the walk's reachable range.
std::uint64_t pack_site(const SiteKey& site);

/**
 * Open-addressing table of per-site local times N_n(x), with an optional
 * cached scenery value per site. Reset cost is proportional to the number of
 * sites touched, not the table capacity.
 */
class LocalTimeTable {
public:
    struct Entry {
        std::uint64_t key = 0;
        std::int64_t count = 0;  // 0 marks an empty slot
        double scenery = 0.0;
        SiteKey site;
    };

    LocalTimeTable();

    /// Increments N(x) and returns the entry; `fresh` reports a first visit.
    Entry& visit(const SiteKey& site, bool& fresh);

    std::int64_t count(const SiteKey& site) const;
    std::size_t distinct_sites() const noexcept { return touched_.size(); }
    void clear();

    template <class F>
    void for_each(F&& fn) const {
        for (auto slot : touched_) fn(slots_[slot]);
    }

private:
    std::size_t find_slot(std::uint64_t key) const noexcept;
    void grow();

    std::vector<Entry> slots_;
    std::vector<std::uint32_t> touched_;
    std::size_t mask_;
};

/// Draws the increments of a walk of the given kind.
class WalkStepper {
public:
    WalkStepper(const WalkKind& kind, Stream stream);

    /// Moves `pos` by one increment.
    void step(SiteKey& pos);

    const WalkKind& kind() const noexcept { return kind_; }
    const Stream& stream() const noexcept { return stream_; }

    void reseed(Stream stream) noexcept {
        stream_ = stream;
        bits_left_ = 0;
    }

private:
    WalkKind kind_;
    Stream stream_;
    std::shared_ptr<const HeavyTailStepSampler> heavy_;
    std::uint64_t bits_ = 0;
    int bits_left_ = 0;
};

/// Sample path S_0..S_T with local times over steps 1..T and V_1..V_T.
struct WalkPath {
    WalkKind kind;
    std::vector<SiteKey> positions;             // S_0..S_T, S_0 = 0
    LocalTimeTable local_times;                 // N_T(x)
    std::vector<std::int64_t> self_intersections;  // index n holds V_n, V_0 = 0

    std::int64_t horizon() const noexcept { return static_cast<std::int64_t>(positions.size()) - 1; }
    std::int64_t V(std::int64_t n) const { return self_intersections.at(static_cast<std::size_t>(n)); }
};

/// Simulates S_0..S_T; V_n updated as V_{n-1} + 2 N_{n-1}(S_n) + 1.
WalkPath simulate_walk(const WalkKind& kind, std::int64_t horizon, Stream& stream);

/// Builds a WalkPath from explicit positions (S_0 must be the origin).
WalkPath walk_from_positions(const WalkKind& kind, std::vector<SiteKey> positions);

/// N_n(x) as a table, recomputed from the positions.
LocalTimeTable local_times_at(const WalkPath& walk, std::int64_t n);

struct MeanEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::int64_t replicas = 0;
};

/// Monte Carlo estimate of E[V_T].
MeanEstimate mean_self_intersection(const WalkKind& kind, std::int64_t horizon, std::int64_t replicas,
                                    std::uint64_t seed);

/// Truncated Green function sum_{i=0}^{T} P[S_i = 0] for the transient walk,
/// estimated by counting returns. Truncation bias is O(T^{-1/2}).
MeanEstimate green_at_origin(const WalkKind& kind, std::int64_t truncation, std::int64_t replicas,
                             std::uint64_t seed);

/// sigma^2 = 2 G(0,0) - 1, the variance constant of the Brownian limit of a
/// transient RWRS.
inline double transient_sigma2(double green) noexcept { return 2.0 * green - 1.0; }

/// sigma^2 = (pi sqrt(det Sigma))^{-1} for the planar simple walk, Sigma = I/2.
double planar_srw_sigma2() noexcept;

}  // namespace persist
