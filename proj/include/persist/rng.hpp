#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace persist {

/// Identifies the generator build. Written into every output header; results
/// pinned by seed are only comparable between runs with the same string.
inline constexpr std::string_view kGeneratorVersion =
    "xoshiro256++ keyed by splitmix64; gaussian=ziggurat-128; v1";

/// Purpose tags separating the random inputs of one replica.
enum class Substream : std::uint64_t {
    walk = 1,
    scenery = 2,
    noise = 3,
    auxiliary = 4,
};

struct StreamKey {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;     // replica (or replica pair) index
    std::uint64_t substream_id = 0;  // see Substream

    StreamKey() = default;
    StreamKey(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub)
        : master_seed(seed), stream_id(stream), substream_id(sub) {}
    StreamKey(std::uint64_t seed, std::uint64_t stream, Substream sub)
        : master_seed(seed), stream_id(stream), substream_id(static_cast<std::uint64_t>(sub)) {}
};

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Hash of a stream key. Each field goes through its own mixing round, so the
/// triple is absorbed in order and field swaps give different digests.
constexpr std::uint64_t hash_key(const StreamKey& key) noexcept {
    std::uint64_t h = mix64(key.master_seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ (key.stream_id + 0x632be59bd9b4e019ULL));
    h = mix64(h ^ (key.substream_id + 0x85157af5ULL * 0x9e3779b97f4a7c15ULL));
    return h;
}

/**
 * xoshiro256++ generator. Gaussians use a 128-layer ziggurat with the layer
 * index and the abscissa taken from disjoint bits of one 64-bit word.
 *
 * Value type: copying a Stream forks an identical sequence. Confined to one
 * worker; there is no shared state between instances.
 */
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t seed) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept { return next(); }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_pos() noexcept {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    /// Unbiased integer in [0, n), Lemire's multiply-and-reject.
    std::uint64_t bounded(std::uint64_t n) noexcept;

    double gaussian() noexcept;  // N(0,1)

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    double gaussian_slow(double u, std::size_t layer) noexcept;

    std::array<std::uint64_t, 4> s_{};
};

Stream derive_stream(const StreamKey& key) noexcept;

inline double sample_standard_gaussian(Stream& state) noexcept { return state.gaussian(); }

/// Lattice site x in Z^d, d in {1,2,3}.
struct SiteKey {
    std::array<std::int64_t, 3> coords{};
    int dim = 1;

    SiteKey() = default;
    SiteKey(std::initializer_list<std::int64_t> c);
    friend bool operator==(const SiteKey&, const SiteKey&) = default;
};

/// Largest admissible |coordinate| + 1 for scenery lookups.
inline constexpr std::int64_t kSiteCoordinateLimit = std::int64_t{1} << 31;

/// Seed of the scenery field belonging to one replica.
inline std::uint64_t scenery_seed(std::uint64_t master_seed, std::uint64_t replica) noexcept {
    return hash_key(StreamKey(master_seed, replica, Substream::scenery));
}

/// Scenery value xi_x ~ N(0,1), a pure function of (seed, site). Throws
/// RangeError if any |coordinate| >= 2^31.
double site_gaussian(std::uint64_t seed, const SiteKey& site);

}  // namespace persist
