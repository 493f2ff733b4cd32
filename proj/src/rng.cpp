#include "persist/rng.hpp"

#include <cmath>
#include <string>

#include "persist/errors.hpp"

namespace persist {

namespace {

// Ziggurat for the half-normal density f(x) = exp(-x^2/2), 128 layers of
// equal area V; layer 0 is the base strip plus the tail beyond R.
struct Ziggurat {
    static constexpr std::size_t kLayers = 128;
    static constexpr double kR = 3.442619855899;
    static constexpr double kV = 9.91256303526217e-3;

    std::array<double, kLayers + 1> x{};
    std::array<double, kLayers> ratio{};

    Ziggurat() {
        const double fR = std::exp(-0.5 * kR * kR);
        x[0] = kV / fR;
        x[1] = kR;
        for (std::size_t i = 2; i < kLayers; ++i) {
            x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + std::exp(-0.5 * x[i - 1] * x[i - 1])));
        }
        x[kLayers] = 0.0;
        for (std::size_t i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
    }
};

const Ziggurat& ziggurat() {
    static const Ziggurat table;
    return table;
}

}  // namespace

Stream::Stream(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& word : s_) {
        x += 0x9e3779b97f4a7c15ULL;
        word = mix64(x);
    }
}

std::uint64_t Stream::bounded(std::uint64_t n) noexcept {
    __uint128_t m = static_cast<__uint128_t>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<__uint128_t>(next()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double Stream::gaussian() noexcept {
    const auto& zig = ziggurat();
    const std::uint64_t bits = next();
    const std::size_t layer = bits & (Ziggurat::kLayers - 1);
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;  // [-1, 1)
    if (std::fabs(u) < zig.ratio[layer]) return u * zig.x[layer];
    return gaussian_slow(u, layer);
}

double Stream::gaussian_slow(double u, std::size_t layer) noexcept {
    const auto& zig = ziggurat();
    for (;;) {
        if (layer == 0) {
            // tail beyond R (Marsaglia's exponential rejection)
            double x = 0.0;
            double y = 0.0;
            do {
                x = -std::log(uniform_pos()) / Ziggurat::kR;
                y = -std::log(uniform_pos());
            } while (y + y < x * x);
            return u < 0.0 ? -(Ziggurat::kR + x) : Ziggurat::kR + x;
        }
        const double x = u * zig.x[layer];
        const double f0 = std::exp(-0.5 * (zig.x[layer] * zig.x[layer] - x * x));
        const double f1 = std::exp(-0.5 * (zig.x[layer + 1] * zig.x[layer + 1] - x * x));
        if (f1 + uniform() * (f0 - f1) < 1.0) return x;

        const std::uint64_t bits = next();
        layer = bits & (Ziggurat::kLayers - 1);
        u = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;
        if (std::fabs(u) < zig.ratio[layer]) return u * zig.x[layer];
    }
}

Stream derive_stream(const StreamKey& key) noexcept { return Stream(hash_key(key)); }

SiteKey::SiteKey(std::initializer_list<std::int64_t> c) {
    if (c.size() < 1 || c.size() > 3) {
        throw ParameterError("SiteKey: dimension must be 1, 2 or 3");
    }
    dim = static_cast<int>(c.size());
    std::size_t i = 0;
    for (auto v : c) coords[i++] = v;
}

double site_gaussian(std::uint64_t seed, const SiteKey& site) {
    std::uint64_t h = mix64(seed ^ 0x5ce7e4a11d5eedULL);
    for (int i = 0; i < site.dim; ++i) {
        const std::int64_t c = site.coords[static_cast<std::size_t>(i)];
        if (c >= kSiteCoordinateLimit || c <= -kSiteCoordinateLimit) {
            throw RangeError("site_gaussian: coordinate " + std::to_string(c) +
                             " outside the encodable range |x| < 2^31");
        }
        // offset-binary 32-bit word per coordinate: injective on the admissible range
        const auto word = static_cast<std::uint64_t>(c + kSiteCoordinateLimit);
        h = mix64(h ^ (word + 0x9e3779b97f4a7c15ULL));
    }
    h = mix64(h + static_cast<std::uint64_t>(site.dim));
    Stream draw(h);
    return draw.gaussian();
}

}  // namespace persist
