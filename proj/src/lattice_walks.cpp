#include "persist/lattice_walks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "persist/errors.hpp"

namespace persist {

namespace {

void require_heavy_alpha(double alpha) {
    if (!(alpha > 1.0 && alpha < 2.0)) {
        throw ParameterError("heavy-tailed walk requires alpha in (1,2), got " + std::to_string(alpha));
    }
}

// sum_{k>K} k^{-s} by Euler-Maclaurin; error O(K^{-s-5}).
double zeta_tail(double s, double K) {
    const double Ks = std::pow(K, -s);
    return K * Ks / (s - 1.0) - 0.5 * Ks + s * Ks / (12.0 * K) -
           s * (s + 1.0) * (s + 2.0) * Ks / (720.0 * K * K * K);
}

constexpr std::size_t kGuideSize = std::size_t{1} << 16;

}  // namespace

// ---------------------------------------------------------------- WalkKind

WalkKind WalkKind::heavy(double alpha) {
    require_heavy_alpha(alpha);
    return WalkKind{WalkFamily::heavy_tail_1d, alpha};
}

WalkKind WalkKind::simple(int dimension) {
    switch (dimension) {
        case 1: return WalkKind{WalkFamily::simple_1d, 2.0};
        case 2: return WalkKind{WalkFamily::simple_2d, 2.0};
        case 3: return WalkKind{WalkFamily::simple_3d, 2.0};
        default: throw ParameterError("simple walk dimension must be 1, 2 or 3");
    }
}

double WalkKind::rwrs_hurst() const noexcept {
    if (family == WalkFamily::heavy_tail_1d || family == WalkFamily::simple_1d) {
        return 1.0 - 1.0 / (2.0 * alpha);
    }
    return 0.5;
}

std::string WalkKind::label() const {
    switch (family) {
        case WalkFamily::heavy_tail_1d: {
            char buf[64];
            auto res = std::to_chars(buf, buf + sizeof(buf), alpha);
            return "heavy:" + std::string(buf, res.ptr);
        }
        case WalkFamily::simple_1d: return "srw1";
        case WalkFamily::simple_2d: return "srw2";
        case WalkFamily::simple_3d: return "srw3";
    }
    return "?";
}

WalkKind WalkKind::parse(std::string_view text) {
    if (text == "srw1") return simple(1);
    if (text == "srw2") return simple(2);
    if (text == "srw3") return simple(3);
    constexpr std::string_view prefix = "heavy:";
    if (text.starts_with(prefix)) {
        const auto body = text.substr(prefix.size());
        double alpha = 0.0;
        auto res = std::from_chars(body.data(), body.data() + body.size(), alpha);
        if (res.ec != std::errc{} || res.ptr != body.data() + body.size()) {
            throw ParameterError("cannot parse alpha in walk spec '" + std::string(text) + "'");
        }
        return heavy(alpha);
    }
    throw ParameterError("unknown walk '" + std::string(text) + "' (expected heavy:ALPHA, srw1, srw2 or srw3)");
}

// ---------------------------------------------------- HeavyTailStepSampler

double heavy_tail_c_alpha(double alpha) {
    require_heavy_alpha(alpha);
    return HeavyTailStepSampler::get(alpha)->c_alpha();
}

HeavyTailStepSampler::HeavyTailStepSampler(double alpha) : alpha_(alpha) {
    require_heavy_alpha(alpha);
    const double s = 1.0 + alpha;
    const auto K = static_cast<std::size_t>(kTableSize);

    // Sum smallest terms first for the normalisation.
    long double partial = 0.0L;
    for (std::size_t k = K; k >= 1; --k) partial += std::pow(static_cast<long double>(k), -static_cast<long double>(s));
    zeta_ = static_cast<double>(partial + static_cast<long double>(zeta_tail(s, static_cast<double>(K))));
    c_alpha_ = 1.0 / (2.0 * zeta_);

    cdf_.resize(K + 1);
    cdf_[0] = 0.0;
    long double acc = 0.0L;
    const long double inv_zeta = 1.0L / (partial + static_cast<long double>(zeta_tail(s, static_cast<double>(K))));
    for (std::size_t k = 1; k <= K; ++k) {
        acc += std::pow(static_cast<long double>(k), -static_cast<long double>(s)) * inv_zeta;
        cdf_[k] = static_cast<double>(acc);
    }

    guide_.resize(kGuideSize + 1);
    std::size_t k = 1;
    for (std::size_t j = 0; j <= kGuideSize; ++j) {
        const double level = static_cast<double>(j) / static_cast<double>(kGuideSize);
        while (k < K && cdf_[k] <= level) ++k;
        guide_[j] = static_cast<std::int32_t>(k);
    }
}

std::shared_ptr<const HeavyTailStepSampler> HeavyTailStepSampler::get(double alpha) {
    static std::mutex mutex;
    static std::map<double, std::shared_ptr<const HeavyTailStepSampler>> cache;
    std::scoped_lock lock(mutex);
    auto& slot = cache[alpha];
    if (!slot) slot = std::make_shared<const HeavyTailStepSampler>(alpha);
    return slot;
}

double HeavyTailStepSampler::probability(std::int64_t k) const noexcept {
    if (k == 0) return 0.0;
    const double m = static_cast<double>(k < 0 ? -k : k);
    return c_alpha_ * std::pow(m, -(1.0 + alpha_));
}

double HeavyTailStepSampler::tail_probability(std::int64_t k) const {
    if (k < 0 || k > kTableSize) throw RangeError("tail_probability: k outside table");
    if (k <= 1000) return 1.0 - cdf_[static_cast<std::size_t>(k)];
    return zeta_tail(1.0 + alpha_, static_cast<double>(k)) / zeta_;
}

std::int64_t HeavyTailStepSampler::sample_magnitude(double u, Stream& stream) const noexcept {
    const double table_mass = cdf_.back();
    if (u < table_mass) {
        const auto j = static_cast<std::size_t>(u * static_cast<double>(kGuideSize));
        std::size_t lo = static_cast<std::size_t>(guide_[j]);
        std::size_t hi = j + 1 <= kGuideSize ? static_cast<std::size_t>(guide_[j + 1]) : cdf_.size() - 1;
        // smallest k in [lo, hi] with cdf_[k] > u
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (cdf_[mid] > u) hi = mid;
            else lo = mid + 1;
        }
        return static_cast<std::int64_t>(lo);
    }
    const double edge = static_cast<double>(kTableSize) + 0.5;
    const double y = edge * std::pow(stream.uniform_pos(), -1.0 / alpha_);
    return static_cast<std::int64_t>(std::floor(y + 0.5));
}

std::int64_t HeavyTailStepSampler::sample(Stream& stream) const noexcept {
    const std::uint64_t bits = stream.next();
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    const std::int64_t magnitude = sample_magnitude(u, stream);
    return (bits & 1U) ? magnitude : -magnitude;
}

// ---------------------------------------------------------- LocalTimeTable

std::uint64_t pack_site(const SiteKey& site) {
    switch (site.dim) {
        case 1: return static_cast<std::uint64_t>(site.coords[0]);
        case 2: {
            constexpr std::int64_t lim = std::int64_t{1} << 31;
            for (int i = 0; i < 2; ++i) {
                const auto c = site.coords[static_cast<std::size_t>(i)];
                if (c >= lim || c < -lim) throw RangeError("pack_site: planar coordinate out of range");
            }
            return (static_cast<std::uint64_t>(site.coords[0] + lim) << 32) |
                   static_cast<std::uint64_t>(site.coords[1] + lim);
        }
        case 3: {
            constexpr std::int64_t lim = std::int64_t{1} << 20;
            std::uint64_t key = 0;
            for (int i = 0; i < 3; ++i) {
                const auto c = site.coords[static_cast<std::size_t>(i)];
                if (c >= lim || c < -lim) throw RangeError("pack_site: spatial coordinate out of range");
                key = (key << 21) | static_cast<std::uint64_t>(c + lim);
            }
            return key;
        }
        default: throw RangeError("pack_site: bad dimension");
    }
}

LocalTimeTable::LocalTimeTable() : slots_(64), mask_(63) {}

std::size_t LocalTimeTable::find_slot(std::uint64_t key) const noexcept {
    std::size_t i = static_cast<std::size_t>(mix64(key)) & mask_;
    while (slots_[i].count != 0 && slots_[i].key != key) i = (i + 1) & mask_;
    return i;
}

void LocalTimeTable::grow() {
    std::vector<Entry> old;
    old.swap(slots_);
    std::vector<std::uint32_t> old_touched;
    old_touched.swap(touched_);
    slots_.assign(old.size() * 2, Entry{});
    mask_ = slots_.size() - 1;
    touched_.reserve(old_touched.size() * 2);
    for (auto slot : old_touched) {
        const std::size_t i = find_slot(old[slot].key);
        slots_[i] = old[slot];
        touched_.push_back(static_cast<std::uint32_t>(i));
    }
}

LocalTimeTable::Entry& LocalTimeTable::visit(const SiteKey& site, bool& fresh) {
    const std::uint64_t key = pack_site(site);
    std::size_t i = find_slot(key);
    if (slots_[i].count == 0) {
        if (2 * (touched_.size() + 1) > slots_.size()) {
            grow();
            i = find_slot(key);
        }
        slots_[i].key = key;
        slots_[i].site = site;
        slots_[i].scenery = 0.0;
        touched_.push_back(static_cast<std::uint32_t>(i));
        fresh = true;
    } else {
        fresh = false;
    }
    ++slots_[i].count;
    return slots_[i];
}

std::int64_t LocalTimeTable::count(const SiteKey& site) const {
    return slots_[find_slot(pack_site(site))].count;
}

void LocalTimeTable::clear() {
    for (auto slot : touched_) slots_[slot] = Entry{};
    touched_.clear();
}

// ------------------------------------------------------------- WalkStepper

WalkStepper::WalkStepper(const WalkKind& kind, Stream stream) : kind_(kind), stream_(stream) {
    if (kind.family == WalkFamily::heavy_tail_1d) heavy_ = HeavyTailStepSampler::get(kind.alpha);
}

void WalkStepper::step(SiteKey& pos) {
    switch (kind_.family) {
        case WalkFamily::heavy_tail_1d:
            pos.coords[0] += heavy_->sample(stream_);
            return;
        case WalkFamily::simple_1d:
            if (bits_left_ == 0) {
                bits_ = stream_.next();
                bits_left_ = 64;
            }
            pos.coords[0] += (bits_ & 1U) ? 1 : -1;
            bits_ >>= 1;
            --bits_left_;
            return;
        case WalkFamily::simple_2d: {
            if (bits_left_ == 0) {
                bits_ = stream_.next();
                bits_left_ = 32;
            }
            const auto dir = bits_ & 3U;
            bits_ >>= 2;
            --bits_left_;
            pos.coords[dir >> 1] += (dir & 1U) ? 1 : -1;
            return;
        }
        case WalkFamily::simple_3d: {
            const auto dir = stream_.bounded(6);
            pos.coords[dir >> 1] += (dir & 1U) ? 1 : -1;
            return;
        }
    }
}

// ---------------------------------------------------------------- WalkPath

WalkPath walk_from_positions(const WalkKind& kind, std::vector<SiteKey> positions) {
    if (positions.empty()) throw ParameterError("walk needs at least S_0");
    SiteKey origin;
    origin.dim = kind.dimension();
    if (!(positions.front() == origin)) throw ParameterError("walk must start at the origin");
    WalkPath walk;
    walk.kind = kind;
    walk.self_intersections.assign(positions.size(), 0);
    bool fresh = false;
    for (std::size_t n = 1; n < positions.size(); ++n) {
        const auto& entry = walk.local_times.visit(positions[n], fresh);
        // entry.count is N_n(x) = N_{n-1}(x) + 1
        walk.self_intersections[n] = walk.self_intersections[n - 1] + 2 * (entry.count - 1) + 1;
    }
    walk.positions = std::move(positions);
    return walk;
}

WalkPath simulate_walk(const WalkKind& kind, std::int64_t horizon, Stream& stream) {
    if (horizon < 1) throw ParameterError("simulate_walk: horizon must be >= 1");
    std::vector<SiteKey> positions;
    positions.reserve(static_cast<std::size_t>(horizon) + 1);
    SiteKey pos;
    pos.dim = kind.dimension();
    positions.push_back(pos);
    WalkStepper stepper(kind, stream);
    for (std::int64_t n = 1; n <= horizon; ++n) {
        stepper.step(pos);
        positions.push_back(pos);
    }
    stream = stepper.stream();
    return walk_from_positions(kind, std::move(positions));
}

LocalTimeTable local_times_at(const WalkPath& walk, std::int64_t n) {
    if (n < 0 || n > walk.horizon()) throw RangeError("local_times_at: index out of range");
    LocalTimeTable table;
    bool fresh = false;
    for (std::int64_t i = 1; i <= n; ++i) table.visit(walk.positions[static_cast<std::size_t>(i)], fresh);
    return table;
}

// ------------------------------------------------------ Monte Carlo helpers

MeanEstimate mean_self_intersection(const WalkKind& kind, std::int64_t horizon, std::int64_t replicas,
                                    std::uint64_t seed) {
    if (replicas < 1) throw ParameterError("mean_self_intersection: replicas must be >= 1");
    if (horizon < 1) throw ParameterError("mean_self_intersection: horizon must be >= 1");
    LocalTimeTable table;
    double sum = 0.0;
    double sumsq = 0.0;
    for (std::int64_t r = 0; r < replicas; ++r) {
        WalkStepper stepper(kind, derive_stream(StreamKey(seed, static_cast<std::uint64_t>(r), Substream::walk)));
        SiteKey pos;
        pos.dim = kind.dimension();
        table.clear();
        std::int64_t V = 0;
        bool fresh = false;
        for (std::int64_t n = 1; n <= horizon; ++n) {
            stepper.step(pos);
            V += 2 * (table.visit(pos, fresh).count - 1) + 1;
        }
        const auto v = static_cast<double>(V);
        sum += v;
        sumsq += v * v;
    }
    const auto n = static_cast<double>(replicas);
    MeanEstimate est;
    est.mean = sum / n;
    est.replicas = replicas;
    est.stderr_ = replicas > 1 ? std::sqrt(std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0)) / n) : 0.0;
    return est;
}

MeanEstimate green_at_origin(const WalkKind& kind, std::int64_t truncation, std::int64_t replicas,
                             std::uint64_t seed) {
    if (kind.recurrent()) {
        throw ParameterError("green_at_origin: the walk '" + kind.label() + "' is recurrent; G(0,0) is infinite");
    }
    if (replicas < 1 || truncation < 0) throw ParameterError("green_at_origin: bad truncation or replica count");
    double sum = 0.0;
    double sumsq = 0.0;
    for (std::int64_t r = 0; r < replicas; ++r) {
        WalkStepper stepper(kind, derive_stream(StreamKey(seed, static_cast<std::uint64_t>(r), Substream::walk)));
        SiteKey pos;
        pos.dim = kind.dimension();
        std::int64_t visits = 1;  // i = 0
        for (std::int64_t i = 1; i <= truncation; ++i) {
            stepper.step(pos);
            if (pos.coords[0] == 0 && pos.coords[1] == 0 && pos.coords[2] == 0) ++visits;
        }
        const auto v = static_cast<double>(visits);
        sum += v;
        sumsq += v * v;
    }
    const auto n = static_cast<double>(replicas);
    MeanEstimate est;
    est.mean = sum / n;
    est.replicas = replicas;
    est.stderr_ = replicas > 1 ? std::sqrt(std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0)) / n) : 0.0;
    return est;
}

double planar_srw_sigma2() noexcept {
    const double det_sigma = 0.25;  // Sigma = diag(1/2, 1/2)
    return 1.0 / (std::numbers::pi * std::sqrt(det_sigma));
}

}  // namespace persist
