#include "persist/scenery.hpp"

#include "persist/errors.hpp"

namespace persist {

ProcessPath rwrs_path(const WalkPath& walk, std::uint64_t scenery) {
    ProcessPath path;
    path.family = "rwrs";
    path.params = "walk=" + walk.kind.label();
    path.values.reserve(walk.positions.size());
    path.values.push_back(0.0);
    LocalTimeTable table;
    bool fresh = false;
    double z = 0.0;
    for (std::size_t i = 1; i < walk.positions.size(); ++i) {
        auto& entry = table.visit(walk.positions[i], fresh);
        if (fresh) entry.scenery = site_gaussian(scenery, entry.site);
        z += entry.scenery;
        path.values.push_back(z);
    }
    return path;
}

namespace {

void check_indices(const WalkPath& walk, std::int64_t l, std::int64_t k) {
    if (l < 0 || k < l || k > walk.horizon()) {
        throw RangeError("conditional covariance needs 0 <= l <= k <= T (l=" + std::to_string(l) +
                         ", k=" + std::to_string(k) + ", T=" + std::to_string(walk.horizon()) + ")");
    }
}

}  // namespace

double conditional_covariance(const WalkPath& walk, std::int64_t l, std::int64_t k) {
    check_indices(walk, l, k);
    const auto early = local_times_at(walk, l);
    const auto late = local_times_at(walk, k);
    double sum = 0.0;
    early.for_each([&](const LocalTimeTable::Entry& e) {
        sum += static_cast<double>(e.count) * static_cast<double>(late.count(e.site));
    });
    return sum;
}

double conditional_increment_covariance(const WalkPath& walk, std::int64_t l, std::int64_t k) {
    check_indices(walk, l, k);
    const auto early = local_times_at(walk, l);
    const auto late = local_times_at(walk, k);
    double sum = 0.0;
    early.for_each([&](const LocalTimeTable::Entry& e) {
        sum += static_cast<double>(e.count) * static_cast<double>(late.count(e.site) - e.count);
    });
    return sum;
}

RwrsStepper::RwrsStepper(const WalkKind& kind, Stream walk_stream, std::uint64_t scenery)
    : stepper_(kind, walk_stream), scenery_(scenery) {
    pos_.dim = kind.dimension();
}

double RwrsStepper::next() {
    stepper_.step(pos_);
    bool fresh = false;
    auto& entry = table_.visit(pos_, fresh);
    if (fresh) entry.scenery = site_gaussian(scenery_, entry.site);
    z_ += entry.scenery;
    ++steps_;
    return z_;
}

void RwrsStepper::reset(Stream walk_stream, std::uint64_t scenery) {
    stepper_.reseed(walk_stream);
    table_.clear();
    scenery_ = scenery;
    pos_ = SiteKey{};
    pos_.dim = stepper_.kind().dimension();
    z_ = 0.0;
    steps_ = 0;
}

}  // namespace persist
