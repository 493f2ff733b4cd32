#include "persist/path_functionals.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "persist/errors.hpp"

namespace persist {

double PathStats::psi_value(double x) const {
    for (const auto& [px, value] : psi) {
        if (px == x) return value;
    }
    throw RangeError("psi_value: point " + std::to_string(x) + " was not requested");
}

PathStats compute_stats(std::span<const double> z, double boundary, std::span<const double> psi_points) {
    if (z.empty()) throw DataError("compute_stats: empty path");
    if (z[0] != 0.0) throw DataError("compute_stats: path must start at Z_0 = 0");
    const auto horizon = static_cast<std::int64_t>(z.size()) - 1;

    std::vector<std::pair<double, std::size_t>> order;  // (x, original slot)
    order.reserve(psi_points.size());
    for (std::size_t i = 0; i < psi_points.size(); ++i) {
        const double x = psi_points[i];
        if (!(x >= 1.0 && x <= static_cast<double>(horizon))) {
            throw RangeError("compute_stats: psi point " + std::to_string(x) + " outside [1, T]");
        }
        order.emplace_back(x, i);
    }
    std::sort(order.begin(), order.end());

    PathStats stats;
    stats.horizon = horizon;
    stats.boundary = boundary;
    stats.psi.resize(psi_points.size());

    RunningPathStats run(true);
    std::size_t next_psi = 0;
    // psi at x needs log sum_{k=0}^{[x]-1} e^{Z_k}, i.e. the state after [x]-1 pushes, plus Z_[x]
    auto serve_psi = [&](std::int64_t k, double z_k, double log_before) {
        while (next_psi < order.size() && static_cast<std::int64_t>(std::floor(order[next_psi].first)) == k) {
            const double x = order[next_psi].first;
            const double frac = x - std::floor(x);
            const double value = frac > 0.0 ? RunningPathStats::log_add(log_before, std::log(frac) + z_k) : log_before;
            stats.psi[order[next_psi].second] = {x, value};
            ++next_psi;
        }
    };
    for (std::int64_t k = 1; k <= horizon; ++k) {
        const double v = z[static_cast<std::size_t>(k)];
        if (!std::isfinite(v)) throw DataError("compute_stats: non-finite value at index " + std::to_string(k));
        const double log_before = run.log_sum_from0();
        serve_psi(k, v, log_before);
        run.push(v);
    }

    stats.max_1_to_T = run.max_from1();
    stats.persists = stats.max_1_to_T <= boundary;
    stats.tau = run.argmax();
    stats.occupation = run.occupation();
    stats.phi_value_from0 = run.phi_from0();
    stats.phi_value_from1 = horizon >= 1 ? run.phi_from1() : std::numeric_limits<double>::infinity();
    return stats;
}

bool BoundaryShiftReport::any_violation() const noexcept {
    return std::any_of(rows.begin(), rows.end(), [](const BoundaryShiftRow& r) { return r.violated; });
}

BoundaryShiftReport boundary_shift_check(std::span<const PersistenceEstimate> estimates,
                                         std::span<const std::pair<double, double>> pairs,
                                         double se_multiplier) {
    std::map<std::pair<std::int64_t, double>, const PersistenceEstimate*> index;
    for (const auto& e : estimates) index[{e.horizon, e.boundary}] = &e;

    BoundaryShiftReport report;
    for (const auto& e : estimates) {
        if (e.boundary == 0.0) continue;
        auto base = index.find({e.horizon, 0.0});
        if (base == index.end() || base->second->p_hat <= 0.0) continue;
        report.ratios.push_back({e.horizon, e.boundary, e.p_hat / base->second->p_hat});
    }
    for (const auto& [a, b] : pairs) {
        if (b < 0.0) throw ParameterError("boundary_shift_check: b must be >= 0");
        for (const auto& e : estimates) {
            if (e.boundary != a) continue;
            auto prev = index.find({e.horizon - 1, b});
            if (prev == index.end()) continue;
            BoundaryShiftRow row;
            row.horizon = e.horizon;
            row.a = a;
            row.b = b;
            row.p_a = e.p_hat;
            row.p_b_prev = prev->second->p_hat;
            row.factor = normal_cdf(a - b);
            row.lower_bound = row.factor * row.p_b_prev;
            const double se_a = e.stderr_();
            const double se_b = prev->second->stderr_();
            row.joint_se = std::sqrt(se_a * se_a + row.factor * row.factor * se_b * se_b);
            row.violated = row.p_a < row.lower_bound - se_multiplier * row.joint_se;
            report.rows.push_back(row);
        }
    }
    std::sort(report.rows.begin(), report.rows.end(), [](const auto& l, const auto& r) {
        return std::tie(l.a, l.b, l.horizon) < std::tie(r.a, r.b, r.horizon);
    });
    return report;
}

}  // namespace persist
