#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "persist/scenery.hpp"
#include "persist/statistics.hpp"

namespace persist {

/**
 * Running functionals of a path Z_0 = 0, Z_1, Z_2, ... fed one value at a time.
 *
 * After k pushes the state describes the prefix Z_0..Z_k:
 *   max over 1..k, earliest argmax over 0..k, #{1 <= j <= k : Z_j > 0},
 *   and log(sum_{l=0}^k e^{Z_l}), log(sum_{l=1}^k e^{Z_l}) kept stable by
 *   factoring out the running maximum.
 */
class RunningPathStats {
public:
    explicit RunningPathStats(bool track_exponential = true) noexcept : track_exp_(track_exponential) {}

    void push(double z) noexcept {
        ++steps_;
        if (z > max_) max_ = z;
        if (z > best_) {
            best_ = z;
            argmax_ = steps_;
        }
        if (z > 0.0) ++occupation_;
        if (track_exp_) {
            log_from0_ = log_add(log_from0_, z);
            log_from1_ = steps_ == 1 ? z : log_add(log_from1_, z);
        }
    }

    std::int64_t steps() const noexcept { return steps_; }
    /// max_{1<=j<=k} Z_j; -inf before the first push.
    double max_from1() const noexcept { return max_; }
    /// max_{0<=j<=k} Z_j.
    double max_from0() const noexcept { return best_; }
    std::int64_t argmax() const noexcept { return argmax_; }
    std::int64_t occupation() const noexcept { return occupation_; }
    double log_sum_from0() const noexcept { return log_from0_; }
    double log_sum_from1() const noexcept { return log_from1_; }
    double phi_from0() const noexcept { return std::exp(-log_from0_); }
    double phi_from1() const noexcept { return std::exp(-log_from1_); }

    static double log_add(double a, double b) noexcept {
        return a >= b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
    }

private:
    bool track_exp_;
    std::int64_t steps_ = 0;
    double max_ = -std::numeric_limits<double>::infinity();
    double best_ = 0.0;  // Z_0
    std::int64_t argmax_ = 0;
    std::int64_t occupation_ = 0;
    double log_from0_ = 0.0;  // log e^{Z_0}
    double log_from1_ = -std::numeric_limits<double>::infinity();
};

/// Per-path scalars at horizon T = path length - 1.
struct PathStats {
    std::int64_t horizon = 0;
    double boundary = 0.0;
    double max_1_to_T = -std::numeric_limits<double>::infinity();
    bool persists = true;        // max_1_to_T <= boundary
    std::int64_t tau = 0;        // earliest argmax over 0..T
    std::int64_t occupation = 0; // #{1 <= k <= T : Z_k > 0}
    double phi_value_from0 = 1.0;  // (sum_{l=0}^T e^{Z_l})^{-1}
    double phi_value_from1 = std::numeric_limits<double>::infinity();  // (sum_{l=1}^T e^{Z_l})^{-1}
    std::vector<std::pair<double, double>> psi;  // (x, log(sum_{k<[x]} e^{Z_k} + (x-[x]) e^{Z_[x]}))

    bool persists_at(double a) const noexcept { return max_1_to_T <= a; }
    double psi_value(double x) const;
};

/// One pass over Z. Throws DataError on non-finite values or Z_0 != 0, and
/// RangeError for psi points outside [1, T].
PathStats compute_stats(std::span<const double> z, double boundary, std::span<const double> psi_points = {});

inline PathStats compute_stats(const ProcessPath& path, double boundary, std::span<const double> psi_points = {}) {
    return compute_stats(std::span<const double>(path.values), boundary, psi_points);
}

/// One row of the one-step lower bound  p(T,a) >= P[N(0,1) <= a-b] p(T-1,b), b >= 0.
struct BoundaryShiftRow {
    std::int64_t horizon = 0;
    double a = 0.0;
    double b = 0.0;
    double p_a = 0.0;          // p_hat(T, a)
    double p_b_prev = 0.0;     // p_hat(T-1, b)
    double factor = 0.0;       // P[N(0,1) <= a - b]
    double lower_bound = 0.0;  // factor * p_b_prev
    double joint_se = 0.0;
    bool violated = false;     // p_a < lower_bound - 3 joint_se
};

struct BoundaryRatio {
    std::int64_t horizon = 0;
    double a = 0.0;
    double ratio = 0.0;  // p_hat(T, a) / p_hat(T, 0)
};

struct BoundaryShiftReport {
    std::vector<BoundaryRatio> ratios;
    std::vector<BoundaryShiftRow> rows;
    bool any_violation() const noexcept;
};

/// Compares estimates sharing a horizon grid that contains T and T-1 for each
/// tested T. Pairs (a, b) with b < 0 are rejected.
BoundaryShiftReport boundary_shift_check(std::span<const PersistenceEstimate> estimates,
                                         std::span<const std::pair<double, double>> pairs,
                                         double se_multiplier = 3.0);

}  // namespace persist
