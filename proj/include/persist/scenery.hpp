#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "persist/lattice_walks.hpp"
#include "persist/rng.hpp"

namespace persist {

/// Real path Z_0..Z_T with Z_0 = 0, from either process family.
struct ProcessPath {
    std::vector<double> values;
    std::string family;  // "rwrs" or "lrd"
    std::string params;  // e.g. "walk=srw1" or "hurst=0.75"

    std::int64_t horizon() const noexcept { return static_cast<std::int64_t>(values.size()) - 1; }
};

/// Z_n = sum_{i=1}^n xi_{S_i} = sum_x N_n(x) xi_x. Each distinct site's scenery
/// value is drawn once from site_gaussian(scenery, x).
ProcessPath rwrs_path(const WalkPath& walk, std::uint64_t scenery);

/// E[Z_l Z_k | S] = sum_x N_l(x) N_k(x), for 0 <= l <= k <= T.
double conditional_covariance(const WalkPath& walk, std::int64_t l, std::int64_t k);

/// E[Z_l (Z_k - Z_l) | S] = sum_x N_l(x) (N_k(x) - N_l(x)), for 0 <= l <= k <= T.
double conditional_increment_covariance(const WalkPath& walk, std::int64_t l, std::int64_t k);

/// Streams Z_1, Z_2, ... of one RWRS replica without storing the path.
class RwrsStepper {
public:
    RwrsStepper(const WalkKind& kind, Stream walk_stream, std::uint64_t scenery);

    /// Advances one step and returns Z_n.
    double next();

    std::int64_t steps() const noexcept { return steps_; }
    double value() const noexcept { return z_; }

    /// Resets to n = 0 with new randomness; keeps the table allocation.
    void reset(Stream walk_stream, std::uint64_t scenery);

private:
    WalkStepper stepper_;
    LocalTimeTable table_;
    std::uint64_t scenery_;
    SiteKey pos_;
    double z_ = 0.0;
    std::int64_t steps_ = 0;
};

}  // namespace persist
