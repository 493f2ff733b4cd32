#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace persist {

/// z such that P[|N(0,1)| <= z] = 0.95.
inline constexpr double kZ95 = 1.959963984540054;

double normal_cdf(double x) noexcept;

struct Interval {
    double low = 0.0;
    double high = 1.0;
};

/// Wilson score interval for a binomial proportion; hits <= n, n >= 1.
Interval wilson_interval(std::int64_t hits, std::int64_t n, double z = kZ95);

/// Estimate of P[max_{k=1..T} Z_k <= a].
struct PersistenceEstimate {
    std::int64_t horizon = 0;
    double boundary = 0.0;
    std::int64_t hits = 0;
    std::int64_t replicas = 0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    bool zero_hits = false;  // advise a larger replica count

    /// Binomial standard error sqrt(p(1-p)/n).
    double stderr_() const noexcept;
};

PersistenceEstimate make_persistence_estimate(std::int64_t horizon, double boundary, std::int64_t hits,
                                              std::int64_t replicas);

/// Count, sum and sum of squares; merging is exact in a fixed order.
struct MomentAccumulator {
    std::int64_t count = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double x) noexcept {
        ++count;
        sum += x;
        sumsq += x * x;
    }
    void merge(const MomentAccumulator& other) noexcept {
        count += other.count;
        sum += other.sum;
        sumsq += other.sumsq;
    }
    double mean() const noexcept { return count > 0 ? sum / static_cast<double>(count) : 0.0; }
    double variance() const noexcept;  // unbiased
    double stderr_() const noexcept;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;     // from the supplied weights (inverse variances)
    double chi2 = 0.0;         // weighted residual sum of squares
    std::vector<double> residuals;
};

/// Weighted least squares y = intercept + slope x, weights = inverse variances.
/// Requires at least two distinct x with positive weight.
LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w);

/// Ordinary least squares (unit weights); slope_se from the residual variance.
LineFit line_fit(std::span<const double> x, std::span<const double> y);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test (asymptotic distribution with the
/// Stephens small-sample correction).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_survival(double lambda) noexcept;

}  // namespace persist
