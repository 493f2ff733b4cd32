#include "persist/statistics.hpp"

#include <algorithm>
#include <cmath>

#include "persist/errors.hpp"

namespace persist {

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Interval wilson_interval(std::int64_t hits, std::int64_t n, double z) {
    if (n < 1 || hits < 0 || hits > n) throw ParameterError("wilson_interval: need 0 <= hits <= n, n >= 1");
    const auto nn = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    Interval ci{std::max(0.0, centre - half), std::min(1.0, centre + half)};
    // guard the ordering ci_low <= p <= ci_high against rounding at p = 0 or 1
    if (hits == 0) ci.low = 0.0;
    if (hits == n) ci.high = 1.0;
    ci.low = std::min(ci.low, p);
    ci.high = std::max(ci.high, p);
    return ci;
}

double PersistenceEstimate::stderr_() const noexcept {
    if (replicas < 1) return 0.0;
    return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(replicas));
}

PersistenceEstimate make_persistence_estimate(std::int64_t horizon, double boundary, std::int64_t hits,
                                              std::int64_t replicas) {
    PersistenceEstimate e;
    e.horizon = horizon;
    e.boundary = boundary;
    e.hits = hits;
    e.replicas = replicas;
    e.p_hat = static_cast<double>(hits) / static_cast<double>(replicas);
    const auto ci = wilson_interval(hits, replicas);
    e.ci_low = ci.low;
    e.ci_high = ci.high;
    e.zero_hits = hits == 0;
    return e;
}

double MomentAccumulator::variance() const noexcept {
    if (count < 2) return 0.0;
    const auto n = static_cast<double>(count);
    return std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0));
}

double MomentAccumulator::stderr_() const noexcept {
    if (count < 2) return 0.0;
    return std::sqrt(variance() / static_cast<double>(count));
}

LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    if (x.size() != y.size() || x.size() != w.size()) throw FitError("weighted_line_fit: size mismatch");
    long double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    if (!(sw > 0)) throw FitError("weighted_line_fit: no positive weights");
    const long double mx = sx / sw;
    const long double my = sy / sw;
    long double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const long double dx = x[i] - mx;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * (y[i] - my);
    }
    if (!(sxx > 0)) throw FitError("weighted_line_fit: abscissae are not distinct");
    LineFit fit;
    fit.slope = static_cast<double>(sxy / sxx);
    fit.intercept = static_cast<double>(my - sxy / sxx * mx);
    fit.slope_se = static_cast<double>(std::sqrt(1.0L / sxx));
    fit.residuals.resize(x.size());
    long double chi2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        fit.residuals[i] = y[i] - (fit.intercept + fit.slope * x[i]);
        chi2 += w[i] * static_cast<long double>(fit.residuals[i]) * fit.residuals[i];
    }
    fit.chi2 = static_cast<double>(chi2);
    return fit;
}

LineFit line_fit(std::span<const double> x, std::span<const double> y) {
    std::vector<double> w(x.size(), 1.0);
    LineFit fit = weighted_line_fit(x, y, w);
    if (x.size() > 2) {
        fit.slope_se *= std::sqrt(fit.chi2 / static_cast<double>(x.size() - 2));
    } else {
        fit.slope_se = 0.0;
    }
    return fit;
}

double kolmogorov_survival(double lambda) noexcept {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ParameterError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;  // ties advance together
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = na * nb / (na + nb);
    const double root = std::sqrt(ne);
    KsResult r;
    r.statistic = d;
    r.p_value = kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
    return r;
}

}  // namespace persist
