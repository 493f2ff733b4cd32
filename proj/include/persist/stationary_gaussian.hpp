#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "persist/rng.hpp"
#include "persist/scenery.hpp"

namespace persist {

/// Slowly varying factor l(n) in  sum_{i,j<=n} r(i-j) ~ K n^{2H} l(n).
enum class SlowVariation { one, log, sqrt_log };

std::string to_string(SlowVariation ell);
SlowVariation parse_slow_variation(std::string_view text);

/// l(n); the logarithmic forms use log(max(n, e)) so that l >= 1.
double slowly_varying(SlowVariation ell, double n) noexcept;

/// Covariance of unit-variance fractional Gaussian noise at lag j:
///   (|j+1|^{2H} - 2|j|^{2H} + |j-1|^{2H}) / 2.
double fgn_correlation(double hurst, std::int64_t lag);

/**
 * Stationary correlation function r(j) with its long-range scaling metadata.
 *
 * Either the FGN family or a user table r(0..J) that holds r(J) for j > J.
 */
class CorrelationSpec {
public:
    static CorrelationSpec fgn(double hurst);
    static CorrelationSpec from_table(std::vector<double> table, double hurst, double scale_k,
                                      SlowVariation ell);

    double operator()(std::int64_t lag) const noexcept;

    double hurst() const noexcept { return hurst_; }
    double scale_k() const noexcept { return scale_k_; }
    SlowVariation ell() const noexcept { return ell_; }
    bool is_fgn() const noexcept { return table_.empty(); }
    const std::vector<double>& table() const noexcept { return table_; }
    std::string label() const;

private:
    CorrelationSpec() = default;

    double hurst_ = 0.5;
    double scale_k_ = 1.0;
    SlowVariation ell_ = SlowVariation::one;
    std::vector<double> table_;
};

/// Reads CSV rows "j,r" with j = 0, 1, 2, ... ascending; a header line is allowed.
/// Requires r(0) = 1 and r(j) >= 0.
std::vector<double> read_correlation_table(const std::filesystem::path& path);

/// Throws ParameterError naming the first lag in [0, horizon) with r < 0.
void require_nonnegative(const CorrelationSpec& spec, std::int64_t horizon);

/// sum_{i,j=1}^n r(i-j) = n + 2 sum_{j=1}^{n-1} (n-j) r(j).
double variance_sum(const CorrelationSpec& spec, std::int64_t n);

/// Cov(Z_i, Z_j) for 0 <= i,j <= T as a row-major (T+1)x(T+1) array.
std::vector<double> partial_sum_covariance(const CorrelationSpec& spec, std::int64_t horizon);

/// Cov(Z_{T-i} - Z_T, Z_{T-j} - Z_T) for 0 <= i,j <= T, summed directly over
/// the reversed index blocks (no cancellation against Cov(Z_T, Z_T)).
std::vector<double> reversed_partial_sum_covariance(const CorrelationSpec& spec, std::int64_t horizon);

/**
 * Exact sampler for X_1..X_N via circulant embedding.
 *
 * The covariance is embedded in a circulant of size 2M with M a power of two
 * >= N-1; if that embedding is not nonnegative definite the minimal size
 * 2(N-1) is used instead. Eigenvalues in [-1e-9 max, 0) are clipped, anything
 * more negative raises EmbeddingError. The spectral square root is immutable
 * after construction and shared by all workers; each worker brings its own
 * Workspace. One FFT yields two independent samples.
 *
 * Negative correlations are rejected unless `allow_negative` is set (FGN with
 * H < 1/2 is only simulated in exploratory runs).
 */
class CirculantGenerator {
public:
    class Workspace {
    public:
        explicit Workspace(const CirculantGenerator& gen);
        ~Workspace();
        Workspace(const Workspace&) = delete;
        Workspace& operator=(const Workspace&) = delete;

    private:
        friend class CirculantGenerator;
        std::complex<double>* in_ = nullptr;
        std::complex<double>* out_ = nullptr;
    };

    CirculantGenerator(const CorrelationSpec& spec, std::int64_t length, bool allow_negative = false);
    ~CirculantGenerator();
    CirculantGenerator(const CirculantGenerator&) = delete;
    CirculantGenerator& operator=(const CirculantGenerator&) = delete;

    std::int64_t length() const noexcept { return length_; }
    std::size_t embedding_size() const noexcept { return size_; }
    /// Most negative eigenvalue before clipping, relative to the largest.
    double min_relative_eigenvalue() const noexcept { return min_relative_eigenvalue_; }

    /// Fills two independent samples of X_1..X_N.
    void generate_pair(Stream& stream, Workspace& ws, std::span<double> first, std::span<double> second) const;

private:
    std::int64_t length_;
    std::size_t size_ = 0;
    std::vector<double> sqrt_eigen_;  // sqrt(lambda_k / m)
    double min_relative_eigenvalue_ = 0.0;
    void* plan_ = nullptr;
};

/// One sample of X_1..X_T (the second sample of the FFT pair is discarded).
std::vector<double> generate_stationary(const CorrelationSpec& spec, std::int64_t length, Stream& stream,
                                        bool allow_negative = false);

/// Z_0 = 0, Z_n = Z_{n-1} + X_n.
ProcessPath partial_sums(std::span<const double> increments);

}  // namespace persist
