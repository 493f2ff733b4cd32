#include "persist/stationary_gaussian.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "persist/errors.hpp"
#include "persist/io.hpp"

namespace persist {

namespace {

// The FFTW planner is not thread-safe; execution with the new-array API is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void require_hurst(double hurst) {
    if (!(hurst > 0.0 && hurst < 1.0)) {
        throw ParameterError("Hurst index must lie in (0,1), got " + std::to_string(hurst));
    }
}

// Eigenvalues of the symmetric circulant with first row c (real input, real output).
std::vector<double> circulant_eigenvalues(const std::vector<double>& row) {
    const std::size_t m = row.size();
    auto* in = fftw_alloc_complex(m);
    auto* out = fftw_alloc_complex(m);
    for (std::size_t k = 0; k < m; ++k) {
        in[k][0] = row[k];
        in[k][1] = 0.0;
    }
    fftw_plan plan = nullptr;
    {
        std::scoped_lock lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(m), in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::vector<double> eigen(m);
    for (std::size_t k = 0; k < m; ++k) eigen[k] = out[k][0];
    {
        std::scoped_lock lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return eigen;
}

struct Embedding {
    std::vector<double> eigen;
    std::size_t worst = 0;
    double worst_relative = 0.0;
};

Embedding embed(const CorrelationSpec& spec, std::size_t half) {
    const std::size_t m = 2 * half;
    std::vector<double> row(m);
    for (std::size_t j = 0; j <= half; ++j) row[j] = spec(static_cast<std::int64_t>(j));
    for (std::size_t j = half + 1; j < m; ++j) row[j] = row[m - j];
    Embedding e;
    e.eigen = circulant_eigenvalues(row);
    const double top = *std::max_element(e.eigen.begin(), e.eigen.end());
    auto low = std::min_element(e.eigen.begin(), e.eigen.end());
    e.worst = static_cast<std::size_t>(low - e.eigen.begin());
    e.worst_relative = top > 0.0 ? *low / top : -1.0;
    return e;
}

constexpr double kClipTolerance = 1e-9;

}  // namespace

std::string to_string(SlowVariation ell) {
    switch (ell) {
        case SlowVariation::one: return "one";
        case SlowVariation::log: return "log";
        case SlowVariation::sqrt_log: return "sqrt-log";
    }
    return "?";
}

SlowVariation parse_slow_variation(std::string_view text) {
    if (text == "one" || text == "1") return SlowVariation::one;
    if (text == "log") return SlowVariation::log;
    if (text == "sqrt-log") return SlowVariation::sqrt_log;
    throw ParameterError("unknown slowly varying factor '" + std::string(text) + "' (one|log|sqrt-log)");
}

double slowly_varying(SlowVariation ell, double n) noexcept {
    switch (ell) {
        case SlowVariation::one: return 1.0;
        case SlowVariation::log: return std::log(std::max(n, std::exp(1.0)));
        case SlowVariation::sqrt_log: return std::sqrt(std::log(std::max(n, std::exp(1.0))));
    }
    return 1.0;
}

double fgn_correlation(double hurst, std::int64_t lag) {
    require_hurst(hurst);
    if (lag < 0) lag = -lag;
    if (lag == 0) return 1.0;
    const double two_h = 2.0 * hurst;
    const auto j = static_cast<double>(lag);
    return 0.5 * (std::pow(j + 1.0, two_h) - 2.0 * std::pow(j, two_h) + std::pow(j - 1.0, two_h));
}

CorrelationSpec CorrelationSpec::fgn(double hurst) {
    require_hurst(hurst);
    CorrelationSpec spec;
    spec.hurst_ = hurst;
    spec.scale_k_ = 1.0;
    spec.ell_ = SlowVariation::one;
    return spec;
}

CorrelationSpec CorrelationSpec::from_table(std::vector<double> table, double hurst, double scale_k,
                                            SlowVariation ell) {
    require_hurst(hurst);
    if (table.empty() || std::fabs(table.front() - 1.0) > 1e-12) {
        throw ParameterError("correlation table must start with r(0) = 1");
    }
    for (std::size_t j = 0; j < table.size(); ++j) {
        if (!std::isfinite(table[j]) || table[j] < 0.0) {
            throw ParameterError("correlation table entry r(" + std::to_string(j) + ") = " +
                                 format_double(table[j]) + " is negative or non-finite");
        }
    }
    if (!(scale_k > 0.0)) throw ParameterError("scaling constant K must be positive");
    CorrelationSpec spec;
    spec.hurst_ = hurst;
    spec.scale_k_ = scale_k;
    spec.ell_ = ell;
    spec.table_ = std::move(table);
    return spec;
}

double CorrelationSpec::operator()(std::int64_t lag) const noexcept {
    if (lag < 0) lag = -lag;
    if (table_.empty()) {
        if (lag == 0) return 1.0;
        const double two_h = 2.0 * hurst_;
        const auto j = static_cast<double>(lag);
        return 0.5 * (std::pow(j + 1.0, two_h) - 2.0 * std::pow(j, two_h) + std::pow(j - 1.0, two_h));
    }
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(lag), table_.size() - 1);
    return table_[idx];
}

std::string CorrelationSpec::label() const {
    if (is_fgn()) return "fgn(H=" + format_double(hurst_) + ")";
    return "table(J=" + std::to_string(table_.size() - 1) + ",H=" + format_double(hurst_) + ")";
}

std::vector<double> read_correlation_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open correlation file " + path.string());
    std::vector<double> table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 'j,r'");
        }
        long long j = 0;
        double r = 0.0;
        const char* b = line.data();
        auto rj = std::from_chars(b, b + comma, j);
        if (rj.ec != std::errc{}) {
            if (table.empty() && line_no == 1) continue;  // header row
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad lag");
        }
        std::string_view rest(line.data() + comma + 1, line.size() - comma - 1);
        while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
        auto rr = std::from_chars(rest.data(), rest.data() + rest.size(), r);
        if (rr.ec != std::errc{}) throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad correlation");
        if (j != static_cast<long long>(table.size())) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": lags must run 0,1,2,... without gaps");
        }
        table.push_back(r);
    }
    if (table.empty()) throw ConfigError("correlation file " + path.string() + " has no rows");
    return table;
}

void require_nonnegative(const CorrelationSpec& spec, std::int64_t horizon) {
    for (std::int64_t j = 0; j < horizon; ++j) {
        const double r = spec(j);
        if (r < 0.0) {
            throw ParameterError("correlation r(" + std::to_string(j) + ") = " + format_double(r) +
                                 " is negative; nonnegative correlations are required");
        }
    }
}

double variance_sum(const CorrelationSpec& spec, std::int64_t n) {
    if (n < 1) throw ParameterError("variance_sum: n must be >= 1");
    long double acc = static_cast<long double>(n);
    for (std::int64_t j = 1; j < n; ++j) acc += 2.0L * static_cast<long double>(n - j) * spec(j);
    return static_cast<double>(acc);
}

std::vector<double> partial_sum_covariance(const CorrelationSpec& spec, std::int64_t horizon) {
    if (horizon < 0) throw ParameterError("partial_sum_covariance: negative horizon");
    const auto n = static_cast<std::size_t>(horizon) + 1;
    // C(i,j) = C(i-1,j) + sum_{b=1}^{j} r(i-b)
    std::vector<long double> acc(n * n, 0.0L);
    for (std::size_t i = 1; i < n; ++i) {
        long double running = 0.0L;
        for (std::size_t j = 1; j < n; ++j) {
            running += spec(static_cast<std::int64_t>(i) - static_cast<std::int64_t>(j));
            acc[i * n + j] = acc[(i - 1) * n + j] + running;
        }
    }
    return {acc.begin(), acc.end()};
}

std::vector<double> reversed_partial_sum_covariance(const CorrelationSpec& spec, std::int64_t horizon) {
    if (horizon < 0) throw ParameterError("reversed_partial_sum_covariance: negative horizon");
    const auto n = static_cast<std::size_t>(horizon) + 1;
    // Z_{T-i} - Z_T = -(X_{T-i+1} + ... + X_T); block i gains index a = T-i+1.
    std::vector<long double> acc(n * n, 0.0L);
    for (std::size_t i = 1; i < n; ++i) {
        const auto a = horizon - static_cast<std::int64_t>(i) + 1;
        long double running = 0.0L;
        for (std::size_t j = 1; j < n; ++j) {
            const auto b = horizon - static_cast<std::int64_t>(j) + 1;
            running += spec(a - b);
            acc[i * n + j] = acc[(i - 1) * n + j] + running;
        }
    }
    return {acc.begin(), acc.end()};
}

// ------------------------------------------------------ CirculantGenerator

CirculantGenerator::CirculantGenerator(const CorrelationSpec& spec, std::int64_t length, bool allow_negative)
    : length_(length) {
    if (length < 1) throw ParameterError("stationary sequence length must be >= 1");
    if (!allow_negative) require_nonnegative(spec, length);
    if (length == 1) return;

    const auto minimal = static_cast<std::size_t>(length - 1);
    std::size_t half = 1;
    while (half < minimal) half <<= 1;

    Embedding e = embed(spec, half);
    if (e.worst_relative < -kClipTolerance && half != minimal) e = embed(spec, minimal);
    if (e.worst_relative < -kClipTolerance) {
        throw EmbeddingError("circulant embedding is not nonnegative definite: eigenvalue " +
                                 std::to_string(e.worst) + " = " + format_double(e.eigen[e.worst]) +
                                 " (relative " + format_double(e.worst_relative) + ")",
                             e.worst, e.eigen[e.worst]);
    }
    min_relative_eigenvalue_ = e.worst_relative;
    size_ = e.eigen.size();
    sqrt_eigen_.resize(size_);
    for (std::size_t k = 0; k < size_; ++k) {
        sqrt_eigen_[k] = std::sqrt(std::max(0.0, e.eigen[k]) / static_cast<double>(size_));
    }

    auto* in = fftw_alloc_complex(size_);
    auto* out = fftw_alloc_complex(size_);
    {
        std::scoped_lock lock(planner_mutex());
        // FFTW_ESTIMATE: the plan (and so the rounding) must not depend on timing.
        plan_ = fftw_plan_dft_1d(static_cast<int>(size_), in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_free(in);
    fftw_free(out);
}

CirculantGenerator::~CirculantGenerator() {
    if (plan_ != nullptr) {
        std::scoped_lock lock(planner_mutex());
        fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    }
}

CirculantGenerator::Workspace::Workspace(const CirculantGenerator& gen) {
    if (gen.size_ > 0) {
        in_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(gen.size_));
        out_ = reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(gen.size_));
    }
}

CirculantGenerator::Workspace::~Workspace() {
    fftw_free(in_);
    fftw_free(out_);
}

void CirculantGenerator::generate_pair(Stream& stream, Workspace& ws, std::span<double> first,
                                       std::span<double> second) const {
    const auto n = static_cast<std::size_t>(length_);
    if (first.size() < n || second.size() < n) throw RangeError("generate_pair: output spans too short");
    if (size_ == 0) {
        first[0] = stream.gaussian();
        second[0] = stream.gaussian();
        return;
    }
    for (std::size_t k = 0; k < size_; ++k) {
        const double re = stream.gaussian();
        const double im = stream.gaussian();
        ws.in_[k] = std::complex<double>(sqrt_eigen_[k] * re, sqrt_eigen_[k] * im);
    }
    fftw_execute_dft(static_cast<fftw_plan>(plan_), reinterpret_cast<fftw_complex*>(ws.in_),
                     reinterpret_cast<fftw_complex*>(ws.out_));
    for (std::size_t i = 0; i < n; ++i) {
        first[i] = ws.out_[i].real();
        second[i] = ws.out_[i].imag();
    }
}

std::vector<double> generate_stationary(const CorrelationSpec& spec, std::int64_t length, Stream& stream,
                                        bool allow_negative) {
    CirculantGenerator gen(spec, length, allow_negative);
    CirculantGenerator::Workspace ws(gen);
    std::vector<double> first(static_cast<std::size_t>(length));
    std::vector<double> second(static_cast<std::size_t>(length));
    gen.generate_pair(stream, ws, first, second);
    return first;
}

ProcessPath partial_sums(std::span<const double> increments) {
    ProcessPath path;
    path.family = "lrd";
    path.values.reserve(increments.size() + 1);
    double z = 0.0;
    path.values.push_back(0.0);
    for (double x : increments) {
        z += x;
        path.values.push_back(z);
    }
    return path;
}

}  // namespace persist
