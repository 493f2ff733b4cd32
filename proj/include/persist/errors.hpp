#pragma once

#include <stdexcept>
#include <string>

namespace persist {

/// A model parameter is outside its admissible range (alpha, H, horizon, ...).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Lattice coordinates or path indices outside the representable range.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Circulant embedding of a correlation function has a materially negative
/// spectrum, i.e. the correlation sequence is not nonnegative definite.
class EmbeddingError : public std::runtime_error {
public:
    EmbeddingError(const std::string& what, std::size_t index, double value)
        : std::runtime_error(what), index_(index), value_(value) {}
    std::size_t worst_index() const noexcept { return index_; }
    double worst_value() const noexcept { return value_; }

private:
    std::size_t index_;
    double value_;
};

/// Non-finite or otherwise malformed path data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Regression could not be performed (too few usable grid points).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration or malformed input file.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace persist
