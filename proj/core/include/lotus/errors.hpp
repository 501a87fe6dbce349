#ifndef LOTUS_ERRORS_HPP
#define LOTUS_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lotus {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Incompatible matrix shapes; the message names both operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A column of the input is (numerically) linearly dependent on the
/// previous ones.
class RankDeficiencyError : public Error {
public:
    RankDeficiencyError(const std::string& what, std::size_t column)
        : Error(what), column_(column) {}
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// A gradient with zero Frobenius norm was passed where a direction is
/// required.
class ZeroGradientError : public Error {
public:
    using Error::Error;
};

/// NaN or Inf encountered in external input.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

/// An iterative decomposition did not converge within its iteration cap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Config file or CLI parameter problem.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure; the message includes the path.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace lotus

#endif
