#ifndef LOTUS_RNG_HPP
#define LOTUS_RNG_HPP

#include <cstdint>
#include <cstddef>

#include "lotus/matrix.hpp"

namespace lotus {

/// Deterministic counter-based random generator.
///
/// The stream is splitmix64 over a 64-bit state. Gaussian samples come from
/// the Marsaglia polar method, with the logarithm evaluated by a fixed
/// polynomial so that every operation is an IEEE-754 basic operation
/// (+,-,*,/,sqrt). Identical seeds therefore produce bit-identical streams
/// on any IEEE-754 platform, independent of the host libm.
///
/// RngState is a value: copying it forks the stream, and nothing in the
/// library mutates one behind the caller's back.
class RngState {
public:
    explicit RngState(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64();

    /// Uniform in (0, 1].
    double next_uniform();

    /// Standard normal sample.
    double next_gaussian();

    /// Derive an independent child stream; does not advance this stream.
    RngState split(std::uint64_t stream) const;

    std::uint64_t state() const noexcept { return state_; }

    bool operator==(const RngState&) const = default;

private:
    std::uint64_t state_;
};

/// rows x cols matrix of standard normal entries, filled row-major.
DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, RngState& rng);

/// Natural logarithm evaluated with IEEE basic operations only; accurate to
/// a few ulp on (0, 1e300]. Exists so Gaussian sampling is platform-exact.
double portable_log(double x);

} // namespace lotus

#endif
