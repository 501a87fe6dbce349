#include "lotus/rng.hpp"

#include <cmath>

namespace lotus {

std::uint64_t RngState::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double RngState::next_uniform() {
    // (k+1) <= 2^53 is exactly representable, and the 2^-53 scaling is exact,
    // so the result is the same on every IEEE-754 platform.
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngState::next_gaussian() {
    // Marsaglia polar method. No spare caching: the stream position after a
    // call depends only on the draws consumed, never on cached history.
    for (;;) {
        const double u = 2.0 * next_uniform() - 1.0;
        const double v = 2.0 * next_uniform() - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            return u * std::sqrt(-2.0 * portable_log(s) / s);
        }
    }
}

RngState RngState::split(std::uint64_t stream) const {
    // splitmix64 finalizer over (state, stream); +1 keeps stream 0 distinct
    // from the parent state itself.
    std::uint64_t z = state_ + (stream + 1) * 0xD1B54A32D192ED03ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return RngState(z);
}

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, RngState& rng) {
    DenseMatrix out(rows, cols);
    for (double& v : out.data()) v = rng.next_gaussian();
    return out;
}

double portable_log(double x) {
    // ln(x) = e*ln2 + 2*atanh(z), z = (m-1)/(m+1), after reducing the
    // mantissa to [sqrt(1/2), sqrt(2)). frexp is exact and +,-,*,/ are
    // correctly rounded, so the value is platform-independent. |z| <= 0.1716
    // makes 14 series terms good to ~1 ulp relative.
    int e = 0;
    double m = std::frexp(x, &e); // m in [0.5, 1)
    if (m < 0.70710678118654752440) {
        m *= 2.0;
        e -= 1;
    }
    const double z = (m - 1.0) / (m + 1.0);
    const double z2 = z * z;
    double term = z;
    double sum = 0.0;
    for (int k = 0; k < 14; ++k) {
        sum += term / (2.0 * k + 1.0);
        term *= z2;
    }
    return 2.0 * sum + static_cast<double>(e) * 0.69314718055994530941723212145818;
}

} // namespace lotus
