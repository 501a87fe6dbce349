#ifndef LOTUS_PROJECTOR_HPP
#define LOTUS_PROJECTOR_HPP

#include <cstddef>
#include <cstdint>

#include "lotus/decomp.hpp"
#include "lotus/matrix.hpp"
#include "lotus/rng.hpp"

namespace lotus {

/// Which side of the gradient the basis multiplies.
enum class Side { Left, Right };

struct RangeOptions {
    std::size_t oversample = 5;
    std::size_t power_iters = 2;
};

/// Orthonormal basis for the current gradient subspace. Immutable after
/// construction; a subspace switch builds a new one.
struct Projector {
    DenseMatrix basis; // Left: m x rank, Right: n x rank
    Side side = Side::Left;
    std::size_t rank = 0;
    std::uint64_t created_at_step = 0;
};

/// Build a projector for an m x n gradient. The shorter dimension is
/// projected: m <= n gives a Left basis (m x rank, compressed gradient
/// rank x n), otherwise a Right basis (n x rank, compressed gradient
/// m x rank).
///
/// rank == min(m, n) short-circuits to the identity basis: no compression is
/// happening, and the canonical basis keeps full-rank runs exactly equal to
/// their uncompressed counterparts.
///
/// The oversample in `opts` is clamped so rank + oversample fits min(m, n).
/// Throws ZeroGradientError when g_full is identically zero and
/// DimensionError when rank > min(m, n).
Projector compute_projector(const DenseMatrix& g_full, std::size_t rank, RngState& rng,
                            const RangeOptions& opts = {}, std::uint64_t created_at_step = 0);

/// Compress a full gradient: Left -> basis^T * g (rank x n),
/// Right -> g * basis (m x rank).
DenseMatrix project(const Projector& p, const DenseMatrix& g_full);

/// Lift a compressed matrix back to full shape: Left -> basis * g_low,
/// Right -> g_low * basis^T.
DenseMatrix project_back(const Projector& p, const DenseMatrix& g_low);

/// Shape of the compressed gradient for a full m x n gradient.
std::pair<std::size_t, std::size_t> compressed_shape(const Projector& p, std::size_t m,
                                                     std::size_t n);

} // namespace lotus

#endif
