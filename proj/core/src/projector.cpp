#include "lotus/projector.hpp"

#include <algorithm>
#include <sstream>

#include "lotus/errors.hpp"

namespace lotus {

Projector compute_projector(const DenseMatrix& g_full, std::size_t rank, RngState& rng,
                            const RangeOptions& opts, std::uint64_t created_at_step) {
    const std::size_t m = g_full.rows();
    const std::size_t n = g_full.cols();
    const std::size_t short_dim = std::min(m, n);
    if (rank == 0 || rank > short_dim) {
        std::ostringstream os;
        os << "compute_projector: rank " << rank << " outside [1, " << short_dim << "] for " << m
           << "x" << n << " gradient";
        throw DimensionError(os.str());
    }
    g_full.require_finite("compute_projector");
    if (frobenius_norm(g_full) == 0.0) {
        throw ZeroGradientError("compute_projector: gradient is identically zero");
    }

    Projector p;
    p.side = m <= n ? Side::Left : Side::Right;
    p.rank = rank;
    p.created_at_step = created_at_step;

    if (rank == short_dim) {
        // No compression at full rank. The canonical basis (rather than an
        // arbitrary rotation) keeps the compressed iterates identical to the
        // dense ones, Adam being coordinate-wise.
        p.basis = DenseMatrix::identity(short_dim);
        return p;
    }

    const std::size_t oversample = std::min(opts.oversample, short_dim - rank);
    if (p.side == Side::Left) {
        p.basis = randomized_range(g_full, rank, oversample, opts.power_iters, rng);
    } else {
        p.basis = randomized_range(transpose(g_full), rank, oversample, opts.power_iters, rng);
    }
    return p;
}

DenseMatrix project(const Projector& p, const DenseMatrix& g_full) {
    if (p.side == Side::Left) {
        return matmul(transpose(p.basis), g_full);
    }
    return matmul(g_full, p.basis);
}

DenseMatrix project_back(const Projector& p, const DenseMatrix& g_low) {
    if (p.side == Side::Left) {
        return matmul(p.basis, g_low);
    }
    return matmul(g_low, transpose(p.basis));
}

std::pair<std::size_t, std::size_t> compressed_shape(const Projector& p, std::size_t m,
                                                     std::size_t n) {
    if (p.side == Side::Left) return {p.rank, n};
    return {m, p.rank};
}

} // namespace lotus
