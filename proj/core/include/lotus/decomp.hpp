#ifndef LOTUS_DECOMP_HPP
#define LOTUS_DECOMP_HPP

#include <cstddef>
#include <vector>

#include "lotus/matrix.hpp"
#include "lotus/rng.hpp"

namespace lotus {

/// Tolerances for the decomposition routines. Module constants by default;
/// tests may override per call.
struct DecompTolerances {
    /// A QR diagonal entry below rank_rel_tol * max|a_ij| marks the column
    /// as linearly dependent.
    double rank_rel_tol = 1e-12;
    /// One-sided Jacobi stops once every column pair satisfies
    /// |<wp,wq>| <= jacobi_tol * ||wp|| * ||wq||.
    double jacobi_tol = 1e-14;
    int max_jacobi_sweeps = 60;
};

struct SvdResult {
    DenseMatrix u;                       // m x k, orthonormal columns
    std::vector<double> singular_values; // length k, nonincreasing, >= 0
    DenseMatrix v;                       // n x k, orthonormal columns
};

/// Gram-Schmidt orthonormalization (two passes) of the columns of a.
/// Returns Q with a's shape, Q^T Q = I and span(Q) = span(a).
/// Requires a.rows >= a.cols; throws RankDeficiencyError identifying the
/// first dependent column when a is not full column rank.
DenseMatrix qr_orthonormalize(const DenseMatrix& a, const DecompTolerances& tol = {});

/// Full SVD a = u * diag(s) * v^T with k = min(rows, cols), by one-sided
/// Jacobi rotations. Deterministic for fixed input; oracle-grade accuracy at
/// desk scale. Throws ConvergenceError (carrying the worst remaining column
/// coherence) if the sweep cap is hit.
SvdResult exact_svd(const DenseMatrix& a, const DecompTolerances& tol = {});

/// Randomized range finder: orthonormal Q (a.rows x rank) approximating the
/// dominant left singular subspace of a.
///
/// Procedure: Gaussian sketch Omega (a.cols x (rank+oversample)), then
/// Y = (A A^T)^power_iters A Omega with QR re-orthonormalization after every
/// application, finally truncate to the first `rank` columns.
///
/// Requires rank >= 1 and rank + oversample <= min(a.rows, a.cols). Throws
/// RankDeficiencyError if the sketch collapses, i.e. fewer than `rank`
/// independent directions survive orthonormalization; degenerate columns in
/// the oversampling tail are dropped silently.
DenseMatrix randomized_range(const DenseMatrix& a, std::size_t rank, std::size_t oversample,
                             std::size_t power_iters, RngState& rng,
                             const DecompTolerances& tol = {});

} // namespace lotus

#endif
