#include "lotus/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

#include "lotus/errors.hpp"

namespace lotus {

namespace {

double row_dot(const DenseMatrix& w, std::size_t p, std::size_t q) {
    const double* a = w.row_ptr(p);
    const double* b = w.row_ptr(q);
    double acc = 0.0;
    for (std::size_t i = 0; i < w.cols(); ++i) acc += a[i] * b[i];
    return acc;
}

/// Orthonormalizes the rows of w in place with two modified Gram-Schmidt
/// passes per row (the second pass mops up the cancellation the first one
/// leaves behind). Rows whose residual norm is <= thresh are dropped and the
/// survivors packed to the front. Returns the kept count; *first_drop gets
/// the original index of the first dropped row.
std::size_t mgs_rows(DenseMatrix& w, double thresh, std::size_t* first_drop) {
    const std::size_t dim = w.cols();
    std::size_t kept = 0;
    if (first_drop) *first_drop = std::numeric_limits<std::size_t>::max();
    for (std::size_t j = 0; j < w.rows(); ++j) {
        if (j != kept) {
            std::memcpy(w.row_ptr(kept), w.row_ptr(j), dim * sizeof(double));
        }
        double* vj = w.row_ptr(kept);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < kept; ++i) {
                const double* vi = w.row_ptr(i);
                double proj = 0.0;
                for (std::size_t d = 0; d < dim; ++d) proj += vi[d] * vj[d];
                for (std::size_t d = 0; d < dim; ++d) vj[d] -= proj * vi[d];
            }
        }
        double nrm = 0.0;
        for (std::size_t d = 0; d < dim; ++d) nrm += vj[d] * vj[d];
        nrm = std::sqrt(nrm);
        if (nrm <= thresh) {
            if (first_drop && *first_drop == std::numeric_limits<std::size_t>::max()) {
                *first_drop = j;
            }
            continue;
        }
        for (std::size_t d = 0; d < dim; ++d) vj[d] /= nrm;
        ++kept;
    }
    return kept;
}

/// Column-orthonormalization with tail dropping for the range finder: keeps
/// every numerically independent column, errors only when fewer than
/// min_rank survive.
DenseMatrix orthonormal_cols_tolerant(const DenseMatrix& y, std::size_t min_rank,
                                      const DecompTolerances& tol) {
    DenseMatrix yt = transpose(y);
    const double thresh = tol.rank_rel_tol * max_abs(y);
    const std::size_t kept = mgs_rows(yt, thresh, nullptr);
    if (kept < min_rank) {
        std::ostringstream os;
        os << "randomized_range: sketch collapsed, only " << kept
           << " independent directions for rank " << min_rank;
        throw RankDeficiencyError(os.str(), kept);
    }
    DenseMatrix q(y.rows(), kept);
    for (std::size_t j = 0; j < kept; ++j) {
        const double* row = yt.row_ptr(j);
        for (std::size_t i = 0; i < y.rows(); ++i) q(i, j) = row[i];
    }
    return q;
}

} // namespace

DenseMatrix qr_orthonormalize(const DenseMatrix& a, const DecompTolerances& tol) {
    if (a.rows() < a.cols()) {
        std::ostringstream os;
        os << "qr_orthonormalize: " << a.rows() << "x" << a.cols() << " has more columns than rows";
        throw DimensionError(os.str());
    }
    DenseMatrix at = transpose(a);
    const double thresh = tol.rank_rel_tol * max_abs(a);
    std::size_t first_drop = 0;
    const std::size_t kept = mgs_rows(at, thresh, &first_drop);
    if (kept < a.cols()) {
        std::ostringstream os;
        os << "qr_orthonormalize: column " << first_drop
           << " is linearly dependent on the preceding columns";
        throw RankDeficiencyError(os.str(), first_drop);
    }
    return transpose(at);
}

SvdResult exact_svd(const DenseMatrix& a, const DecompTolerances& tol) {
    if (a.rows() == 0 || a.cols() == 0) {
        throw DimensionError("exact_svd: empty matrix");
    }
    if (a.rows() < a.cols()) {
        // Work on the transpose so the rotated vectors are the long ones.
        SvdResult t = exact_svd(transpose(a), tol);
        return SvdResult{std::move(t.v), std::move(t.singular_values), std::move(t.u)};
    }

    const std::size_t m = a.rows();
    const std::size_t n = a.cols();

    // Row j of wt is column j of a; rotations then touch contiguous memory.
    DenseMatrix wt = transpose(a);
    DenseMatrix vt = DenseMatrix::identity(n);
    std::vector<double> sq(n);

    bool converged = false;
    double worst = 0.0;
    for (int sweep = 0; sweep < tol.max_jacobi_sweeps; ++sweep) {
        // Refresh the cached squared norms each sweep; the O(1) rotation
        // updates below drift over tens of thousands of rotations.
        for (std::size_t j = 0; j < n; ++j) sq[j] = row_dot(wt, j, j);
        std::size_t rotations = 0;
        worst = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double d = row_dot(wt, p, q);
                const double scale2 = sq[p] * sq[q];
                if (scale2 <= 0.0) continue;
                const double coherence = std::fabs(d) / std::sqrt(scale2);
                worst = std::max(worst, coherence);
                if (coherence <= tol.jacobi_tol) continue;

                // Rotation annihilating <w_p, w_q>.
                const double zeta = (sq[q] - sq[p]) / (2.0 * d);
                const double t =
                    (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;

                double* wp = wt.row_ptr(p);
                double* wq = wt.row_ptr(q);
                for (std::size_t i = 0; i < m; ++i) {
                    const double x = wp[i];
                    const double y = wq[i];
                    wp[i] = c * x - s * y;
                    wq[i] = s * x + c * y;
                }
                double* vp = vt.row_ptr(p);
                double* vq = vt.row_ptr(q);
                for (std::size_t i = 0; i < n; ++i) {
                    const double x = vp[i];
                    const double y = vq[i];
                    vp[i] = c * x - s * y;
                    vq[i] = s * x + c * y;
                }
                sq[p] -= t * d;
                sq[q] += t * d;
                ++rotations;
            }
        }
        if (rotations == 0) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream os;
        os << "exact_svd: no convergence in " << tol.max_jacobi_sweeps << " sweeps";
        throw ConvergenceError(os.str(), worst);
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(row_dot(wt, j, j));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    const double smax = sigma[order[0]];
    const double tiny = tol.rank_rel_tol * smax;

    SvdResult out;
    out.u = DenseMatrix(m, n);
    out.v = DenseMatrix(n, n);
    out.singular_values.assign(n, 0.0);
    std::vector<std::size_t> null_cols;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        for (std::size_t i = 0; i < n; ++i) out.v(i, k) = vt(j, i);
        if (sigma[j] > tiny) {
            out.singular_values[k] = sigma[j];
            const double* wj = wt.row_ptr(j);
            for (std::size_t i = 0; i < m; ++i) out.u(i, k) = wj[i] / sigma[j];
        } else {
            // Numerically zero: report sigma = 0 and fill the left vector
            // with an orthonormal completion below.
            null_cols.push_back(k);
        }
    }

    for (std::size_t k : null_cols) {
        // Pick the canonical vector with the largest residual against the
        // columns filled so far, then Gram-Schmidt it in.
        std::size_t best = 0;
        double best_score = -1.0;
        for (std::size_t b = 0; b < m; ++b) {
            double proj2 = 0.0;
            for (std::size_t c = 0; c < n; ++c) proj2 += out.u(b, c) * out.u(b, c);
            const double score = 1.0 - proj2;
            if (score > best_score) {
                best_score = score;
                best = b;
            }
        }
        std::vector<double> cand(m, 0.0);
        cand[best] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t c = 0; c < n; ++c) {
                double proj = 0.0;
                for (std::size_t i = 0; i < m; ++i) proj += out.u(i, c) * cand[i];
                for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * out.u(i, c);
            }
        }
        double nrm = 0.0;
        for (double v : cand) nrm += v * v;
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < m; ++i) out.u(i, k) = cand[i] / nrm;
    }
    return out;
}

DenseMatrix randomized_range(const DenseMatrix& a, std::size_t rank, std::size_t oversample,
                             std::size_t power_iters, RngState& rng,
                             const DecompTolerances& tol) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (rank == 0) throw DimensionError("randomized_range: rank must be >= 1");
    if (rank + oversample > std::min(m, n)) {
        std::ostringstream os;
        os << "randomized_range: rank " << rank << " + oversample " << oversample
           << " exceeds min(" << m << ", " << n << ")";
        throw DimensionError(os.str());
    }

    const std::size_t ell = rank + oversample;
    DenseMatrix omega = gaussian_matrix(n, ell, rng);
    DenseMatrix y = matmul(a, omega);
    DenseMatrix q = orthonormal_cols_tolerant(y, rank, tol);

    if (power_iters > 0) {
        const DenseMatrix at = transpose(a);
        for (std::size_t it = 0; it < power_iters; ++it) {
            DenseMatrix z = orthonormal_cols_tolerant(matmul(at, q), rank, tol);
            q = orthonormal_cols_tolerant(matmul(a, z), rank, tol);
        }
    }

    if (q.cols() == rank) return q;
    DenseMatrix out(m, rank);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < rank; ++j) out(i, j) = q(i, j);
    }
    return out;
}

} // namespace lotus
