#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "lotus/decomp.hpp"
#include "lotus/errors.hpp"
#include "lotus/matrix.hpp"
#include "lotus/projector.hpp"
#include "lotus/rng.hpp"

using namespace lotus;

namespace {

double orthonormality_defect(const DenseMatrix& q) {
    return max_abs_diff(matmul(transpose(q), q), DenseMatrix::identity(q.cols()));
}

// One classical Jacobi rotation zeroing a(p,q) of a symmetric matrix.
void jacobi_rotate(DenseMatrix& a, std::size_t p, std::size_t q) {
    if (a(p, q) == 0.0) return;
    const double tau = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
    const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    const std::size_t n = a.rows();
    for (std::size_t k = 0; k < n; ++k) {
        const double akp = a(k, p), akq = a(k, q);
        a(k, p) = c * akp - s * akq;
        a(k, q) = s * akp + c * akq;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double apk = a(p, k), aqk = a(q, k);
        a(p, k) = c * apk - s * aqk;
        a(q, k) = s * apk + c * aqk;
    }
}

// Eigenvalues of a small symmetric matrix, descending. Independent oracle
// for singular values via the Gram matrix.
std::vector<double> eig_sym_desc(DenseMatrix a) {
    const std::size_t n = a.rows();
    const double scale = std::max(max_abs(a), 1.0);
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
        }
        if (off <= 1e-15 * scale) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) jacobi_rotate(a, p, q);
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

DenseMatrix reconstruct(const SvdResult& svd) {
    DenseMatrix us = svd.u;
    for (std::size_t i = 0; i < us.rows(); ++i) {
        for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= svd.singular_values[j];
    }
    return matmul(us, transpose(svd.v));
}

// u * diag(s) * v^T from orthonormal factors drawn out of seeded Gaussians.
DenseMatrix planted_spectrum(std::size_t m, std::size_t n, const std::vector<double>& s,
                             RngState& rng) {
    const std::size_t k = s.size();
    DenseMatrix u = qr_orthonormalize(gaussian_matrix(m, k, rng));
    DenseMatrix v = qr_orthonormalize(gaussian_matrix(n, k, rng));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < k; ++j) u(i, j) *= s[j];
    }
    return matmul(u, transpose(v));
}

} // namespace

TEST_CASE("qr: orthonormal input is reproduced up to column sign") {
    RngState rng(101);
    const DenseMatrix q0 = qr_orthonormalize(gaussian_matrix(5, 3, rng));
    const DenseMatrix q1 = qr_orthonormalize(q0);
    for (std::size_t j = 0; j < 3; ++j) {
        double plus = 0.0, minus = 0.0;
        for (std::size_t i = 0; i < 5; ++i) {
            plus += (q1(i, j) - q0(i, j)) * (q1(i, j) - q0(i, j));
            minus += (q1(i, j) + q0(i, j)) * (q1(i, j) + q0(i, j));
        }
        CHECK(std::min(plus, minus) <= 1e-24);
    }
}

TEST_CASE("qr: hand-built 3x2 gives orthonormal columns spanning the input") {
    const DenseMatrix a = DenseMatrix::from_rows({{3, 1}, {4, 1}, {0, 1}});
    const DenseMatrix q = qr_orthonormalize(a);
    REQUIRE(q.rows() == 3);
    REQUIRE(q.cols() == 2);
    CHECK(orthonormality_defect(q) <= 1e-10);
    const DenseMatrix proj = matmul(q, matmul(transpose(q), a));
    CHECK(max_abs_diff(proj, a) <= 1e-10);
}

TEST_CASE("qr: duplicated columns raise a rank error naming the column") {
    const DenseMatrix a = DenseMatrix::from_rows({{1, 1}, {2, 2}, {3, 3}});
    try {
        qr_orthonormalize(a);
        FAIL("expected RankDeficiencyError");
    } catch (const RankDeficiencyError& e) {
        CHECK(e.column() == 1);
    }
}

TEST_CASE("qr: more columns than rows is a dimension error") {
    CHECK_THROWS_AS(qr_orthonormalize(DenseMatrix(2, 4)), DimensionError);
}

TEST_CASE("qr: random tall matrix, orthonormality and span to tight tolerance") {
    RngState rng(103);
    const DenseMatrix a = gaussian_matrix(40, 12, rng);
    const DenseMatrix q = qr_orthonormalize(a);
    CHECK(orthonormality_defect(q) <= 1e-12);
    const DenseMatrix resid = subtract(matmul(q, matmul(transpose(q), a)), a);
    CHECK(frobenius_norm(resid) / frobenius_norm(a) <= 1e-12);
}

TEST_CASE("exact_svd: diagonal matrix") {
    const DenseMatrix a = DenseMatrix::from_rows({{3, 0, 0}, {0, 2, 0}, {0, 0, 1}});
    const SvdResult svd = exact_svd(a);
    REQUIRE(svd.singular_values.size() == 3);
    CHECK(svd.singular_values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(svd.singular_values[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(svd.singular_values[2] == doctest::Approx(1.0).epsilon(1e-12));
    // u and v must both be the identity up to per-column sign.
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            const double expect = i == j ? 1.0 : 0.0;
            CHECK(std::abs(std::abs(svd.u(i, j)) - expect) <= 1e-10);
            CHECK(std::abs(std::abs(svd.v(i, j)) - expect) <= 1e-10);
            CHECK(svd.u(i, j) == doctest::Approx(svd.v(i, j)).epsilon(1e-10)); // same sign flip
        }
    }
}

TEST_CASE("exact_svd: rank-1 outer product has exactly one nonzero singular value") {
    const DenseMatrix x = DenseMatrix::from_rows({{1}, {2}, {-2}, {4}, {0}});
    const DenseMatrix y = DenseMatrix::from_rows({{2}, {-1}, {2}});
    const DenseMatrix a = matmul(x, transpose(y));
    const SvdResult svd = exact_svd(a);
    REQUIRE(svd.singular_values.size() == 3);
    int above = 0;
    for (double s : svd.singular_values) {
        if (s > 1e-10) ++above;
    }
    CHECK(above == 1);
    CHECK(svd.singular_values[0] ==
          doctest::Approx(frobenius_norm(x) * frobenius_norm(y)).epsilon(1e-10));
}

TEST_CASE("exact_svd: random 6x4 reconstructs and matches a Gram eigenvalue oracle") {
    RngState rng(107);
    const DenseMatrix a = gaussian_matrix(6, 4, rng);
    const SvdResult svd = exact_svd(a);

    CHECK(frobenius_norm(subtract(reconstruct(svd), a)) / frobenius_norm(a) <= 1e-8);
    CHECK(orthonormality_defect(svd.u) <= 1e-10);
    CHECK(orthonormality_defect(svd.v) <= 1e-10);
    for (std::size_t i = 1; i < svd.singular_values.size(); ++i) {
        CHECK(svd.singular_values[i - 1] >= svd.singular_values[i]);
    }

    const std::vector<double> ev = eig_sym_desc(matmul(transpose(a), a));
    for (std::size_t i = 0; i < 4; ++i) {
        const double oracle = std::sqrt(std::max(ev[i], 0.0));
        CHECK(svd.singular_values[i] == doctest::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("exact_svd: wide input goes through the transpose path consistently") {
    RngState rng(109);
    const DenseMatrix a = gaussian_matrix(4, 7, rng);
    const SvdResult svd = exact_svd(a);
    REQUIRE(svd.u.rows() == 4);
    REQUIRE(svd.v.rows() == 7);
    REQUIRE(svd.singular_values.size() == 4);
    CHECK(frobenius_norm(subtract(reconstruct(svd), a)) / frobenius_norm(a) <= 1e-8);

    const SvdResult svt = exact_svd(transpose(a));
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(svt.singular_values[i] ==
              doctest::Approx(svd.singular_values[i]).epsilon(1e-10));
    }
}

TEST_CASE("exact_svd: zero matrix yields zero spectrum with orthonormal factors") {
    const SvdResult svd = exact_svd(DenseMatrix(5, 3));
    for (double s : svd.singular_values) CHECK(s == 0.0);
    CHECK(orthonormality_defect(svd.u) <= 1e-12);
    CHECK(orthonormality_defect(svd.v) <= 1e-12);
}

TEST_CASE("randomized_range: recovers an exactly low-rank matrix with a gap") {
    RngState rng(211);
    const std::vector<double> s = {10, 9, 8, 7, 6};
    DenseMatrix a = planted_spectrum(32, 48, s, rng);
    // A tail at the rank tolerance floor; the dominant subspace is still
    // unambiguous.
    DenseMatrix tail = gaussian_matrix(32, 48, rng);
    a = add(a, scale(tail, 1e-12));

    RngState sketch(212);
    const DenseMatrix q = randomized_range(a, 5, 5, 2, sketch);
    REQUIRE(q.cols() == 5);
    CHECK(orthonormality_defect(q) <= 1e-10);
    const DenseMatrix resid = subtract(matmul(q, matmul(transpose(q), a)), a);
    CHECK(frobenius_norm(resid) / frobenius_norm(a) <= 1e-6);
}

TEST_CASE("randomized_range: identity at full rank without oversampling") {
    RngState rng(213);
    const DenseMatrix q = randomized_range(DenseMatrix::identity(12), 12, 0, 2, rng);
    const DenseMatrix p = matmul(q, transpose(q));
    CHECK(max_abs_diff(p, DenseMatrix::identity(12)) <= 1e-8);
}

TEST_CASE("randomized_range: captures at least 99% of the exact subspace energy") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        RngState rng(seed);
        std::vector<double> s(64);
        for (std::size_t i = 0; i < 64; ++i) s[i] = std::pow(0.9, static_cast<double>(i));
        const DenseMatrix a = planted_spectrum(64, 64, s, rng);

        const SvdResult svd = exact_svd(a);
        DenseMatrix ur(64, 16);
        for (std::size_t i = 0; i < 64; ++i) {
            for (std::size_t j = 0; j < 16; ++j) ur(i, j) = svd.u(i, j);
        }
        const double exact_energy = frobenius_norm(matmul(transpose(ur), a));

        RngState sketch(seed + 1000);
        const DenseMatrix q = randomized_range(a, 16, 5, 2, sketch);
        const double got_energy = frobenius_norm(matmul(transpose(q), a));
        CHECK(got_energy >= 0.99 * exact_energy);
        CHECK(got_energy <= exact_energy * (1.0 + 1e-10));
    }
}

TEST_CASE("randomized_range: power iterations do not hurt captured energy on average") {
    double e0 = 0.0, e2 = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        RngState rng(seed * 7);
        std::vector<double> s(32);
        for (std::size_t i = 0; i < 32; ++i) s[i] = std::pow(0.8, static_cast<double>(i));
        const DenseMatrix a = planted_spectrum(48, 32, s, rng);
        RngState r0(seed), r2(seed);
        e0 += frobenius_norm(matmul(transpose(randomized_range(a, 6, 3, 0, r0)), a));
        e2 += frobenius_norm(matmul(transpose(randomized_range(a, 6, 3, 2, r2)), a));
    }
    CHECK(e2 >= e0 - 1e-9);
}

TEST_CASE("randomized_range: contract violations") {
    RngState rng(215);
    const DenseMatrix a = gaussian_matrix(8, 6, rng);
    CHECK_THROWS_AS(randomized_range(a, 0, 2, 1, rng), DimensionError);
    CHECK_THROWS_AS(randomized_range(a, 5, 2, 1, rng), DimensionError); // 5+2 > 6
    // An exactly rank-2 matrix cannot supply five independent directions.
    const DenseMatrix low = planted_spectrum(8, 6, {3, 2}, rng);
    CHECK_THROWS_AS(randomized_range(low, 5, 0, 1, rng), RankDeficiencyError);
}

TEST_CASE("compute_projector: wide layer projects the short side") {
    RngState rng(301);
    const DenseMatrix g = gaussian_matrix(256, 1024, rng);
    RngState prng(302);
    const Projector p = compute_projector(g, 128, prng);
    CHECK(p.side == Side::Left);
    REQUIRE(p.basis.rows() == 256);
    REQUIRE(p.basis.cols() == 128);
    CHECK(compressed_shape(p, 256, 1024) == std::pair<std::size_t, std::size_t>{128, 1024});
    CHECK(project(p, g).rows() == 128);
    CHECK(project(p, g).cols() == 1024);
}

TEST_CASE("compute_projector: tall layer projects the column side") {
    RngState rng(303);
    const DenseMatrix g = gaussian_matrix(14, 9, rng);
    RngState prng(304);
    const Projector p = compute_projector(g, 3, prng);
    CHECK(p.side == Side::Right);
    REQUIRE(p.basis.rows() == 9);
    REQUIRE(p.basis.cols() == 3);
    CHECK(compressed_shape(p, 14, 9) == std::pair<std::size_t, std::size_t>{14, 3});

    // Lifted projection equals g Q Q^T computed directly.
    const DenseMatrix lifted = project_back(p, project(p, g));
    const DenseMatrix direct = matmul(g, matmul(p.basis, transpose(p.basis)));
    CHECK(max_abs_diff(lifted, direct) <= 1e-10);
}

TEST_CASE("compute_projector: rank-1 gradient yields a basis through it") {
    const DenseMatrix x =
        DenseMatrix::from_rows({{1}, {-2}, {3}, {0.5}, {2}, {-1}, {4}, {0.25}, {1}});
    RngState rng(305);
    DenseMatrix y(14, 1);
    for (std::size_t i = 0; i < 14; ++i) y(i, 0) = rng.next_gaussian();
    const DenseMatrix g = matmul(x, transpose(y)); // 9 x 14, left side
    RngState prng(306);
    const Projector p = compute_projector(g, 1, prng);
    REQUIRE(p.basis.cols() == 1);
    const DenseMatrix px = matmul(p.basis, matmul(transpose(p.basis), x));
    CHECK(frobenius_norm(subtract(px, x)) <= 1e-8 * frobenius_norm(x));
}

TEST_CASE("compute_projector: captures the dominant energy of a decaying spectrum") {
    RngState rng(307);
    std::vector<double> s(32);
    for (std::size_t i = 0; i < 32; ++i) s[i] = std::pow(0.7, static_cast<double>(i));
    const DenseMatrix g = planted_spectrum(32, 48, s, rng);

    const SvdResult svd = exact_svd(g);
    DenseMatrix ur(32, 8);
    for (std::size_t i = 0; i < 32; ++i) {
        for (std::size_t j = 0; j < 8; ++j) ur(i, j) = svd.u(i, j);
    }
    const double exact_energy = frobenius_norm(matmul(transpose(ur), g));

    RngState prng(308);
    const Projector p = compute_projector(g, 8, prng);
    const double got = frobenius_norm(project(p, g));
    CHECK(got >= 0.99 * exact_energy);
    CHECK(got <= exact_energy * (1.0 + 1e-10));
}

TEST_CASE("compute_projector: full rank short-circuits to the identity basis") {
    RngState rng(309);
    const DenseMatrix g = gaussian_matrix(6, 10, rng);
    RngState prng(310);
    const Projector p = compute_projector(g, 6, prng);
    CHECK(max_abs_diff(p.basis, DenseMatrix::identity(6)) == 0.0);
    CHECK(max_abs_diff(project(p, g), g) == 0.0);
}

TEST_CASE("compute_projector: contract violations") {
    RngState rng(311);
    const DenseMatrix g = gaussian_matrix(5, 8, rng);
    CHECK_THROWS_AS(compute_projector(g, 0, rng), DimensionError);
    CHECK_THROWS_AS(compute_projector(g, 6, rng), DimensionError);
    CHECK_THROWS_AS(compute_projector(DenseMatrix(5, 8), 2, rng), ZeroGradientError);
    DenseMatrix bad(2, 2);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(compute_projector(bad, 1, rng), NonFiniteError);
}

TEST_CASE("project: identity basis passes gradients through") {
    Projector p;
    p.basis = DenseMatrix::identity(4);
    p.side = Side::Left;
    p.rank = 4;
    RngState rng(313);
    const DenseMatrix g = gaussian_matrix(4, 6, rng);
    CHECK(max_abs_diff(project(p, g), g) == 0.0);
}

TEST_CASE("project: annihilates the orthogonal complement") {
    Projector p;
    p.basis = DenseMatrix::from_rows({{1, 0}, {0, 1}, {0, 0}, {0, 0}});
    p.side = Side::Left;
    p.rank = 2;
    // Rows live entirely in span(e3, e4).
    const DenseMatrix g = DenseMatrix::from_rows(
        {{0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}, {1, 2, 3, 4, 5}, {-1, 1, -1, 1, -1}});
    CHECK(max_abs(project(p, g)) <= 1e-10);
}

TEST_CASE("projection round trip: contraction, idempotence, self-adjointness") {
    RngState seedg(315);
    const DenseMatrix g0 = gaussian_matrix(8, 12, seedg);
    RngState prng(316);
    const Projector p = compute_projector(g0, 3, prng);

    RngState rng(317);
    for (int trial = 0; trial < 50; ++trial) {
        const DenseMatrix g = gaussian_matrix(8, 12, rng);
        const DenseMatrix pg = project_back(p, project(p, g));
        CHECK(frobenius_norm(pg) <= frobenius_norm(g) * (1.0 + 1e-12));

        // Idempotence: applying P twice changes nothing.
        const DenseMatrix ppg = project_back(p, project(p, pg));
        CHECK(max_abs_diff(ppg, pg) <= 1e-10);

        // Direct oracle: P g = Q Q^T g.
        const DenseMatrix direct = matmul(matmul(p.basis, transpose(p.basis)), g);
        CHECK(max_abs_diff(pg, direct) <= 1e-10);
    }

    // Self-adjointness: <Pg, h> = <g, Ph>.
    const DenseMatrix g = gaussian_matrix(8, 12, rng);
    const DenseMatrix h = gaussian_matrix(8, 12, rng);
    const double lhs = dot(project_back(p, project(p, g)), h);
    const double rhs = dot(g, project_back(p, project(p, h)));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("project_back: zero input and in-span fixed point") {
    RngState seedg(319);
    const DenseMatrix g0 = gaussian_matrix(10, 7, seedg); // tall, right side
    RngState prng(320);
    const Projector p = compute_projector(g0, 4, prng);

    CHECK(max_abs(project_back(p, DenseMatrix(10, 4))) == 0.0);

    // A gradient already inside the subspace survives the round trip.
    RngState rng(321);
    const DenseMatrix c = gaussian_matrix(10, 4, rng);
    const DenseMatrix g = project_back(p, c);
    const DenseMatrix back = project_back(p, project(p, g));
    CHECK(frobenius_norm(subtract(back, g)) <= 1e-8 * frobenius_norm(g));
}

TEST_CASE("compute_projector: deterministic for a fixed stream") {
    RngState rng(323);
    const DenseMatrix g = gaussian_matrix(12, 20, rng);
    RngState r1(5), r2(5);
    const Projector p1 = compute_projector(g, 4, r1);
    const Projector p2 = compute_projector(g, 4, r2);
    CHECK(max_abs_diff(p1.basis, p2.basis) == 0.0);
}
