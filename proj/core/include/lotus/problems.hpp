#ifndef LOTUS_PROBLEMS_HPP
#define LOTUS_PROBLEMS_HPP

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lotus/matrix.hpp"
#include "lotus/rng.hpp"

namespace lotus {

enum class ProblemKind {
    DriftingStream,
    Quadratic,
    Logistic,
    Mlp,
};

const char* problem_name(ProblemKind kind) noexcept;
ProblemKind problem_from_name(const std::string& name);

struct ProblemSpec {
    ProblemKind kind = ProblemKind::DriftingStream;

    std::size_t rows = 64;
    std::size_t cols = 64;

    // DriftingStream: dimension of the planted subspace, rotation rate per
    // step and the std dev of the isotropic noise added to each increment.
    std::size_t subspace_dim = 8;
    double drift_rate = 0.0;
    double noise_std = 0.0;

    // Quadratic: per-entry curvatures drawn uniformly from
    // [lambda_min, lambda_max]; the defaults make every curvature 1.
    double lambda_min = 1.0;
    double lambda_max = 1.0;

    // Logistic / Mlp: dataset size. Logistic uses rows features and cols
    // classes; Mlp uses the explicit width list.
    std::size_t samples = 256;
    std::vector<std::size_t> mlp_widths;

    uint64_t seed = 1;
};

struct StepSample {
    double loss = 0.0;
    DenseMatrix grad;
};

/// A single-matrix objective the optimizer is run against. next() returns
/// the loss and gradient at w for the current step and may advance internal
/// state (the drifting stream moves its target once per call).
class MatrixProblem {
public:
    virtual ~MatrixProblem() = default;
    virtual DenseMatrix initial_weight() const = 0;
    virtual StepSample next(const DenseMatrix& w) = 0;
};

/// Builds the problem for spec.kind; throws ConfigError for ProblemKind::Mlp,
/// which does not reduce to a single weight matrix (see mlp_train).
std::unique_ptr<MatrixProblem> make_matrix_problem(const ProblemSpec& spec);

/// Tracking objective L(W) = 0.5 * |W - Phi_t|_F^2 whose target accrues
/// increments delta_t = R(t * drift) * (B c_t) + noise, with B a fixed
/// orthonormal rows x subspace_dim basis, c_t fresh Gaussian coefficients
/// and R a planar rotation across paired coordinates. Gradients therefore
/// live near a slowly rotating low-dimensional subspace, which is the
/// regime the switching policies are meant to detect.
class DriftingStream final : public MatrixProblem {
public:
    explicit DriftingStream(const ProblemSpec& spec);

    DenseMatrix initial_weight() const override;
    StepSample next(const DenseMatrix& w) override;

    /// Basis after t steps of rotation; exposed for tests.
    DenseMatrix basis_at(uint64_t t) const;

private:
    std::size_t rows_;
    std::size_t cols_;
    double drift_rate_;
    double noise_std_;
    DenseMatrix basis_;  // rows x subspace_dim, orthonormal columns
    DenseMatrix target_; // Phi_t
    uint64_t t_ = 0;
    RngState rng_;
};

/// Separable quadratic L(w) = 0.5 * sum_ij lambda_ij w_ij^2.
class QuadraticProblem final : public MatrixProblem {
public:
    explicit QuadraticProblem(const ProblemSpec& spec);

    DenseMatrix initial_weight() const override;
    StepSample next(const DenseMatrix& w) override;

    const DenseMatrix& curvature() const noexcept { return lambda_; }

private:
    DenseMatrix lambda_;
    DenseMatrix w0_;
};

/// Multinomial logistic regression on a fixed synthetic set whose labels
/// come from a random teacher weight; full-batch loss and gradient.
class LogisticProblem final : public MatrixProblem {
public:
    explicit LogisticProblem(const ProblemSpec& spec);

    DenseMatrix initial_weight() const override;
    StepSample next(const DenseMatrix& w) override;

private:
    DenseMatrix x_;  // features x samples
    std::vector<std::size_t> labels_;
    std::size_t rows_;
    std::size_t cols_;
};

} // namespace lotus

#endif
