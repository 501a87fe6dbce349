#include "lotus/problems.hpp"

#include <cmath>
#include <sstream>

#include "lotus/decomp.hpp"
#include "lotus/errors.hpp"

namespace lotus {

const char* problem_name(ProblemKind kind) noexcept {
    switch (kind) {
    case ProblemKind::DriftingStream: return "drift";
    case ProblemKind::Quadratic: return "quadratic";
    case ProblemKind::Logistic: return "logistic";
    case ProblemKind::Mlp: return "mlp";
    }
    return "unknown";
}

ProblemKind problem_from_name(const std::string& name) {
    if (name == "drift") return ProblemKind::DriftingStream;
    if (name == "quadratic") return ProblemKind::Quadratic;
    if (name == "logistic") return ProblemKind::Logistic;
    if (name == "mlp") return ProblemKind::Mlp;
    throw ConfigError("unknown problem '" + name + "' (expected drift, quadratic, logistic or mlp)");
}

std::unique_ptr<MatrixProblem> make_matrix_problem(const ProblemSpec& spec) {
    switch (spec.kind) {
    case ProblemKind::DriftingStream: return std::make_unique<DriftingStream>(spec);
    case ProblemKind::Quadratic: return std::make_unique<QuadraticProblem>(spec);
    case ProblemKind::Logistic: return std::make_unique<LogisticProblem>(spec);
    case ProblemKind::Mlp:
        throw ConfigError("the mlp problem trains multiple layers; use mlp_train");
    }
    throw ConfigError("unhandled problem kind");
}

DriftingStream::DriftingStream(const ProblemSpec& spec)
    : rows_(spec.rows),
      cols_(spec.cols),
      drift_rate_(spec.drift_rate),
      noise_std_(spec.noise_std),
      target_(spec.rows, spec.cols),
      rng_(spec.seed) {
    if (spec.subspace_dim == 0 || spec.subspace_dim > rows_) {
        std::ostringstream os;
        os << "DriftingStream: subspace_dim " << spec.subspace_dim << " outside [1, " << rows_
           << "]";
        throw DimensionError(os.str());
    }
    basis_ = qr_orthonormalize(gaussian_matrix(rows_, spec.subspace_dim, rng_));
    // The target opens well away from the zero initial weight but inside the
    // planted subspace, so runs begin with a genuine descent phase instead of
    // already sitting on the optimum.
    DenseMatrix head = gaussian_matrix(spec.subspace_dim, cols_, rng_);
    for (double& v : head.data()) v *= 100.0;
    target_ = matmul(basis_, head);
}

DenseMatrix DriftingStream::initial_weight() const {
    // Tracking starts on the target; the first increment creates the error.
    return DenseMatrix(rows_, cols_);
}

DenseMatrix DriftingStream::basis_at(uint64_t t) const {
    const double phi = static_cast<double>(t) * drift_rate_;
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    DenseMatrix out = basis_;
    // Planar rotation across coordinate pairs (0,1), (2,3), ...; an odd
    // trailing coordinate stays fixed. Exactly orthogonal up to roundoff,
    // so the rotated basis stays orthonormal.
    for (std::size_t i = 0; i + 1 < rows_; i += 2) {
        for (std::size_t j = 0; j < basis_.cols(); ++j) {
            const double a = basis_(i, j);
            const double b = basis_(i + 1, j);
            out(i, j) = c * a - s * b;
            out(i + 1, j) = s * a + c * b;
        }
    }
    return out;
}

StepSample DriftingStream::next(const DenseMatrix& w) {
    if (w.rows() != rows_ || w.cols() != cols_) {
        throw DimensionError("DriftingStream::next: weight shape mismatch");
    }
    ++t_;
    const DenseMatrix coeff = gaussian_matrix(basis_.cols(), cols_, rng_);
    DenseMatrix delta = matmul(basis_at(t_), coeff);
    if (noise_std_ > 0.0) {
        const DenseMatrix noise = gaussian_matrix(rows_, cols_, rng_);
        for (std::size_t i = 0; i < delta.size(); ++i) {
            delta.data()[i] += noise_std_ * noise.data()[i];
        }
    }
    target_ = add(target_, delta);

    StepSample out;
    out.grad = subtract(w, target_);
    const double n = frobenius_norm(out.grad);
    out.loss = 0.5 * n * n;
    return out;
}

QuadraticProblem::QuadraticProblem(const ProblemSpec& spec) {
    if (spec.lambda_min > spec.lambda_max || spec.lambda_min <= 0.0) {
        std::ostringstream os;
        os << "QuadraticProblem: curvature range [" << spec.lambda_min << ", " << spec.lambda_max
           << "] must be positive and ordered";
        throw ConfigError(os.str());
    }
    RngState rng(spec.seed);
    lambda_ = DenseMatrix(spec.rows, spec.cols);
    if (spec.lambda_min == spec.lambda_max) {
        for (double& v : lambda_.data()) v = spec.lambda_min;
    } else {
        const double span = spec.lambda_max - spec.lambda_min;
        for (double& v : lambda_.data()) v = spec.lambda_min + span * rng.next_uniform();
    }
    w0_ = gaussian_matrix(spec.rows, spec.cols, rng);
}

DenseMatrix QuadraticProblem::initial_weight() const { return w0_; }

StepSample QuadraticProblem::next(const DenseMatrix& w) {
    StepSample out;
    out.grad = hadamard(lambda_, w);
    out.loss = 0.5 * dot(w, out.grad);
    return out;
}

LogisticProblem::LogisticProblem(const ProblemSpec& spec) : rows_(spec.rows), cols_(spec.cols) {
    if (cols_ < 2) {
        throw ConfigError("LogisticProblem: needs at least two classes (cols)");
    }
    if (spec.samples == 0) {
        throw ConfigError("LogisticProblem: needs at least one sample");
    }
    RngState rng(spec.seed);
    x_ = gaussian_matrix(rows_, spec.samples, rng);
    const DenseMatrix teacher = gaussian_matrix(rows_, cols_, rng);
    const DenseMatrix logits = matmul(transpose(teacher), x_);
    labels_.resize(spec.samples);
    for (std::size_t j = 0; j < spec.samples; ++j) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < logits.rows(); ++i) {
            if (logits(i, j) > logits(arg, j)) arg = i;
        }
        labels_[j] = arg;
    }
}

DenseMatrix LogisticProblem::initial_weight() const { return DenseMatrix(rows_, cols_); }

StepSample LogisticProblem::next(const DenseMatrix& w) {
    if (w.rows() != rows_ || w.cols() != cols_) {
        throw DimensionError("LogisticProblem::next: weight shape mismatch");
    }
    DenseMatrix p = matmul(transpose(w), x_); // classes x samples
    const std::size_t samples = x_.cols();
    double loss = 0.0;
    for (std::size_t j = 0; j < samples; ++j) {
        double mx = p(0, j);
        for (std::size_t i = 1; i < cols_; ++i) mx = std::max(mx, p(i, j));
        double denom = 0.0;
        for (std::size_t i = 0; i < cols_; ++i) denom += std::exp(p(i, j) - mx);
        const double log_denom = std::log(denom);
        loss -= p(labels_[j], j) - mx - log_denom;
        for (std::size_t i = 0; i < cols_; ++i) p(i, j) = std::exp(p(i, j) - mx - log_denom);
    }
    const double inv = 1.0 / static_cast<double>(samples);
    loss *= inv;
    for (std::size_t j = 0; j < samples; ++j) p(labels_[j], j) -= 1.0;
    for (double& v : p.data()) v *= inv;

    StepSample out;
    out.loss = loss;
    out.grad = matmul(x_, transpose(p));
    return out;
}

} // namespace lotus
