#ifndef LOTUS_OPTIMIZER_HPP
#define LOTUS_OPTIMIZER_HPP

#include <cstddef>
#include <cstdint>

#include "lotus/matrix.hpp"
#include "lotus/policy.hpp"
#include "lotus/projector.hpp"
#include "lotus/rng.hpp"

namespace lotus {

/// What happens to the Adam moments when the subspace switches.
enum class MomentCarry {
    /// Zero both moments and restart bias correction (default).
    Reset,
    /// Rotate the first moment into the new basis (m1' = Q_new^T Q_old m1
    /// for Left projectors, mirrored for Right); the second moment has no
    /// valid transform across bases and is zeroed, bias correction restarts.
    Project,
};

enum class UpdateRule {
    Adam,
    /// w -= lr * scale * P g, no moments. Used by the descent-bound checks.
    PlainProjected,
};

struct LotusHyperparams {
    double learning_rate = 0.01;
    std::size_t rank = 4;
    double scale = 0.25; // factor on the lifted update
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    UpdateRule update_rule = UpdateRule::Adam;
    MomentCarry moment_carry = MomentCarry::Reset;
    SwitchConfig switch_config;
    RangeOptions range;
    RngState rng{0};
};

/// Per-layer optimizer state: projector, switching tracker, compressed Adam
/// moments.
struct LayerOptState {
    Projector projector;
    DisplacementTracker tracker;
    DenseMatrix m1; // first moment, compressed shape
    DenseMatrix m2; // second moment, compressed shape, entries >= 0
    std::uint64_t adam_step = 0;
    double beta1_pow = 1.0; // beta1^adam_step, kept as a running product
    double beta2_pow = 1.0;
    std::uint64_t switch_count = 0;
    RngState rng{0}; // consumed by projector rebuilds
};

struct StepDiagnostics {
    SwitchDecision decision;
    bool switched = false;
    /// A switch fired but the current gradient was zero, so the projector
    /// rebuild was skipped.
    bool switch_skipped_zero_grad = false;
    double grad_norm = 0.0;
    /// Filled by the harness (the optimizer does not know the loss).
    double loss = 0.0;
};

/// Build the initial state from the first observed gradient. T starts at 1
/// and the moments at zero; switch_count is 0.
LayerOptState init_layer(const DenseMatrix& first_grad, const LotusHyperparams& hp,
                         std::uint64_t global_step = 1);

/// One optimizer step, in order: compress the gradient, record it in the
/// tracker, Adam (or plain descent) on the compressed tensors, lift and
/// apply the update, then evaluate the switching policy and rebuild the
/// projector if it fires.
///
/// Throws NonFiniteError before any state is touched if g_full has NaN/Inf.
StepDiagnostics step_layer(LayerOptState& state, DenseMatrix& weight, const DenseMatrix& g_full,
                           const LotusHyperparams& hp, std::uint64_t global_step);

/// Scalar-count memory model for one m x n layer.
struct AccountingReport {
    std::size_t full_adam_gradient = 0;  // m*n
    std::size_t full_adam_moments = 0;   // 2*m*n
    std::size_t full_adam_total = 0;     // 3*m*n
    std::size_t low_rank_gradient = 0;   // m*n
    std::size_t low_rank_projector = 0;  // r*min(m,n)
    std::size_t low_rank_moments = 0;    // 2*r*max(m,n)
    std::size_t low_rank_total = 0;
    /// 1 - low_rank_total/full_adam_total; negative values are reported
    /// as-is (no clamping).
    double reduction = 0.0;
};

AccountingReport memory_accounting(std::size_t m, std::size_t n, std::size_t r);

} // namespace lotus

#endif
