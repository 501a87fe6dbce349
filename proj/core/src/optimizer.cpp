#include "lotus/optimizer.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "lotus/errors.hpp"

namespace lotus {

namespace {

std::size_t tracker_window(const SwitchConfig& config) {
    // Only the path-efficiency criterion reads the gradient window; the
    // other policies skip the bookkeeping (and its memory).
    return config.kind == PolicyKind::PathEfficiency ? config.effective_window() : 0;
}

} // namespace

LayerOptState init_layer(const DenseMatrix& first_grad, const LotusHyperparams& hp,
                         std::uint64_t global_step) {
    first_grad.require_finite("init_layer");
    LayerOptState state;
    state.rng = hp.rng;
    state.projector =
        compute_projector(first_grad, hp.rank, state.rng, hp.range, global_step);
    const DenseMatrix g_low = project(state.projector, first_grad);
    // The initial subspace is dated to the step before the first gradient,
    // so "steps since last switch" counts optimizer steps from the start;
    // an interval-f policy then fires at steps f, 2f, ... exactly.
    const std::uint64_t epoch = global_step == 0 ? 0 : global_step - 1;
    state.tracker = DisplacementTracker(g_low, tracker_window(hp.switch_config), epoch);
    state.m1 = DenseMatrix(g_low.rows(), g_low.cols());
    state.m2 = DenseMatrix(g_low.rows(), g_low.cols());
    return state;
}

StepDiagnostics step_layer(LayerOptState& state, DenseMatrix& weight, const DenseMatrix& g_full,
                           const LotusHyperparams& hp, std::uint64_t global_step) {
    g_full.require_finite("step_layer");
    if (weight.rows() != g_full.rows() || weight.cols() != g_full.cols()) {
        std::ostringstream os;
        os << "step_layer: weight " << weight.rows() << "x" << weight.cols() << " vs gradient "
           << g_full.rows() << "x" << g_full.cols();
        throw DimensionError(os.str());
    }

    StepDiagnostics diag;
    diag.grad_norm = frobenius_norm(g_full);

    DenseMatrix g_low = project(state.projector, g_full);

    // A zero gradient has no direction, so the tracker does not advance; the
    // moment updates below still run (they decay toward zero on their own).
    // A gradient that seeded the tracker at this same global step (layer
    // init) is already its d_init and is not recorded twice.
    const bool zero_grad = diag.grad_norm == 0.0;
    const bool seeded_now = state.tracker.steps_in_subspace() == 1 &&
                            state.projector.created_at_step == global_step;
    if (!zero_grad && !seeded_now) state.tracker.record(g_low, g_full);

    DenseMatrix update_low;
    if (hp.update_rule == UpdateRule::Adam) {
        state.adam_step += 1;
        state.beta1_pow *= hp.beta1;
        state.beta2_pow *= hp.beta2;
        double* m1 = state.m1.data().data();
        double* m2 = state.m2.data().data();
        const double* g = g_low.data().data();
        update_low = DenseMatrix(g_low.rows(), g_low.cols());
        double* upd = update_low.data().data();
        const double c1 = 1.0 / (1.0 - state.beta1_pow);
        const double c2 = 1.0 / (1.0 - state.beta2_pow);
        for (std::size_t i = 0; i < g_low.size(); ++i) {
            m1[i] = hp.beta1 * m1[i] + (1.0 - hp.beta1) * g[i];
            m2[i] = hp.beta2 * m2[i] + (1.0 - hp.beta2) * g[i] * g[i];
            upd[i] = (m1[i] * c1) / (std::sqrt(m2[i] * c2) + hp.eps);
        }
    } else {
        update_low = g_low;
    }

    const DenseMatrix update = project_back(state.projector, update_low);
    const double step_size = hp.learning_rate * hp.scale;
    for (std::size_t i = 0; i < weight.size(); ++i) {
        weight.data()[i] -= step_size * update.data()[i];
    }
    if (!weight.all_finite()) {
        throw NonFiniteError("step_layer: weight became non-finite after update");
    }

    diag.decision = should_switch(state.tracker, hp.switch_config, global_step, state.projector);
    if (diag.decision.trigger) {
        if (zero_grad) {
            diag.switch_skipped_zero_grad = true;
        } else {
            Projector next =
                compute_projector(g_full, hp.rank, state.rng, hp.range, global_step);
            if (hp.moment_carry == MomentCarry::Project) {
                // Rotate the first moment through full space into the new
                // basis. The second moment tracks squared coordinates and
                // has no linear transform, so it restarts.
                const DenseMatrix overlap = state.projector.side == Side::Left
                                                ? matmul(transpose(next.basis), state.projector.basis)
                                                : matmul(transpose(state.projector.basis), next.basis);
                state.m1 = state.projector.side == Side::Left ? matmul(overlap, state.m1)
                                                              : matmul(state.m1, overlap);
                state.m2 = DenseMatrix(state.m2.rows(), state.m2.cols());
            } else {
                state.m1 = DenseMatrix(state.m1.rows(), state.m1.cols());
                state.m2 = DenseMatrix(state.m2.rows(), state.m2.cols());
            }
            state.adam_step = 0;
            state.beta1_pow = 1.0;
            state.beta2_pow = 1.0;
            state.projector = std::move(next);
            const DenseMatrix g_low_new = project(state.projector, g_full);
            state.tracker =
                DisplacementTracker(g_low_new, tracker_window(hp.switch_config), global_step);
            state.switch_count += 1;
            diag.switched = true;
        }
    }
    return diag;
}

AccountingReport memory_accounting(std::size_t m, std::size_t n, std::size_t r) {
    AccountingReport rep;
    const std::size_t mn = m * n;
    const std::size_t short_dim = std::min(m, n);
    const std::size_t long_dim = std::max(m, n);
    rep.full_adam_gradient = mn;
    rep.full_adam_moments = 2 * mn;
    rep.full_adam_total = 3 * mn;
    rep.low_rank_gradient = mn;
    rep.low_rank_projector = r * short_dim;
    rep.low_rank_moments = 2 * r * long_dim;
    rep.low_rank_total = rep.low_rank_gradient + rep.low_rank_projector + rep.low_rank_moments;
    rep.reduction = 1.0 - static_cast<double>(rep.low_rank_total) /
                              static_cast<double>(rep.full_adam_total);
    return rep;
}

} // namespace lotus
