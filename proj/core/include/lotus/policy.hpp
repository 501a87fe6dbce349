#ifndef LOTUS_POLICY_HPP
#define LOTUS_POLICY_HPP

#include <cstddef>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "lotus/matrix.hpp"
#include "lotus/projector.hpp"

namespace lotus {

enum class PolicyKind { AvgDisplacement, PathEfficiency, FixedInterval };

const char* policy_name(PolicyKind kind);

/// When to switch subspaces.
///
/// AvgDisplacement is the default trigger: every eta-th recorded step, switch
/// if ||d_cur - d_init|| / T drops below gamma. PathEfficiency switches on
/// the windowed path-efficiency ratio rho instead (same cadence, same
/// threshold semantics). Both honor the t_min refractory period.
/// FixedInterval ignores the gradient stream and switches every
/// fixed_interval steps.
struct SwitchConfig {
    PolicyKind kind = PolicyKind::AvgDisplacement;
    double gamma = 0.01;               // threshold, in (0,1)
    std::uint64_t eta = 50;            // verifying gap, steps
    std::uint64_t t_min = 100;         // min steps between switches
    std::uint64_t fixed_interval = 500; // FixedInterval only
    std::uint64_t window_len = 0;      // rho window; 0 means "use eta"

    std::uint64_t effective_window() const { return window_len == 0 ? eta : window_len; }

    /// Out-of-recommended-range settings produce warnings, never errors.
    std::vector<std::string> validate() const;
};

/// Running state behind the switching criteria for one layer.
///
/// Tracks the unit direction of the compressed gradient (d_init at the last
/// switch, d_cur now, T recordings since) and a sliding window of the last k
/// full-gradient unit directions for the path-efficiency ratio.
class DisplacementTracker {
public:
    DisplacementTracker() = default;

    /// Start a fresh subspace period: d_init from the first compressed
    /// gradient after the switch, T = 1, window cleared.
    DisplacementTracker(const DenseMatrix& g_low_first, std::size_t window_len,
                        std::uint64_t switch_step);

    /// One observed step: d_cur from g_low, T += 1, unit g_full pushed into
    /// the window (evicting the oldest entry once full).
    void record(const DenseMatrix& g_low, const DenseMatrix& g_full);

    /// ||d_cur - d_init||_2 / T. In [0, 2/T].
    double avg_unit_displacement() const;

    std::uint64_t steps_in_subspace() const noexcept { return steps_; } // T
    std::uint64_t last_switch_step() const noexcept { return last_switch_step_; }
    std::size_t window_size() const noexcept { return window_.size(); }
    std::size_t window_len() const noexcept { return window_len_; }
    bool initialized() const noexcept { return steps_ > 0; }

    const std::vector<double>& d_init() const noexcept { return d_init_; }
    const std::vector<double>& d_cur() const noexcept { return d_cur_; }

    /// Running sum of the windowed unit gradients (flattened full shape).
    const std::vector<double>& window_grad_sum() const noexcept { return window_sum_; }

    /// Sum of the stored window entries recomputed from scratch, as a full
    /// gradient matrix. Used by path_efficiency.
    DenseMatrix window_sum_matrix() const;

    std::size_t full_rows() const noexcept { return full_rows_; }
    std::size_t full_cols() const noexcept { return full_cols_; }

private:
    std::vector<double> d_init_;
    std::vector<double> d_cur_;
    std::uint64_t steps_ = 0; // T
    std::uint64_t last_switch_step_ = 0;
    std::size_t window_len_ = 0;
    std::deque<std::vector<double>> window_; // unit full gradients
    std::vector<double> window_sum_;
    std::size_t low_dim_ = 0;
    std::size_t full_rows_ = 0;
    std::size_t full_cols_ = 0;
};

/// Flatten g and divide by its Euclidean norm. Throws ZeroGradientError on
/// zero input.
std::vector<double> normalize_unit(const DenseMatrix& g);

struct PathEfficiencyResult {
    double value = 0.0;
    /// Set when the windowed gradients cancel almost completely
    /// (denominator below 1e-12); value is then defined as 0.
    bool cancellation = false;
};

/// rho = ||P sum(unit gradients)|| / ||sum(unit gradients)|| with
/// P = project_back . project. In [0, 1] up to roundoff.
PathEfficiencyResult path_efficiency(const DisplacementTracker& tracker, const Projector& projector);

/// Everything should_switch looked at, for traces.
struct SwitchDecision {
    bool trigger = false;
    PolicyKind kind = PolicyKind::AvgDisplacement;
    /// ||d_bar|| for AvgDisplacement, rho for PathEfficiency, global steps
    /// since the last switch for FixedInterval.
    double criterion_value = 0.0;
    bool cadence_hit = false;     // T mod eta == 0 (always true for FixedInterval)
    bool below_threshold = false; // criterion < gamma (resp. interval reached)
    bool t_min_ok = false;
    bool cancellation = false;    // path-efficiency denominator collapsed
};

/// Pure decision function; global_step is the 1-based optimizer step count.
SwitchDecision should_switch(const DisplacementTracker& tracker, const SwitchConfig& config,
                             std::uint64_t global_step, const Projector& projector);

} // namespace lotus

#endif
