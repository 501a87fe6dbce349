#include "lotus/policy.hpp"

#include <cmath>
#include <sstream>

#include "lotus/errors.hpp"

namespace lotus {

const char* policy_name(PolicyKind kind) {
    switch (kind) {
    case PolicyKind::AvgDisplacement: return "avg";
    case PolicyKind::PathEfficiency: return "rho";
    case PolicyKind::FixedInterval: return "fixed";
    }
    return "unknown";
}

std::vector<std::string> SwitchConfig::validate() const {
    std::vector<std::string> warnings;
    std::ostringstream os;
    const bool adaptive = kind != PolicyKind::FixedInterval;
    if (adaptive && (gamma <= 0.0 || gamma >= 1.0)) {
        os << "gamma = " << gamma << " is outside (0, 1); the threshold cannot fire sensibly";
        warnings.push_back(os.str());
        os.str("");
    } else if (adaptive && (gamma < 0.005 || gamma > 0.02)) {
        os << "gamma = " << gamma << " is outside the recommended [0.005, 0.02]";
        warnings.push_back(os.str());
        os.str("");
    }
    if (adaptive && (eta < 25 || eta > 100)) {
        os << "eta = " << eta << " is outside the recommended [25, 100]";
        warnings.push_back(os.str());
        os.str("");
    }
    if (adaptive && eta == 0) {
        warnings.push_back("eta = 0 disables the verification cadence");
    }
    if (kind == PolicyKind::FixedInterval && fixed_interval == 0) {
        warnings.push_back("fixed_interval = 0 switches on every step");
    }
    return warnings;
}

std::vector<double> normalize_unit(const DenseMatrix& g) {
    double norm2 = 0.0;
    for (double v : g.data()) norm2 += v * v;
    if (norm2 == 0.0) {
        throw ZeroGradientError("normalize_unit: zero gradient has no direction");
    }
    const double inv = 1.0 / std::sqrt(norm2);
    std::vector<double> out(g.data());
    for (double& v : out) v *= inv;
    return out;
}

DisplacementTracker::DisplacementTracker(const DenseMatrix& g_low_first, std::size_t window_len,
                                         std::uint64_t switch_step)
    : d_init_(normalize_unit(g_low_first)),
      d_cur_(d_init_),
      steps_(1),
      last_switch_step_(switch_step),
      window_len_(window_len),
      low_dim_(g_low_first.size()) {}

void DisplacementTracker::record(const DenseMatrix& g_low, const DenseMatrix& g_full) {
    if (steps_ == 0) {
        throw Error("DisplacementTracker::record: tracker not initialized");
    }
    if (g_low.size() != low_dim_) {
        std::ostringstream os;
        os << "DisplacementTracker::record: compressed gradient has " << g_low.size()
           << " entries, expected " << low_dim_;
        throw DimensionError(os.str());
    }
    d_cur_ = normalize_unit(g_low);
    ++steps_;

    if (window_len_ == 0) return;
    if (window_.empty() && full_rows_ == 0) {
        full_rows_ = g_full.rows();
        full_cols_ = g_full.cols();
        window_sum_.assign(full_rows_ * full_cols_, 0.0);
    }
    if (g_full.rows() != full_rows_ || g_full.cols() != full_cols_) {
        std::ostringstream os;
        os << "DisplacementTracker::record: full gradient is " << g_full.rows() << "x"
           << g_full.cols() << ", expected " << full_rows_ << "x" << full_cols_;
        throw DimensionError(os.str());
    }
    std::vector<double> unit = normalize_unit(g_full);
    for (std::size_t i = 0; i < unit.size(); ++i) window_sum_[i] += unit[i];
    window_.push_back(std::move(unit));
    if (window_.size() > window_len_) {
        const std::vector<double>& old = window_.front();
        for (std::size_t i = 0; i < old.size(); ++i) window_sum_[i] -= old[i];
        window_.pop_front();
    }
}

double DisplacementTracker::avg_unit_displacement() const {
    if (steps_ == 0) {
        throw Error("DisplacementTracker::avg_unit_displacement: tracker not initialized");
    }
    double norm2 = 0.0;
    for (std::size_t i = 0; i < d_cur_.size(); ++i) {
        const double d = d_cur_[i] - d_init_[i];
        norm2 += d * d;
    }
    return std::sqrt(norm2) / static_cast<double>(steps_);
}

DenseMatrix DisplacementTracker::window_sum_matrix() const {
    DenseMatrix sum(full_rows_, full_cols_);
    for (const auto& entry : window_) {
        for (std::size_t i = 0; i < entry.size(); ++i) sum.data()[i] += entry[i];
    }
    return sum;
}

PathEfficiencyResult path_efficiency(const DisplacementTracker& tracker,
                                     const Projector& projector) {
    // No observations yet: report perfect efficiency rather than divide by
    // zero, so an empty window never triggers a switch.
    if (tracker.window_size() == 0) return {1.0, false};
    const DenseMatrix sum = tracker.window_sum_matrix();
    const double denom = frobenius_norm(sum);
    if (denom < 1e-12) return {0.0, true};
    const double num = frobenius_norm(project_back(projector, project(projector, sum)));
    return {num / denom, false};
}

SwitchDecision should_switch(const DisplacementTracker& tracker, const SwitchConfig& config,
                             std::uint64_t global_step, const Projector& projector) {
    SwitchDecision d;
    d.kind = config.kind;
    if (!tracker.initialized()) return d;

    const std::uint64_t t = tracker.steps_in_subspace();
    const std::uint64_t since_switch = global_step - tracker.last_switch_step();

    if (config.kind == PolicyKind::FixedInterval) {
        d.criterion_value = static_cast<double>(since_switch);
        d.cadence_hit = true;
        d.t_min_ok = true;
        d.below_threshold = since_switch >= config.fixed_interval;
        d.trigger = d.below_threshold;
        return d;
    }

    d.cadence_hit = config.eta != 0 && t % config.eta == 0;
    d.t_min_ok = since_switch >= config.t_min;
    if (config.kind == PolicyKind::AvgDisplacement) {
        d.criterion_value = tracker.avg_unit_displacement();
    } else {
        const PathEfficiencyResult rho = path_efficiency(tracker, projector);
        d.criterion_value = rho.value;
        d.cancellation = rho.cancellation;
    }
    d.below_threshold = d.criterion_value < config.gamma;
    d.trigger = d.cadence_hit && d.below_threshold && d.t_min_ok;
    return d;
}

} // namespace lotus
