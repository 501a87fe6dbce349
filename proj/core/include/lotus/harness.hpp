#ifndef LOTUS_HARNESS_HPP
#define LOTUS_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lotus/optimizer.hpp"
#include "lotus/problems.hpp"
#include "lotus/trace.hpp"

namespace lotus {

enum class ExitStatus : int {
    Converged = 0,
    BudgetExhausted = 2,
    NumericalFailure = 3,
};

/// How the gradient tolerance eps is interpreted.
///  WindowedMean: mean of G_t = |g_t|^2 over the trailing window < eps,
///    checked once at least `window` steps have run. Robust to a noisy
///    gradient stream.
///  CumulativeSum: sum of G_t over all steps so far <= eps. Only ever
///    satisfied when the very first gradients are already tiny, so it is
///    kept behind an explicit option rather than used as the default.
enum class ToleranceRule { WindowedMean, CumulativeSum };

struct RunOptions {
    uint64_t max_steps = 1000;
    double eps = 1e-6;
    ToleranceRule tolerance_rule = ToleranceRule::WindowedMean;
    uint64_t tolerance_window = 50;
    // Wall-clock per step is genuinely nondeterministic, so timing is off by
    // default and the column is zero; traces from identical configs then
    // match byte for byte.
    bool record_timing = false;
};

struct RunResult {
    RunTrace trace;
    ExitStatus status = ExitStatus::BudgetExhausted;
    uint64_t steps_run = 0;
    uint64_t switch_count = 0;
    uint64_t projector_builds = 0;
    double final_loss = 0.0;
    double final_grad_norm = 0.0;
    double total_wall_s = 0.0;
};

/// Runs the optimizer on a single-matrix problem until the tolerance rule
/// fires or max_steps is exhausted. Throws (NonFiniteError and friends) on
/// numerical failure; callers map that to ExitStatus::NumericalFailure.
RunResult run_experiment(const ProblemSpec& problem, const LotusHyperparams& hp,
                         const RunOptions& opts);

struct PolicyRun {
    std::string label;
    SwitchConfig config;
    RunResult result;
};

struct ComparisonReport {
    std::vector<PolicyRun> runs;
};

/// Runs one cell per switching config on the same problem spec (identical
/// seed, hence identical gradient stream for matching trajectories) and
/// collects the results. parallel runs cells via std::async.
ComparisonReport compare_policies(const ProblemSpec& problem, const LotusHyperparams& hp,
                                  const std::vector<SwitchConfig>& policies,
                                  const RunOptions& opts, bool parallel = false);

std::string comparison_to_csv(const ComparisonReport& report);
std::string comparison_to_json(const ComparisonReport& report);

struct MlpOptions {
    uint64_t max_steps = 2000;
    std::size_t batch_size = 32;
    double holdout_fraction = 0.25;
    double eps = 1e-6;
    uint64_t tolerance_window = 50;
    bool record_timing = false;
};

struct MlpResult {
    RunTrace trace; // per step: mean loss over layers' shared batch
    ExitStatus status = ExitStatus::BudgetExhausted;
    uint64_t steps_run = 0;
    uint64_t switch_count = 0; // over all weight matrices
    double final_train_loss = 0.0;
    double holdout_accuracy = 0.0;
};

/// Trains an MLP on a teacher-labeled synthetic set. Weight matrices get the
/// low-rank treatment (one optimizer state each); bias vectors use plain
/// dense Adam since they are already small.
MlpResult mlp_train(const ProblemSpec& problem, const LotusHyperparams& hp,
                    const MlpOptions& opts);

struct SvdBenchResult {
    std::size_t n = 0;
    std::size_t rank = 0;
    std::size_t reps = 0;
    double exact_median_s = 0.0;
    double randomized_median_s = 0.0;
    double speedup = 0.0; // exact / randomized
    double basis_overlap = 0.0; // |Q_r^T U_r|_F / sqrt(r), 1 = same subspace
};

/// Times exact-SVD and randomized projector construction on an n x n
/// matrix with a planted decaying spectrum; medians over reps.
SvdBenchResult bench_svd_projector(std::size_t n, std::size_t rank, std::size_t reps,
                                   uint64_t seed, const RangeOptions& range);

std::string svd_bench_to_csv(const SvdBenchResult& r);
std::string svd_bench_to_json(const SvdBenchResult& r);

} // namespace lotus

#endif
