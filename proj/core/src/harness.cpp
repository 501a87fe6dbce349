#include "lotus/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <future>
#include <numeric>
#include <optional>
#include <sstream>

#include "lotus/decomp.hpp"
#include "lotus/errors.hpp"
#include "lotus/mlp.hpp"

namespace lotus {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

uint64_t micros_since(Clock::time_point t0) {
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count());
}

/// Trailing-window / cumulative convergence test over G_t = |g_t|^2.
class ToleranceMonitor {
public:
    ToleranceMonitor(const RunOptions& opts)
        : rule_(opts.tolerance_rule), eps_(opts.eps), window_len_(opts.tolerance_window) {}

    bool converged(double grad_norm) {
        const double g = grad_norm * grad_norm;
        if (rule_ == ToleranceRule::CumulativeSum) {
            cum_ += g;
            return cum_ <= eps_;
        }
        window_.push_back(g);
        if (window_.size() > window_len_) window_.pop_front();
        if (window_.size() < window_len_) return false;
        // Recompute instead of maintaining a running sum; the check stays
        // exact no matter how long the run is.
        const double sum = std::accumulate(window_.begin(), window_.end(), 0.0);
        return sum / static_cast<double>(window_len_) < eps_;
    }

private:
    ToleranceRule rule_;
    double eps_;
    uint64_t window_len_;
    std::deque<double> window_;
    double cum_ = 0.0;
};

std::string status_name(ExitStatus s) {
    switch (s) {
    case ExitStatus::Converged: return "converged";
    case ExitStatus::BudgetExhausted: return "budget_exhausted";
    case ExitStatus::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

} // namespace

RunResult run_experiment(const ProblemSpec& problem, const LotusHyperparams& hp,
                         const RunOptions& opts) {
    std::unique_ptr<MatrixProblem> prob = make_matrix_problem(problem);
    DenseMatrix w = prob->initial_weight();

    RunResult res;
    res.trace.records.reserve(std::min<uint64_t>(opts.max_steps, 1 << 20));
    ToleranceMonitor monitor(opts);
    std::optional<LayerOptState> state; // built on the first nonzero gradient

    const Clock::time_point run_start = Clock::now();
    for (uint64_t step = 1; step <= opts.max_steps; ++step) {
        const Clock::time_point step_start = Clock::now();
        StepSample sample = prob->next(w);
        if (!std::isfinite(sample.loss)) {
            throw NonFiniteError("run_experiment: loss became non-finite at step " +
                                 std::to_string(step));
        }

        TraceRecord rec;
        rec.step = step;
        rec.loss = sample.loss;

        if (!state && frobenius_norm(sample.grad) > 0.0) {
            state = init_layer(sample.grad, hp, step);
            res.projector_builds += 1;
        }
        if (state) {
            const StepDiagnostics diag = step_layer(*state, w, sample.grad, hp, step);
            rec.grad_norm = diag.grad_norm;
            rec.criterion_value = diag.decision.criterion_value;
            rec.switched = diag.switched;
            if (diag.switched) {
                res.switch_count += 1;
                res.projector_builds += 1;
            }
        }
        rec.cumulative_switches = res.switch_count;
        if (opts.record_timing) rec.step_wall_time_us = micros_since(step_start);
        res.trace.records.push_back(rec);

        res.steps_run = step;
        res.final_loss = rec.loss;
        res.final_grad_norm = rec.grad_norm;
        if (monitor.converged(rec.grad_norm)) {
            res.status = ExitStatus::Converged;
            break;
        }
    }
    res.total_wall_s = seconds_since(run_start);
    return res;
}

ComparisonReport compare_policies(const ProblemSpec& problem, const LotusHyperparams& hp,
                                  const std::vector<SwitchConfig>& policies,
                                  const RunOptions& opts, bool parallel) {
    if (policies.size() < 2) {
        throw ConfigError("compare_policies: need at least two policies to compare");
    }
    ComparisonReport report;
    report.runs.resize(policies.size());

    auto run_cell = [&](std::size_t i) {
        LotusHyperparams cell_hp = hp;
        cell_hp.switch_config = policies[i];
        PolicyRun& slot = report.runs[i];
        slot.config = policies[i];
        slot.label = policy_name(policies[i].kind);
        slot.result = run_experiment(problem, cell_hp, opts);
    };

    if (parallel && policies.size() > 1) {
        std::vector<std::future<void>> cells;
        cells.reserve(policies.size());
        for (std::size_t i = 0; i < policies.size(); ++i) {
            cells.push_back(std::async(std::launch::async, run_cell, i));
        }
        for (auto& c : cells) c.get(); // rethrows run failures here
    } else {
        for (std::size_t i = 0; i < policies.size(); ++i) run_cell(i);
    }

    // Duplicate policy kinds get an index suffix so labels stay unique.
    for (std::size_t i = 0; i < report.runs.size(); ++i) {
        std::size_t clash = 0;
        for (std::size_t j = 0; j < i; ++j) {
            if (report.runs[j].config.kind == report.runs[i].config.kind) ++clash;
        }
        if (clash > 0) report.runs[i].label += "#" + std::to_string(clash + 1);
    }
    return report;
}

namespace {

double switches_per_1k(const RunResult& r) {
    if (r.steps_run == 0) return 0.0;
    return 1000.0 * static_cast<double>(r.switch_count) / static_cast<double>(r.steps_run);
}

} // namespace

std::string comparison_to_csv(const ComparisonReport& report) {
    std::ostringstream os;
    os << "label,policy,gamma,eta,t_min,fixed_interval,status,steps_run,switch_count,"
          "switches_per_1k,projector_builds,final_loss,final_grad_norm,wall_s\n";
    for (const PolicyRun& run : report.runs) {
        os << run.label << ',' << policy_name(run.config.kind) << ','
           << format_double(run.config.gamma) << ',' << run.config.eta << ',' << run.config.t_min
           << ',' << run.config.fixed_interval << ',' << status_name(run.result.status) << ','
           << run.result.steps_run << ',' << run.result.switch_count << ','
           << format_double(switches_per_1k(run.result)) << ',' << run.result.projector_builds
           << ','
           << format_double(run.result.final_loss) << ','
           << format_double(run.result.final_grad_norm) << ','
           << format_double(run.result.total_wall_s) << "\n";
    }
    return os.str();
}

std::string comparison_to_json(const ComparisonReport& report) {
    std::ostringstream os;
    os << "[\n";
    for (std::size_t i = 0; i < report.runs.size(); ++i) {
        const PolicyRun& run = report.runs[i];
        os << "  {\"label\": \"" << run.label << "\", \"policy\": \""
           << policy_name(run.config.kind) << "\", \"gamma\": " << format_double(run.config.gamma)
           << ", \"eta\": " << run.config.eta << ", \"t_min\": " << run.config.t_min
           << ", \"fixed_interval\": " << run.config.fixed_interval << ", \"status\": \""
           << status_name(run.result.status) << "\", \"steps_run\": " << run.result.steps_run
           << ", \"switch_count\": " << run.result.switch_count
           << ", \"switches_per_1k\": " << format_double(switches_per_1k(run.result))
           << ", \"projector_builds\": " << run.result.projector_builds
           << ", \"final_loss\": " << format_double(run.result.final_loss)
           << ", \"final_grad_norm\": " << format_double(run.result.final_grad_norm)
           << ", \"wall_s\": " << format_double(run.result.total_wall_s) << "}"
           << (i + 1 < report.runs.size() ? ",\n" : "\n");
    }
    os << "]\n";
    return os.str();
}

MlpResult mlp_train(const ProblemSpec& problem, const LotusHyperparams& hp,
                    const MlpOptions& opts) {
    if (problem.mlp_widths.size() < 2) {
        throw ConfigError("mlp_train: problem.mlp_widths needs at least input and output");
    }
    if (problem.samples < 4) {
        throw ConfigError("mlp_train: needs at least 4 samples");
    }

    RngState root(problem.seed);
    RngState data_rng = root.split(0);
    RngState init_rng = root.split(1);
    RngState batch_rng = root.split(2);

    const Dataset full = teacher_dataset(problem.mlp_widths, problem.samples, data_rng);
    std::size_t holdout_n =
        static_cast<std::size_t>(std::floor(opts.holdout_fraction * static_cast<double>(problem.samples)));
    holdout_n = std::min(holdout_n, problem.samples - 1);
    const std::size_t train_n = problem.samples - holdout_n;

    // Deterministic split: train is the first train_n columns.
    const std::size_t in_dim = problem.mlp_widths.front();
    DenseMatrix train_x(in_dim, train_n), hold_x(in_dim, holdout_n);
    std::vector<std::size_t> train_y(train_n), hold_y(holdout_n);
    for (std::size_t i = 0; i < in_dim; ++i) {
        for (std::size_t j = 0; j < train_n; ++j) train_x(i, j) = full.x(i, j);
        for (std::size_t j = 0; j < holdout_n; ++j) hold_x(i, j) = full.x(i, train_n + j);
    }
    for (std::size_t j = 0; j < train_n; ++j) train_y[j] = full.labels[j];
    for (std::size_t j = 0; j < holdout_n; ++j) hold_y[j] = full.labels[train_n + j];

    Mlp net = Mlp::random(problem.mlp_widths, init_rng);
    const std::size_t depth = net.layer_count();

    // One low-rank optimizer state per weight matrix, each on its own RNG
    // stream. Biases are small, so they get plain dense Adam.
    std::vector<std::optional<LayerOptState>> states(depth);
    std::vector<LotusHyperparams> layer_hp(depth, hp);
    for (std::size_t l = 0; l < depth; ++l) {
        layer_hp[l].rng = hp.rng.split(l);
        // A rank above a layer's short dimension means "full rank here";
        // clamping keeps one global rank usable across unequal layers.
        const DenseMatrix& w = net.layer(l).weight;
        layer_hp[l].rank = std::min(hp.rank, std::min(w.rows(), w.cols()));
    }
    struct BiasAdam {
        std::vector<double> m1, m2;
        double b1p = 1.0, b2p = 1.0;
    };
    std::vector<BiasAdam> bias_state(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        bias_state[l].m1.assign(net.layer(l).bias.size(), 0.0);
        bias_state[l].m2.assign(net.layer(l).bias.size(), 0.0);
    }

    const std::size_t batch =
        opts.batch_size == 0 ? train_n : std::min(opts.batch_size, train_n);

    MlpResult res;
    res.trace.records.reserve(std::min<uint64_t>(opts.max_steps, 1 << 20));
    RunOptions tol_opts;
    tol_opts.eps = opts.eps;
    tol_opts.tolerance_window = opts.tolerance_window;
    ToleranceMonitor monitor(tol_opts);

    DenseMatrix bx(in_dim, batch);
    std::vector<std::size_t> by(batch);
    Mlp::Gradients grads;

    for (uint64_t step = 1; step <= opts.max_steps; ++step) {
        const Clock::time_point step_start = Clock::now();
        for (std::size_t j = 0; j < batch; ++j) {
            const std::size_t pick =
                batch == train_n ? j : static_cast<std::size_t>(batch_rng.next_u64() % train_n);
            for (std::size_t i = 0; i < in_dim; ++i) bx(i, j) = train_x(i, pick);
            by[j] = train_y[pick];
        }

        const double loss = net.loss_and_gradients(bx, by, grads);
        if (!std::isfinite(loss)) {
            throw NonFiniteError("mlp_train: loss became non-finite at step " +
                                 std::to_string(step));
        }
        if (loss > 1e6) {
            throw NonFiniteError("mlp_train: diverged (loss " + format_double(loss) +
                                 " > 1e6) at step " + std::to_string(step));
        }

        double grad_norm2 = 0.0;
        for (std::size_t l = 0; l < depth; ++l) {
            const double n = frobenius_norm(grads.weight[l]);
            grad_norm2 += n * n;
            for (double b : grads.bias[l]) grad_norm2 += b * b;
        }

        TraceRecord rec;
        rec.step = step;
        rec.loss = loss;
        rec.grad_norm = std::sqrt(grad_norm2);

        for (std::size_t l = 0; l < depth; ++l) {
            if (!states[l]) {
                if (frobenius_norm(grads.weight[l]) == 0.0) continue;
                states[l] = init_layer(grads.weight[l], layer_hp[l], step);
            }
            const StepDiagnostics diag =
                step_layer(*states[l], net.layer(l).weight, grads.weight[l], layer_hp[l], step);
            if (diag.switched) res.switch_count += 1;
            if (l == 0) {
                // The trace has one criterion column; it reports the first
                // weight matrix. Per-layer detail is not traced.
                rec.criterion_value = diag.decision.criterion_value;
            }
            rec.switched = rec.switched || diag.switched;
        }

        for (std::size_t l = 0; l < depth; ++l) {
            BiasAdam& ba = bias_state[l];
            std::vector<double>& b = net.layer(l).bias;
            ba.b1p *= hp.beta1;
            ba.b2p *= hp.beta2;
            const double c1 = 1.0 / (1.0 - ba.b1p);
            const double c2 = 1.0 / (1.0 - ba.b2p);
            for (std::size_t i = 0; i < b.size(); ++i) {
                const double g = grads.bias[l][i];
                ba.m1[i] = hp.beta1 * ba.m1[i] + (1.0 - hp.beta1) * g;
                ba.m2[i] = hp.beta2 * ba.m2[i] + (1.0 - hp.beta2) * g * g;
                b[i] -= hp.learning_rate * (ba.m1[i] * c1) / (std::sqrt(ba.m2[i] * c2) + hp.eps);
                if (!std::isfinite(b[i])) {
                    throw NonFiniteError("mlp_train: bias became non-finite at step " +
                                         std::to_string(step));
                }
            }
        }

        rec.cumulative_switches = res.switch_count;
        if (opts.record_timing) rec.step_wall_time_us = micros_since(step_start);
        res.trace.records.push_back(rec);
        res.steps_run = step;

        if (monitor.converged(rec.grad_norm)) {
            res.status = ExitStatus::Converged;
            break;
        }
    }

    res.final_train_loss = net.loss(train_x, train_y);
    res.holdout_accuracy = holdout_n == 0 ? 0.0 : net.accuracy(hold_x, hold_y);
    return res;
}

SvdBenchResult bench_svd_projector(std::size_t n, std::size_t rank, std::size_t reps,
                                   uint64_t seed, const RangeOptions& range) {
    if (rank == 0 || rank >= n) {
        throw DimensionError("bench_svd_projector: need 0 < rank < n");
    }
    if (reps == 0) reps = 1;

    // Test matrix with a planted dominant rank-`rank` part over a Gaussian
    // bulk, so the top subspace is well separated and recoverable.
    RngState rng(seed);
    const DenseMatrix planted =
        matmul(gaussian_matrix(n, rank, rng), gaussian_matrix(rank, n, rng));
    DenseMatrix a = gaussian_matrix(n, n, rng);
    const double amp = 4.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t i = 0; i < a.size(); ++i) {
        a.data()[i] = a.data()[i] + amp * planted.data()[i];
    }

    std::vector<double> exact_times, rand_times;
    SvdResult last_svd;
    DenseMatrix last_q;
    for (std::size_t r = 0; r < reps; ++r) {
        const Clock::time_point t0 = Clock::now();
        last_svd = exact_svd(a);
        exact_times.push_back(seconds_since(t0));
    }
    for (std::size_t r = 0; r < reps; ++r) {
        RngState sketch_rng = rng.split(r);
        const Clock::time_point t0 = Clock::now();
        last_q = randomized_range(a, rank, range.oversample, range.power_iters, sketch_rng);
        rand_times.push_back(seconds_since(t0));
    }

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };

    SvdBenchResult out;
    out.n = n;
    out.rank = rank;
    out.reps = reps;
    out.exact_median_s = median(exact_times);
    out.randomized_median_s = median(rand_times);
    out.speedup = out.randomized_median_s > 0.0 ? out.exact_median_s / out.randomized_median_s : 0.0;

    // |Q^T U_r|_F / sqrt(r): 1 when the randomized basis spans the exact
    // top-r left singular subspace.
    DenseMatrix u_r(n, rank);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < rank; ++j) u_r(i, j) = last_svd.u(i, j);
    }
    out.basis_overlap =
        frobenius_norm(matmul(transpose(last_q), u_r)) / std::sqrt(static_cast<double>(rank));
    return out;
}

std::string svd_bench_to_csv(const SvdBenchResult& r) {
    std::ostringstream os;
    os << "n,rank,reps,exact_median_s,randomized_median_s,speedup,basis_overlap\n";
    os << r.n << ',' << r.rank << ',' << r.reps << ',' << format_double(r.exact_median_s) << ','
       << format_double(r.randomized_median_s) << ',' << format_double(r.speedup) << ','
       << format_double(r.basis_overlap) << "\n";
    return os.str();
}

std::string svd_bench_to_json(const SvdBenchResult& r) {
    std::ostringstream os;
    os << "{\"n\": " << r.n << ", \"rank\": " << r.rank << ", \"reps\": " << r.reps
       << ", \"exact_median_s\": " << format_double(r.exact_median_s)
       << ", \"randomized_median_s\": " << format_double(r.randomized_median_s)
       << ", \"speedup\": " << format_double(r.speedup)
       << ", \"basis_overlap\": " << format_double(r.basis_overlap) << "}\n";
    return os.str();
}

} // namespace lotus
