// Command-line harness for the lotus library: single experiments, policy
// comparisons, MLP training runs, memory accounting and the SVD timing
// benchmark. All experiment knobs flow through the shared key-value config
// layer so that files and flags cannot drift apart.
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lotus/config.hpp"
#include "lotus/errors.hpp"
#include "lotus/harness.hpp"
#include "lotus/optimizer.hpp"
#include "lotus/policy.hpp"
#include "lotus/problems.hpp"
#include "lotus/rng.hpp"
#include "lotus/trace.hpp"

namespace {

using namespace lotus;

constexpr int kExitConverged = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBudget = 2;
constexpr int kExitNumerical = 3;

int status_code(ExitStatus s) { return static_cast<int>(s); }

/// One string slot per supported flag; only flags the user actually passed
/// are applied, in a fixed order, after the config file.
struct FlagOverrides {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> pairs; // key, raw value
    std::vector<std::string> sets;                          // raw key=value
    std::string seed;                                       // shared seed

    void add(const std::string& key, const std::string& value) {
        pairs.emplace_back(key, value);
    }
};

/// Registers the flag surface shared by run, compare and mlp. Each flag
/// funnels into apply_key so type errors read the same everywhere.
void add_experiment_flags(CLI::App* sub, FlagOverrides& flags) {
    sub->add_option("--config", flags.config_path,
                    "Key-value config file applied before any flags");
    auto bind = [sub, &flags](const std::string& flag, const std::string& key,
                              const std::string& help) {
        sub->add_option_function<std::string>(
               flag, [&flags, key](const std::string& v) { flags.add(key, v); }, help)
            ->type_name("VALUE");
    };
    bind("--problem", "problem.kind", "Problem: drift, quadratic, logistic or mlp");
    bind("--policy", "policy.kind", "Switching policy: avg, rho or fixed");
    bind("--gamma", "policy.gamma", "Switching threshold");
    bind("--eta", "policy.eta", "Criterion evaluation cadence in steps");
    bind("--t-min", "policy.t_min", "Minimum steps between switches");
    bind("--fixed-interval", "policy.fixed_interval", "Interval for the fixed policy");
    bind("--rank", "optimizer.rank", "Projection rank");
    bind("--lr", "optimizer.learning_rate", "Learning rate");
    bind("--scale", "optimizer.scale", "Low-rank update scale");
    bind("--max-steps", "run.max_steps", "Step budget");
    bind("--eps", "run.eps", "Convergence tolerance on the windowed mean of |g|^2");
    bind("--out", "out", "Output path ('-' for stdout)");
    bind("--format", "format", "Trace format: csv or json");
    sub->add_option("--seed", flags.seed,
                    "Master seed: drives the problem stream and the sketch stream");
    sub->add_option("--set", flags.sets,
                    "Extra key=value override (repeatable); see config-keys");
}

/// Defaults, then the config file, then flags, then the master seed.
HarnessConfig resolve_config(const FlagOverrides& flags) {
    HarnessConfig cfg;
    if (!flags.config_path.empty()) {
        load_config_file(cfg, flags.config_path);
    }
    for (const auto& [key, value] : flags.pairs) {
        apply_key(cfg, key, value);
    }
    for (const std::string& kv : flags.sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        }
        apply_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!flags.seed.empty()) {
        apply_key(cfg, "problem.seed", flags.seed);
        // The sketch stream forks off the master seed on its own branch;
        // branches 0..2 are reserved for the MLP data/init/batch streams.
        cfg.hp.rng = RngState(cfg.problem.seed).split(3);
    }
    return cfg;
}

void print_policy_warnings(const SwitchConfig& config) {
    for (const std::string& w : config.validate()) {
        std::cerr << "warning: " << w << "\n";
    }
}

void emit(const std::string& body, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << body;
        std::cout.flush();
        return;
    }
    std::ofstream file(out, std::ios::binary);
    if (!file) {
        throw IoError("cannot open '" + out + "' for writing");
    }
    file << body;
    if (!file) {
        throw IoError("short write to '" + out + "'");
    }
}

int cmd_run(const FlagOverrides& flags) {
    HarnessConfig cfg = resolve_config(flags);
    if (cfg.problem.kind == ProblemKind::Mlp) {
        throw ConfigError("problem.kind mlp trains multiple layers; use the mlp subcommand");
    }
    print_policy_warnings(cfg.hp.switch_config);
    const RunResult res = run_experiment(cfg.problem, cfg.hp, cfg.run);
    write_trace(res.trace, cfg.out.empty() ? "-" : cfg.out, cfg.format);
    std::cerr << "run: status=" << (res.status == ExitStatus::Converged ? "converged"
                                                                        : "budget_exhausted")
              << " steps=" << res.steps_run << " switches=" << res.switch_count
              << " final_loss=" << format_double(res.final_loss) << "\n";
    return status_code(res.status);
}

int cmd_compare(const FlagOverrides& flags, const std::vector<std::string>& policy_names,
                bool parallel) {
    HarnessConfig cfg = resolve_config(flags);
    if (cfg.problem.kind == ProblemKind::Mlp) {
        throw ConfigError("problem.kind mlp trains multiple layers; use the mlp subcommand");
    }
    std::vector<SwitchConfig> policies;
    for (const std::string& name : policy_names) {
        HarnessConfig probe = cfg; // reuse the policy parser for its error text
        apply_key(probe, "policy.kind", name);
        policies.push_back(probe.hp.switch_config);
    }
    for (const SwitchConfig& p : policies) print_policy_warnings(p);
    const ComparisonReport report = compare_policies(cfg.problem, cfg.hp, policies,
                                                     cfg.run, parallel);
    emit(cfg.format == TraceFormat::Csv ? comparison_to_csv(report)
                                        : comparison_to_json(report),
         cfg.out);
    int code = kExitConverged;
    for (const PolicyRun& run : report.runs) {
        code = std::max(code, status_code(run.result.status));
    }
    return code;
}

int cmd_mlp(const FlagOverrides& flags) {
    HarnessConfig cfg = resolve_config(flags);
    if (cfg.problem.mlp_widths.empty()) {
        // a usable small default so `lotus mlp` runs out of the box
        cfg.problem.mlp_widths = {8, 16, 4};
    }
    // The run.* knobs steer both runner types; MlpOptions only adds the
    // batching and holdout keys on top.
    cfg.mlp.max_steps = cfg.run.max_steps;
    cfg.mlp.eps = cfg.run.eps;
    cfg.mlp.tolerance_window = cfg.run.tolerance_window;
    cfg.mlp.record_timing = cfg.run.record_timing;
    print_policy_warnings(cfg.hp.switch_config);
    const MlpResult res = mlp_train(cfg.problem, cfg.hp, cfg.mlp);
    write_trace(res.trace, cfg.out.empty() ? "-" : cfg.out, cfg.format);
    std::cerr << "mlp: status=" << (res.status == ExitStatus::Converged ? "converged"
                                                                        : "budget_exhausted")
              << " steps=" << res.steps_run << " switches=" << res.switch_count
              << " final_train_loss=" << format_double(res.final_train_loss)
              << " holdout_accuracy=" << format_double(res.holdout_accuracy) << "\n";
    return status_code(res.status);
}

int cmd_account(std::size_t rows, std::size_t cols, const std::vector<std::size_t>& ranks,
                const std::string& out, TraceFormat format) {
    if (ranks.empty()) {
        throw ConfigError("account: pass at least one --rank");
    }
    std::ostringstream os;
    if (format == TraceFormat::Csv) {
        os << "m,n,rank,full_adam_total,low_rank_gradient,low_rank_projector,"
              "low_rank_moments,low_rank_total,reduction\n";
        for (std::size_t r : ranks) {
            const AccountingReport rep = memory_accounting(rows, cols, r);
            os << rows << ',' << cols << ',' << r << ',' << rep.full_adam_total << ','
               << rep.low_rank_gradient << ',' << rep.low_rank_projector << ','
               << rep.low_rank_moments << ',' << rep.low_rank_total << ','
               << format_double(rep.reduction) << "\n";
        }
    } else {
        os << "[\n";
        for (std::size_t i = 0; i < ranks.size(); ++i) {
            const AccountingReport rep = memory_accounting(rows, cols, ranks[i]);
            os << "  {\"m\": " << rows << ", \"n\": " << cols << ", \"rank\": " << ranks[i]
               << ", \"full_adam_total\": " << rep.full_adam_total
               << ", \"low_rank_gradient\": " << rep.low_rank_gradient
               << ", \"low_rank_projector\": " << rep.low_rank_projector
               << ", \"low_rank_moments\": " << rep.low_rank_moments
               << ", \"low_rank_total\": " << rep.low_rank_total
               << ", \"reduction\": " << format_double(rep.reduction) << "}"
               << (i + 1 < ranks.size() ? ",\n" : "\n");
        }
        os << "]\n";
    }
    emit(os.str(), out);
    return kExitConverged;
}

int cmd_bench_svd(std::size_t n, std::size_t rank, std::size_t reps, std::uint64_t seed,
                  std::size_t oversample, std::size_t power_iters, const std::string& out,
                  TraceFormat format) {
    RangeOptions range;
    range.oversample = oversample;
    range.power_iters = power_iters;
    const SvdBenchResult res = bench_svd_projector(n, rank, reps, seed, range);
    emit(format == TraceFormat::Csv ? svd_bench_to_csv(res) : svd_bench_to_json(res), out);
    return kExitConverged;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lotus: low-rank gradient optimization experiments"};
    app.require_subcommand(1);

    FlagOverrides run_flags;
    CLI::App* run = app.add_subcommand("run", "Run a single experiment and emit its trace");
    add_experiment_flags(run, run_flags);

    FlagOverrides cmp_flags;
    std::vector<std::string> cmp_policies = {"avg", "rho", "fixed"};
    bool cmp_parallel = false;
    CLI::App* cmp = app.add_subcommand("compare", "Run one experiment per policy and tabulate");
    add_experiment_flags(cmp, cmp_flags);
    cmp->add_option("--policies", cmp_policies,
                    "Policies to race (avg, rho, fixed; repeatable)")
        ->delimiter(',');
    cmp->add_flag("--parallel", cmp_parallel, "Run policy cells on separate threads");

    FlagOverrides mlp_flags;
    CLI::App* mlp = app.add_subcommand("mlp", "Train a small MLP with per-layer projection");
    add_experiment_flags(mlp, mlp_flags);
    {
        auto bind = [mlp, &mlp_flags](const std::string& flag, const std::string& key,
                                      const std::string& help) {
            mlp->add_option_function<std::string>(
                   flag, [&mlp_flags, key](const std::string& v) { mlp_flags.add(key, v); },
                   help)
                ->type_name("VALUE");
        };
        bind("--widths", "problem.mlp_widths", "Layer widths, e.g. 8,16,4");
        bind("--samples", "problem.samples", "Teacher dataset size");
        bind("--batch-size", "mlp.batch_size", "Minibatch size (0 = full batch)");
        bind("--holdout", "mlp.holdout_fraction", "Holdout fraction for accuracy");
    }

    std::size_t acct_rows = 0, acct_cols = 0;
    std::vector<std::size_t> acct_ranks;
    std::string acct_out, acct_format = "csv";
    CLI::App* acct = app.add_subcommand("account", "Memory accounting for given shapes/ranks");
    acct->add_option("--rows", acct_rows, "Weight rows")->required();
    acct->add_option("--cols", acct_cols, "Weight cols")->required();
    acct->add_option("--rank", acct_ranks, "Projection rank (repeatable)")
        ->required()
        ->delimiter(',');
    acct->add_option("--out", acct_out, "Output path ('-' for stdout)");
    acct->add_option("--format", acct_format, "csv or json");

    std::size_t bench_n = 1024, bench_rank = 32, bench_reps = 5;
    std::size_t bench_oversample = 5, bench_power = 2;
    std::uint64_t bench_seed = 1;
    std::string bench_out, bench_format = "csv";
    CLI::App* bench = app.add_subcommand("bench-svd", "Time rSVD vs exact SVD projector builds");
    bench->add_option("--n", bench_n, "Matrix side length");
    bench->add_option("--rank", bench_rank, "Projection rank");
    bench->add_option("--reps", bench_reps, "Repetitions per method (median reported)");
    bench->add_option("--seed", bench_seed, "Seed for the test matrix and sketches");
    bench->add_option("--oversample", bench_oversample, "Sketch oversampling columns");
    bench->add_option("--power-iters", bench_power, "Power iterations");
    bench->add_option("--out", bench_out, "Output path ('-' for stdout)");
    bench->add_option("--format", bench_format, "csv or json");

    // Handled before parsing so it works without a subcommand; the flag is
    // still registered so it shows up in --help.
    bool list_keys = false;
    app.add_flag("--config-keys", list_keys, "List every config key and exit");
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--config-keys") {
            for (const std::string& key : lotus::config_keys()) std::cout << key << "\n";
            return kExitConverged;
        }
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (cmp->parsed()) return cmd_compare(cmp_flags, cmp_policies, cmp_parallel);
        if (mlp->parsed()) return cmd_mlp(mlp_flags);
        if (acct->parsed()) {
            return cmd_account(acct_rows, acct_cols, acct_ranks, acct_out,
                               lotus::trace_format_from_name(acct_format));
        }
        if (bench->parsed()) {
            return cmd_bench_svd(bench_n, bench_rank, bench_reps, bench_seed, bench_oversample,
                                 bench_power, bench_out,
                                 lotus::trace_format_from_name(bench_format));
        }
    } catch (const lotus::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const lotus::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const lotus::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const lotus::Error& e) {
        // NonFiniteError, RankDeficiencyError, ConvergenceError, ZeroGradientError
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
