// Trace serialization, report serialization and key-value configuration.
#include "doctest.h"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

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

const char* kHeader = "step,loss,grad_norm,criterion_value,switched,step_wall_time_us,"
                      "cumulative_switches";

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

RunTrace awkward_trace() {
    RunTrace trace;
    const double values[][3] = {
        {0.1, 1.0 / 3.0, 6.283185307179586},
        {1e-300, 4.9406564584124654e-324, 1.7976931348623157e308},
        {-2.5e-17, 0.010000000000000002, 9007199254740991.0},
    };
    for (std::size_t i = 0; i < 3; ++i) {
        TraceRecord r;
        r.step = i + 1;
        r.loss = values[i][0];
        r.grad_norm = values[i][1];
        r.criterion_value = values[i][2];
        r.switched = i == 1;
        r.step_wall_time_us = 1000000 * (i + 1);
        r.cumulative_switches = i;
        trace.records.push_back(r);
    }
    return trace;
}

} // namespace

TEST_CASE("format_double round-trips doubles through 17 significant digits") {
    const double cases[] = {0.1,
                            1.0 / 3.0,
                            6.283185307179586,
                            1e-300,
                            4.9406564584124654e-324, // smallest denormal
                            1.7976931348623157e308,  // largest finite
                            -2.5e-17,
                            0.0,
                            -0.0,
                            9007199254740991.0, // 2^53 - 1
                            0.010000000000000002};
    for (double v : cases) {
        const std::string text = format_double(v);
        const double back = std::strtod(text.c_str(), nullptr);
        CHECK(same_bits(back, v));
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(-0.0) == "-0");
}

TEST_CASE("trace csv: exact header and exact row rendering") {
    RunTrace trace;
    CHECK(trace_to_csv(trace) == std::string(kHeader) + "\n");

    TraceRecord r;
    r.step = 3;
    r.loss = 0.5;
    r.grad_norm = 0.25;
    r.criterion_value = 0.0078125;
    r.switched = true;
    r.step_wall_time_us = 12;
    r.cumulative_switches = 2;
    trace.records.push_back(r);

    const std::string text = trace_to_csv(trace);
    const std::vector<std::string> lines = lines_of(text);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == kHeader);
    CHECK(lines[1] == "3,0.5,0.25,0.0078125,1,12,2");

    r.switched = false;
    trace.records[0] = r;
    CHECK(lines_of(trace_to_csv(trace))[1] == "3,0.5,0.25,0.0078125,0,12,2");
}

TEST_CASE("trace csv: parse-back recovers every double bit for bit") {
    const RunTrace trace = awkward_trace();
    const std::vector<std::string> lines = lines_of(trace_to_csv(trace));
    REQUIRE(lines.size() == 4);
    for (std::size_t i = 0; i < 3; ++i) {
        const std::vector<std::string> cells = split_csv(lines[i + 1]);
        REQUIRE(cells.size() == 7);
        const TraceRecord& r = trace.records[i];
        CHECK(std::stoull(cells[0]) == r.step);
        CHECK(same_bits(std::strtod(cells[1].c_str(), nullptr), r.loss));
        CHECK(same_bits(std::strtod(cells[2].c_str(), nullptr), r.grad_norm));
        CHECK(same_bits(std::strtod(cells[3].c_str(), nullptr), r.criterion_value));
        CHECK(cells[4] == (r.switched ? "1" : "0"));
        CHECK(std::stoull(cells[5]) == r.step_wall_time_us);
        CHECK(std::stoull(cells[6]) == r.cumulative_switches);
    }
}

TEST_CASE("trace json: structure and bit-exact doubles through a real parser") {
    const RunTrace trace = awkward_trace();
    const nlohmann::json doc = nlohmann::json::parse(trace_to_json(trace));
    REQUIRE(doc.is_array());
    REQUIRE(doc.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const TraceRecord& r = trace.records[i];
        CHECK(doc[i]["step"].get<std::uint64_t>() == r.step);
        CHECK(same_bits(doc[i]["loss"].get<double>(), r.loss));
        CHECK(same_bits(doc[i]["grad_norm"].get<double>(), r.grad_norm));
        CHECK(same_bits(doc[i]["criterion_value"].get<double>(), r.criterion_value));
        CHECK(doc[i]["switched"].is_boolean());
        CHECK(doc[i]["switched"].get<bool>() == r.switched);
        CHECK(doc[i]["step_wall_time_us"].get<std::uint64_t>() == r.step_wall_time_us);
        CHECK(doc[i]["cumulative_switches"].get<std::uint64_t>() == r.cumulative_switches);
    }

    const nlohmann::json empty = nlohmann::json::parse(trace_to_json(RunTrace{}));
    CHECK(empty.is_array());
    CHECK(empty.empty());
}

TEST_CASE("write_trace: files carry exactly the serialized bytes") {
    const RunTrace trace = awkward_trace();
    const std::string csv_path = "/tmp/lotus_io_trace.csv";
    const std::string json_path = "/tmp/lotus_io_trace.json";

    write_trace(trace, csv_path, TraceFormat::Csv);
    CHECK(slurp(csv_path) == trace_to_csv(trace));
    write_trace(trace, json_path, TraceFormat::Json);
    CHECK(slurp(json_path) == trace_to_json(trace));
    std::remove(csv_path.c_str());
    std::remove(json_path.c_str());

    CHECK_THROWS_AS(write_trace(trace, "/no-such-dir-xyz/trace.csv", TraceFormat::Csv), IoError);
}

TEST_CASE("trace format names map to formats") {
    CHECK(trace_format_from_name("csv") == TraceFormat::Csv);
    CHECK(trace_format_from_name("json") == TraceFormat::Json);
    CHECK_THROWS_AS(trace_format_from_name("yaml"), ConfigError);
    CHECK_THROWS_AS(trace_format_from_name("CSV"), ConfigError);
}

TEST_CASE("comparison report serializers agree with the runs") {
    ProblemSpec spec;
    spec.kind = ProblemKind::Quadratic;
    spec.rows = 8;
    spec.cols = 8;
    spec.lambda_min = 1.0;
    spec.lambda_max = 1.0;
    spec.seed = 14;

    LotusHyperparams hp;
    hp.rank = 2;
    hp.learning_rate = 0.01;

    SwitchConfig fixed;
    fixed.kind = PolicyKind::FixedInterval;
    fixed.fixed_interval = 10;
    SwitchConfig avg;
    avg.kind = PolicyKind::AvgDisplacement;
    avg.eta = 10;
    avg.t_min = 10;

    RunOptions opts;
    opts.max_steps = 30;
    opts.eps = 1e-300;

    const ComparisonReport report = compare_policies(spec, hp, {avg, fixed}, opts);

    const std::vector<std::string> lines = lines_of(comparison_to_csv(report));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "label,policy,gamma,eta,t_min,fixed_interval,status,steps_run,"
                      "switch_count,switches_per_1k,projector_builds,final_loss,"
                      "final_grad_norm,wall_s");
    CHECK(split_csv(lines[1])[0] == "avg");
    CHECK(split_csv(lines[2])[0] == "fixed");

    const nlohmann::json doc = nlohmann::json::parse(comparison_to_json(report));
    REQUIRE(doc.is_array());
    REQUIRE(doc.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        const PolicyRun& run = report.runs[i];
        CHECK(doc[i]["label"].get<std::string>() == run.label);
        CHECK(doc[i]["steps_run"].get<std::uint64_t>() == run.result.steps_run);
        CHECK(doc[i]["switch_count"].get<std::uint64_t>() == run.result.switch_count);
        CHECK(doc[i]["projector_builds"].get<std::uint64_t>() == run.result.projector_builds);
        CHECK(same_bits(doc[i]["final_loss"].get<double>(), run.result.final_loss));
        CHECK(doc[i]["status"].get<std::string>() == "budget_exhausted");
    }
    // the fixed cell switched every 10 steps over 30 steps
    CHECK(report.runs[1].result.switch_count == 3);
}

TEST_CASE("svd bench serializers echo the result fields") {
    SvdBenchResult r;
    r.n = 64;
    r.rank = 8;
    r.reps = 3;
    r.exact_median_s = 0.25;
    r.randomized_median_s = 0.0625;
    r.speedup = 4.0;
    r.basis_overlap = 0.96875;

    const std::vector<std::string> lines = lines_of(svd_bench_to_csv(r));
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "n,rank,reps,exact_median_s,randomized_median_s,speedup,basis_overlap");
    CHECK(lines[1] == "64,8,3,0.25,0.0625,4,0.96875");

    const nlohmann::json doc = nlohmann::json::parse(svd_bench_to_json(r));
    CHECK(doc["n"].get<std::size_t>() == 64);
    CHECK(doc["rank"].get<std::size_t>() == 8);
    CHECK(same_bits(doc["speedup"].get<double>(), 4.0));
    CHECK(same_bits(doc["basis_overlap"].get<double>(), 0.96875));
}

TEST_CASE("apply_key: every documented key accepts a value and lands in the config") {
    // One representative value per key. The map is checked against
    // config_keys() so the two can never drift apart silently.
    const std::map<std::string, std::string> sample = {
        {"problem.kind", "drift"},
        {"problem.rows", "32"},
        {"problem.cols", "24"},
        {"problem.subspace_dim", "4"},
        {"problem.drift_rate", "0.01"},
        {"problem.noise_std", "0.5"},
        {"problem.lambda_min", "0.5"},
        {"problem.lambda_max", "2.5"},
        {"problem.samples", "64"},
        {"problem.mlp_widths", "8,16,4"},
        {"problem.seed", "7"},
        {"optimizer.learning_rate", "0.002"},
        {"optimizer.rank", "16"},
        {"optimizer.scale", "0.5"},
        {"optimizer.beta1", "0.8"},
        {"optimizer.beta2", "0.95"},
        {"optimizer.eps", "1e-9"},
        {"optimizer.update_rule", "plain"},
        {"optimizer.moment_carry", "project"},
        {"optimizer.oversample", "3"},
        {"optimizer.power_iters", "1"},
        {"optimizer.seed", "99"},
        {"policy.kind", "rho"},
        {"policy.gamma", "0.015"},
        {"policy.eta", "40"},
        {"policy.t_min", "80"},
        {"policy.fixed_interval", "250"},
        {"policy.window_len", "30"},
        {"run.max_steps", "5000"},
        {"run.eps", "1e-8"},
        {"run.tolerance_rule", "cumulative_sum"},
        {"run.tolerance_window", "25"},
        {"run.record_timing", "true"},
        {"mlp.batch_size", "16"},
        {"mlp.holdout_fraction", "0.2"},
        {"out", "/tmp/out.csv"},
        {"format", "json"},
    };

    const std::vector<std::string> keys = config_keys();
    CHECK(keys.size() == sample.size());
    HarnessConfig cfg;
    for (const std::string& key : keys) {
        REQUIRE_MESSAGE(sample.count(key) == 1, "config_keys() lists unknown key ", key);
        CHECK_NOTHROW(apply_key(cfg, key, sample.at(key)));
    }

    CHECK(cfg.problem.kind == ProblemKind::DriftingStream);
    CHECK(cfg.problem.rows == 32);
    CHECK(cfg.problem.cols == 24);
    CHECK(cfg.problem.subspace_dim == 4);
    CHECK(cfg.problem.drift_rate == 0.01);
    CHECK(cfg.problem.mlp_widths == std::vector<std::size_t>{8, 16, 4});
    CHECK(cfg.problem.seed == 7);
    CHECK(cfg.hp.learning_rate == 0.002);
    CHECK(cfg.hp.rank == 16);
    CHECK(cfg.hp.scale == 0.5);
    CHECK(cfg.hp.update_rule == UpdateRule::PlainProjected);
    CHECK(cfg.hp.moment_carry == MomentCarry::Project);
    CHECK(cfg.hp.range.oversample == 3);
    CHECK(cfg.hp.range.power_iters == 1);
    CHECK(cfg.hp.rng == RngState(99));
    CHECK(cfg.hp.switch_config.kind == PolicyKind::PathEfficiency);
    CHECK(cfg.hp.switch_config.gamma == 0.015);
    CHECK(cfg.hp.switch_config.eta == 40);
    CHECK(cfg.hp.switch_config.t_min == 80);
    CHECK(cfg.hp.switch_config.fixed_interval == 250);
    CHECK(cfg.hp.switch_config.window_len == 30);
    CHECK(cfg.run.max_steps == 5000);
    CHECK(cfg.run.eps == 1e-8);
    CHECK(cfg.run.tolerance_rule == ToleranceRule::CumulativeSum);
    CHECK(cfg.run.tolerance_window == 25);
    CHECK(cfg.run.record_timing == true);
    CHECK(cfg.mlp.batch_size == 16);
    CHECK(cfg.mlp.holdout_fraction == 0.2);
    CHECK(cfg.out == "/tmp/out.csv");
    CHECK(cfg.format == TraceFormat::Json);
}

TEST_CASE("apply_key: unknown keys and malformed values are rejected") {
    HarnessConfig cfg;
    CHECK_THROWS_WITH_AS(apply_key(cfg, "policy.gama", "0.01"),
                         "unknown config key 'policy.gama'", ConfigError);
    CHECK_THROWS_AS(apply_key(cfg, "optimizer.rank", "abc"), ConfigError);
    CHECK_THROWS_AS(apply_key(cfg, "policy.gamma", "one percent"), ConfigError);
    CHECK_THROWS_AS(apply_key(cfg, "run.record_timing", "maybe"), ConfigError);
    CHECK_THROWS_AS(apply_key(cfg, "policy.kind", "adaptive"), ConfigError);
    CHECK_THROWS_AS(apply_key(cfg, "problem.kind", "cifar"), ConfigError);
    CHECK_THROWS_AS(apply_key(cfg, "problem.mlp_widths", "8"), ConfigError);
    CHECK_THROWS_AS(apply_key(cfg, "problem.mlp_widths", "8,,4"), ConfigError);
    CHECK_THROWS_AS(apply_key(cfg, "optimizer.update_rule", "sgd"), ConfigError);
    CHECK_THROWS_AS(apply_key(cfg, "format", "parquet"), ConfigError);
    // trailing junk after a number is not silently ignored
    CHECK_THROWS_AS(apply_key(cfg, "policy.gamma", "0.01x"), ConfigError);
    CHECK_THROWS_AS(apply_key(cfg, "policy.eta", "50.5"), ConfigError);
}

TEST_CASE("load_config_file: comments, blanks and whitespace are tolerated") {
    const std::string path = "/tmp/lotus_io_config.cfg";
    {
        std::ofstream out(path);
        out << "# experiment setup\n"
            << "\n"
            << "problem.kind = drift\n"
            << "problem.rows=48   # inline comment\n"
            << "  policy.gamma =   0.008\n"
            << "policy.kind = avg\n"
            << "run.max_steps = 750\n"
            << "format = csv\n";
    }
    HarnessConfig cfg;
    load_config_file(cfg, path);
    CHECK(cfg.problem.kind == ProblemKind::DriftingStream);
    CHECK(cfg.problem.rows == 48);
    CHECK(cfg.hp.switch_config.gamma == 0.008);
    CHECK(cfg.hp.switch_config.kind == PolicyKind::AvgDisplacement);
    CHECK(cfg.run.max_steps == 750);
    CHECK(cfg.format == TraceFormat::Csv);

    // later keys win, so a flag applied after the file overrides it
    apply_key(cfg, "policy.gamma", "0.02");
    CHECK(cfg.hp.switch_config.gamma == 0.02);
    std::remove(path.c_str());
}

TEST_CASE("load_config_file: errors carry the file name and line number") {
    const std::string path = "/tmp/lotus_io_bad.cfg";

    {
        std::ofstream out(path);
        out << "problem.rows = 8\n"
            << "this line has no equals sign\n";
    }
    HarnessConfig cfg;
    try {
        load_config_file(cfg, path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find(path) != std::string::npos);
        CHECK(what.find(":2:") != std::string::npos);
    }

    {
        std::ofstream out(path);
        out << "# fine\n"
            << "problem.rows = 8\n"
            << "policy.gama = 0.01\n";
    }
    try {
        load_config_file(cfg, path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find(":3:") != std::string::npos);
        CHECK(what.find("policy.gama") != std::string::npos);
    }

    {
        std::ofstream out(path);
        out << "optimizer.rank = twelve\n";
    }
    try {
        load_config_file(cfg, path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(":1:") != std::string::npos);
    }

    {
        std::ofstream out(path);
        out << " = 5\n";
    }
    CHECK_THROWS_AS(load_config_file(cfg, path), ConfigError);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_config_file(cfg, "/tmp/does-not-exist-lotus.cfg"), IoError);
}
