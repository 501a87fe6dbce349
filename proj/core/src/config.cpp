#include "lotus/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lotus/errors.hpp"

namespace lotus {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw ConfigError(key + ": '" + value + "' is not a number");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    const unsigned long long v = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0') {
        throw ConfigError(key + ": '" + value + "' is not a nonnegative integer");
    }
    return static_cast<std::uint64_t>(v);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64(key, value));
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError(key + ": '" + value + "' is not a boolean");
}

std::vector<std::size_t> parse_widths(const std::string& key, const std::string& value) {
    std::vector<std::size_t> widths;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(key + ": empty entry in width list");
        widths.push_back(parse_size(key, item));
    }
    if (widths.size() < 2) {
        throw ConfigError(key + ": need at least two widths (input and output)");
    }
    return widths;
}

PolicyKind parse_policy(const std::string& key, const std::string& value) {
    if (value == "avg") return PolicyKind::AvgDisplacement;
    if (value == "rho") return PolicyKind::PathEfficiency;
    if (value == "fixed") return PolicyKind::FixedInterval;
    throw ConfigError(key + ": '" + value + "' is not a policy (expected avg, rho or fixed)");
}

} // namespace

void apply_key(HarnessConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "problem.kind") {
        cfg.problem.kind = problem_from_name(value);
    } else if (key == "problem.rows") {
        cfg.problem.rows = parse_size(key, value);
    } else if (key == "problem.cols") {
        cfg.problem.cols = parse_size(key, value);
    } else if (key == "problem.subspace_dim") {
        cfg.problem.subspace_dim = parse_size(key, value);
    } else if (key == "problem.drift_rate") {
        cfg.problem.drift_rate = parse_double(key, value);
    } else if (key == "problem.noise_std") {
        cfg.problem.noise_std = parse_double(key, value);
    } else if (key == "problem.lambda_min") {
        cfg.problem.lambda_min = parse_double(key, value);
    } else if (key == "problem.lambda_max") {
        cfg.problem.lambda_max = parse_double(key, value);
    } else if (key == "problem.samples") {
        cfg.problem.samples = parse_size(key, value);
    } else if (key == "problem.mlp_widths") {
        cfg.problem.mlp_widths = parse_widths(key, value);
    } else if (key == "problem.seed") {
        cfg.problem.seed = parse_u64(key, value);
    } else if (key == "optimizer.learning_rate") {
        cfg.hp.learning_rate = parse_double(key, value);
    } else if (key == "optimizer.rank") {
        cfg.hp.rank = parse_size(key, value);
    } else if (key == "optimizer.scale") {
        cfg.hp.scale = parse_double(key, value);
    } else if (key == "optimizer.beta1") {
        cfg.hp.beta1 = parse_double(key, value);
    } else if (key == "optimizer.beta2") {
        cfg.hp.beta2 = parse_double(key, value);
    } else if (key == "optimizer.eps") {
        cfg.hp.eps = parse_double(key, value);
    } else if (key == "optimizer.update_rule") {
        if (value == "adam") {
            cfg.hp.update_rule = UpdateRule::Adam;
        } else if (value == "plain") {
            cfg.hp.update_rule = UpdateRule::PlainProjected;
        } else {
            throw ConfigError(key + ": '" + value + "' is not a rule (expected adam or plain)");
        }
    } else if (key == "optimizer.moment_carry") {
        if (value == "reset") {
            cfg.hp.moment_carry = MomentCarry::Reset;
        } else if (value == "project") {
            cfg.hp.moment_carry = MomentCarry::Project;
        } else {
            throw ConfigError(key + ": '" + value + "' (expected reset or project)");
        }
    } else if (key == "optimizer.oversample") {
        cfg.hp.range.oversample = parse_size(key, value);
    } else if (key == "optimizer.power_iters") {
        cfg.hp.range.power_iters = parse_size(key, value);
    } else if (key == "optimizer.seed") {
        cfg.hp.rng = RngState(parse_u64(key, value));
    } else if (key == "policy.kind") {
        cfg.hp.switch_config.kind = parse_policy(key, value);
    } else if (key == "policy.gamma") {
        cfg.hp.switch_config.gamma = parse_double(key, value);
    } else if (key == "policy.eta") {
        cfg.hp.switch_config.eta = parse_u64(key, value);
    } else if (key == "policy.t_min") {
        cfg.hp.switch_config.t_min = parse_u64(key, value);
    } else if (key == "policy.fixed_interval") {
        cfg.hp.switch_config.fixed_interval = parse_u64(key, value);
    } else if (key == "policy.window_len") {
        cfg.hp.switch_config.window_len = parse_u64(key, value);
    } else if (key == "run.max_steps") {
        cfg.run.max_steps = parse_u64(key, value);
    } else if (key == "run.eps") {
        cfg.run.eps = parse_double(key, value);
    } else if (key == "run.tolerance_rule") {
        if (value == "windowed_mean") {
            cfg.run.tolerance_rule = ToleranceRule::WindowedMean;
        } else if (value == "cumulative_sum") {
            cfg.run.tolerance_rule = ToleranceRule::CumulativeSum;
        } else {
            throw ConfigError(key + ": '" + value +
                              "' (expected windowed_mean or cumulative_sum)");
        }
    } else if (key == "run.tolerance_window") {
        cfg.run.tolerance_window = parse_u64(key, value);
    } else if (key == "run.record_timing") {
        cfg.run.record_timing = parse_bool(key, value);
    } else if (key == "mlp.batch_size") {
        cfg.mlp.batch_size = parse_size(key, value);
    } else if (key == "mlp.holdout_fraction") {
        cfg.mlp.holdout_fraction = parse_double(key, value);
    } else if (key == "out") {
        cfg.out = value;
    } else if (key == "format") {
        cfg.format = trace_format_from_name(value);
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

std::vector<std::string> config_keys() {
    return {
        "problem.kind",         "problem.rows",          "problem.cols",
        "problem.subspace_dim", "problem.drift_rate",    "problem.noise_std",
        "problem.lambda_min",   "problem.lambda_max",    "problem.samples",
        "problem.mlp_widths",   "problem.seed",          "optimizer.learning_rate",
        "optimizer.rank",       "optimizer.scale",       "optimizer.beta1",
        "optimizer.beta2",      "optimizer.eps",         "optimizer.update_rule",
        "optimizer.moment_carry", "optimizer.oversample", "optimizer.power_iters",
        "optimizer.seed",       "policy.kind",           "policy.gamma",
        "policy.eta",           "policy.t_min",          "policy.fixed_interval",
        "policy.window_len",    "run.max_steps",         "run.eps",
        "run.tolerance_rule",   "run.tolerance_window",  "run.record_timing",
        "mlp.batch_size",       "mlp.holdout_fraction",  "out",
        "format",
    };
}

void load_config_file(HarnessConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file '" + path + "'");
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << path << ":" << lineno << ": expected 'key = value', got '" << line << "'";
            throw ConfigError(os.str());
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            std::ostringstream os;
            os << path << ":" << lineno << ": empty key";
            throw ConfigError(os.str());
        }
        try {
            apply_key(cfg, key, value);
        } catch (const ConfigError& e) {
            std::ostringstream os;
            os << path << ":" << lineno << ": " << e.what();
            throw ConfigError(os.str());
        }
    }
}

} // namespace lotus
