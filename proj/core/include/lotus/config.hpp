#ifndef LOTUS_CONFIG_HPP
#define LOTUS_CONFIG_HPP

#include <string>
#include <vector>

#include "lotus/harness.hpp"

namespace lotus {

/// Everything a harness invocation needs. The config file and command-line
/// flags both funnel through apply_key, so they accept the same keys and the
/// same value syntax; flags are applied after the file and win.
struct HarnessConfig {
    ProblemSpec problem;
    LotusHyperparams hp;
    RunOptions run;
    MlpOptions mlp;
    std::string out;              // output path, "-" = stdout, "" = summary only
    TraceFormat format = TraceFormat::Csv;
};

/// Sets one key. Throws ConfigError for unknown keys or unparseable values.
/// Keys use dotted lowercase names, e.g. "problem.kind", "policy.gamma",
/// "optimizer.rank", "run.max_steps".
void apply_key(HarnessConfig& cfg, const std::string& key, const std::string& value);

/// Known keys, for error messages and --help.
std::vector<std::string> config_keys();

/// Parses "key = value" lines ('#' comments, blank lines allowed) and
/// applies them in order. Throws ConfigError with line numbers on malformed
/// lines or unknown keys, IoError if the file cannot be read.
void load_config_file(HarnessConfig& cfg, const std::string& path);

} // namespace lotus

#endif
