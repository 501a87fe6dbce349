#ifndef LOTUS_TRACE_HPP
#define LOTUS_TRACE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace lotus {

/// One optimizer step as it appears in emitted traces. Field order matches
/// the CSV column order exactly.
struct TraceRecord {
    uint64_t step = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double criterion_value = 0.0;
    bool switched = false;
    uint64_t step_wall_time_us = 0;
    uint64_t cumulative_switches = 0;
};

struct RunTrace {
    std::vector<TraceRecord> records;
};

enum class TraceFormat { Csv, Json };

TraceFormat trace_format_from_name(const std::string& name);

/// 17 significant digits, enough to round-trip any double exactly.
std::string format_double(double v);

std::string trace_to_csv(const RunTrace& trace);
std::string trace_to_json(const RunTrace& trace);

/// Writes the serialized trace to path ("-" means stdout).
void write_trace(const RunTrace& trace, const std::string& path, TraceFormat format);

} // namespace lotus

#endif
