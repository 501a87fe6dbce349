#include "lotus/trace.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lotus/errors.hpp"

namespace lotus {

namespace {

const char* kCsvHeader = "step,loss,grad_norm,criterion_value,switched,step_wall_time_us,"
                         "cumulative_switches";

} // namespace

TraceFormat trace_format_from_name(const std::string& name) {
    if (name == "csv") return TraceFormat::Csv;
    if (name == "json") return TraceFormat::Json;
    throw ConfigError("unknown trace format '" + name + "' (expected csv or json)");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trace_to_csv(const RunTrace& trace) {
    std::ostringstream os;
    os << kCsvHeader << "\n";
    for (const TraceRecord& r : trace.records) {
        os << r.step << ',' << format_double(r.loss) << ',' << format_double(r.grad_norm) << ','
           << format_double(r.criterion_value) << ',' << (r.switched ? 1 : 0) << ','
           << r.step_wall_time_us << ',' << r.cumulative_switches << "\n";
    }
    return os.str();
}

std::string trace_to_json(const RunTrace& trace) {
    std::ostringstream os;
    os << "[\n";
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const TraceRecord& r = trace.records[i];
        os << "  {\"step\": " << r.step << ", \"loss\": " << format_double(r.loss)
           << ", \"grad_norm\": " << format_double(r.grad_norm)
           << ", \"criterion_value\": " << format_double(r.criterion_value)
           << ", \"switched\": " << (r.switched ? "true" : "false")
           << ", \"step_wall_time_us\": " << r.step_wall_time_us
           << ", \"cumulative_switches\": " << r.cumulative_switches << "}"
           << (i + 1 < trace.records.size() ? ",\n" : "\n");
    }
    os << "]\n";
    return os.str();
}

void write_trace(const RunTrace& trace, const std::string& path, TraceFormat format) {
    const std::string body = format == TraceFormat::Csv ? trace_to_csv(trace) : trace_to_json(trace);
    if (path == "-") {
        std::cout << body;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("write_trace: cannot open '" + path + "' for writing");
    }
    out << body;
    if (!out) {
        throw IoError("write_trace: short write to '" + path + "'");
    }
}

} // namespace lotus
