#pragma once

#include "minions/domain.hpp"
#include "minions/prompts.hpp"

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>

namespace minions {

// Trace files are JSON Lines: a header line, one line per AgentCall, and a
// result line written when the run finishes.

json trace_header_json(const RunTrace& trace);
json trace_call_json(const AgentCall& call);
json trace_result_json(const RunTrace& trace);

/// The complete JSONL text of a trace.
std::string serialize_trace(const RunTrace& trace);

/// Parses JSONL text. A missing result line (crashed run) is tolerated.
/// Throws std::runtime_error naming the offending line.
RunTrace parse_trace(std::string_view text);
RunTrace read_trace(const std::filesystem::path& path);

/// Append-only writer; every line is flushed as soon as it is written.
class TraceWriter {
public:
    explicit TraceWriter(const std::filesystem::path& path);

    void header(const RunTrace& trace);
    void call(const AgentCall& call);
    void result(const RunTrace& trace);

private:
    void line(const json& j);

    std::mutex mu_;
    std::filesystem::path path_;
    std::ofstream out_;
};

struct ReplayReport {
    bool identical = false;
    /// Seq of the first call that differs (or is missing) in the rerun.
    std::optional<std::int64_t> first_divergent_seq;
    std::string message;
    RunTrace rerun;
};

/// Re-executes the run recorded in `original` against its own responses and
/// compares the serialized traces line by line.
ReplayReport replay_trace(const RunTrace& original, const PromptRegistry& prompts);

} // namespace minions
