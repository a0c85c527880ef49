#include "minions/trace_io.hpp"

#include "minions/backend.hpp"
#include "minions/orchestrator.hpp"

#include <sstream>

namespace minions {

json trace_header_json(const RunTrace& t)
{
    json j{{"type", "header"},
           {"run_id", t.run_id},
           {"problem_id", t.problem_id},
           {"framework", to_string(t.framework)},
           {"run_index", t.run_index},
           {"pass_index", t.pass_index ? json(*t.pass_index) : json(nullptr)},
           {"problem", t.problem ? json(*t.problem) : json(nullptr)},
           {"config", t.config}};
    return j;
}

json trace_call_json(const AgentCall& call)
{
    json j = call;
    j["type"] = "call";
    return j;
}

json trace_result_json(const RunTrace& t)
{
    return json{{"type", "result"},
                {"accepted", t.accepted},
                {"final_solution", t.final_solution},
                {"visual_verified", t.visual_verified ? json(*t.visual_verified) : json(nullptr)},
                {"error", t.error ? json(*t.error) : json(nullptr)},
                {"calls", t.calls.size()},
                {"tokens_in", t.total_tokens_in()},
                {"tokens_out", t.total_tokens_out()},
                {"tokens_total", t.total_tokens()}};
}

std::string serialize_trace(const RunTrace& t)
{
    std::string out = trace_header_json(t).dump() + "\n";
    for (const auto& c : t.calls) out += trace_call_json(c).dump() + "\n";
    out += trace_result_json(t).dump() + "\n";
    return out;
}

RunTrace parse_trace(std::string_view text)
{
    RunTrace t;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

        auto fail = [&](const std::string& why) {
            return std::runtime_error("malformed trace line " + std::to_string(line_no) + ": " + why);
        };
        json j = json::parse(line.begin(), line.end(), nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw fail("not a JSON object");
        try {
            std::string type = j.at("type").get<std::string>();
            if (type == "header") {
                t.run_id = j.at("run_id").get<std::string>();
                t.problem_id = j.at("problem_id").get<std::string>();
                t.framework = parse_framework(j.at("framework").get<std::string>());
                t.run_index = j.value("run_index", 0);
                if (auto it = j.find("pass_index"); it != j.end() && !it->is_null()) t.pass_index = it->get<int>();
                if (auto it = j.find("problem"); it != j.end() && !it->is_null()) t.problem = it->get<Problem>();
                t.config = j.value("config", json::object());
                have_header = true;
            } else if (type == "call") {
                if (!have_header) throw fail("call before header");
                t.calls.push_back(j.get<AgentCall>());
            } else if (type == "result") {
                t.accepted = j.at("accepted").get<bool>();
                t.final_solution = j.at("final_solution").get<StructuredSolution>();
                if (auto it = j.find("visual_verified"); it != j.end() && !it->is_null())
                    t.visual_verified = it->get<bool>();
                if (auto it = j.find("error"); it != j.end() && !it->is_null()) t.error = it->get<std::string>();
            } else {
                throw fail("unknown line type '" + type + "'");
            }
        } catch (const std::runtime_error&) {
            throw;
        } catch (const std::exception& e) {
            throw fail(e.what());
        }
    }
    if (!have_header) throw std::runtime_error("malformed trace: missing header line");
    return t;
}

RunTrace read_trace(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read trace " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_trace(buf.str());
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

TraceWriter::TraceWriter(const std::filesystem::path& path) : path_(path)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot write trace " + path.string());
}

void TraceWriter::line(const json& j)
{
    std::lock_guard lock(mu_);
    out_ << j.dump() << '\n';
    out_.flush();
}

void TraceWriter::header(const RunTrace& trace) { line(trace_header_json(trace)); }
void TraceWriter::call(const AgentCall& call) { line(trace_call_json(call)); }
void TraceWriter::result(const RunTrace& trace) { line(trace_result_json(trace)); }

namespace {

std::vector<std::string> lines_of(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

} // namespace

ReplayReport replay_trace(const RunTrace& original, const PromptRegistry& prompts)
{
    if (!original.problem) throw std::runtime_error("trace " + original.run_id + " has no embedded problem");
    PipelineConfig cfg = original.config.get<PipelineConfig>();
    cfg.framework = original.framework;

    ScriptedBackend backend = scripted_from_trace(original);
    RunInfo info{original.run_index, original.pass_index, {}};
    ReplayReport report;
    report.rerun = solve(*original.problem, cfg, backend, prompts, info);

    const auto want = lines_of(serialize_trace(original));
    const auto got = lines_of(serialize_trace(report.rerun));
    if (want == got) {
        report.identical = true;
        report.message = "replay identical (" + std::to_string(original.calls.size()) + " calls)";
        return report;
    }

    // Lines: header, calls..., result.
    const std::size_t n = std::min(original.calls.size(), report.rerun.calls.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (want[i + 1] != got[i + 1]) {
            report.first_divergent_seq = original.calls[i].seq;
            break;
        }
    }
    if (!report.first_divergent_seq && original.calls.size() != report.rerun.calls.size()) {
        report.first_divergent_seq = static_cast<std::int64_t>(n) + 1;
    }
    if (report.rerun.error && !original.error) {
        report.message = "replay failed: " + *report.rerun.error;
    } else if (report.first_divergent_seq) {
        report.message = "replay diverged at call seq " + std::to_string(*report.first_divergent_seq);
    } else if (want.front() != got.front()) {
        report.message = "replay diverged in the trace header";
    } else {
        report.message = "replay diverged in the run result";
    }
    return report;
}

} // namespace minions
