#pragma once

#include "minions/backend.hpp"
#include "minions/eval.hpp"
#include "minions/orchestrator.hpp"
#include "minions/pipeline.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace minions {

/// Canned responses for scripted runs, keyed by problem and run.
///
/// Lookup order for problem P, run R, Best-of-N pass K: "P#R.K", "P#R",
/// "P", "*". A value is either an array (responses in call order) or an
/// object mapping agent labels to arrays.
class ScriptBook {
public:
    ScriptBook() = default;
    explicit ScriptBook(json doc);
    static ScriptBook load(const std::filesystem::path& path);

    /// A fresh backend for one run. Throws when no key matches.
    std::unique_ptr<Backend> backend_for(const std::string& problem_id, int run_index,
                                         std::optional<int> pass_index) const;

private:
    json doc_ = json::object();
};

struct BackendSettings {
    std::string type = "scripted"; // "http" | "scripted"
    HttpBackendConfig http;
    /// Inline script document, or loaded from `script_path`.
    std::optional<json> script;
    std::filesystem::path script_path;
};

struct GraderSettings {
    GradeMode mode = GradeMode::Auto;
    std::optional<BackendSettings> backend;
    /// Relative tolerance for problems that do not set their own.
    double tolerance = kDefaultRelativeTolerance;
};

struct CliConfig {
    PipelineConfig pipeline;
    BackendSettings backend;
    GraderSettings grader;
    std::filesystem::path prompt_dir;
    std::filesystem::path output_dir = "out";
    int parallelism = 1;
    int runs = 1;
};

/// Relative paths inside the document resolve against `base_dir`.
CliConfig config_from_json(const json& doc, const std::filesystem::path& base_dir);
CliConfig load_config(const std::filesystem::path& path);
std::vector<std::string> validate_config(const CliConfig& cfg);

/// Values given on the command line; each one wins over the config file.
struct RunOverrides {
    std::optional<Framework> framework;
    std::optional<int> cv;
    std::optional<int> max_iterations;
    std::optional<int> runs;
    std::optional<int> parallelism;
    std::optional<int> n_best_of;
    std::optional<double> temperature;
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::filesystem::path> prompt_dir;
};

void apply_overrides(CliConfig& cfg, const RunOverrides& o);

/// Factory producing one backend per (problem, run, pass).
BackendFactory make_backend_factory(const BackendSettings& settings);

/// "<pid>.run<r>.jsonl" or "<pid>.run<r>.pass<k>.jsonl".
std::string trace_file_name(const std::string& problem_id, int run_index, std::optional<int> pass_index);

struct RunArgs {
    std::filesystem::path config;
    std::filesystem::path manifest;
    RunOverrides overrides;
};

struct GradeArgs {
    std::filesystem::path results;
    std::filesystem::path manifest;
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> out;
};

struct ReplayArgs {
    std::filesystem::path trace;
    std::optional<std::filesystem::path> prompt_dir;
};

struct ReportArgs {
    std::filesystem::path report;
    bool json_output = false;
};

// Commands return the process exit status and write diagnostics to `err`.
// Status 0 is success, 1 a replay divergence or total backend failure,
// 2 a usage, config, manifest or input error.
int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_grade(const GradeArgs& args, std::ostream& out, std::ostream& err);
int cmd_replay(const ReplayArgs& args, std::ostream& out, std::ostream& err);
int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err);

/// Full command-line entry point (argv[0] is the program name).
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace minions
