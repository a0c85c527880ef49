#include "minions/cli.hpp"

#include "minions/trace_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace minions {

namespace fs = std::filesystem;

namespace {

json read_json_file(const fs::path& path, const char* what)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(std::string("cannot read ") + what + " " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    json doc = json::parse(buf.str(), nullptr, false);
    if (doc.is_discarded()) throw std::runtime_error(std::string("invalid JSON in ") + what + " " + path.string());
    return doc;
}

void write_text_file(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

fs::path resolve(const fs::path& p, const fs::path& base)
{
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return base / p;
}

BackendSettings backend_from_json(const json& j, const fs::path& base)
{
    BackendSettings b;
    b.type = j.value("type", std::string("scripted"));
    if (b.type == "http") {
        b.http = j.get<HttpBackendConfig>();
    } else if (b.type == "scripted") {
        if (auto it = j.find("script"); it != j.end()) {
            if (it->is_string()) {
                b.script_path = resolve(it->get<std::string>(), base);
            } else if (it->is_object()) {
                b.script = *it;
            } else {
                throw std::invalid_argument("backend.script must be a path or an object");
            }
        }
    } else {
        throw std::invalid_argument("unknown backend type '" + b.type + "'");
    }
    return b;
}

std::string sanitize(const std::string& id)
{
    std::string out;
    for (char c : id) {
        bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
        out += ok ? c : '_';
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------

ScriptBook::ScriptBook(json doc) : doc_(std::move(doc))
{
    if (!doc_.is_object()) throw std::invalid_argument("script document must be a JSON object");
}

ScriptBook ScriptBook::load(const fs::path& path) { return ScriptBook(read_json_file(path, "script")); }

std::unique_ptr<Backend> ScriptBook::backend_for(const std::string& problem_id, int run_index,
                                                 std::optional<int> pass_index) const
{
    std::vector<std::string> keys;
    std::string run_key = problem_id + "#" + std::to_string(run_index);
    if (pass_index) keys.push_back(run_key + "." + std::to_string(*pass_index));
    keys.push_back(run_key);
    keys.push_back(problem_id);
    keys.push_back("*");
    for (const auto& k : keys) {
        auto it = doc_.find(k);
        if (it == doc_.end()) continue;
        if (it->is_array()) return std::make_unique<ScriptedBackend>(it->get<std::vector<ScriptEntry>>());
        if (it->is_object()) {
            return std::make_unique<ScriptedBackend>(it->get<std::map<std::string, std::vector<ScriptEntry>>>());
        }
        throw std::invalid_argument("script entry '" + k + "' must be an array or an object");
    }
    throw std::invalid_argument("no script for problem " + problem_id + " run " + std::to_string(run_index));
}

// ---------------------------------------------------------------------------

CliConfig config_from_json(const json& doc, const fs::path& base_dir)
{
    if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
    CliConfig c;
    c.pipeline = doc.get<PipelineConfig>();
    if (auto it = doc.find("backend"); it != doc.end()) c.backend = backend_from_json(*it, base_dir);
    if (auto it = doc.find("grader"); it != doc.end()) {
        c.grader.mode = parse_grade_mode(it->value("mode", std::string("auto")));
        c.grader.tolerance = it->value("tolerance", kDefaultRelativeTolerance);
        if (auto b = it->find("backend"); b != it->end() && !b->is_null()) {
            c.grader.backend = backend_from_json(*b, base_dir);
        }
    }
    if (auto it = doc.find("prompt_dir"); it != doc.end() && !it->get<std::string>().empty()) {
        c.prompt_dir = resolve(it->get<std::string>(), base_dir);
    }
    if (auto it = doc.find("output_dir"); it != doc.end()) c.output_dir = resolve(it->get<std::string>(), base_dir);
    c.parallelism = doc.value("parallelism", c.parallelism);
    c.runs = doc.value("runs", c.runs);
    return c;
}

CliConfig load_config(const fs::path& path)
{
    json doc = read_json_file(path, "config");
    try {
        return config_from_json(doc, path.parent_path());
    } catch (const std::exception& e) {
        throw std::runtime_error("config " + path.string() + ": " + e.what());
    }
}

std::vector<std::string> validate_config(const CliConfig& cfg)
{
    auto out = cfg.pipeline.validate();
    if (cfg.parallelism < 1) out.push_back("parallelism must be >= 1");
    if (cfg.runs < 1) out.push_back("runs must be >= 1");
    if (!(cfg.grader.tolerance >= 0)) out.push_back("grader.tolerance must be >= 0");
    if (cfg.backend.type == "http" && cfg.backend.http.endpoint.empty()) out.push_back("backend.endpoint is required");
    return out;
}

void apply_overrides(CliConfig& cfg, const RunOverrides& o)
{
    if (o.framework) cfg.pipeline.framework = *o.framework;
    if (o.cv) cfg.pipeline.cv = *o.cv;
    if (o.max_iterations) cfg.pipeline.max_iterations = *o.max_iterations;
    if (o.n_best_of) cfg.pipeline.n_best_of = *o.n_best_of;
    if (o.temperature) cfg.pipeline.temperature = *o.temperature;
    if (o.runs) cfg.runs = *o.runs;
    if (o.parallelism) cfg.parallelism = *o.parallelism;
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    if (o.prompt_dir) cfg.prompt_dir = *o.prompt_dir;
}

BackendFactory make_backend_factory(const BackendSettings& settings)
{
    if (settings.type == "http") {
        HttpBackendConfig http = settings.http;
        return [http](const Problem&, int, std::optional<int>) { return std::make_unique<HttpBackend>(http); };
    }
    auto book = std::make_shared<ScriptBook>(settings.script ? ScriptBook(*settings.script)
                                             : !settings.script_path.empty() ? ScriptBook::load(settings.script_path)
                                                                             : ScriptBook());
    return [book](const Problem& p, int run, std::optional<int> pass) { return book->backend_for(p.id, run, pass); };
}

std::string trace_file_name(const std::string& problem_id, int run_index, std::optional<int> pass_index)
{
    std::string name = sanitize(problem_id) + ".run" + std::to_string(run_index);
    if (pass_index) name += ".pass" + std::to_string(*pass_index);
    return name + ".jsonl";
}

// ---------------------------------------------------------------------------

namespace {

Problem with_default_tolerance(Problem p, double tolerance)
{
    if (!p.tolerance) p.tolerance = tolerance;
    return p;
}

/// Grades one solution under the configured settings.
struct Grading {
    const CliConfig& cfg;
    const PromptRegistry& prompts;
    BackendFactory grader_backends;

    GradeResult operator()(const Problem& problem, const StructuredSolution& solution, int run_index) const
    {
        std::unique_ptr<Backend> backend;
        bool rubric = cfg.grader.mode == GradeMode::Rubric ||
                      (cfg.grader.mode == GradeMode::Auto && problem.marking_scheme && grader_backends);
        if (rubric) {
            if (!grader_backends) throw std::invalid_argument("rubric grading requires grader.backend");
            backend = grader_backends(problem, run_index, std::nullopt);
        }
        return grade(with_default_tolerance(problem, cfg.grader.tolerance), solution,
                     rubric ? GradeMode::Rubric : GradeMode::Exact, backend.get(), prompts);
    }
};

json problem_entry(const RunTrace& t, const std::string& trace_rel)
{
    return json{{"problem_id", t.problem_id},
                {"trace", trace_rel},
                {"accepted", t.accepted},
                {"error", t.error ? json(*t.error) : json(nullptr)},
                {"solution", t.final_solution},
                {"tokens_in", t.total_tokens_in()},
                {"tokens_out", t.total_tokens_out()},
                {"calls", t.calls.size()}};
}

} // namespace

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err)
{
    CliConfig cfg;
    Manifest manifest;
    std::optional<PromptRegistry> prompts;
    BackendFactory backends;
    BackendFactory grader_backends;
    try {
        cfg = args.config.empty() ? CliConfig{} : load_config(args.config);
        manifest = load_manifest(args.manifest);
        apply_overrides(cfg, args.overrides);
        if (auto errors = validate_config(cfg); !errors.empty()) {
            std::string msg = "invalid config:";
            for (const auto& e : errors) msg += " " + e + ";";
            throw std::runtime_error(msg);
        }
        prompts = PromptRegistry::load(cfg.prompt_dir);
        backends = make_backend_factory(cfg.backend);
        if (cfg.grader.backend) grader_backends = make_backend_factory(*cfg.grader.backend);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    const fs::path traces_dir = cfg.output_dir / "traces";
    HooksFactory hooks = [&](const Problem& p, int run, std::optional<int> pass) {
        auto writer = std::make_shared<TraceWriter>(traces_dir / trace_file_name(p.id, run, pass));
        return TraceHooks{[writer](const RunTrace& t) { writer->header(t); },
                          [writer](const AgentCall& c) { writer->call(c); },
                          [writer](const RunTrace& t) { writer->result(t); }};
    };
    ExamEnv env{*prompts, backends, hooks, cfg.parallelism};
    Grading grading{cfg, *prompts, grader_backends};

    json results{{"framework", to_string(cfg.pipeline.framework)},
                 {"exam_id", manifest.exam.exam_id},
                 {"config", cfg.pipeline},
                 {"runs", json::array()}};
    std::size_t total = 0, failed = 0;
    try {
        for (int r = 0; r < cfg.runs; ++r) {
            json run{{"run_index", r}};
            std::vector<RunTrace> traces;
            std::int64_t tin = 0, tout = 0;
            std::optional<int> selected_pass;
            if (cfg.pipeline.framework == Framework::BestOfN) {
                auto grader = [&](const Problem& p, const RunTrace& t) {
                    return t.error ? Rational{0} : grading(p, t.final_solution, r).score;
                };
                BestOfNResult best = solve_best_of_n(manifest.problems, cfg.pipeline, env, grader, r);
                json totals = json::array();
                for (const auto& t : best.totals) totals.push_back(t);
                for (const auto& pass : best.passes) {
                    for (const auto& t : pass) {
                        tin += t.total_tokens_in();
                        tout += t.total_tokens_out();
                    }
                }
                selected_pass = static_cast<int>(best.selected);
                run["pass_totals"] = totals;
                traces = best.best();
            } else {
                traces = run_exam_pass(manifest.problems, cfg.pipeline, env, r);
                for (const auto& t : traces) {
                    tin += t.total_tokens_in();
                    tout += t.total_tokens_out();
                }
            }
            run["selected_pass"] = selected_pass ? json(*selected_pass) : json(nullptr);
            run["tokens_in"] = tin;
            run["tokens_out"] = tout;
            json problems = json::array();
            for (const auto& t : traces) {
                ++total;
                if (t.error) {
                    ++failed;
                    err << "warning: " << t.run_id << ": " << *t.error << "\n";
                }
                std::string rel = "traces/" + trace_file_name(t.problem_id, t.run_index, t.pass_index);
                problems.push_back(problem_entry(t, rel));
            }
            run["problems"] = problems;
            results["runs"].push_back(run);
        }
        write_text_file(cfg.output_dir / "results.json", results.dump(2) + "\n");
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    out << "framework " << to_string(cfg.pipeline.framework) << ": " << total << " problem runs, " << failed
        << " failed; results in " << (cfg.output_dir / "results.json").string() << "\n";
    if (total > 0 && failed == total) {
        err << "error: every problem run failed\n";
        return 1;
    }
    return 0;
}

int cmd_grade(const GradeArgs& args, std::ostream& out, std::ostream& err)
{
    try {
        json results = read_json_file(args.results, "results");
        Manifest manifest = load_manifest(args.manifest);
        CliConfig cfg = args.config ? load_config(*args.config) : CliConfig{};
        PromptRegistry prompts = PromptRegistry::load(cfg.prompt_dir);
        BackendFactory grader_backends;
        if (cfg.grader.backend) grader_backends = make_backend_factory(*cfg.grader.backend);
        Grading grading{cfg, prompts, grader_backends};

        ReportInput input{manifest, results.value("framework", std::string{}), {}, 0, 0, {}};
        for (const auto& run : results.at("runs")) {
            GradedRun g;
            g.sheet.exam_id = manifest.exam.exam_id;
            g.sheet.run_index = run.value("run_index", 0);
            g.tokens_in = run.value("tokens_in", std::int64_t{0});
            g.tokens_out = run.value("tokens_out", std::int64_t{0});
            for (const auto& entry : run.at("problems")) {
                std::string id = entry.at("problem_id").get<std::string>();
                const Problem* p = manifest.find(id);
                if (!p) throw std::runtime_error("results reference unknown problem id '" + id + "'");
                StructuredSolution sol = entry.at("solution").get<StructuredSolution>();
                GradeResult gr = grading(*p, sol, g.sheet.run_index);
                if (gr.flagged) {
                    input.flags.push_back("run " + std::to_string(g.sheet.run_index) + " " + id + ": " + gr.note);
                }
                if (gr.call) {
                    input.grader_tokens_in += gr.call->tokens_in;
                    input.grader_tokens_out += gr.call->tokens_out;
                }
                g.sheet.per_problem[id] = gr.score;
            }
            input.runs.push_back(std::move(g));
        }
        json report = make_report(input);
        fs::path dir = args.out ? *args.out : args.results.parent_path();
        write_text_file(dir / "report.json", report.dump(2) + "\n");
        std::string text = render_report_text(report);
        write_text_file(dir / "report.txt", text);
        out << text;
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_replay(const ReplayArgs& args, std::ostream& out, std::ostream& err)
{
    RunTrace trace;
    std::optional<PromptRegistry> prompts;
    try {
        trace = read_trace(args.trace);
        prompts = PromptRegistry::load(args.prompt_dir.value_or(fs::path{}));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    ReplayReport report = replay_trace(trace, *prompts);
    if (report.identical) {
        out << trace.run_id << ": " << report.message << "\n";
        return 0;
    }
    err << trace.run_id << ": " << report.message << "\n";
    return 1;
}

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err)
{
    try {
        json report = read_json_file(args.report, "report");
        out << (args.json_output ? report.dump(2) + "\n" : render_report_text(report));
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Coevolutionary multi-agent physics solver"};
    app.require_subcommand(1);

    RunArgs run_args;
    std::string framework, out_dir, prompt_dir;
    int cv = 0, runs = 0, parallelism = 0, max_iterations = 0, n_best_of = 0;
    double temperature = -1;
    auto* run = app.add_subcommand("run", "Solve every problem of a manifest");
    run->add_option("--config", run_args.config, "Config JSON")->required();
    run->add_option("--manifest", run_args.manifest, "Manifest JSON")->required();
    auto* o_framework = run->add_option("--framework", framework,
                                        "minions | single | best_of_n | self_moa | self_refine");
    auto* o_cv = run->add_option("--cv", cv, "Consecutive verifications");
    auto* o_iter = run->add_option("--max-iterations", max_iterations, "Loop bound");
    auto* o_runs = run->add_option("--runs", runs, "Independent runs of the exam");
    auto* o_par = run->add_option("--parallelism", parallelism, "Concurrent problem pipelines");
    auto* o_n = run->add_option("--n-best-of", n_best_of, "Best-of-N passes");
    auto* o_temp = run->add_option("--temperature", temperature, "Sampling temperature");
    auto* o_out = run->add_option("--out", out_dir, "Output directory");
    auto* o_prompts = run->add_option("--prompt-dir", prompt_dir, "Prompt override directory");

    GradeArgs grade_args;
    std::string grade_config, grade_out;
    auto* grade_cmd = app.add_subcommand("grade", "Grade a results file");
    grade_cmd->add_option("--results", grade_args.results, "results.json")->required();
    grade_cmd->add_option("--manifest", grade_args.manifest, "Manifest JSON")->required();
    auto* g_config = grade_cmd->add_option("--config", grade_config, "Config JSON with grader settings");
    auto* g_out = grade_cmd->add_option("--out", grade_out, "Report directory");

    ReplayArgs replay_args;
    std::string replay_prompts;
    auto* replay = app.add_subcommand("replay", "Re-execute a trace against its recorded responses");
    replay->add_option("trace", replay_args.trace, "Trace JSONL")->required();
    auto* r_prompts = replay->add_option("--prompt-dir", replay_prompts, "Prompt override directory");

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "Render a report JSON");
    report->add_option("report", report_args.report, "report.json")->required();
    report->add_flag("--json", report_args.json_output, "Print JSON instead of text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    if (*run) {
        auto& o = run_args.overrides;
        try {
            if (*o_framework) o.framework = parse_framework(framework);
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return 2;
        }
        if (*o_cv) o.cv = cv;
        if (*o_iter) o.max_iterations = max_iterations;
        if (*o_runs) o.runs = runs;
        if (*o_par) o.parallelism = parallelism;
        if (*o_n) o.n_best_of = n_best_of;
        if (*o_temp) o.temperature = temperature;
        if (*o_out) o.output_dir = out_dir;
        if (*o_prompts) o.prompt_dir = prompt_dir;
        return cmd_run(run_args, out, err);
    }
    if (*grade_cmd) {
        if (*g_config) grade_args.config = grade_config;
        if (*g_out) grade_args.out = grade_out;
        return cmd_grade(grade_args, out, err);
    }
    if (*replay) {
        if (*r_prompts) replay_args.prompt_dir = replay_prompts;
        return cmd_replay(replay_args, out, err);
    }
    return cmd_report(report_args, out, err);
}

} // namespace minions
