#include "minions/orchestrator.hpp"

#include "minions/logic_studio.hpp"
#include "minions/parse.hpp"
#include "minions/review_studio.hpp"
#include "minions/visual_studio.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace minions {

std::string make_run_id(const Problem& problem, int run_index, std::optional<int> pass_index)
{
    std::string id = problem.exam_id + "/" + problem.id + "/run" + std::to_string(run_index);
    if (pass_index) id += ".pass" + std::to_string(*pass_index);
    return id;
}

RunTrace begin_trace(const Problem& problem, const PipelineConfig& cfg, const RunInfo& info)
{
    RunTrace t;
    t.run_id = make_run_id(problem, info.run_index, info.pass_index);
    t.problem_id = problem.id;
    t.framework = cfg.framework;
    t.run_index = info.run_index;
    t.pass_index = info.pass_index;
    t.problem = problem;
    t.config = cfg;
    return t;
}

namespace {

void check_config(const PipelineConfig& cfg)
{
    auto errors = cfg.validate();
    if (errors.empty()) return;
    std::string msg = "invalid pipeline config:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw std::invalid_argument(msg);
}

/// Runs `body` with a fresh trace and recorder, converting failures into
/// trace.error so partial traces survive.
template <typename Body>
RunTrace run_with_trace(const Problem& problem, const PipelineConfig& cfg, Backend& backend,
                        const PromptRegistry& prompts, const RunInfo& info, Body&& body)
{
    check_config(cfg);
    RunTrace trace = begin_trace(problem, cfg, info);
    if (info.hooks.on_begin) info.hooks.on_begin(trace);
    Recorder rec(trace, info.hooks.on_call);
    StudioContext ctx{cfg, backend, prompts, rec};
    try {
        body(ctx, trace);
    } catch (const std::exception& e) {
        trace.accepted = false;
        trace.error = e.what();
    }
    if (info.hooks.on_end) info.hooks.on_end(trace);
    return trace;
}

} // namespace

RunTrace solve_minions(const Problem& problem, const PipelineConfig& cfg, Backend& backend,
                       const PromptRegistry& prompts, const RunInfo& info)
{
    if (cfg.framework != Framework::Minions) throw std::invalid_argument("solve_minions: framework must be Minions");
    return run_with_trace(problem, cfg, backend, prompts, info, [&](StudioContext& ctx, RunTrace& trace) {
        std::optional<VisualDescription> visual;
        if (!problem.images.empty()) {
            VisualResult vr = extract_visual(problem, ctx);
            visual = std::move(vr.description);
            trace.visual_verified = vr.verified;
        }

        LoopState& st = ctx.recorder.state();
        st = LoopState{0, 0, 0, cfg.cv, cfg.max_iterations};

        LogicEpisode episode(ctx, problem, visual);
        StructuredSolution solution = episode.generate_initial();
        trace.final_solution = solution;
        bool fresh = true;

        for (int it = 1; it <= cfg.max_iterations; ++it) {
            st.iteration = it;
            if (cfg.strict_alg1 || fresh) {
                solution = episode.self_improve(solution);
                trace.final_solution = solution;
            }
            fresh = false;

            ReviewResult r = review(problem, visual, solution, ctx);
            if (!r.outcome.passed()) {
                solution = episode.self_refine(solution, r.outcome, r.seq);
                trace.final_solution = solution;
                st.c = 0;
                ++st.f;
                if (st.f >= cfg.cv) {
                    solution = episode.generate_initial();
                    trace.final_solution = solution;
                    fresh = true;
                    st.c = 0;
                    st.f = 0;
                }
                continue;
            }
            ++st.c;
            st.f = 0;
            if (st.c >= cfg.cv) {
                trace.accepted = true;
                break;
            }
        }
    });
}

RunTrace solve_single(const Problem& problem, const PipelineConfig& cfg, Backend& backend,
                      const PromptRegistry& prompts, const RunInfo& info)
{
    return run_with_trace(problem, cfg, backend, prompts, info, [&](StudioContext& ctx, RunTrace& trace) {
        LogicEpisode episode(ctx, problem, std::nullopt);
        trace.final_solution = episode.generate_initial();
        trace.accepted = true;
    });
}

RunTrace solve_self_moa(const Problem& problem, const PipelineConfig& cfg, Backend& backend,
                        const PromptRegistry& prompts, const RunInfo& info)
{
    if (cfg.moa_candidates < 2) throw std::invalid_argument("solve_self_moa: moa_candidates must be >= 2");
    return run_with_trace(problem, cfg, backend, prompts, info, [&](StudioContext& ctx, RunTrace& trace) {
        LoopState& st = ctx.recorder.state();
        std::string candidates;
        for (int k = 1; k <= cfg.moa_candidates; ++k) {
            st.iteration = k;
            LogicEpisode sample(ctx, problem, std::nullopt, Studio::Baseline);
            StructuredSolution s = sample.generate_initial();
            if (k > 1) candidates += "\n\n";
            candidates += "### Candidate " + std::to_string(k) + " ###\n\n" + s.raw;
        }
        st.iteration = cfg.moa_candidates + 1;
        LogicEpisode aggregator(ctx, problem, std::nullopt, Studio::Baseline);
        std::string critique =
            prompts.render(TemplateId::moa_critique, {{"problem", problem.statement},
                                                      {"candidates", candidates},
                                                      {"candidate_count", std::to_string(cfg.moa_candidates)}});
        aggregator.start_with("moa_critique", critique, false, problem.images);
        std::string final_text =
            aggregator.continue_with("moa_synthesize", prompts.render(TemplateId::moa_synthesize, {}), true);
        trace.final_solution = parse_solution(final_text);
        trace.accepted = true;
    });
}

RunTrace solve_self_refine(const Problem& problem, const PipelineConfig& cfg, Backend& backend,
                           const PromptRegistry& prompts, const RunInfo& info)
{
    return run_with_trace(problem, cfg, backend, prompts, info, [&](StudioContext& ctx, RunTrace& trace) {
        LoopState& st = ctx.recorder.state();
        LogicEpisode episode(ctx, problem, std::nullopt, Studio::Baseline);
        trace.final_solution = episode.generate_initial();
        for (int it = 1; it <= cfg.refine_iterations; ++it) {
            st.iteration = it;
            episode.continue_with("refine_critique", prompts.render(TemplateId::refine_critique, {}), false);
            std::string revised =
                episode.continue_with("refine_revise", prompts.render(TemplateId::refine_revise, {}), true);
            trace.final_solution = parse_solution(revised);
        }
        trace.accepted = true;
    });
}

RunTrace solve(const Problem& problem, const PipelineConfig& cfg, Backend& backend, const PromptRegistry& prompts,
               const RunInfo& info)
{
    switch (cfg.framework) {
    case Framework::Minions:
        return solve_minions(problem, cfg, backend, prompts, info);
    case Framework::Single:
    case Framework::BestOfN:
        return solve_single(problem, cfg, backend, prompts, info);
    case Framework::SelfMoA:
        return solve_self_moa(problem, cfg, backend, prompts, info);
    case Framework::SelfRefine:
        return solve_self_refine(problem, cfg, backend, prompts, info);
    }
    throw std::invalid_argument("unknown framework");
}

void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn)
{
    std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(parallelism, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<RunTrace> run_exam_pass(const std::vector<Problem>& problems, const PipelineConfig& cfg,
                                    const ExamEnv& env, int run_index, std::optional<int> pass_index)
{
    std::vector<RunTrace> traces(problems.size());
    parallel_for(problems.size(), env.parallelism, [&](std::size_t i) {
        const Problem& p = problems[i];
        RunInfo info{run_index, pass_index, env.hooks ? env.hooks(p, run_index, pass_index) : TraceHooks{}};
        auto backend = env.backends(p, run_index, pass_index);
        traces[i] = solve(p, cfg, *backend, env.prompts, info);
    });
    return traces;
}

std::size_t select_best_run(const std::vector<Rational>& totals)
{
    if (totals.empty()) throw std::invalid_argument("select_best_run: no runs");
    std::size_t best = 0;
    for (std::size_t i = 1; i < totals.size(); ++i) {
        if (totals[i] > totals[best]) best = i;
    }
    return best;
}

BestOfNResult solve_best_of_n(const std::vector<Problem>& problems, const PipelineConfig& cfg, const ExamEnv& env,
                              const ExamGrader& grade, int run_index)
{
    check_config(cfg);
    PipelineConfig pass_cfg = cfg;
    pass_cfg.framework = Framework::BestOfN;
    BestOfNResult out;
    for (int k = 0; k < cfg.n_best_of; ++k) {
        auto traces = run_exam_pass(problems, pass_cfg, env, run_index, k);
        Rational total{0};
        for (std::size_t i = 0; i < problems.size(); ++i) total = total + grade(problems[i], traces[i]);
        out.passes.push_back(std::move(traces));
        out.totals.push_back(total);
    }
    out.selected = select_best_run(out.totals);
    return out;
}

} // namespace minions
