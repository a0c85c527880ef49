#pragma once

#include "minions/pipeline.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace minions {

/// Observers of one run; any may be empty.
struct TraceHooks {
    std::function<void(const RunTrace&)> on_begin;
    CallListener on_call;
    std::function<void(const RunTrace&)> on_end;
};

struct RunInfo {
    int run_index = 0;
    std::optional<int> pass_index;
    TraceHooks hooks;
};

/// "<exam>/<problem>/run<r>" with ".pass<k>" for Best-of-N passes.
std::string make_run_id(const Problem& problem, int run_index, std::optional<int> pass_index);

/// A trace with the header fields filled and no calls.
RunTrace begin_trace(const Problem& problem, const PipelineConfig& cfg, const RunInfo& info);

// Per-problem drivers. Backend failures abort the problem: the returned
// trace holds every call made so far and `error` is set.

RunTrace solve_minions(const Problem& problem, const PipelineConfig& cfg, Backend& backend,
                       const PromptRegistry& prompts, const RunInfo& info = {});
RunTrace solve_single(const Problem& problem, const PipelineConfig& cfg, Backend& backend,
                      const PromptRegistry& prompts, const RunInfo& info = {});
RunTrace solve_self_moa(const Problem& problem, const PipelineConfig& cfg, Backend& backend,
                        const PromptRegistry& prompts, const RunInfo& info = {});
RunTrace solve_self_refine(const Problem& problem, const PipelineConfig& cfg, Backend& backend,
                           const PromptRegistry& prompts, const RunInfo& info = {});

/// Dispatches on cfg.framework. For BestOfN this is one Single pass over the
/// problem, labelled BestOfN; whole-exam selection is solve_best_of_n.
RunTrace solve(const Problem& problem, const PipelineConfig& cfg, Backend& backend, const PromptRegistry& prompts,
               const RunInfo& info = {});

/// Runs fn(0..n-1) on at most `parallelism` threads. The first exception is
/// rethrown after all workers finish.
void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn);

using BackendFactory =
    std::function<std::unique_ptr<Backend>(const Problem& problem, int run_index, std::optional<int> pass_index)>;
using HooksFactory = std::function<TraceHooks(const Problem& problem, int run_index, std::optional<int> pass_index)>;

struct ExamEnv {
    const PromptRegistry& prompts;
    BackendFactory backends;
    HooksFactory hooks;
    int parallelism = 1;
};

/// Solves every problem once; traces are returned in problem order.
std::vector<RunTrace> run_exam_pass(const std::vector<Problem>& problems, const PipelineConfig& cfg,
                                    const ExamEnv& env, int run_index,
                                    std::optional<int> pass_index = std::nullopt);

/// Index of the maximal total; ties go to the lowest index.
std::size_t select_best_run(const std::vector<Rational>& totals);

using ExamGrader = std::function<Rational(const Problem& problem, const RunTrace& trace)>;

struct BestOfNResult {
    std::vector<std::vector<RunTrace>> passes;
    std::vector<Rational> totals;
    std::size_t selected = 0;

    const std::vector<RunTrace>& best() const { return passes.at(selected); }
};

/// n_best_of independent Single passes over the whole exam, each graded;
/// the pass with the highest total is selected.
BestOfNResult solve_best_of_n(const std::vector<Problem>& problems, const PipelineConfig& cfg, const ExamEnv& env,
                              const ExamGrader& grade, int run_index = 0);

} // namespace minions
