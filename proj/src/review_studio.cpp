#include "minions/review_studio.hpp"

#include "minions/parse.hpp"

namespace minions {

std::string review_message(const Problem& problem, const std::optional<VisualDescription>& visual,
                           const StructuredSolution& solution)
{
    std::string msg = "### Problem ###\n\n" + problem.statement + "\n";
    if (visual) msg += visual_section(*visual);
    msg += "\n### Solution ###\n\n" + solution.raw;
    return msg;
}

namespace {

VerificationOutcome verify(TemplateId tmpl, const char* agent, Stage stage, const Problem& problem,
                           const std::optional<VisualDescription>& visual, const StructuredSolution& solution,
                           StudioContext& ctx)
{
    // Fresh single-turn call: verifiers keep no memory across iterations.
    auto req = ctx.request(agent, ctx.prompts.render(tmpl, {}),
                           {{MessageRole::user, review_message(problem, visual, solution), {}}});
    auto resp = ctx.backend.complete(req);
    VerificationOutcome out = parse_review_verdict(resp.text, stage);
    ctx.recorder.record(Studio::Review, req, resp, std::string(to_string(out.verdict)));
    return out;
}

} // namespace

VerificationOutcome physics_verify(const Problem& problem, const std::optional<VisualDescription>& visual,
                                   const StructuredSolution& solution, StudioContext& ctx)
{
    return verify(TemplateId::physics_verifier, "physics_verifier", Stage::PhysicsVerify, problem, visual, solution,
                  ctx);
}

VerificationOutcome general_verify(const Problem& problem, const std::optional<VisualDescription>& visual,
                                   const StructuredSolution& solution, StudioContext& ctx)
{
    return verify(TemplateId::general_verifier, "general_verifier", Stage::GeneralVerify, problem, visual, solution,
                  ctx);
}

ReviewResult review(const Problem& problem, const std::optional<VisualDescription>& visual,
                    const StructuredSolution& solution, StudioContext& ctx)
{
    ReviewResult r;
    r.outcome = physics_verify(problem, visual, solution, ctx);
    r.stages_run = 1;
    r.seq = ctx.recorder.trace().calls.back().seq;
    if (!r.outcome.passed()) return r;
    r.outcome = general_verify(problem, visual, solution, ctx);
    r.stages_run = 2;
    r.seq = ctx.recorder.trace().calls.back().seq;
    return r;
}

} // namespace minions
