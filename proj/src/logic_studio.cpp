#include "minions/logic_studio.hpp"

#include "minions/parse.hpp"

#include <stdexcept>

namespace minions {

LogicEpisode::LogicEpisode(StudioContext& ctx, const Problem& problem, std::optional<VisualDescription> visual,
                           Studio studio)
    : ctx_(ctx), problem_(problem), visual_(std::move(visual)), studio_(studio)
{
    system_ = ctx_.prompts.render_parts(TemplateId::solver, {{"problem", ""}, {"visual_json", ""}}).system;
}

std::string LogicEpisode::opening_message() const
{
    return ctx_.prompts
        .render_parts(TemplateId::solver,
                      {{"problem", problem_.statement}, {"visual_json", visual_ ? visual_section(*visual_) : ""}})
        .user;
}

std::string LogicEpisode::send(const std::string& agent, std::optional<std::int64_t> ref_seq,
                               const std::function<std::string(const std::string&)>& outcome)
{
    auto req = ctx_.request(agent, system_, dialogue_);
    auto resp = ctx_.backend.complete(req);
    dialogue_.push_back({MessageRole::assistant, resp.text, {}});
    ctx_.recorder.record(studio_, req, resp, outcome(resp.text), ref_seq);
    return resp.text;
}

StructuredSolution LogicEpisode::send_solution(const std::string& agent, std::optional<std::int64_t> ref_seq)
{
    StructuredSolution parsed;
    send(agent, ref_seq, [&](const std::string& text) {
        parsed = parse_solution(text);
        return std::string(to_string(parsed.verdict));
    });
    return parsed;
}

StructuredSolution LogicEpisode::generate_initial()
{
    std::vector<std::string> images;
    if (!visual_) images = problem_.images;
    dialogue_.clear();
    dialogue_.push_back({MessageRole::user, opening_message(), std::move(images)});
    return send_solution("solver", std::nullopt);
}

StructuredSolution LogicEpisode::self_improve(const StructuredSolution& solution)
{
    if (dialogue_.empty()) throw std::logic_error("self_improve before generate_initial");
    (void)solution;
    dialogue_.push_back({MessageRole::user, ctx_.prompts.render(TemplateId::introspector_improve, {}), {}});
    return send_solution("introspector_improve", std::nullopt);
}

StructuredSolution LogicEpisode::self_refine(const StructuredSolution& solution, const VerificationOutcome& report,
                                             std::optional<std::int64_t> report_seq)
{
    if (report.passed()) throw std::invalid_argument("self_refine requires a failing verification report");
    if (dialogue_.empty()) throw std::logic_error("self_refine before generate_initial");
    (void)solution;
    dialogue_.push_back(
        {MessageRole::user, ctx_.prompts.render(TemplateId::introspector_refine, {{"bug_report", report.raw_report}}),
         {}});
    return send_solution("introspector_refine", report_seq);
}

namespace {

std::string outcome_of(bool as_solution, const std::string& text)
{
    return as_solution ? std::string(to_string(parse_solution(text).verdict)) : std::string("reply");
}

} // namespace

std::string LogicEpisode::start_with(const std::string& agent, const std::string& user_text, bool as_solution,
                                     std::vector<std::string> images)
{
    dialogue_.clear();
    dialogue_.push_back({MessageRole::user, user_text, std::move(images)});
    return send(agent, std::nullopt, [&](const std::string& text) { return outcome_of(as_solution, text); });
}

std::string LogicEpisode::continue_with(const std::string& agent, const std::string& user_text, bool as_solution)
{
    if (dialogue_.empty()) throw std::logic_error("continue_with before generate_initial");
    dialogue_.push_back({MessageRole::user, user_text, {}});
    return send(agent, std::nullopt, [&](const std::string& text) { return outcome_of(as_solution, text); });
}

} // namespace minions
