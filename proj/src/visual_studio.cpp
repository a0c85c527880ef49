#include "minions/visual_studio.hpp"

#include "minions/parse.hpp"

#include <stdexcept>

namespace minions {

namespace {

constexpr const char* kParseFailure = "json_parse_failure";
constexpr const char* kParseFailureReport =
    "The previous response did not contain a parseable JSON object describing the figure(s).";

std::optional<VisualDescription> read_description(const std::string& text)
{
    auto doc = extract_json_block(text);
    if (!doc) return std::nullopt;
    try {
        return VisualDescription::from_json(*doc);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string revision_message(const std::string& report)
{
    return "The verifier compared your description with the image(s) and reported the following problems:\n\n" +
           report + "\n\nRe-read the attached image(s) and output the FULL corrected JSON.";
}

} // namespace

VisualResult extract_visual(const Problem& problem, StudioContext& ctx)
{
    if (problem.images.empty()) throw std::invalid_argument("extract_visual: problem " + problem.id + " has no images");

    LoopState& st = ctx.recorder.state();
    st = LoopState{};
    st.cv = ctx.cfg.cv;
    st.max_iterations = ctx.cfg.visual_max_rounds;

    VisualResult result;
    std::optional<VisualDescription> current;
    bool last_parsed = false;

    auto absorb = [&](const std::string& text) {
        auto parsed = read_description(text);
        last_parsed = parsed.has_value();
        if (parsed) current = std::move(parsed);
        return last_parsed ? std::string("json_ok") : std::string(kParseFailure);
    };

    // Inspector: single turn, images attached.
    {
        auto parts = ctx.prompts.render_parts(TemplateId::inspector, {{"problem", problem.statement}});
        auto req = ctx.request("inspector", parts.system, {{MessageRole::user, parts.user, problem.images}});
        auto resp = ctx.backend.complete(req);
        ctx.recorder.record(Studio::Visual, req, resp, absorb(resp.text));
    }

    // Introspector dialogue: kept for the whole extraction.
    auto intro = ctx.prompts.render_parts(
        TemplateId::introspector_image,
        {{"problem", problem.statement}, {"visual_json", current ? current->to_pretty_string() : "{}"}});
    std::vector<ChatMessage> dialogue{{MessageRole::user, intro.user, problem.images}};
    auto introspect = [&](std::optional<std::int64_t> ref_seq) {
        auto req = ctx.request("introspector_image", intro.system, dialogue);
        auto resp = ctx.backend.complete(req);
        dialogue.push_back({MessageRole::assistant, resp.text, {}});
        ctx.recorder.record(Studio::Visual, req, resp, absorb(resp.text), ref_seq);
    };
    introspect(std::nullopt);

    for (int round = 1; round <= ctx.cfg.visual_max_rounds; ++round) {
        st.iteration = round;
        result.verify_rounds = round;
        std::string report;
        std::optional<std::int64_t> report_seq;
        bool passed = false;

        if (last_parsed) {
            auto parts = ctx.prompts.render_parts(TemplateId::verifier_image,
                                                  {{"visual_json", current->to_pretty_string()}});
            auto req = ctx.request("verifier_image", parts.system, {{MessageRole::user, parts.user, problem.images}});
            auto resp = ctx.backend.complete(req);
            VerificationOutcome v = parse_image_verdict(resp.text);
            passed = v.passed();
            report = v.raw_report;
            report_seq = ctx.recorder.record(Studio::Visual, req, resp, std::string(to_string(v.verdict))).seq;
        } else {
            report = kParseFailureReport;
        }

        if (passed) {
            ++st.c;
            if (st.c >= ctx.cfg.cv) {
                result.verified = true;
                break;
            }
            continue;
        }
        st.c = 0;
        if (round == ctx.cfg.visual_max_rounds) break;
        dialogue.push_back({MessageRole::user, revision_message(report), {}});
        introspect(report_seq);
    }

    result.description = std::move(current);
    st = LoopState{};
    return result;
}

} // namespace minions
