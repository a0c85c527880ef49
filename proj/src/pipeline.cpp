#include "minions/pipeline.hpp"

namespace minions {

std::vector<std::string> PipelineConfig::validate() const
{
    std::vector<std::string> out;
    auto positive = [&](int v, const char* name) {
        if (v < 1) out.push_back(std::string(name) + " must be >= 1");
    };
    positive(cv, "cv");
    positive(max_iterations, "max_iterations");
    positive(n_best_of, "n_best_of");
    positive(refine_iterations, "refine_iterations");
    positive(moa_candidates, "moa_candidates");
    positive(visual_max_rounds, "visual_max_rounds");
    if (!(temperature >= 0.0 && temperature <= 2.0)) out.push_back("temperature must be in [0, 2]");
    if (max_tokens && *max_tokens < 1) out.push_back("max_tokens must be >= 1");
    return out;
}

void to_json(json& j, const PipelineConfig& c)
{
    j = json{{"framework", std::string(to_string(c.framework))},
             {"cv", c.cv},
             {"max_iterations", c.max_iterations},
             {"n_best_of", c.n_best_of},
             {"refine_iterations", c.refine_iterations},
             {"moa_candidates", c.moa_candidates},
             {"temperature", c.temperature},
             {"strict_alg1", c.strict_alg1},
             {"visual_max_rounds", c.visual_max_rounds},
             {"max_tokens", c.max_tokens ? json(*c.max_tokens) : json(nullptr)}};
}

void from_json(const json& j, PipelineConfig& c)
{
    if (auto it = j.find("framework"); it != j.end()) c.framework = parse_framework(it->get<std::string>());
    auto get_int = [&](const char* key, int& dst) {
        if (auto it = j.find(key); it != j.end()) dst = it->get<int>();
    };
    get_int("cv", c.cv);
    get_int("max_iterations", c.max_iterations);
    get_int("n_best_of", c.n_best_of);
    get_int("refine_iterations", c.refine_iterations);
    get_int("moa_candidates", c.moa_candidates);
    get_int("visual_max_rounds", c.visual_max_rounds);
    if (auto it = j.find("temperature"); it != j.end()) c.temperature = it->get<double>();
    if (auto it = j.find("strict_alg1"); it != j.end()) c.strict_alg1 = it->get<bool>();
    if (auto it = j.find("max_tokens"); it != j.end()) {
        if (it->is_null()) {
            c.max_tokens.reset();
        } else {
            c.max_tokens = it->get<int>();
        }
    }
}

Recorder::Recorder(RunTrace& trace, CallListener listener) : trace_(trace), listener_(std::move(listener)) {}

const AgentCall& Recorder::record(Studio studio, const CompletionRequest& req, const CompletionResponse& resp,
                                  std::string outcome, std::optional<std::int64_t> ref_seq)
{
    AgentCall call;
    call.seq = static_cast<std::int64_t>(trace_.calls.size()) + 1;
    call.studio = studio;
    call.role = req.agent;
    call.system_prompt = req.system_prompt;
    for (const auto& m : req.messages) {
        call.messages.push_back({std::string(to_string(m.role)), m.content, static_cast<int>(m.images.size())});
    }
    call.response = resp.text;
    call.tokens_in = resp.tokens_in;
    call.tokens_out = resp.tokens_out;
    call.tokens_estimated = resp.tokens_estimated;
    call.loop_iteration = state_.iteration;
    call.c = state_.c;
    call.f = state_.f;
    call.wall_ms = resp.latency_ms;
    call.outcome = std::move(outcome);
    call.ref_seq = ref_seq;
    trace_.calls.push_back(std::move(call));
    if (listener_) listener_(trace_.calls.back());
    return trace_.calls.back();
}

CompletionRequest StudioContext::request(std::string agent, std::string system_prompt,
                                         std::vector<ChatMessage> messages) const
{
    CompletionRequest req;
    req.agent = std::move(agent);
    req.system_prompt = std::move(system_prompt);
    req.messages = std::move(messages);
    req.temperature = cfg.temperature;
    req.max_tokens = cfg.max_tokens;
    return req;
}

std::string visual_section(const VisualDescription& visual)
{
    return "\n### Figure Description (structured JSON) ###\n\n```json\n" + visual.to_pretty_string() + "\n```\n";
}

} // namespace minions
