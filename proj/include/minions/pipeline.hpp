#pragma once

#include "minions/backend.hpp"
#include "minions/domain.hpp"
#include "minions/prompts.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace minions {

struct PipelineConfig {
    Framework framework = Framework::Minions;
    int cv = 2;
    int max_iterations = 5;
    int n_best_of = 3;
    int refine_iterations = 3;
    int moa_candidates = 2;
    double temperature = kDefaultTemperature;
    /// Run self-improve at the top of every loop iteration, including
    /// between consecutive passes. When false it runs only after a fresh generation.
    bool strict_alg1 = true;
    /// Verify rounds allowed in the visual loop.
    int visual_max_rounds = 5;
    std::optional<int> max_tokens;

    /// Invariant violations; empty means valid.
    std::vector<std::string> validate() const;
    bool operator==(const PipelineConfig&) const = default;
};

void to_json(json& j, const PipelineConfig& c);
/// Missing keys keep their defaults; unknown keys are ignored.
void from_json(const json& j, PipelineConfig& c);

using CallListener = std::function<void(const AgentCall&)>;

/// Appends AgentCalls to a RunTrace, assigning sequence numbers and stamping
/// the loop counters current at the time of the call.
class Recorder {
public:
    explicit Recorder(RunTrace& trace, CallListener listener = {});

    LoopState& state() { return state_; }
    RunTrace& trace() { return trace_; }

    const AgentCall& record(Studio studio, const CompletionRequest& req, const CompletionResponse& resp,
                            std::string outcome, std::optional<std::int64_t> ref_seq = std::nullopt);

private:
    RunTrace& trace_;
    CallListener listener_;
    LoopState state_;
};

/// Everything a studio needs for one problem pipeline.
struct StudioContext {
    const PipelineConfig& cfg;
    Backend& backend;
    const PromptRegistry& prompts;
    Recorder& recorder;

    /// A request carrying the configured sampling parameters.
    CompletionRequest request(std::string agent, std::string system_prompt, std::vector<ChatMessage> messages) const;
};

/// Markdown section presenting a figure description to a text-only agent.
std::string visual_section(const VisualDescription& visual);

} // namespace minions
