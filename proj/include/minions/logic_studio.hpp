#pragma once

#include "minions/pipeline.hpp"

#include <optional>

namespace minions {

/// One candidate-solution dialogue with the Solver and Introspector.
///
/// generate_initial() starts a fresh episode; self_improve() and
/// self_refine() continue it. Each operation makes exactly one call.
class LogicEpisode {
public:
    /// Raw images are attached only when no description is available.
    LogicEpisode(StudioContext& ctx, const Problem& problem, std::optional<VisualDescription> visual,
                 Studio studio = Studio::Logic);

    StructuredSolution generate_initial();
    StructuredSolution self_improve(const StructuredSolution& solution);
    /// Throws std::invalid_argument when `report` is a Pass.
    StructuredSolution self_refine(const StructuredSolution& solution, const VerificationOutcome& report,
                                   std::optional<std::int64_t> report_seq = std::nullopt);

    /// Starts a fresh episode whose first turn is `user_text`.
    std::string start_with(const std::string& agent, const std::string& user_text, bool as_solution,
                           std::vector<std::string> images = {});
    /// Sends `user_text` as the next turn and returns the raw reply. The
    /// trace outcome is the solution verdict when `as_solution`, else "reply".
    std::string continue_with(const std::string& agent, const std::string& user_text, bool as_solution = true);

    const std::vector<ChatMessage>& dialogue() const { return dialogue_; }
    const std::string& system_prompt() const { return system_; }
    /// The Solver's opening user message.
    std::string opening_message() const;

private:
    std::string send(const std::string& agent, std::optional<std::int64_t> ref_seq,
                     const std::function<std::string(const std::string&)>& outcome);
    StructuredSolution send_solution(const std::string& agent, std::optional<std::int64_t> ref_seq);

    StudioContext& ctx_;
    const Problem& problem_;
    std::optional<VisualDescription> visual_;
    Studio studio_;
    std::string system_;
    std::vector<ChatMessage> dialogue_;
};

} // namespace minions
