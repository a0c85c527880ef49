#pragma once

#include "minions/pipeline.hpp"

#include <optional>

namespace minions {

struct ReviewResult {
    VerificationOutcome outcome;
    int stages_run = 0;
    /// Seq of the call whose verdict decided the outcome.
    std::int64_t seq = 0;
};

VerificationOutcome physics_verify(const Problem& problem, const std::optional<VisualDescription>& visual,
                                   const StructuredSolution& solution, StudioContext& ctx);
VerificationOutcome general_verify(const Problem& problem, const std::optional<VisualDescription>& visual,
                                   const StructuredSolution& solution, StudioContext& ctx);

/// Physics stage, then the general stage only if physics passed.
ReviewResult review(const Problem& problem, const std::optional<VisualDescription>& visual,
                    const StructuredSolution& solution, StudioContext& ctx);

/// User message shown to both verifiers.
std::string review_message(const Problem& problem, const std::optional<VisualDescription>& visual,
                           const StructuredSolution& solution);

} // namespace minions
