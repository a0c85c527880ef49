#pragma once

#include "minions/domain.hpp"

#include <optional>
#include <string_view>

namespace minions {

// All parsers are total: any input yields a value and none of them throw.

/// Last valid JSON object inside a fenced code block; otherwise the largest
/// brace-balanced substring that parses as an object; otherwise nullopt.
std::optional<json> extract_json_block(std::string_view text);

/// Splits a Summary / Detailed Solution response and classifies the verdict.
StructuredSolution parse_solution(std::string_view text);

/// Reads the "IF CORRECT: yes|no" first line of an image-verifier reply.
/// A missing marker is a Fail whose report is the whole text.
VerificationOutcome parse_image_verdict(std::string_view text);

/// Reads the "Final Verdict" of a physics or general verifier reply.
/// Ambiguous or missing verdicts are a Fail.
VerificationOutcome parse_review_verdict(std::string_view text, Stage stage);

} // namespace minions
