#pragma once

#include "minions/backend.hpp"
#include "minions/domain.hpp"
#include "minions/prompts.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace minions {

// ---------------------------------------------------------------------------
// Grading

inline constexpr double kDefaultRelativeTolerance = 1e-2;

struct GradeResult {
    Rational score{0};
    /// Set when the score could not be determined cleanly (no answer,
    /// unparseable grader output, clamped score).
    bool flagged = false;
    std::string note;
    /// The grader call, in rubric mode.
    std::optional<AgentCall> call;
};

/// Number in an answer string: the first number after the last '=', else
/// the first number not part of a subscript. Understands 1.2e-3,
/// "1.2 \times 10^{-3}", "1.2 × 10^-3" and simple fractions "3/4".
std::optional<double> extract_number(std::string_view text);

/// Answer with "\boxed{}", "$", surrounding parentheses, trailing periods
/// and whitespace removed, lowercased.
std::string normalize_answer(std::string_view text);

/// Full mark when the final answer matches the reference (relative
/// tolerance for numbers, case-insensitive text otherwise), else zero.
GradeResult grade_exact(const Problem& problem, const StructuredSolution& solution);

/// Reads the last "SCORE: x[/y]" sentinel of a grader reply.
std::optional<Rational> parse_grader_score(std::string_view text);

/// One grader call against the marking scheme; the score is clamped to
/// [0, full_mark].
GradeResult grade_rubric(const Problem& problem, const StructuredSolution& solution, Backend& grader,
                         const PromptRegistry& prompts, double temperature = kDefaultTemperature);

enum class GradeMode { Auto, Exact, Rubric };
GradeMode parse_grade_mode(std::string_view s);

/// Auto uses the rubric when the problem has a marking scheme and a grader
/// backend is available, and exact matching otherwise.
GradeResult grade(const Problem& problem, const StructuredSolution& solution, GradeMode mode, Backend* grader,
                  const PromptRegistry& prompts);

// ---------------------------------------------------------------------------
// Aggregation

struct ScoreSheet {
    std::string exam_id;
    int run_index = 0;
    std::map<std::string, Rational> per_problem;

    Rational total() const;
};

/// Violations of 0 <= score <= full_mark and unknown problem ids.
std::vector<std::string> validate_sheet(const ScoreSheet& sheet, const Manifest& manifest);

/// Mean of the run totals. Throws on empty input or mixed exam ids.
Rational aggregate_exam(const std::vector<ScoreSheet>& sheets);

enum class Medal { None, Bronze, Silver, Gold };
std::string_view to_string(Medal m);

/// Highest medal whose threshold the score reaches (>=).
Medal medal_for(const Exam& exam, const Rational& score);

struct ScoredProblem {
    Problem problem;
    Rational score;
};

using ProblemFilter = std::function<bool(const Problem&)>;

/// Mean normalized score in percent over the selected problems.
/// Throws std::invalid_argument when the selection is empty.
double mns(const std::vector<ScoredProblem>& scored, const ProblemFilter& select = {});

/// Sum over problems of the best score among the first k runs.
/// Throws when k < 1 or a problem has fewer than k runs.
Rational pass_at_k(const std::map<std::string, std::vector<Rational>>& runs_per_problem, int k);

enum class Dimension { Modality, Field };

/// MNS per class present in the data, in enum order.
std::vector<std::pair<std::string, double>> breakdown(const std::vector<ScoredProblem>& scored, Dimension dim);

// ---------------------------------------------------------------------------
// Reports

struct GradedRun {
    ScoreSheet sheet;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
};

struct ReportInput {
    const Manifest& manifest;
    std::string framework;
    std::vector<GradedRun> runs;
    std::int64_t grader_tokens_in = 0;
    std::int64_t grader_tokens_out = 0;
    std::vector<std::string> flags;
};

/// k values reported for R runs: powers of two up to R, plus R itself.
std::vector<int> pass_at_k_points(int runs);

/// Exam score, medal, per-problem scores, MNS tables, pass@k curve (when
/// more than one run) and token totals.
json make_report(const ReportInput& input);
std::string render_report_text(const json& report);

} // namespace minions
