#pragma once

#include "minions/rational.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace minions {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Enumerations. Each has to_string / parse_* pairs; the parse functions throw
// std::invalid_argument on unknown names so manifests fail loudly.
// ---------------------------------------------------------------------------

enum class Modality { TO, TI, TV, TD };
enum class Field { Mechanics, Electromagnetism, Thermodynamics, Optics, ModernPhysics };
enum class SolutionVerdict { Complete, Partial, Unparsed };
enum class Stage { ImageVerify, PhysicsVerify, GeneralVerify };
enum class Verdict { Pass, Fail };
enum class Studio { Visual, Logic, Review, Baseline, Grader };
enum class Framework { Minions, Single, BestOfN, SelfMoA, SelfRefine };
enum class FigureType { plot, free_body, circuit, optics, waveform, table, schematic, object_image, other };

std::string_view to_string(Modality m);
std::string_view to_string(Field f);
std::string_view to_string(SolutionVerdict v);
std::string_view to_string(Stage s);
std::string_view to_string(Verdict v);
std::string_view to_string(Studio s);
std::string_view to_string(Framework f);
std::string_view to_string(FigureType t);

Modality parse_modality(std::string_view s);
Field parse_field(std::string_view s);
SolutionVerdict parse_solution_verdict(std::string_view s);
Stage parse_stage(std::string_view s);
Verdict parse_verdict(std::string_view s);
Studio parse_studio(std::string_view s);
/// Accepts the canonical names ("BestOfN") and CLI spellings ("best_of_n").
Framework parse_framework(std::string_view s);
/// Returns nullopt for names outside the nine-value vocabulary.
std::optional<FigureType> parse_figure_type(std::string_view s);

// ---------------------------------------------------------------------------
// Exam content
// ---------------------------------------------------------------------------

struct Problem {
    std::string id;
    std::string exam_id;
    std::string statement;
    std::vector<std::string> images;
    Modality modality = Modality::TO;
    Field field = Field::Mechanics;
    Rational full_mark{1};
    std::optional<std::string> marking_scheme;
    /// Exact-answer grading: reference value (numeric or a short label such as "B").
    std::optional<std::string> reference_answer;
    /// Relative tolerance for numeric reference answers.
    std::optional<double> tolerance;

    bool operator==(const Problem&) const = default;
};

struct MedalThresholds {
    Rational gold;
    Rational silver;
    Rational bronze;

    bool operator==(const MedalThresholds&) const = default;
};

struct Exam {
    std::string exam_id;
    std::string name;
    Rational full_mark_model;
    MedalThresholds thresholds;

    bool operator==(const Exam&) const = default;
};

/// Invariant violations; empty means valid.
std::vector<std::string> validate_problem(const Problem& p);
std::vector<std::string> validate_exam(const Exam& e);

struct Manifest {
    Exam exam;
    std::vector<Problem> problems;
    std::filesystem::path base_dir;

    const Problem* find(std::string_view problem_id) const;
};

/// Reads a manifest, resolving image paths against the manifest's directory.
/// Throws std::runtime_error naming the path on I/O, JSON or validation errors.
Manifest load_manifest(const std::filesystem::path& path);
Manifest manifest_from_json(const json& doc, const std::filesystem::path& base_dir);

// ---------------------------------------------------------------------------
// Visual descriptions
// ---------------------------------------------------------------------------

/// The literal used by extraction prompts for values that cannot be read.
inline constexpr std::string_view kUnknown = "unknown";
bool is_unknown(const json& value);

struct Figure {
    std::string id;
    std::string theme;
    FigureType figure_type = FigureType::other;
    /// Remaining type-specific keys (axes, curves, components, ...).
    json payload = json::object();

    bool operator==(const Figure&) const = default;
};

struct VisualDescription {
    std::string title;
    std::vector<Figure> figures;

    bool operator==(const VisualDescription&) const = default;

    /// Accepts both the single-figure shape (top-level figure_type) and the
    /// multi-figure shape ({"title", "figure": [...]}).
    static VisualDescription from_json(const json& doc);
    /// Always the multi-figure shape; keys are sorted.
    json to_json() const;
    /// Pretty-printed, stable key order.
    std::string to_pretty_string() const;
};

std::vector<std::string> validate_visual(const VisualDescription& v);

// ---------------------------------------------------------------------------
// Solutions and verification
// ---------------------------------------------------------------------------

struct StructuredSolution {
    SolutionVerdict verdict = SolutionVerdict::Unparsed;
    std::optional<std::string> final_answer;
    std::string method_sketch;
    std::string detailed_solution;
    std::string raw;

    bool operator==(const StructuredSolution&) const = default;
};

struct Finding {
    std::string location;
    std::string category;
    std::string issue;
    std::optional<std::string> confidence;

    bool operator==(const Finding&) const = default;
};

struct VerificationOutcome {
    Stage stage = Stage::PhysicsVerify;
    Verdict verdict = Verdict::Fail;
    std::vector<Finding> findings;
    std::string raw_report;

    bool passed() const { return verdict == Verdict::Pass; }
    bool operator==(const VerificationOutcome&) const = default;
};

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

struct MessageRecord {
    std::string role;
    std::string content;
    int image_count = 0;

    bool operator==(const MessageRecord&) const = default;
};

struct AgentCall {
    std::int64_t seq = 0;
    Studio studio = Studio::Logic;
    std::string role;
    std::string system_prompt;
    std::vector<MessageRecord> messages;
    std::string response;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
    bool tokens_estimated = false;
    int loop_iteration = 0;
    int c = 0;
    int f = 0;
    std::int64_t wall_ms = 0;
    /// Parsed result of the response ("Pass", "Complete", "json_parse_failure", ...).
    std::string outcome;
    /// For refinement calls: seq of the verification whose report was consumed.
    std::optional<std::int64_t> ref_seq;

    int image_count() const;
    bool operator==(const AgentCall&) const = default;
};

struct RunTrace {
    std::string run_id;
    std::string problem_id;
    Framework framework = Framework::Minions;
    int run_index = 0;
    std::optional<int> pass_index;
    std::optional<Problem> problem;
    json config = json::object();
    std::vector<AgentCall> calls;
    StructuredSolution final_solution;
    bool accepted = false;
    /// False when the visual loop ran out of rounds before acceptance.
    std::optional<bool> visual_verified;
    std::optional<std::string> error;

    std::int64_t total_tokens_in() const;
    std::int64_t total_tokens_out() const;
    std::int64_t total_tokens() const { return total_tokens_in() + total_tokens_out(); }
};

/// Counters of the consecutive-verification loop.
struct LoopState {
    int c = 0;
    int f = 0;
    int iteration = 0;
    int cv = 2;
    int max_iterations = 5;
};

// JSON conversions (ADL hooks for nlohmann::json).
void to_json(json& j, const Rational& r);
void from_json(const json& j, Rational& r);
void to_json(json& j, const Problem& p);
void from_json(const json& j, Problem& p);
void to_json(json& j, const Exam& e);
void from_json(const json& j, Exam& e);
void to_json(json& j, const StructuredSolution& s);
void from_json(const json& j, StructuredSolution& s);
void to_json(json& j, const Finding& f);
void from_json(const json& j, Finding& f);
void to_json(json& j, const VerificationOutcome& v);
void from_json(const json& j, VerificationOutcome& v);
void to_json(json& j, const MessageRecord& m);
void from_json(const json& j, MessageRecord& m);
void to_json(json& j, const AgentCall& c);
void from_json(const json& j, AgentCall& c);

} // namespace minions
