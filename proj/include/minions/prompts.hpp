#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace minions {

enum class TemplateId {
    inspector,
    introspector_image,
    verifier_image,
    solver,
    introspector_improve,
    introspector_refine,
    physics_verifier,
    general_verifier,
    moa_critique,
    moa_synthesize,
    refine_critique,
    refine_revise,
    grader,
};

inline constexpr std::array kAllTemplateIds{
    TemplateId::inspector,        TemplateId::introspector_image, TemplateId::verifier_image,
    TemplateId::solver,           TemplateId::introspector_improve, TemplateId::introspector_refine,
    TemplateId::physics_verifier, TemplateId::general_verifier,   TemplateId::moa_critique,
    TemplateId::moa_synthesize,   TemplateId::refine_critique,    TemplateId::refine_revise,
    TemplateId::grader,
};

std::string_view to_string(TemplateId id);
std::optional<TemplateId> parse_template_id(std::string_view name);

/// Thrown for unbalanced slot syntax; the message names the source file.
class MalformedTemplate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by render() when a required slot has no binding.
class MissingBinding : public std::runtime_error {
public:
    explicit MissingBinding(const std::string& slot)
        : std::runtime_error("missing binding for slot '" + slot + "'"), slot_(slot) {}
    const std::string& slot() const { return slot_; }

private:
    std::string slot_;
};

using Bindings = std::map<std::string, std::string>;

/// A prompt template.
///
/// Slots are written {{name}}; "{{{{" and "}}}}" produce literal "{{" and
/// "}}". A line consisting of "[[user]]" splits the body into a system part
/// and a user-message part. Lines starting with "#!" are comments.
class PromptTemplate {
public:
    static PromptTemplate parse(TemplateId id, std::string_view text, const std::string& source);

    TemplateId id() const { return id_; }
    const std::string& source() const { return source_; }
    const std::set<std::string>& required_slots() const { return slots_; }
    bool has_user_part() const { return user_.has_value(); }

    struct Rendered {
        std::string system;
        std::string user;
    };

    /// Renders both parts; extra bindings are ignored.
    Rendered render_parts(const Bindings& bindings) const;
    /// System and user parts joined by a blank line.
    std::string render(const Bindings& bindings) const;

private:
    TemplateId id_ = TemplateId::solver;
    std::string source_;
    std::string system_;
    std::optional<std::string> user_;
    std::set<std::string> slots_;
};

/// Immutable set of all thirteen templates.
class PromptRegistry {
public:
    /// The templates compiled into the binary.
    static PromptRegistry defaults();
    /// Defaults overridden by "<id>.txt" files found in `dir`.
    static PromptRegistry load(const std::filesystem::path& dir);

    const PromptTemplate& get(TemplateId id) const;
    std::string render(TemplateId id, const Bindings& bindings) const { return get(id).render(bindings); }
    PromptTemplate::Rendered render_parts(TemplateId id, const Bindings& bindings) const
    {
        return get(id).render_parts(bindings);
    }

private:
    std::map<TemplateId, PromptTemplate> templates_;
};

/// Text of the compiled-in default for `id`.
std::string_view default_template_text(TemplateId id);

} // namespace minions
