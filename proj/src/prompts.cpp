#include "minions/prompts.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

namespace minions {

namespace {

constexpr std::array<std::string_view, kAllTemplateIds.size()> kTemplateNames{
    "inspector",        "introspector_image", "verifier_image",   "solver",
    "introspector_improve", "introspector_refine", "physics_verifier", "general_verifier",
    "moa_critique",     "moa_synthesize",     "refine_critique",  "refine_revise",
    "grader",
};

constexpr std::string_view kUserMarker = "[[user]]";

bool is_slot_char(char c, bool first)
{
    auto u = static_cast<unsigned char>(c);
    return std::isalpha(u) || c == '_' || (!first && std::isdigit(u));
}

// Piece of a compiled template: literal text or a slot reference.
struct Piece {
    bool slot;
    std::string text;
};

std::vector<Piece> tokenize(std::string_view body, const std::string& source, int first_line)
{
    std::vector<Piece> pieces;
    std::string literal;
    int line = first_line;
    for (std::size_t i = 0; i < body.size();) {
        if (body.compare(i, 4, "{{{{") == 0) {
            literal += "{{";
            i += 4;
            continue;
        }
        if (body.compare(i, 4, "}}}}") == 0) {
            literal += "}}";
            i += 4;
            continue;
        }
        if (body.compare(i, 2, "{{") == 0) {
            std::size_t j = i + 2;
            while (j < body.size() && body[j] == ' ') ++j;
            std::size_t name_start = j;
            while (j < body.size() && is_slot_char(body[j], j == name_start)) ++j;
            std::size_t name_end = j;
            while (j < body.size() && body[j] == ' ') ++j;
            if (name_end == name_start || body.compare(j, 2, "}}") != 0) {
                throw MalformedTemplate("malformed template " + source + ": unbalanced '{{' at line " +
                                        std::to_string(line));
            }
            if (!literal.empty()) pieces.push_back({false, std::move(literal)});
            literal.clear();
            pieces.push_back({true, std::string(body.substr(name_start, name_end - name_start))});
            i = j + 2;
            continue;
        }
        if (body[i] == '\n') ++line;
        literal += body[i];
        ++i;
    }
    if (!literal.empty()) pieces.push_back({false, std::move(literal)});
    return pieces;
}

std::string substitute(const std::vector<Piece>& pieces, const Bindings& bindings)
{
    std::string out;
    for (const auto& p : pieces) {
        if (!p.slot) {
            out += p.text;
            continue;
        }
        auto it = bindings.find(p.text);
        if (it == bindings.end()) throw MissingBinding(p.text);
        out += it->second;
    }
    return out;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

std::string_view to_string(TemplateId id) { return kTemplateNames[static_cast<std::size_t>(id)]; }

std::optional<TemplateId> parse_template_id(std::string_view name)
{
    for (std::size_t i = 0; i < kTemplateNames.size(); ++i) {
        if (kTemplateNames[i] == name) return kAllTemplateIds[i];
    }
    return std::nullopt;
}

PromptTemplate PromptTemplate::parse(TemplateId id, std::string_view text, const std::string& source)
{
    PromptTemplate t;
    t.id_ = id;
    t.source_ = source;

    std::string system;
    std::optional<std::string> user;
    int user_first_line = 1;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::size_t next = eol == std::string_view::npos ? text.size() : eol + 1;
        std::string_view line = text.substr(pos, next - pos);
        ++line_no;
        pos = next;

        std::string_view content = line;
        while (!content.empty() && (content.back() == '\n' || content.back() == '\r')) content.remove_suffix(1);
        if (content.substr(0, 2) == "#!") continue;
        if (content == kUserMarker) {
            if (user) throw MalformedTemplate("malformed template " + source + ": repeated [[user]] marker");
            user.emplace();
            user_first_line = line_no + 1;
            continue;
        }
        (user ? *user : system) += line;
    }

    // Validate slot syntax for both parts.
    for (const auto& p : tokenize(system, source, 1)) {
        if (p.slot) t.slots_.insert(p.text);
    }
    if (user) {
        for (const auto& p : tokenize(*user, source, user_first_line)) {
            if (p.slot) t.slots_.insert(p.text);
        }
    }
    t.system_ = std::move(system);
    t.user_ = std::move(user);
    return t;
}

PromptTemplate::Rendered PromptTemplate::render_parts(const Bindings& bindings) const
{
    for (const auto& slot : slots_) {
        if (!bindings.contains(slot)) throw MissingBinding(slot);
    }
    Rendered r;
    r.system = substitute(tokenize(system_, source_, 1), bindings);
    if (user_) r.user = substitute(tokenize(*user_, source_, 1), bindings);
    return r;
}

std::string PromptTemplate::render(const Bindings& bindings) const
{
    Rendered r = render_parts(bindings);
    if (r.user.empty()) return r.system;
    std::string out = r.system;
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out + "\n\n" + r.user;
}

PromptRegistry PromptRegistry::defaults()
{
    PromptRegistry reg;
    for (TemplateId id : kAllTemplateIds) {
        reg.templates_.emplace(
            id, PromptTemplate::parse(id, default_template_text(id), "<builtin>/" + std::string(to_string(id)) + ".txt"));
    }
    return reg;
}

PromptRegistry PromptRegistry::load(const std::filesystem::path& dir)
{
    PromptRegistry reg = defaults();
    if (dir.empty()) return reg;
    if (!std::filesystem::is_directory(dir)) {
        throw std::runtime_error("prompt directory not found: " + dir.string());
    }
    for (TemplateId id : kAllTemplateIds) {
        auto path = dir / (std::string(to_string(id)) + ".txt");
        if (!std::filesystem::exists(path)) continue;
        reg.templates_.insert_or_assign(id, PromptTemplate::parse(id, read_file(path), path.string()));
    }
    return reg;
}

const PromptTemplate& PromptRegistry::get(TemplateId id) const { return templates_.at(id); }

} // namespace minions
