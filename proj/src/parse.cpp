#include "minions/parse.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <cctype>
#include <string>
#include <vector>

namespace minions {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s)
{
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, eol - pos));
        pos = eol + 1;
    }
    return lines;
}

std::string join_lines(const std::vector<std::string_view>& lines, std::size_t from, std::size_t to)
{
    std::string out;
    for (std::size_t i = from; i < to && i < lines.size(); ++i) {
        if (i > from) out += '\n';
        out += lines[i];
    }
    return std::string(trim(out));
}

std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool is_markup(char c) { return c == '*' || c == '`' || c == '#' || c == '_'; }

/// Lowercased, markup characters removed, whitespace collapsed.
std::string normalize(std::string_view s)
{
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (is_markup(c)) continue;
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

/// Drops list numbering such as "1.", "2)", "a.", "iv)" or "(b)".
std::string_view strip_numbering(std::string_view s)
{
    s = trim(s);
    std::size_t i = 0;
    bool paren = false;
    if (i < s.size() && s[i] == '(') {
        paren = true;
        ++i;
    }
    std::size_t start = i;
    if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    } else {
        while (i < s.size() && i - start < 4 && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
        std::string_view word = s.substr(start, i - start);
        bool roman = !word.empty() && word.find_first_not_of("ivx") == std::string_view::npos;
        if (!(word.size() == 1 || roman)) return s;
    }
    if (i == start || i >= s.size()) return s;
    if (s[i] == '.' || s[i] == ')') {
        ++i;
    } else {
        return s;
    }
    (void)paren;
    if (i < s.size() && !is_space(s[i])) return s;
    return trim(s.substr(i));
}

/// Heading test tolerant of markdown and numbering. Returns the text that
/// follows a colon on the heading line (possibly empty) when `line` is the
/// heading `key`.
std::optional<std::string> match_heading(std::string_view line, std::string_view key)
{
    std::string norm = normalize(line);
    std::string_view n = strip_numbering(norm);
    if (!starts_with(n, key)) return std::nullopt;
    std::string_view rest = n.substr(key.size());
    if (!rest.empty() && rest.front() != ':') return std::nullopt;
    auto colon = line.find(':');
    if (colon == std::string_view::npos) return std::string{};
    std::string_view tail = line.substr(colon + 1);
    while (!tail.empty() && (is_space(tail.front()) || is_markup(tail.front()))) tail.remove_prefix(1);
    return std::string(trim(tail));
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

/// Strips bullet markers and emphasis from the start of a line. Sets
/// `bullet` when a marker was present.
std::string_view strip_bullet(std::string_view line, bool* bullet = nullptr)
{
    std::string_view s = trim(line);
    bool found = false;
    for (;;) {
        if (starts_with(s, "\xE2\x80\xA2")) {
            s.remove_prefix(3);
        } else if (!s.empty() && (s.front() == '-' || s.front() == '+') && s.size() > 1 && is_space(s[1])) {
            s.remove_prefix(1);
        } else if (!s.empty() && s.front() == '*' && s.size() > 1 && is_space(s[1])) {
            s.remove_prefix(1);
        } else {
            break;
        }
        found = true;
        s = trim(s);
    }
    if (bullet) *bullet = found;
    return s;
}

/// "**Label:** value" / "Label: value" -> (label lowercased, value).
std::optional<std::pair<std::string, std::string>> split_field(std::string_view line,
                                                               std::initializer_list<std::string_view> labels)
{
    std::string_view s = strip_bullet(line);
    std::string cleaned;
    // Remove emphasis around the label only (up to the first colon).
    auto colon = s.find(':');
    if (colon == std::string_view::npos || colon > 40) return std::nullopt;
    for (char c : s.substr(0, colon)) {
        if (c != '*' && c != '_' && c != '`') cleaned += c;
    }
    std::string label = to_lower(trim(cleaned));
    for (auto want : labels) {
        if (label == want) {
            std::string_view value = s.substr(colon + 1);
            while (!value.empty() && (is_space(value.front()) || value.front() == '*' || value.front() == '_'))
                value.remove_prefix(1);
            return std::pair{label, std::string(trim(value))};
        }
    }
    return std::nullopt;
}

std::string first_quoted(std::string_view s)
{
    for (char q : {'"', '`'}) {
        auto a = s.find(q);
        if (a == std::string_view::npos) continue;
        auto b = s.find(q, a + 1);
        if (b != std::string_view::npos && b > a + 1) return std::string(s.substr(a + 1, b - a - 1));
    }
    return {};
}

std::string strip_quotes(std::string_view s)
{
    s = trim(s);
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '`' && s.back() == '`'))) {
        s = s.substr(1, s.size() - 2);
    }
    return std::string(s);
}

bool is_empty_item(std::string_view text)
{
    std::string n = normalize(text);
    while (!n.empty() && (n.back() == '.' || n.back() == ':')) n.pop_back();
    return n.empty() || n == "none" || n == "n/a" || n == "no issues" || n == "no issues found" ||
           n == "none found" || n == "no findings";
}

// ---------------------------------------------------------------------------
// JSON extraction

std::optional<json> parse_object(std::string_view s)
{
    json j = json::parse(s.begin(), s.end(), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

/// End index (inclusive) of the brace-balanced span starting at `start`.
std::optional<std::size_t> balanced_end(std::string_view text, std::size_t start)
{
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i;
        }
    }
    return std::nullopt;
}

} // namespace

std::optional<json> extract_json_block(std::string_view text)
{
    // Fenced blocks, last valid wins.
    std::optional<json> fenced;
    std::size_t pos = 0;
    while (true) {
        std::size_t open = text.find("```", pos);
        if (open == std::string_view::npos) break;
        std::size_t body = text.find('\n', open + 3);
        if (body == std::string_view::npos) break;
        std::size_t close = text.find("```", body + 1);
        if (close == std::string_view::npos) break;
        if (auto j = parse_object(trim(text.substr(body + 1, close - body - 1)))) fenced = std::move(j);
        pos = close + 3;
    }
    if (fenced) return fenced;

    // Largest balanced substring that parses.
    std::optional<json> best;
    std::size_t best_len = 0;
    std::size_t covered_until = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{' || i < covered_until) continue;
        auto end = balanced_end(text, i);
        if (!end) continue;
        std::size_t len = *end - i + 1;
        if (len <= best_len) continue;
        if (auto j = parse_object(text.substr(i, len))) {
            best = std::move(j);
            best_len = len;
            covered_until = *end + 1;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------

StructuredSolution parse_solution(std::string_view text)
{
    StructuredSolution s;
    s.raw = std::string(text);
    auto lines = split_lines(text);

    std::optional<std::size_t> summary_at;
    std::optional<std::size_t> detailed_at;
    std::string summary_inline;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (!summary_at && !detailed_at) {
            if (auto rest = match_heading(lines[i], "summary")) {
                summary_at = i;
                summary_inline = *rest;
                continue;
            }
        }
        if (!detailed_at) {
            if (match_heading(lines[i], "detailed solution")) detailed_at = i;
        }
    }

    std::string summary_region;
    if (summary_at) {
        std::size_t end = detailed_at ? *detailed_at : lines.size();
        summary_region = join_lines(lines, *summary_at + 1, end);
        if (!summary_inline.empty()) summary_region = summary_inline + "\n" + summary_region;
    } else if (detailed_at) {
        summary_region = join_lines(lines, 0, *detailed_at);
    }

    if (detailed_at) {
        s.detailed_solution = join_lines(lines, *detailed_at + 1, lines.size());
    } else {
        s.detailed_solution = std::string(text);
    }

    // Method sketch inside the summary.
    if (summary_at || detailed_at) {
        auto sl = split_lines(summary_region);
        bool found = false;
        for (std::size_t i = 0; i < sl.size(); ++i) {
            auto n = normalize(sl[i]);
            std::string_view body = strip_numbering(n);
            if (starts_with(body, "method sketch")) {
                std::string inline_part;
                if (auto colon = sl[i].find(':'); colon != std::string_view::npos) {
                    std::string_view tail = sl[i].substr(colon + 1);
                    while (!tail.empty() && (is_space(tail.front()) || is_markup(tail.front()))) tail.remove_prefix(1);
                    inline_part = std::string(trim(tail));
                }
                std::string rest = join_lines(sl, i + 1, sl.size());
                s.method_sketch = inline_part.empty() ? rest : (rest.empty() ? inline_part : inline_part + "\n" + rest);
                found = true;
                break;
            }
        }
        if (!found) s.method_sketch = summary_region;
    }

    const std::string verdict_region = (summary_at || detailed_at) ? summary_region : std::string(text);
    const std::string hay = normalize(verdict_region);
    const bool partial = hay.find("not found a complete solution") != std::string::npos;
    const bool complete = !partial && (hay.find("successfully solved") != std::string::npos ||
                                       hay.find("final answer is") != std::string::npos);

    // Final answer: the remainder of the "final answer is" line.
    auto find_answer = [](std::string_view region) -> std::optional<std::string> {
        auto rl = split_lines(region);
        for (std::size_t i = 0; i < rl.size(); ++i) {
            std::string low = to_lower(rl[i]);
            auto at = low.find("final answer");
            if (at == std::string::npos) continue;
            std::string_view rest = rl[i].substr(at + std::string_view("final answer").size());
            auto skip = [&] {
                while (!rest.empty() && (is_space(rest.front()) || rest.front() == '*' || rest.front() == '_' ||
                                         rest.front() == ':'))
                    rest.remove_prefix(1);
            };
            skip();
            if (starts_with(to_lower(rest.substr(0, 3)), "is ") || to_lower(rest) == "is") rest.remove_prefix(2);
            skip();
            std::string_view ans = trim(rest);
            if (ans.empty()) {
                for (std::size_t k = i + 1; k < rl.size(); ++k) {
                    if (!is_blank(rl[k])) {
                        ans = trim(rl[k]);
                        break;
                    }
                }
            }
            while (!ans.empty() && (ans.back() == '.' || ans.back() == '*' || is_space(ans.back())))
                ans.remove_suffix(1);
            if (!ans.empty() && ans != "...") return std::string(ans);
        }
        return std::nullopt;
    };

    s.final_answer = find_answer(verdict_region);
    if (!s.final_answer) s.final_answer = find_answer(text);

    if (partial) {
        s.verdict = SolutionVerdict::Partial;
    } else if (complete) {
        s.verdict = SolutionVerdict::Complete;
        if (!s.final_answer) {
            // Fall back to the verdict sentence itself.
            for (auto line : split_lines(verdict_region)) {
                if (normalize(line).find("successfully solved") != std::string::npos) {
                    s.final_answer = std::string(trim(strip_bullet(line)));
                    break;
                }
            }
            if (!s.final_answer) s.final_answer = std::string(trim(verdict_region));
        }
    } else {
        s.verdict = SolutionVerdict::Unparsed;
    }
    return s;
}

// ---------------------------------------------------------------------------

namespace {

std::string fallback_report(std::string_view text)
{
    std::string r(text);
    if (trim(r).empty()) r = "(empty verifier response)";
    return r;
}

/// Accumulates field-structured findings: a repeated field or a new
/// `start_field` opens the next finding.
class FindingBuilder {
public:
    explicit FindingBuilder(std::string start_field) : start_field_(std::move(start_field)) {}

    void field(const std::string& label, const std::string& value, const std::string& mapped)
    {
        if (open_ && (seen_.count(label) || label == start_field_)) flush();
        open_ = true;
        seen_.insert(label);
        last_ = mapped;
        if (mapped == "location") {
            cur_.location = strip_quotes(value);
        } else if (mapped == "category") {
            cur_.category = value;
        } else if (mapped == "issue") {
            cur_.issue = cur_.issue.empty() ? value : cur_.issue + "; " + value;
        } else if (mapped == "why") {
            cur_.issue = cur_.issue.empty() ? value : cur_.issue + "; why: " + value;
        } else if (mapped == "confidence") {
            cur_.confidence = to_lower(value);
        }
    }

    void continuation(std::string_view text)
    {
        if (!open_ || text.empty()) return;
        if (last_ == "location") {
            cur_.location += " " + std::string(text);
        } else {
            cur_.issue += (cur_.issue.empty() ? "" : " ") + std::string(text);
        }
    }

    void free_item(std::string_view text)
    {
        if (open_) flush();
        if (is_empty_item(text)) return;
        cur_.issue = std::string(text);
        cur_.location = first_quoted(text);
        open_ = true;
        last_ = "issue";
    }

    bool open() const { return open_; }

    std::vector<Finding> finish()
    {
        if (open_) flush();
        return std::move(out_);
    }

private:
    void flush()
    {
        if (!cur_.issue.empty() || !cur_.location.empty() || !cur_.category.empty()) out_.push_back(cur_);
        cur_ = Finding{};
        seen_.clear();
        open_ = false;
    }

    std::string start_field_;
    Finding cur_;
    std::set<std::string> seen_;
    std::vector<Finding> out_;
    std::string last_;
    bool open_ = false;
};

} // namespace

VerificationOutcome parse_image_verdict(std::string_view text)
{
    VerificationOutcome out;
    out.stage = Stage::ImageVerify;
    out.verdict = Verdict::Fail;
    out.raw_report = fallback_report(text);

    auto lines = split_lines(text);
    std::size_t first = 0;
    while (first < lines.size() && is_blank(lines[first])) ++first;
    if (first == lines.size()) return out;

    std::string head = normalize(lines[first]);
    auto at = head.find("if correct");
    if (at == std::string::npos) return out;
    std::string_view rest = std::string_view(head).substr(at + 10);
    rest = trim(rest);
    if (rest.empty() || (rest.front() != ':' && rest.front() != '=')) return out;
    rest = trim(rest.substr(1));
    auto word_is = [&](std::string_view w) {
        return starts_with(rest, w) && (rest.size() == w.size() || !std::isalpha(static_cast<unsigned char>(rest[w.size()])));
    };
    if (word_is("yes")) {
        out.verdict = Verdict::Pass;
        return out;
    }
    if (!word_is("no")) return out;

    std::size_t section = lines.size();
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        if (normalize(lines[i]).find("detailed verification") != std::string::npos) {
            section = i + 1;
            break;
        }
    }
    FindingBuilder b("category");
    for (std::size_t i = section; i < lines.size(); ++i) {
        auto f = split_field(lines[i], {"category", "evidence", "mismatch", "why", "confidence"});
        if (!f) {
            b.continuation(trim(strip_bullet(lines[i])));
            continue;
        }
        const auto& [label, value] = *f;
        std::string mapped = label == "evidence" ? "location" : label == "mismatch" ? "issue" : label;
        b.field(label, value, mapped);
    }
    out.findings = b.finish();
    return out;
}

namespace {

bool has_word(const std::vector<std::string>& words, std::initializer_list<std::string_view> wanted)
{
    for (const auto& w : words) {
        for (auto want : wanted) {
            if (w == want) return true;
        }
    }
    return false;
}

std::vector<std::string> words_of(std::string text)
{
    // Neutralize negated failure words and negated success words.
    auto erase_all = [&](std::string_view phrase, std::string_view replacement) {
        std::size_t p;
        while ((p = text.find(phrase)) != std::string::npos) text.replace(p, phrase.size(), replacement);
    };
    for (auto phrase : {"no material issues", "no material issue", "no errors", "no error", "without errors",
                        "without error", "no issues", "no issue", "no mistakes", "no flaws"}) {
        erase_all(phrase, " ");
    }
    for (auto phrase : {"not correct", "not valid", "not pass", "isn't correct", "isn't valid", "is not correct",
                        "is not valid", "not fully correct", "not entirely correct"}) {
        erase_all(phrase, " fail ");
    }
    std::vector<std::string> words;
    std::string cur;
    for (char c : text) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            cur += c;
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

bool is_section_break(std::string_view line)
{
    std::string_view t = trim(line);
    if (starts_with(t, "#")) return true;
    std::string n = normalize(line);
    std::string_view body = strip_numbering(strip_bullet(n));
    for (auto h : {"detailed verification", "bug report", "consolidated bug report", "short, consolidated bug report",
                   "final verdict", "coarse verdict", "fine verdict"}) {
        if (starts_with(body, h)) return true;
    }
    return false;
}

} // namespace

VerificationOutcome parse_review_verdict(std::string_view text, Stage stage)
{
    VerificationOutcome out;
    out.stage = stage == Stage::GeneralVerify ? Stage::GeneralVerify : Stage::PhysicsVerify;
    out.verdict = Verdict::Fail;
    out.raw_report = fallback_report(text);

    auto lines = split_lines(text);

    // Verdict region: the "Final Verdict" line (or the line after it when the
    // heading stands alone); otherwise the first non-empty line.
    std::string region;
    for (std::size_t i = 0; i < lines.size() && region.empty(); ++i) {
        std::string n = normalize(lines[i]);
        std::string_view body = strip_numbering(n);
        if (auto at = body.find("final verdict"); at != std::string_view::npos && at <= 4) {
            std::string_view rest = trim(body.substr(at + 13));
            if (!rest.empty() && rest.front() == ':') rest = trim(rest.substr(1));
            if (!rest.empty()) {
                region = std::string(rest);
            } else {
                for (std::size_t k = i + 1; k < lines.size(); ++k) {
                    if (!is_blank(lines[k])) {
                        region = normalize(lines[k]);
                        break;
                    }
                }
            }
            if (region.empty()) region = " ";
        }
    }
    if (region.empty()) {
        for (auto line : lines) {
            if (!is_blank(line)) {
                region = normalize(line);
                break;
            }
        }
    }

    auto words = words_of(region);
    bool pass = has_word(words, {"pass", "passed", "passes"});
    bool fail = has_word(words, {"fail", "fails", "failed"});
    if (out.stage == Stage::GeneralVerify) {
        pass = pass || has_word(words, {"correct", "valid", "sound"});
        fail = fail || has_word(words, {"invalid", "incorrect", "incomplete", "wrong", "flawed", "errors", "error",
                                        "unsound"});
    }
    if (pass && !fail) out.verdict = Verdict::Pass;

    // Findings section.
    std::size_t start = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string n = normalize(lines[i]);
        std::string_view body = strip_numbering(strip_bullet(n));
        if (starts_with(body, "list of findings") || starts_with(body, "findings")) {
            start = i + 1;
            break;
        }
    }
    FindingBuilder b("location");
    for (std::size_t i = start; i < lines.size(); ++i) {
        if (is_section_break(lines[i])) break;
        if (is_blank(lines[i])) continue;
        if (auto f = split_field(lines[i], {"location", "stage", "issue"})) {
            const auto& [label, value] = *f;
            b.field(label, value, label == "stage" ? "category" : label);
            continue;
        }
        bool bullet = false;
        std::string_view item = strip_bullet(lines[i], &bullet);
        bool top_level = !lines[i].empty() && !is_space(lines[i].front());
        if (bullet && (top_level || !b.open())) {
            b.free_item(item);
        } else {
            b.continuation(trim(item));
        }
    }
    out.findings = b.finish();
    return out;
}

} // namespace minions
