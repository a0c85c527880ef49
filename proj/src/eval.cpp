#include "minions/eval.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace minions {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

constexpr std::string_view kUnicodeMinus = "\xE2\x88\x92";

struct Scanner {
    std::string_view s;
    std::size_t i = 0;

    bool done() const { return i >= s.size(); }
    char peek(std::size_t ahead = 0) const { return i + ahead < s.size() ? s[i + ahead] : '\0'; }
    bool starts(std::string_view w) const { return s.substr(i, w.size()) == w; }
    void skip_spaces()
    {
        while (!done() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    /// Skips "{...}" (balanced) or a run of alphanumerics.
    void skip_group()
    {
        if (peek() == '{') {
            int depth = 0;
            for (; !done(); ++i) {
                if (s[i] == '{') ++depth;
                if (s[i] == '}' && --depth == 0) {
                    ++i;
                    return;
                }
            }
            return;
        }
        if (peek() == '-' || peek() == '+') ++i;
        while (!done() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
    }
};

/// Plain decimal with optional e-exponent at sc.i (which must be a digit or
/// '.' followed by a digit).
std::optional<double> read_decimal(Scanner& sc)
{
    std::size_t start = sc.i;
    while (!sc.done() && is_digit(sc.peek())) ++sc.i;
    if (sc.peek() == '.' && is_digit(sc.peek(1))) {
        ++sc.i;
        while (!sc.done() && is_digit(sc.peek())) ++sc.i;
    }
    if ((sc.peek() == 'e' || sc.peek() == 'E') &&
        (is_digit(sc.peek(1)) || ((sc.peek(1) == '-' || sc.peek(1) == '+') && is_digit(sc.peek(2))))) {
        sc.i += 2;
        while (!sc.done() && is_digit(sc.peek())) ++sc.i;
    }
    std::string token(sc.s.substr(start, sc.i - start));
    if (!token.empty() && token.front() == '.') token.insert(token.begin(), '0');
    char* end = nullptr;
    double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str()) return std::nullopt;
    return v;
}

/// "× 10^{-3}" style suffix; returns the power of ten.
std::optional<int> read_power_of_ten(Scanner& sc)
{
    Scanner t = sc;
    t.skip_spaces();
    bool op = false;
    for (std::string_view w : {"\\times", "\\cdot", "\xC3\x97", "\xC2\xB7", "*", "x"}) {
        if (t.starts(w)) {
            t.i += w.size();
            op = true;
            break;
        }
    }
    if (!op) return std::nullopt;
    t.skip_spaces();
    if (!t.starts("10")) return std::nullopt;
    t.i += 2;
    t.skip_spaces();
    if (t.peek() != '^') return std::nullopt;
    ++t.i;
    bool brace = t.peek() == '{';
    if (brace) ++t.i;
    t.skip_spaces();
    int sign = 1;
    if (t.starts(kUnicodeMinus)) {
        sign = -1;
        t.i += kUnicodeMinus.size();
    } else if (t.peek() == '-' || t.peek() == '+') {
        sign = t.peek() == '-' ? -1 : 1;
        ++t.i;
    }
    if (!is_digit(t.peek())) return std::nullopt;
    int e = 0;
    while (is_digit(t.peek()) && e < 10000) e = e * 10 + (t.s[t.i++] - '0');
    if (brace) {
        t.skip_spaces();
        if (t.peek() == '}') ++t.i;
    }
    sc = t;
    return sign * e;
}

bool negative_before(std::string_view s, std::size_t i)
{
    if (i >= 1 && s[i - 1] == '-') return true;
    if (i >= kUnicodeMinus.size() && s.substr(i - kUnicodeMinus.size(), kUnicodeMinus.size()) == kUnicodeMinus)
        return true;
    return false;
}

std::optional<double> read_braced_number(Scanner& sc)
{
    if (sc.peek() != '{') return std::nullopt;
    std::size_t start = ++sc.i;
    int depth = 1;
    while (!sc.done() && depth > 0) {
        if (sc.peek() == '{') ++depth;
        if (sc.peek() == '}') --depth;
        ++sc.i;
    }
    std::string_view inner = sc.s.substr(start, sc.i - start - (depth == 0 ? 1 : 0));
    return extract_number(inner);
}

std::optional<double> first_number(std::string_view s)
{
    Scanner sc{s};
    while (!sc.done()) {
        char c = sc.peek();
        if (c == '_' || c == '^') {
            ++sc.i;
            sc.skip_group();
            continue;
        }
        if (c == '\\') {
            std::size_t start = ++sc.i;
            while (!sc.done() && is_alpha(sc.peek())) ++sc.i;
            std::string_view cmd = s.substr(start, sc.i - start);
            if (cmd == "frac" || cmd == "dfrac" || cmd == "tfrac") {
                std::size_t at = start - 1;
                auto num = read_braced_number(sc);
                auto den = read_braced_number(sc);
                if (num && den && *den != 0) return (negative_before(s, at) ? -1.0 : 1.0) * *num / *den;
            }
            continue;
        }
        if (is_alpha(c)) {
            while (!sc.done() && std::isalnum(static_cast<unsigned char>(sc.peek()))) ++sc.i;
            continue;
        }
        if (is_digit(c) || (c == '.' && is_digit(sc.peek(1)))) {
            std::size_t at = sc.i;
            auto v = read_decimal(sc);
            if (!v) return std::nullopt;
            double value = *v;
            if (auto p = read_power_of_ten(sc)) {
                value *= std::pow(10.0, *p);
            } else {
                Scanner t = sc;
                t.skip_spaces();
                if (t.peek() == '/') {
                    ++t.i;
                    t.skip_spaces();
                    if (is_digit(t.peek())) {
                        auto d = read_decimal(t);
                        if (d && *d != 0) value /= *d;
                    }
                }
            }
            return negative_before(s, at) ? -value : value;
        }
        ++sc.i;
    }
    return std::nullopt;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

} // namespace

std::optional<double> extract_number(std::string_view text)
{
    if (auto eq = text.rfind('='); eq != std::string_view::npos) {
        if (auto v = first_number(text.substr(eq + 1))) return v;
    }
    return first_number(text);
}

std::string normalize_answer(std::string_view text)
{
    std::string s(text);
    for (std::string_view box : {"\\boxed{", "\\text{", "\\mathrm{"}) {
        std::size_t p;
        while ((p = s.find(box)) != std::string::npos) {
            // Drop the command and its matching closing brace.
            std::size_t open = p + box.size() - 1;
            int depth = 0;
            std::size_t close = std::string::npos;
            for (std::size_t k = open; k < s.size(); ++k) {
                if (s[k] == '{') ++depth;
                if (s[k] == '}' && --depth == 0) {
                    close = k;
                    break;
                }
            }
            if (close != std::string::npos) s.erase(close, 1);
            s.erase(p, box.size());
        }
    }
    std::string out;
    for (char c : s) {
        if (c == '$' || std::isspace(static_cast<unsigned char>(c))) continue;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    for (std::string_view d : {"\\(", "\\)", "\\[", "\\]"}) {
        std::size_t p;
        while ((p = out.find(d)) != std::string::npos) out.erase(p, d.size());
    }
    while (!out.empty() && out.back() == '.') out.pop_back();
    while (out.size() >= 2 && ((out.front() == '(' && out.back() == ')') || (out.front() == '{' && out.back() == '}')))
        out = out.substr(1, out.size() - 2);
    return out;
}

GradeResult grade_exact(const Problem& problem, const StructuredSolution& solution)
{
    if (!problem.reference_answer) {
        throw std::invalid_argument("problem " + problem.id + " has no reference answer for exact grading");
    }
    GradeResult r;
    if (!solution.final_answer) {
        r.flagged = true;
        r.note = "no final answer";
        return r;
    }
    const std::string& ref = *problem.reference_answer;
    const double tol = problem.tolerance.value_or(kDefaultRelativeTolerance);
    if (auto want = extract_number(ref)) {
        auto got = extract_number(*solution.final_answer);
        if (!got) {
            r.note = "no number in final answer";
            return r;
        }
        double allowed = *want == 0.0 ? tol : tol * std::fabs(*want);
        if (std::fabs(*got - *want) <= allowed) r.score = problem.full_mark;
        return r;
    }
    if (normalize_answer(*solution.final_answer) == normalize_answer(ref)) r.score = problem.full_mark;
    return r;
}

std::optional<Rational> parse_grader_score(std::string_view text)
{
    const std::string low = lower(text);
    std::size_t pos = low.size();
    while (pos > 0) {
        std::size_t at = low.rfind("score", pos - 1);
        if (at == std::string::npos) break;
        pos = at;
        std::size_t i = at + 5;
        auto skip = [&] {
            while (i < low.size() && (low[i] == ' ' || low[i] == '*' || low[i] == '\t')) ++i;
        };
        skip();
        if (i >= low.size() || low[i] != ':') continue;
        ++i;
        skip();
        std::size_t start = i;
        if (i < low.size() && (low[i] == '-' || low[i] == '+')) ++i;
        while (i < low.size() && (is_digit(low[i]) || low[i] == '.')) ++i;
        std::string_view number = std::string_view(text).substr(start, i - start);
        while (!number.empty() && number.back() == '.') number.remove_suffix(1);
        try {
            return Rational::parse(number);
        } catch (const std::exception&) {
            continue;
        }
    }
    return std::nullopt;
}

GradeResult grade_rubric(const Problem& problem, const StructuredSolution& solution, Backend& grader,
                         const PromptRegistry& prompts, double temperature)
{
    if (!problem.marking_scheme) {
        throw std::invalid_argument("problem " + problem.id + " has no marking scheme for rubric grading");
    }
    auto parts = prompts.render_parts(TemplateId::grader, {{"problem", problem.statement},
                                                           {"marking_scheme", *problem.marking_scheme},
                                                           {"full_mark", problem.full_mark.to_string()},
                                                           {"solution", solution.raw}});
    CompletionRequest req;
    req.agent = "grader";
    req.system_prompt = parts.system;
    req.messages = {{MessageRole::user, parts.user, {}}};
    req.temperature = temperature;
    CompletionResponse resp = grader.complete(req);

    GradeResult r;
    AgentCall call;
    call.studio = Studio::Grader;
    call.role = req.agent;
    call.system_prompt = req.system_prompt;
    call.messages = {{"user", parts.user, 0}};
    call.response = resp.text;
    call.tokens_in = resp.tokens_in;
    call.tokens_out = resp.tokens_out;
    call.tokens_estimated = resp.tokens_estimated;
    call.wall_ms = resp.latency_ms;

    if (auto score = parse_grader_score(resp.text)) {
        r.score = clamp(*score, Rational{0}, problem.full_mark);
        if (r.score != *score) {
            r.flagged = true;
            r.note = "grader score " + score->to_string() + " clamped";
        }
    } else {
        r.flagged = true;
        r.note = "unparseable grader score";
    }
    call.outcome = r.score.to_string();
    r.call = std::move(call);
    return r;
}

GradeMode parse_grade_mode(std::string_view s)
{
    if (s == "auto") return GradeMode::Auto;
    if (s == "exact") return GradeMode::Exact;
    if (s == "rubric") return GradeMode::Rubric;
    throw std::invalid_argument("unknown grading mode '" + std::string(s) + "'");
}

GradeResult grade(const Problem& problem, const StructuredSolution& solution, GradeMode mode, Backend* grader,
                  const PromptRegistry& prompts)
{
    bool rubric = mode == GradeMode::Rubric ||
                  (mode == GradeMode::Auto && problem.marking_scheme && grader != nullptr);
    if (rubric) {
        if (!grader) throw std::invalid_argument("rubric grading requires a grader backend");
        return grade_rubric(problem, solution, *grader, prompts);
    }
    return grade_exact(problem, solution);
}

// ---------------------------------------------------------------------------

Rational ScoreSheet::total() const
{
    Rational t{0};
    for (const auto& [_, s] : per_problem) t += s;
    return t;
}

std::vector<std::string> validate_sheet(const ScoreSheet& sheet, const Manifest& manifest)
{
    std::vector<std::string> out;
    if (sheet.exam_id != manifest.exam.exam_id) out.push_back("sheet exam id " + sheet.exam_id + " differs");
    for (const auto& [id, score] : sheet.per_problem) {
        const Problem* p = manifest.find(id);
        if (!p) {
            out.push_back("unknown problem " + id);
        } else if (score < Rational{0} || score > p->full_mark) {
            out.push_back("score of " + id + " outside [0, full_mark]");
        }
    }
    return out;
}

Rational aggregate_exam(const std::vector<ScoreSheet>& sheets)
{
    if (sheets.empty()) throw std::invalid_argument("aggregate_exam: no score sheets");
    Rational sum{0};
    for (const auto& s : sheets) {
        if (s.exam_id != sheets.front().exam_id) {
            throw std::invalid_argument("aggregate_exam: mixed exam ids " + sheets.front().exam_id + " and " +
                                        s.exam_id);
        }
        sum += s.total();
    }
    return sum / Rational(static_cast<std::int64_t>(sheets.size()));
}

std::string_view to_string(Medal m)
{
    switch (m) {
    case Medal::Gold: return "Gold";
    case Medal::Silver: return "Silver";
    case Medal::Bronze: return "Bronze";
    case Medal::None: return "None";
    }
    return "None";
}

Medal medal_for(const Exam& exam, const Rational& score)
{
    if (score >= exam.thresholds.gold) return Medal::Gold;
    if (score >= exam.thresholds.silver) return Medal::Silver;
    if (score >= exam.thresholds.bronze) return Medal::Bronze;
    return Medal::None;
}

double mns(const std::vector<ScoredProblem>& scored, const ProblemFilter& select)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& sp : scored) {
        if (select && !select(sp.problem)) continue;
        sum += (sp.score / sp.problem.full_mark).to_double();
        ++n;
    }
    if (n == 0) throw std::invalid_argument("mns: empty problem subset");
    return sum / static_cast<double>(n) * 100.0;
}

Rational pass_at_k(const std::map<std::string, std::vector<Rational>>& runs_per_problem, int k)
{
    if (k < 1) throw std::invalid_argument("pass_at_k: k must be >= 1");
    Rational total{0};
    for (const auto& [id, runs] : runs_per_problem) {
        if (runs.size() < static_cast<std::size_t>(k)) {
            throw std::invalid_argument("pass_at_k: problem " + id + " has " + std::to_string(runs.size()) +
                                        " runs, need " + std::to_string(k));
        }
        total += *std::max_element(runs.begin(), runs.begin() + k);
    }
    return total;
}

std::vector<std::pair<std::string, double>> breakdown(const std::vector<ScoredProblem>& scored, Dimension dim)
{
    std::vector<std::pair<std::string, double>> rows;
    auto add = [&](std::string_view name, const ProblemFilter& f) {
        bool present = std::any_of(scored.begin(), scored.end(), [&](const ScoredProblem& sp) { return f(sp.problem); });
        if (present) rows.emplace_back(std::string(name), mns(scored, f));
    };
    if (dim == Dimension::Modality) {
        for (Modality m : {Modality::TO, Modality::TI, Modality::TV, Modality::TD}) {
            add(to_string(m), [m](const Problem& p) { return p.modality == m; });
        }
    } else {
        for (Field f : {Field::Mechanics, Field::Electromagnetism, Field::Thermodynamics, Field::Optics,
                        Field::ModernPhysics}) {
            add(to_string(f), [f](const Problem& p) { return p.field == f; });
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------

std::vector<int> pass_at_k_points(int runs)
{
    std::vector<int> ks;
    for (int k = 1; k <= runs; k *= 2) ks.push_back(k);
    if (runs >= 1 && ks.back() != runs) ks.push_back(runs);
    return ks;
}

namespace {

json score_json(const Rational& r)
{
    json j = r;
    return j;
}

} // namespace

json make_report(const ReportInput& in)
{
    if (in.runs.empty()) throw std::invalid_argument("make_report: no graded runs");
    const Manifest& m = in.manifest;

    std::vector<ScoreSheet> sheets;
    for (const auto& r : in.runs) sheets.push_back(r.sheet);
    Rational exam_score = aggregate_exam(sheets);
    Medal medal = medal_for(m.exam, exam_score);

    json report;
    report["exam_id"] = m.exam.exam_id;
    report["exam_name"] = m.exam.name;
    report["framework"] = in.framework;
    report["runs"] = in.runs.size();
    report["exam_score"] = exam_score.to_double();
    report["exam_score_exact"] = exam_score.to_string();
    report["full_mark"] = score_json(m.exam.full_mark_model);
    report["medal"] = to_string(medal);
    report["thresholds"] = {{"gold", score_json(m.exam.thresholds.gold)},
                            {"silver", score_json(m.exam.thresholds.silver)},
                            {"bronze", score_json(m.exam.thresholds.bronze)}};

    json totals = json::array();
    for (const auto& s : sheets) totals.push_back(score_json(s.total()));
    report["run_totals"] = totals;

    std::vector<ScoredProblem> mean_scores;
    std::map<std::string, std::vector<Rational>> per_problem_runs;
    json problems = json::array();
    for (const auto& p : m.problems) {
        std::vector<Rational> scores;
        for (const auto& s : sheets) {
            auto it = s.per_problem.find(p.id);
            scores.push_back(it == s.per_problem.end() ? Rational{0} : it->second);
        }
        Rational sum{0};
        json sj = json::array();
        for (const auto& s : scores) {
            sum += s;
            sj.push_back(score_json(s));
        }
        Rational mean = sum / Rational(static_cast<std::int64_t>(scores.size()));
        problems.push_back({{"problem_id", p.id},
                            {"modality", to_string(p.modality)},
                            {"field", to_string(p.field)},
                            {"full_mark", score_json(p.full_mark)},
                            {"scores", sj},
                            {"mean", mean.to_double()}});
        mean_scores.push_back({p, mean});
        per_problem_runs[p.id] = std::move(scores);
    }
    report["problems"] = problems;

    json mns_tables;
    if (!mean_scores.empty()) {
        mns_tables["overall"] = mns(mean_scores);
        for (auto [dim, name] : {std::pair{Dimension::Modality, "modality"}, std::pair{Dimension::Field, "field"}}) {
            json table = json::object();
            for (const auto& [cls, value] : breakdown(mean_scores, dim)) table[cls] = value;
            mns_tables[name] = table;
        }
    }
    report["mns"] = mns_tables;

    if (in.runs.size() > 1) {
        json curve = json::array();
        for (int k : pass_at_k_points(static_cast<int>(in.runs.size()))) {
            curve.push_back({{"k", k}, {"total", score_json(pass_at_k(per_problem_runs, k))}});
        }
        report["pass_at_k"] = curve;
    }

    std::int64_t tin = 0, tout = 0;
    for (const auto& r : in.runs) {
        tin += r.tokens_in;
        tout += r.tokens_out;
    }
    report["tokens"] = {{"solve_in", tin},
                        {"solve_out", tout},
                        {"solve_total", tin + tout},
                        {"grader_in", in.grader_tokens_in},
                        {"grader_out", in.grader_tokens_out}};
    report["flags"] = in.flags;
    return report;
}

namespace {

std::string num_text(const json& v)
{
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v.get<double>();
    return os.str();
}

} // namespace

std::string render_report_text(const json& r)
{
    std::ostringstream os;
    os << "Exam: " << r.value("exam_name", std::string{}) << " (" << r.value("exam_id", std::string{}) << ")\n";
    os << "Framework: " << r.value("framework", std::string{}) << ", runs: " << r.value("runs", 0) << "\n";
    os << "Exam score: " << num_text(r.at("exam_score")) << " / " << num_text(r.at("full_mark"))
       << "  medal: " << r.value("medal", std::string{}) << "\n";
    const json& t = r.at("thresholds");
    os << "Thresholds: gold " << num_text(t.at("gold")) << ", silver " << num_text(t.at("silver")) << ", bronze "
       << num_text(t.at("bronze")) << "\n\n";

    os << "Problem scores:\n";
    for (const auto& p : r.at("problems")) {
        os << "  " << std::left << std::setw(16) << p.at("problem_id").get<std::string>() << std::setw(4)
           << p.at("modality").get<std::string>() << " mean " << num_text(p.at("mean")) << " / "
           << num_text(p.at("full_mark")) << "  runs [";
        bool first = true;
        for (const auto& s : p.at("scores")) {
            os << (first ? "" : ", ") << num_text(s);
            first = false;
        }
        os << "]\n";
    }

    if (r.contains("mns") && !r.at("mns").empty()) {
        const json& m = r.at("mns");
        os << "\nMNS overall: " << num_text(m.at("overall")) << "%\n";
        for (const char* dim : {"modality", "field"}) {
            os << "MNS by " << dim << ":";
            for (const auto& [cls, v] : m.at(dim).items()) os << "  " << cls << " " << num_text(v) << "%";
            os << "\n";
        }
    }
    if (r.contains("pass_at_k")) {
        os << "\nPass@k:";
        for (const auto& e : r.at("pass_at_k")) os << "  k=" << e.at("k").get<int>() << ": " << num_text(e.at("total"));
        os << "\n";
    }
    const json& tok = r.at("tokens");
    os << "\nTokens: solve " << tok.at("solve_total").get<std::int64_t>() << " (in " << tok.at("solve_in").get<std::int64_t>()
       << ", out " << tok.at("solve_out").get<std::int64_t>() << "), grader in " << tok.at("grader_in").get<std::int64_t>()
       << ", out " << tok.at("grader_out").get<std::int64_t>() << "\n";
    if (r.contains("flags") && !r.at("flags").empty()) {
        os << "\nFlags:\n";
        for (const auto& f : r.at("flags")) os << "  - " << f.get<std::string>() << "\n";
    }
    return os.str();
}

} // namespace minions
