#include "minions/domain.hpp"

#include <array>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace minions {

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<Modality, 4> kModalities{{
    {Modality::TO, "TO"}, {Modality::TI, "TI"}, {Modality::TV, "TV"}, {Modality::TD, "TD"}}};

constexpr NameTable<Field, 5> kFields{{
    {Field::Mechanics, "Mechanics"},
    {Field::Electromagnetism, "Electromagnetism"},
    {Field::Thermodynamics, "Thermodynamics"},
    {Field::Optics, "Optics"},
    {Field::ModernPhysics, "ModernPhysics"}}};

constexpr NameTable<SolutionVerdict, 3> kSolutionVerdicts{{
    {SolutionVerdict::Complete, "Complete"},
    {SolutionVerdict::Partial, "Partial"},
    {SolutionVerdict::Unparsed, "Unparsed"}}};

constexpr NameTable<Stage, 3> kStages{{
    {Stage::ImageVerify, "ImageVerify"},
    {Stage::PhysicsVerify, "PhysicsVerify"},
    {Stage::GeneralVerify, "GeneralVerify"}}};

constexpr NameTable<Verdict, 2> kVerdicts{{{Verdict::Pass, "Pass"}, {Verdict::Fail, "Fail"}}};

constexpr NameTable<Studio, 5> kStudios{{
    {Studio::Visual, "Visual"},
    {Studio::Logic, "Logic"},
    {Studio::Review, "Review"},
    {Studio::Baseline, "Baseline"},
    {Studio::Grader, "Grader"}}};

constexpr NameTable<Framework, 5> kFrameworks{{
    {Framework::Minions, "Minions"},
    {Framework::Single, "Single"},
    {Framework::BestOfN, "BestOfN"},
    {Framework::SelfMoA, "SelfMoA"},
    {Framework::SelfRefine, "SelfRefine"}}};

constexpr NameTable<Framework, 5> kFrameworkCliNames{{
    {Framework::Minions, "minions"},
    {Framework::Single, "single"},
    {Framework::BestOfN, "best_of_n"},
    {Framework::SelfMoA, "self_moa"},
    {Framework::SelfRefine, "self_refine"}}};

constexpr NameTable<FigureType, 9> kFigureTypes{{
    {FigureType::plot, "plot"},
    {FigureType::free_body, "free_body"},
    {FigureType::circuit, "circuit"},
    {FigureType::optics, "optics"},
    {FigureType::waveform, "waveform"},
    {FigureType::table, "table"},
    {FigureType::schematic, "schematic"},
    {FigureType::object_image, "object_image"},
    {FigureType::other, "other"}}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E value)
{
    for (const auto& [e, name] : table) {
        if (e == value) return name;
    }
    return "?";
}

template <typename E, std::size_t N>
std::optional<E> lookup(const NameTable<E, N>& table, std::string_view name)
{
    for (const auto& [e, n] : table) {
        if (n == name) return e;
    }
    return std::nullopt;
}

template <typename E, std::size_t N>
E require(const NameTable<E, N>& table, std::string_view name, const char* what)
{
    if (auto e = lookup(table, name)) return *e;
    throw std::invalid_argument(std::string("unknown ") + what + ": \"" + std::string(name) + "\"");
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

} // namespace

std::string_view to_string(Modality m) { return name_of(kModalities, m); }
std::string_view to_string(Field f) { return name_of(kFields, f); }
std::string_view to_string(SolutionVerdict v) { return name_of(kSolutionVerdicts, v); }
std::string_view to_string(Stage s) { return name_of(kStages, s); }
std::string_view to_string(Verdict v) { return name_of(kVerdicts, v); }
std::string_view to_string(Studio s) { return name_of(kStudios, s); }
std::string_view to_string(Framework f) { return name_of(kFrameworks, f); }
std::string_view to_string(FigureType t) { return name_of(kFigureTypes, t); }

Modality parse_modality(std::string_view s) { return require(kModalities, s, "modality"); }
Field parse_field(std::string_view s) { return require(kFields, s, "field"); }
SolutionVerdict parse_solution_verdict(std::string_view s) { return require(kSolutionVerdicts, s, "solution verdict"); }
Stage parse_stage(std::string_view s) { return require(kStages, s, "stage"); }
Verdict parse_verdict(std::string_view s) { return require(kVerdicts, s, "verdict"); }
Studio parse_studio(std::string_view s) { return require(kStudios, s, "studio"); }

Framework parse_framework(std::string_view s)
{
    if (auto f = lookup(kFrameworks, s)) return *f;
    return require(kFrameworkCliNames, s, "framework");
}

std::optional<FigureType> parse_figure_type(std::string_view s) { return lookup(kFigureTypes, s); }

// ---------------------------------------------------------------------------

std::vector<std::string> validate_problem(const Problem& p)
{
    std::vector<std::string> out;
    if (p.id.empty()) {
        out.emplace_back("problem id must be non-empty");
    }
    if (p.full_mark <= Rational(0)) {
        out.emplace_back("full_mark > 0");
    }
    if (p.images.empty() != (p.modality == Modality::TO)) {
        out.emplace_back("images empty iff TO");
    }
    if (p.tolerance && !(*p.tolerance >= 0.0)) {
        out.emplace_back("tolerance >= 0");
    }
    return out;
}

std::vector<std::string> validate_exam(const Exam& e)
{
    std::vector<std::string> out;
    if (e.exam_id.empty()) {
        out.emplace_back("exam id must be non-empty");
    }
    const auto& t = e.thresholds;
    if (!(t.gold >= t.silver && t.silver >= t.bronze && t.bronze >= Rational(0))) {
        out.emplace_back("gold >= silver >= bronze >= 0");
    }
    return out;
}

const Problem* Manifest::find(std::string_view problem_id) const
{
    for (const auto& p : problems) {
        if (p.id == problem_id) return &p;
    }
    return nullptr;
}

Manifest manifest_from_json(const json& doc, const std::filesystem::path& base_dir)
{
    Manifest m;
    m.base_dir = base_dir;
    m.exam = doc.at("exam").get<Exam>();
    if (auto v = validate_exam(m.exam); !v.empty()) {
        throw std::invalid_argument("invalid exam: " + v.front());
    }
    for (const auto& pj : doc.at("problems")) {
        json filled = pj;
        if (!filled.contains("exam_id")) filled["exam_id"] = m.exam.exam_id;
        Problem p = filled.get<Problem>();
        if (auto v = validate_problem(p); !v.empty()) {
            throw std::invalid_argument("invalid problem '" + p.id + "': " + v.front());
        }
        for (auto& img : p.images) {
            std::filesystem::path ip(img);
            if (ip.is_relative()) img = (base_dir / ip).lexically_normal().string();
        }
        if (m.find(p.id) != nullptr) {
            throw std::invalid_argument("duplicate problem id '" + p.id + "'");
        }
        m.problems.push_back(std::move(p));
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open manifest: " + path.string());
    }
    try {
        json doc = json::parse(in);
        return manifest_from_json(doc, path.parent_path());
    } catch (const std::exception& e) {
        throw std::runtime_error("manifest " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

bool is_unknown(const json& value)
{
    return value.is_string() && value.get_ref<const std::string&>() == kUnknown;
}

namespace {

Figure figure_from_json(const json& fj, std::string default_id)
{
    Figure f;
    f.payload = fj.is_object() ? fj : json::object();
    auto take_string = [&](const char* key) {
        std::string v;
        if (auto it = f.payload.find(key); it != f.payload.end()) {
            if (it->is_string()) v = it->get<std::string>();
            f.payload.erase(it);
        }
        return v;
    };
    f.id = take_string("id");
    if (f.id.empty()) f.id = std::move(default_id);
    f.theme = take_string("theme");
    std::string type = take_string("figure_type");
    if (auto t = parse_figure_type(type)) {
        f.figure_type = *t;
    } else {
        f.figure_type = FigureType::other;
        if (!type.empty()) f.payload["original_figure_type"] = type;
    }
    return f;
}

} // namespace

VisualDescription VisualDescription::from_json(const json& doc)
{
    if (!doc.is_object()) {
        throw std::invalid_argument("visual description must be a JSON object");
    }
    VisualDescription v;
    if (auto it = doc.find("title"); it != doc.end() && it->is_string()) {
        v.title = it->get<std::string>();
    }
    auto figs = doc.find("figure");
    if (figs == doc.end()) figs = doc.find("figures");
    if (figs != doc.end() && figs->is_array()) {
        char next = 'a';
        for (const auto& fj : *figs) {
            v.figures.push_back(figure_from_json(fj, std::string(1, next)));
            if (next < 'z') ++next;
        }
    } else {
        json single = doc;
        single.erase("title");
        v.figures.push_back(figure_from_json(single, "a"));
    }
    return v;
}

json VisualDescription::to_json() const
{
    json figs = json::array();
    for (const auto& f : figures) {
        json fj = f.payload;
        fj["id"] = f.id;
        fj["theme"] = f.theme;
        fj["figure_type"] = std::string(minions::to_string(f.figure_type));
        figs.push_back(std::move(fj));
    }
    return json{{"title", title}, {"figure", std::move(figs)}};
}

std::string VisualDescription::to_pretty_string() const { return to_json().dump(2); }

std::vector<std::string> validate_visual(const VisualDescription& v)
{
    std::vector<std::string> out;
    auto check_confidence = [&](const json& sp, const std::string& where) {
        auto it = sp.find("confidence");
        if (it == sp.end() || !it->is_string() ||
            (*it != "high" && *it != "medium" && *it != "low")) {
            out.push_back(where + ": confidence must be high|medium|low");
        }
    };
    for (const auto& f : v.figures) {
        if (f.figure_type != FigureType::plot) continue;
        auto curves = f.payload.find("curves");
        if (curves == f.payload.end() || !curves->is_array()) continue;
        for (std::size_t ci = 0; ci < curves->size(); ++ci) {
            const json& curve = (*curves)[ci];
            std::string where = "figure " + f.id + " curve " + std::to_string(ci);
            if (auto data = curve.find("data"); data != curve.end() && data->is_object()) {
                if (auto ticks = data->find("by_x_ticks"); ticks != data->end() && ticks->is_array()) {
                    for (const auto& e : *ticks) {
                        if (!e.is_object() || !e.contains("x") || !e.contains("y")) {
                            out.push_back(where + ": by_x_ticks entries need x and y");
                        } else if (!e["y"].is_number() && !is_unknown(e["y"])) {
                            out.push_back(where + ": y must be numeric or \"unknown\"");
                        }
                    }
                }
            }
            if (auto sps = curve.find("special_points"); sps != curve.end() && sps->is_array()) {
                for (const auto& sp : *sps) check_confidence(sp, where + " special point");
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

int AgentCall::image_count() const
{
    int n = 0;
    for (const auto& m : messages) n += m.image_count;
    return n;
}

std::int64_t RunTrace::total_tokens_in() const
{
    return std::accumulate(calls.begin(), calls.end(), std::int64_t{0},
                           [](std::int64_t acc, const AgentCall& c) { return acc + c.tokens_in; });
}

std::int64_t RunTrace::total_tokens_out() const
{
    return std::accumulate(calls.begin(), calls.end(), std::int64_t{0},
                           [](std::int64_t acc, const AgentCall& c) { return acc + c.tokens_out; });
}

// ---------------------------------------------------------------------------

void to_json(json& j, const Rational& r)
{
    if (r.is_terminating_decimal() && Rational::from_double(r.to_double()) == r) {
        j = r.to_double();
        if (r.den() == 1) j = r.num();
    } else {
        j = r.to_string();
    }
}

void from_json(const json& j, Rational& r)
{
    if (j.is_number_integer()) {
        r = Rational(j.get<std::int64_t>());
    } else if (j.is_number()) {
        r = Rational::from_double(j.get<double>());
    } else if (j.is_string()) {
        r = Rational::parse(j.get<std::string>());
    } else {
        throw std::invalid_argument("expected a number or rational string, got " + j.dump());
    }
}

void to_json(json& j, const Problem& p)
{
    j = json{{"id", p.id},
             {"exam_id", p.exam_id},
             {"statement", p.statement},
             {"images", p.images},
             {"modality", to_string(p.modality)},
             {"field", to_string(p.field)},
             {"full_mark", p.full_mark}};
    if (p.marking_scheme) j["marking_scheme"] = *p.marking_scheme;
    if (p.reference_answer) j["reference_answer"] = *p.reference_answer;
    if (p.tolerance) j["tolerance"] = *p.tolerance;
}

void from_json(const json& j, Problem& p)
{
    p.id = j.at("id").get<std::string>();
    p.exam_id = j.value("exam_id", std::string{});
    p.statement = j.at("statement").get<std::string>();
    p.images = j.value("images", std::vector<std::string>{});
    p.modality = parse_modality(j.at("modality").get<std::string>());
    p.field = parse_field(j.at("field").get<std::string>());
    p.full_mark = j.at("full_mark").get<Rational>();
    p.marking_scheme = get_optional<std::string>(j, "marking_scheme");
    if (auto it = j.find("reference_answer"); it != j.end() && !it->is_null()) {
        p.reference_answer = it->is_string() ? it->get<std::string>() : it->dump();
    } else {
        p.reference_answer.reset();
    }
    p.tolerance = get_optional<double>(j, "tolerance");
}

void to_json(json& j, const Exam& e)
{
    j = json{{"exam_id", e.exam_id},
             {"name", e.name},
             {"full_mark_model", e.full_mark_model},
             {"thresholds",
              {{"gold", e.thresholds.gold}, {"silver", e.thresholds.silver}, {"bronze", e.thresholds.bronze}}}};
}

void from_json(const json& j, Exam& e)
{
    e.exam_id = j.at("exam_id").get<std::string>();
    e.name = j.value("name", e.exam_id);
    e.full_mark_model = j.at("full_mark_model").get<Rational>();
    const json& t = j.at("thresholds");
    e.thresholds = {t.at("gold").get<Rational>(), t.at("silver").get<Rational>(), t.at("bronze").get<Rational>()};
}

void to_json(json& j, const StructuredSolution& s)
{
    j = json{{"verdict", to_string(s.verdict)},
             {"final_answer", s.final_answer ? json(*s.final_answer) : json(nullptr)},
             {"method_sketch", s.method_sketch},
             {"detailed_solution", s.detailed_solution},
             {"raw", s.raw}};
}

void from_json(const json& j, StructuredSolution& s)
{
    s.verdict = parse_solution_verdict(j.at("verdict").get<std::string>());
    s.final_answer = get_optional<std::string>(j, "final_answer");
    s.method_sketch = j.value("method_sketch", std::string{});
    s.detailed_solution = j.value("detailed_solution", std::string{});
    s.raw = j.value("raw", std::string{});
}

void to_json(json& j, const Finding& f)
{
    j = json{{"location", f.location}, {"category", f.category}, {"issue", f.issue}};
    if (f.confidence) j["confidence"] = *f.confidence;
}

void from_json(const json& j, Finding& f)
{
    f.location = j.value("location", std::string{});
    f.category = j.value("category", std::string{});
    f.issue = j.value("issue", std::string{});
    f.confidence = get_optional<std::string>(j, "confidence");
}

void to_json(json& j, const VerificationOutcome& v)
{
    j = json{{"stage", to_string(v.stage)},
             {"verdict", to_string(v.verdict)},
             {"findings", v.findings},
             {"raw_report", v.raw_report}};
}

void from_json(const json& j, VerificationOutcome& v)
{
    v.stage = parse_stage(j.at("stage").get<std::string>());
    v.verdict = parse_verdict(j.at("verdict").get<std::string>());
    v.findings = j.value("findings", std::vector<Finding>{});
    v.raw_report = j.value("raw_report", std::string{});
}

void to_json(json& j, const MessageRecord& m)
{
    j = json{{"role", m.role}, {"content", m.content}};
    if (m.image_count > 0) j["image_count"] = m.image_count;
}

void from_json(const json& j, MessageRecord& m)
{
    m.role = j.at("role").get<std::string>();
    m.content = j.at("content").get<std::string>();
    m.image_count = j.value("image_count", 0);
}

void to_json(json& j, const AgentCall& c)
{
    j = json{{"seq", c.seq},
             {"studio", to_string(c.studio)},
             {"role", c.role},
             {"system_prompt", c.system_prompt},
             {"messages", c.messages},
             {"response", c.response},
             {"tokens_in", c.tokens_in},
             {"tokens_out", c.tokens_out},
             {"tokens_estimated", c.tokens_estimated},
             {"loop_iteration", c.loop_iteration},
             {"counters", {{"c", c.c}, {"f", c.f}}},
             {"wall_ms", c.wall_ms},
             {"outcome", c.outcome},
             {"ref_seq", c.ref_seq ? json(*c.ref_seq) : json(nullptr)}};
}

void from_json(const json& j, AgentCall& c)
{
    c.seq = j.at("seq").get<std::int64_t>();
    c.studio = parse_studio(j.at("studio").get<std::string>());
    c.role = j.at("role").get<std::string>();
    c.system_prompt = j.value("system_prompt", std::string{});
    c.messages = j.value("messages", std::vector<MessageRecord>{});
    c.response = j.at("response").get<std::string>();
    c.tokens_in = j.value("tokens_in", std::int64_t{0});
    c.tokens_out = j.value("tokens_out", std::int64_t{0});
    if (c.tokens_in < 0 || c.tokens_out < 0) {
        throw std::invalid_argument("negative token count in call " + std::to_string(c.seq));
    }
    c.tokens_estimated = j.value("tokens_estimated", false);
    c.loop_iteration = j.value("loop_iteration", 0);
    if (auto it = j.find("counters"); it != j.end()) {
        c.c = it->value("c", 0);
        c.f = it->value("f", 0);
    }
    c.wall_ms = j.value("wall_ms", std::int64_t{0});
    c.outcome = j.value("outcome", std::string{});
    c.ref_seq = get_optional<std::int64_t>(j, "ref_seq");
}

} // namespace minions
