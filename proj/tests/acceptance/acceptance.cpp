// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Oracles here are written independently of the library code.

#include "minions/cli.hpp"
#include "minions/eval.hpp"
#include "minions/orchestrator.hpp"
#include "minions/parse.hpp"
#include "minions/trace_io.hpp"
#include "minions/visual_studio.hpp"

#include "../parser_fixtures.hpp"
#include "../test_support.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace minions;
using namespace support;
namespace fs = std::filesystem;

namespace {

// Pinned limits.
constexpr double kAlgorithmBudgetSeconds = 5.0;
constexpr double kEndToEndBudgetSeconds = 30.0;
constexpr double kMnsRelativeTolerance = 1e-9;
constexpr int kFuzzStrings = 100000;

struct Criterion {
    bool ok = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

const PromptRegistry& prompts()
{
    static const PromptRegistry reg = PromptRegistry::defaults();
    return reg;
}

// ---------------------------------------------------------------------------
// Independent simulator of the consecutive-verification loop.

enum class Review { BothPass, GeneralFail, PhysicsFail };

struct SimCall {
    std::string role;
    int c, f, iteration;
    std::int64_t ref;
    bool operator==(const SimCall&) const = default;
};

struct SimRun {
    std::vector<SimCall> calls;
    bool accepted = false;
};

SimRun simulate(const std::vector<Review>& reviews, int cv, bool improve_every_iteration)
{
    SimRun run;
    int c = 0, f = 0;
    bool fresh = true;
    auto emit = [&](const char* role, int it, std::int64_t ref = 0) { run.calls.push_back({role, c, f, it, ref}); };
    emit("solver", 0);
    for (int it = 1; it <= static_cast<int>(reviews.size()); ++it) {
        if (improve_every_iteration || fresh) emit("introspector_improve", it);
        fresh = false;
        Review r = reviews[it - 1];
        emit("physics_verifier", it);
        if (r != Review::PhysicsFail) emit("general_verifier", it);
        if (r == Review::BothPass) {
            ++c;
            f = 0;
            if (c >= cv) {
                run.accepted = true;
                break;
            }
            continue;
        }
        emit("introspector_refine", it, static_cast<std::int64_t>(run.calls.size()));
        c = 0;
        ++f;
        if (f >= cv) {
            emit("solver", it);
            c = 0;
            f = 0;
            fresh = true;
        }
    }
    return run;
}

SimRun observed(const RunTrace& t)
{
    SimRun run;
    run.accepted = t.accepted;
    for (const auto& call : t.calls) {
        run.calls.push_back({call.role, call.c, call.f, call.loop_iteration, call.ref_seq.value_or(0)});
    }
    return run;
}

RoleScript review_script(const std::vector<Review>& reviews)
{
    RoleScript s;
    std::vector<std::string> sols(40, kSolved);
    s["solver"] = sols;
    s["introspector_improve"] = sols;
    s["introspector_refine"] = sols;
    for (Review r : reviews) {
        s["physics_verifier"].push_back(r == Review::PhysicsFail ? kFail : kPass);
        if (r != Review::PhysicsFail) s["general_verifier"].push_back(r == Review::BothPass ? kGeneralPass : kGeneralFail);
    }
    return s;
}

/// Physics failures never share an iteration with a general-verifier call.
bool short_circuit_holds(const RunTrace& t)
{
    std::map<int, bool> physics_failed;
    for (const auto& c : t.calls) {
        if (c.role == "physics_verifier" && c.outcome == "Fail") physics_failed[c.loop_iteration] = true;
    }
    for (const auto& c : t.calls) {
        if (c.role == "general_verifier" && physics_failed.count(c.loop_iteration)) return false;
    }
    return true;
}

struct LoopSuite {
    int scenarios = 0;
    int mismatches = 0;
    std::string first_mismatch;
    int physics_fail_scenarios = 0;
    int short_circuit_violations = 0;
    double seconds = 0;
};

const LoopSuite& loop_suite()
{
    static const LoopSuite suite = [] {
        LoopSuite s;
        std::vector<std::vector<Review>> sequences;
        const Review all[] = {Review::BothPass, Review::GeneralFail, Review::PhysicsFail};
        for (int len = 1; len <= 5; ++len) {
            int total = 1;
            for (int i = 0; i < len; ++i) total *= 3;
            for (int code = 0; code < total; ++code) {
                std::vector<Review> seq;
                for (int i = 0, x = code; i < len; ++i, x /= 3) seq.push_back(all[x % 3]);
                sequences.push_back(seq);
            }
        }
        std::mt19937 rng(2024);
        std::uniform_int_distribution<int> pick(0, 2), len(6, 10);
        for (int i = 0; i < 150; ++i) {
            std::vector<Review> seq(static_cast<std::size_t>(len(rng)));
            for (auto& r : seq) r = all[pick(rng)];
            sequences.push_back(seq);
        }

        auto t0 = Clock::now();
        for (const auto& seq : sequences) {
            bool has_physics_fail = std::find(seq.begin(), seq.end(), Review::PhysicsFail) != seq.end();
            for (int cv = 1; cv <= 3; ++cv) {
                for (bool strict : {true, false}) {
                    PipelineConfig cfg;
                    cfg.cv = cv;
                    cfg.max_iterations = static_cast<int>(seq.size());
                    cfg.strict_alg1 = strict;
                    auto backend = role_backend(review_script(seq));
                    RunTrace t = solve(text_problem(), cfg, backend, prompts());
                    SimRun want = simulate(seq, cv, strict);
                    ++s.scenarios;
                    if (t.error || !(observed(t).calls == want.calls) || t.accepted != want.accepted) {
                        if (s.mismatches++ == 0) {
                            s.first_mismatch = "cv=" + std::to_string(cv) + " len=" + std::to_string(seq.size()) +
                                               (t.error ? " error: " + *t.error : "");
                        }
                    }
                    if (has_physics_fail) {
                        ++s.physics_fail_scenarios;
                        if (!short_circuit_holds(t)) ++s.short_circuit_violations;
                    }
                }
            }
        }
        s.seconds = seconds_since(t0);
        return s;
    }();
    return suite;
}

Criterion ac1()
{
    const LoopSuite& s = loop_suite();
    std::ostringstream d;
    d << s.scenarios << " scripted scenarios vs simulator, " << s.mismatches << " mismatches, " << s.seconds << " s";
    if (!s.first_mismatch.empty()) d << " (first: " << s.first_mismatch << ")";
    return {s.scenarios >= 40 && s.mismatches == 0 && s.seconds < kAlgorithmBudgetSeconds, d.str()};
}

// ---------------------------------------------------------------------------

Criterion ac2()
{
    struct Olympiad {
        const char* name;
        const char *gold, *silver, *bronze;
    };
    const Olympiad exams[7] = {{"IPhO", "19.7", "12.1", "7.2"},      {"APhO", "23.3", "18.7", "13.1"},
                               {"EuPhO", "16.5", "9.8", "5.8"},      {"NBPhO", "28.6", "20.1", "15.2"},
                               {"PanPhO", "41.5", "28.5", "14.5"},   {"PanMechanics", "52.0", "36.0", "20.0"},
                               {"F=MA", "15.0", "11.0", "9.0"}};
    struct Row {
        const char* model;
        const char* scores[7];
        const char* medals; // G/S/B/- per exam, as shaded
        int gold, silver, bronze;
    };
    const Row rows[8] = {
        {"Gemini-2.5-Flash-Thinking", {"20.2", "27.4", "13.2", "29.0", "44.6", "60.5", "17.8"}, "GGSGGGG", 6, 1, 0},
        {"  + system", {"21.5", "28.0", "16.5", "33.3", "57.8", "72.0", "24.0"}, "GGGGGGG", 7, 0, 0},
        {"Intern-S1", {"15.9", "21.7", "9.0", "23.0", "41.1", "60.4", "18.4"}, "SSBSSGG", 2, 4, 1},
        {"  + system", {"20.8", "25.2", "10.1", "28.9", "46.8", "68.7", "22.7"}, "GGSGGGG", 6, 1, 0},
        {"InternVL3.5-241B-A28B", {"12.0", "21.1", "9.4", "22.6", "24.9", "54.7", "14.0"}, "BSBSBGS", 1, 3, 3},
        {"  + system", {"20.9", "24.6", "9.8", "29.6", "46.2", "66.7", "21.0"}, "GGSGGGG", 6, 1, 0},
        {"Qwen2.5VL-32B-Instruct", {"9.9", "16.5", "6.9", "15.3", "22.5", "28.1", "7.6"}, "BBBBBB-", 0, 0, 6},
        {"  + system", {"12.4", "17.7", "9.0", "21.0", "29.5", "36.0", "12.0"}, "SBBSSSS", 0, 5, 2},
    };
    int cells = 0, matched = 0;
    std::string first_bad;
    for (const auto& row : rows) {
        int g = 0, s = 0, b = 0;
        for (int e = 0; e < 7; ++e) {
            Exam exam{exams[e].name, exams[e].name, Rational(30),
                      {Rational::parse(exams[e].gold), Rational::parse(exams[e].silver), Rational::parse(exams[e].bronze)}};
            Medal m = medal_for(exam, Rational::parse(row.scores[e]));
            char got = m == Medal::Gold ? 'G' : m == Medal::Silver ? 'S' : m == Medal::Bronze ? 'B' : '-';
            g += got == 'G';
            s += got == 'S';
            b += got == 'B';
            ++cells;
            if (got == row.medals[e]) {
                ++matched;
            } else if (first_bad.empty()) {
                first_bad = std::string(row.model) + " " + exams[e].name;
            }
        }
        if (g != row.gold || s != row.silver || b != row.bronze) {
            if (first_bad.empty()) first_bad = std::string(row.model) + " medal counts";
            --matched;
        }
    }
    std::string d = std::to_string(matched) + "/" + std::to_string(cells) + " medal cells";
    if (!first_bad.empty()) d += " (first mismatch: " + first_bad + ")";
    return {cells == 56 && matched == 56, d};
}

// ---------------------------------------------------------------------------

Criterion ac3()
{
    std::mt19937 rng(7);
    const Modality modalities[] = {Modality::TO, Modality::TI, Modality::TV, Modality::TD};
    double worst = 0;
    int sets = 0;
    for (; sets < 20; ++sets) {
        std::uniform_int_distribution<int> count(1, 12), tenths(1, 100), pick(0, 3);
        std::vector<ScoredProblem> data;
        int n = count(rng);
        for (int i = 0; i < n; ++i) {
            Problem p = text_problem("p" + std::to_string(i));
            p.modality = modalities[pick(rng)];
            if (p.modality != Modality::TO) p.images = {"f.png"};
            p.full_mark = Rational(tenths(rng), 10);
            std::uniform_int_distribution<std::int64_t> part(0, 1000);
            Rational score = p.full_mark * Rational(part(rng), 1000);
            data.push_back({p, score});
        }
        // Direct evaluation: (1/N) * sum(score / full) * 100.
        auto oracle = [&](Modality only, bool all) {
            long double sum = 0;
            int count_selected = 0;
            for (const auto& d : data) {
                if (!all && d.problem.modality != only) continue;
                sum += static_cast<long double>(d.score.to_double()) / d.problem.full_mark.to_double();
                ++count_selected;
            }
            return static_cast<double>(sum / count_selected * 100);
        };
        auto rel = [](double a, double b) { return b == 0 ? std::fabs(a) : std::fabs(a - b) / std::fabs(b); };
        worst = std::max(worst, rel(mns(data), oracle(Modality::TO, true)));
        for (Modality m : modalities) {
            bool present = std::any_of(data.begin(), data.end(), [&](const auto& d) { return d.problem.modality == m; });
            if (!present) continue;
            double got = mns(data, [m](const Problem& p) { return p.modality == m; });
            worst = std::max(worst, rel(got, oracle(m, false)));
        }
    }
    std::vector<ScoredProblem> full;
    for (int i = 0; i < 7; ++i) {
        Problem p = text_problem("f" + std::to_string(i));
        p.full_mark = Rational(3 * i + 1, 10);
        full.push_back({p, p.full_mark});
    }
    bool hundred = mns(full) == 100.0;
    std::ostringstream d;
    d << sets << " random sets, worst relative error " << worst << ", all-full = " << mns(full);
    return {worst <= kMnsRelativeTolerance && hundred, d.str()};
}

// ---------------------------------------------------------------------------

Criterion ac4()
{
    std::mt19937 rng(99);
    int instances = 0, mismatches = 0, non_monotone = 0;
    for (; instances < 100; ++instances) {
        std::uniform_int_distribution<int> problems(1, 10), runs(1, 32), pts(0, 20);
        int P = problems(rng), R = runs(rng);
        std::map<std::string, std::vector<Rational>> data;
        for (int p = 0; p < P; ++p) {
            for (int r = 0; r < R; ++r) data["p" + std::to_string(p)].push_back(Rational(pts(rng), 2));
        }
        Rational previous(-1);
        for (int k = 1; k <= R; ++k) {
            Rational brute(0);
            for (const auto& [id, scores] : data) {
                Rational best = scores[0];
                for (int r = 1; r < k; ++r) {
                    if (scores[static_cast<std::size_t>(r)] > best) best = scores[static_cast<std::size_t>(r)];
                }
                brute += best;
            }
            Rational got = pass_at_k(data, k);
            if (got != brute) ++mismatches;
            if (got < previous) ++non_monotone;
            previous = got;
        }
    }
    std::ostringstream d;
    d << instances << " random instances, " << mismatches << " mismatches, " << non_monotone << " monotonicity breaks";
    return {mismatches == 0 && non_monotone == 0, d.str()};
}

// ---------------------------------------------------------------------------

Criterion ac5()
{
    const LoopSuite& s = loop_suite();
    std::ostringstream d;
    d << s.physics_fail_scenarios << " scenarios with physics failures, " << s.short_circuit_violations
      << " general-verifier calls after a physics failure";
    return {s.physics_fail_scenarios > 0 && s.short_circuit_violations == 0, d.str()};
}

// ---------------------------------------------------------------------------

std::vector<ScriptEntry> costed(const std::vector<std::string>& texts)
{
    std::vector<ScriptEntry> out;
    for (const auto& t : texts) out.push_back({t, 1000, 400, 0, false});
    return out;
}

std::int64_t scenario_tokens(const Problem& problem, std::vector<std::string> physics, int cv)
{
    std::map<std::string, std::vector<ScriptEntry>> script;
    std::vector<std::string> sols(60, kSolved);
    script["solver"] = costed(sols);
    script["introspector_improve"] = costed(sols);
    script["introspector_refine"] = costed(sols);
    while (physics.size() < 60) physics.push_back(kPass);
    script["physics_verifier"] = costed(physics);
    script["general_verifier"] = costed(std::vector<std::string>(60, kGeneralPass));
    script["inspector"] = costed({kVisualJson});
    script["introspector_image"] = costed(std::vector<std::string>(10, kVisualJson));
    script["verifier_image"] = costed(std::vector<std::string>(20, kYes));
    ScriptedBackend backend(std::move(script));
    PipelineConfig cfg;
    cfg.cv = cv;
    cfg.max_iterations = 20;
    RunTrace t = solve(problem, cfg, backend, prompts());
    if (t.error || !t.accepted) return -1;
    return t.total_tokens();
}

Criterion ac6()
{
    struct Family {
        const char* name;
        Problem problem;
        std::vector<std::string> physics;
    };
    const std::vector<Family> family{{"text, all pass", text_problem(), {}},
                                     {"text, early failure", text_problem(), {kFail}},
                                     {"text, alternating", text_problem(), {kPass, kFail, kPass, kFail}},
                                     {"image, all pass", image_problem(), {}}};
    bool ok = true;
    std::ostringstream d;
    for (const auto& fam : family) {
        auto t2 = scenario_tokens(fam.problem, fam.physics, 2);
        auto t3 = scenario_tokens(fam.problem, fam.physics, 3);
        auto t5 = scenario_tokens(fam.problem, fam.physics, 5);
        ok = ok && t2 > 0 && t3 > t2 && t5 > t2;
        d << fam.name << ": " << t2 << "/" << t3 << "/" << t5 << "; ";
    }
    std::string detail = "tokens cv=2/3/5 per scenario: " + d.str();
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

// ---------------------------------------------------------------------------

std::string fixture_result(const fixtures::ParserFixture& fx, int* findings)
{
    using fixtures::Kind;
    switch (fx.kind) {
    case Kind::Solution:
        return std::string(to_string(parse_solution(fx.text).verdict));
    case Kind::Image: {
        auto v = parse_image_verdict(fx.text);
        *findings = static_cast<int>(v.findings.size());
        return std::string(to_string(v.verdict));
    }
    case Kind::Physics:
    case Kind::General: {
        auto v = parse_review_verdict(fx.text, fx.kind == Kind::Physics ? Stage::PhysicsVerify : Stage::GeneralVerify);
        *findings = static_cast<int>(v.findings.size());
        return std::string(to_string(v.verdict));
    }
    case Kind::Json:
        return extract_json_block(fx.text) ? "object" : "none";
    }
    return {};
}

Criterion ac7()
{
    const auto& all = fixtures::parser_fixtures();
    int matched = 0;
    std::string first_bad;
    std::vector<std::string> seeds;
    for (const auto& fx : all) {
        int findings = -1;
        std::string got = fixture_result(fx, &findings);
        bool ok = got == fx.expected && (fx.findings < 0 || findings == fx.findings);
        if (ok) {
            ++matched;
        } else if (first_bad.empty()) {
            first_bad = std::string(fx.name) + " -> " + got;
        }
        seeds.emplace_back(fx.text);
    }

    // Fuzz: random bytes, and random splices of fixture text.
    std::mt19937 rng(12345);
    std::uniform_int_distribution<int> byte(0, 255), len(0, 400), coin(0, 2);
    std::uniform_int_distribution<std::size_t> seed_pick(0, seeds.size() - 1);
    int crashes = 0;
    for (int i = 0; i < kFuzzStrings; ++i) {
        std::string s;
        if (coin(rng) == 0) {
            s.resize(static_cast<std::size_t>(len(rng)));
            for (auto& c : s) c = static_cast<char>(byte(rng));
        } else {
            const std::string& a = seeds[seed_pick(rng)];
            const std::string& b = seeds[seed_pick(rng)];
            std::uniform_int_distribution<std::size_t> cut_a(0, a.size()), cut_b(0, b.size());
            s = a.substr(0, cut_a(rng)) + b.substr(cut_b(rng));
            if (!s.empty()) s[std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng)] = static_cast<char>(byte(rng));
        }
        try {
            (void)extract_json_block(s);
            (void)parse_solution(s);
            (void)parse_image_verdict(s);
            (void)parse_review_verdict(s, Stage::PhysicsVerify);
            (void)parse_review_verdict(s, Stage::GeneralVerify);
        } catch (...) {
            ++crashes;
        }
    }
    std::ostringstream d;
    d << matched << "/" << all.size() << " fixtures, " << crashes << " exceptions in " << kFuzzStrings
      << " fuzz strings";
    if (!first_bad.empty()) d << " (first mismatch: " << first_bad << ")";
    return {all.size() >= 30 && matched == static_cast<int>(all.size()) && crashes == 0, d.str()};
}

// ---------------------------------------------------------------------------

Criterion ac8()
{
    PipelineConfig moa;
    moa.framework = Framework::SelfMoA;
    auto b1 = role_backend({{"solver", {kSolved, kSolved}}, {"moa_critique", {"ok"}}, {"moa_synthesize", {kSolved}}});
    RunTrace t_moa = solve(image_problem(), moa, b1, prompts());

    PipelineConfig refine;
    refine.framework = Framework::SelfRefine;
    auto b2 = role_backend({{"solver", {kSolved}},
                            {"refine_critique", {"a", "b", "c"}},
                            {"refine_revise", {kSolved, kSolved, kSolved}}});
    RunTrace t_refine = solve(text_problem(), refine, b2, prompts());

    std::vector<Problem> exam{text_problem("a"), image_problem("b"), text_problem("c")};
    std::atomic<int> backends{0};
    ExamEnv env{prompts(),
                [&](const Problem&, int, std::optional<int>) {
                    ++backends;
                    return std::make_unique<ScriptedBackend>(role_backend({{"solver", {kSolved}}}));
                },
                {},
                1};
    PipelineConfig best;
    best.framework = Framework::BestOfN;
    auto grader = [](const Problem&, const RunTrace&) { return Rational(1); };
    BestOfNResult r3 = solve_best_of_n(exam, best, env, grader);
    bool best_ok = r3.passes.size() == 3 && backends == 9;
    for (std::size_t k = 0; k < r3.passes.size(); ++k) {
        for (const auto& t : r3.passes[k]) best_ok = best_ok && t.calls.size() == 1 && t.pass_index == static_cast<int>(k);
    }
    best.n_best_of = 5;
    BestOfNResult r5 = solve_best_of_n(exam, best, env, grader);
    best_ok = best_ok && r5.passes.size() == 5;

    bool ok = !t_moa.error && t_moa.calls.size() == 4 && !t_refine.error && t_refine.calls.size() == 7 && best_ok;
    std::ostringstream d;
    d << "Self-MoA " << t_moa.calls.size() << " calls, Self-Refine " << t_refine.calls.size() << " calls, Best-of-N "
      << r3.passes.size() << " and " << r5.passes.size() << " exam passes for N=3 and N=5";
    return {ok, d.str()};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(std::vector<std::string> args, std::ostream& out, std::ostream& err)
{
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

json repeat(const std::string& text, int n) { return json(std::vector<std::string>(static_cast<std::size_t>(n), text)); }

Criterion ac9()
{
    auto t0 = Clock::now();
    fs::path dir = fs::temp_directory_path() / "minions_acceptance_e2e";
    fs::remove_all(dir);
    fs::create_directories(dir / "img");
    std::ofstream(dir / "img" / "fig.png") << "PNG";
    std::ofstream(dir / "manifest.json") << R"({
      "exam": {"exam_id": "Mini", "name": "Mini exam", "full_mark_model": 6,
               "thresholds": {"gold": 5, "silver": 3, "bronze": 2}},
      "problems": [
        {"id": "q1", "statement": "Find E.", "modality": "TO", "field": "Mechanics", "full_mark": 2,
         "reference_answer": "42"},
        {"id": "q2", "statement": "Read the figure.", "modality": "TI", "field": "Optics", "full_mark": 2,
         "images": ["img/fig.png"], "reference_answer": "42"},
        {"id": "q3", "statement": "Find T.", "modality": "TO", "field": "Thermodynamics", "full_mark": 2,
         "reference_answer": "41"}
      ]})";
    json everyone{{"solver", repeat(kSolved, 20)},
                  {"introspector_improve", repeat(kSolved, 20)},
                  {"introspector_refine", repeat(kSolved, 20)},
                  {"physics_verifier", repeat(kPass, 20)},
                  {"general_verifier", repeat(kGeneralPass, 20)},
                  {"inspector", repeat(kVisualJson, 2)},
                  {"introspector_image", repeat(kVisualJson, 6)},
                  {"verifier_image", {kNo, kYes, kYes, kYes, kYes}},
                  {"moa_critique", repeat("Both candidates agree.", 2)},
                  {"moa_synthesize", repeat(kSolved, 2)},
                  {"refine_critique", repeat("No issues.", 4)},
                  {"refine_revise", repeat(kSolved, 4)}};
    json q1 = everyone;
    q1["physics_verifier"] = {kFail, kPass, kFail, kFail, kPass, kPass, kPass, kPass, kPass, kPass};
    json config{{"cv", 2},
                {"parallelism", 2},
                {"backend", {{"type", "scripted"}, {"script", {{"*", everyone}, {"q1", q1}}}}},
                {"grader", {{"mode", "exact"}}}};
    std::ofstream(dir / "config.json") << config.dump(2);

    int replays = 0, identical = 0;
    bool ok = true;
    std::ostringstream problems;
    for (const char* fw : {"minions", "single", "best_of_n", "self_moa", "self_refine"}) {
        std::ostringstream out, err;
        fs::path out_dir = dir / fw;
        int code = cli({"minions", "run", "--config", (dir / "config.json").string(), "--manifest",
                        (dir / "manifest.json").string(), "--framework", fw, "--out", out_dir.string()},
                       out, err);
        if (code != 0) {
            ok = false;
            problems << fw << " run exit " << code << ": " << err.str() << "; ";
            continue;
        }
        code = cli({"minions", "grade", "--results", (out_dir / "results.json").string(), "--manifest",
                    (dir / "manifest.json").string(), "--config", (dir / "config.json").string()},
                   out, err);
        json report = code == 0 ? json::parse(slurp(out_dir / "report.json")) : json();
        if (code != 0 || report["exam_score"].get<double>() != 4.0) {
            ok = false;
            problems << fw << " grade failed; ";
        }
        for (const auto& entry : fs::directory_iterator(out_dir / "traces")) {
            ++replays;
            std::string text = slurp(entry.path());
            std::ostringstream rout, rerr;
            int rc = cli({"minions", "replay", entry.path().string()}, rout, rerr);
            ReplayReport rep = replay_trace(parse_trace(text), prompts());
            if (rc == 0 && rep.identical && serialize_trace(rep.rerun) == text) {
                ++identical;
            } else {
                ok = false;
                problems << entry.path().filename().string() << ": " << rep.message << "; ";
            }
        }
    }
    double secs = seconds_since(t0);
    std::ostringstream d;
    d << "5 frameworks, " << identical << "/" << replays << " traces replayed byte-identically, " << secs << " s";
    if (!problems.str().empty()) d << " (" << problems.str() << ")";
    // 3 problems x (minions, single, moa, refine) + 3 problems x 3 Best-of-N passes.
    return {ok && replays == 21 && secs < kEndToEndBudgetSeconds, d.str()};
}

// ---------------------------------------------------------------------------
// Independent simulator of figure verification.

struct VisualSim {
    std::vector<SimCall> calls;
    bool verified = false;
    int rounds = 0;
};

VisualSim simulate_visual(const std::vector<bool>& introspector_parses, const std::vector<bool>& verdicts, int cv,
                          int max_rounds)
{
    VisualSim sim;
    int c = 0;
    std::size_t next_intro = 0, next_verdict = 0;
    auto emit = [&](const char* role, int round, std::int64_t ref = 0) { sim.calls.push_back({role, c, 0, round, ref}); };
    emit("inspector", 0);
    emit("introspector_image", 0);
    bool parsed = introspector_parses[next_intro++];
    for (int round = 1; round <= max_rounds; ++round) {
        sim.rounds = round;
        bool pass = false;
        std::int64_t ref = 0;
        if (parsed) {
            emit("verifier_image", round);
            ref = static_cast<std::int64_t>(sim.calls.size());
            pass = verdicts[next_verdict++];
        }
        if (pass) {
            if (++c >= cv) {
                sim.verified = true;
                break;
            }
            continue;
        }
        c = 0;
        if (round == max_rounds) break;
        emit("introspector_image", round, ref);
        parsed = introspector_parses[next_intro++];
    }
    return sim;
}

Criterion ac10()
{
    const int max_rounds = 5;
    const std::vector<std::vector<bool>> parse_patterns{
        {true, true, true, true, true, true},
        {false, true, true, true, true, true},
        {false, false, true, true, true, true},
        {true, false, true, false, true, true}};
    int scenarios = 0, mismatches = 0, revision_errors = 0;
    std::string first_bad;
    for (int cv = 1; cv <= 3; ++cv) {
        for (const auto& parses : parse_patterns) {
            for (int mask = 0; mask < (1 << max_rounds); ++mask) {
                std::vector<bool> verdicts;
                for (int i = 0; i < max_rounds; ++i) verdicts.push_back(((mask >> i) & 1) != 0);
                RoleScript script;
                script["inspector"] = {kVisualJson};
                for (bool p : parses) script["introspector_image"].push_back(p ? kVisualJson : "No JSON this time.");
                for (bool v : verdicts) script["verifier_image"].push_back(v ? kYes : kNo);
                PipelineConfig cfg;
                cfg.cv = cv;
                cfg.visual_max_rounds = max_rounds;
                Harness h(role_backend(script), cfg);
                Problem problem = image_problem();
                VisualResult r = extract_visual(problem, h.ctx);
                VisualSim want = simulate_visual(parses, verdicts, cv, max_rounds);
                SimRun got = observed(h.trace);
                ++scenarios;
                if (!(got.calls == want.calls) || r.verified != want.verified || r.verify_rounds != want.rounds) {
                    if (mismatches++ == 0) first_bad = "cv=" + std::to_string(cv) + " mask=" + std::to_string(mask);
                }
                // Each revision carries the whole dialogue so far.
                int k = 0;
                for (const auto& call : h.trace.calls) {
                    if (call.role != "introspector_image") continue;
                    if (call.messages.size() != static_cast<std::size_t>(1 + 2 * k)) ++revision_errors;
                    ++k;
                }
            }
        }
    }
    std::ostringstream d;
    d << scenarios << " figure scenarios vs simulator, " << mismatches << " mismatches, " << revision_errors
      << " malformed revision dialogues";
    if (!first_bad.empty()) d << " (first: " << first_bad << ")";
    return {mismatches == 0 && revision_errors == 0, d.str()};
}

} // namespace

int main()
{
    const std::vector<std::function<Criterion()>> criteria{ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9, ac10};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Criterion v;
        try {
            v = criteria[i]();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.ok) ++failed;
        std::cout << "AC" << (i + 1) << (v.ok ? " PASS: " : " FAIL: ") << v.detail << std::endl;
    }
    std::cout << (failed == 0 ? "all acceptance criteria passed" : std::to_string(failed) + " criteria failed")
              << std::endl;
    return failed == 0 ? 0 : 1;
}
