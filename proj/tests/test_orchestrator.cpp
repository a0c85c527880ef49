#include "minions/orchestrator.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <atomic>
#include <numeric>

using namespace minions;
using namespace support;

namespace {

PipelineConfig minions_cfg(int cv = 2, int max_iterations = 5)
{
    PipelineConfig c;
    c.cv = cv;
    c.max_iterations = max_iterations;
    return c;
}

RoleScript minions_script(std::vector<std::string> physics, std::vector<std::string> general, int solutions = 20)
{
    std::vector<std::string> sols(static_cast<std::size_t>(solutions), kSolved);
    return {{"solver", sols},
            {"introspector_improve", sols},
            {"introspector_refine", sols},
            {"physics_verifier", std::move(physics)},
            {"general_verifier", std::move(general)}};
}

RunTrace run(const RoleScript& script, const PipelineConfig& cfg, const Problem& problem = text_problem())
{
    auto backend = role_backend(script);
    return solve(problem, cfg, backend, PromptRegistry::defaults());
}

std::vector<std::string> roles(const RunTrace& t)
{
    std::vector<std::string> out;
    for (const auto& c : t.calls) out.push_back(c.role);
    return out;
}

} // namespace

TEST_CASE("two consecutive passes accept after two iterations")
{
    RunTrace t = run(minions_script({kPass, kPass}, {kGeneralPass, kGeneralPass}), minions_cfg());
    CHECK(t.accepted);
    CHECK_FALSE(t.error);
    CHECK(roles(t) == std::vector<std::string>{"solver", "introspector_improve", "physics_verifier", "general_verifier",
                                               "introspector_improve", "physics_verifier", "general_verifier"});
    CHECK(t.calls[1].loop_iteration == 1);
    CHECK(t.calls[4].loop_iteration == 2);
    CHECK(t.calls[4].c == 1);
    CHECK(t.calls[0].loop_iteration == 0);
    CHECK(t.final_solution.verdict == SolutionVerdict::Complete);
    CHECK_FALSE(t.visual_verified.has_value());
    for (std::size_t i = 0; i < t.calls.size(); ++i) CHECK(t.calls[i].seq == static_cast<std::int64_t>(i + 1));
}

TEST_CASE("two consecutive failures regenerate and reset counters")
{
    RunTrace t = run(minions_script({kFail, kFail, kPass, kPass}, {kGeneralPass, kGeneralPass}), minions_cfg(2, 5));
    CHECK(roles(t) == std::vector<std::string>{"solver", "introspector_improve", "physics_verifier",
                                               "introspector_refine", "introspector_improve", "physics_verifier",
                                               "introspector_refine", "solver", "introspector_improve",
                                               "physics_verifier", "general_verifier", "introspector_improve",
                                               "physics_verifier", "general_verifier"});
    // Refinement links to the report it consumed.
    CHECK(t.calls[3].ref_seq == std::optional<std::int64_t>(3));
    CHECK(t.calls[6].ref_seq == std::optional<std::int64_t>(6));
    // The regeneration happens once f reaches cv, as a fresh episode.
    CHECK(t.calls[7].f == 2);
    CHECK(t.calls[7].messages.size() == 1);
    // Both counters are zero when the next iteration starts.
    CHECK(t.calls[8].c == 0);
    CHECK(t.calls[8].f == 0);
    CHECK(t.calls[8].loop_iteration == 3);
    CHECK(t.accepted);
}

TEST_CASE("a failure resets the success counter")
{
    RunTrace t = run(minions_script({kPass, kFail, kPass, kPass}, {kGeneralPass, kGeneralPass, kGeneralPass}),
                     minions_cfg());
    CHECK(t.accepted);
    CHECK(t.calls.size() == 13);
    // Iteration 2 starts with c=1; its Fail resets c and sets f=1.
    CHECK(t.calls[4].c == 1);
    CHECK(t.calls[6].role == "introspector_refine");
    CHECK(t.calls[7].c == 0);
    CHECK(t.calls[7].f == 1);
    // Accepted on iteration 4, at the second consecutive pass after the failure.
    CHECK(t.calls.back().loop_iteration == 4);
    CHECK(t.calls.back().c == 1);
    for (const auto& c : t.calls) CHECK_FALSE((c.c > 0 && c.f > 0));
}

TEST_CASE("iteration budget exhausted returns the latest solution unaccepted")
{
    auto script = minions_script({kFail, kFail}, {});
    script["solver"] = {kSolved, "**Summary**\nI have not found a complete solution, but I have rigorously proven "
                                 "that E >= 40 J.\n**Detailed Solution**\n..."};
    RunTrace t = run(script, minions_cfg(2, 2));
    CHECK_FALSE(t.accepted);
    CHECK_FALSE(t.error);
    CHECK(t.calls.size() == 8);
    CHECK(t.calls.back().role == "solver");
    CHECK(t.final_solution.verdict == SolutionVerdict::Partial);
}

TEST_CASE("strict_alg1 off improves only after a fresh generation")
{
    PipelineConfig cfg = minions_cfg();
    cfg.strict_alg1 = false;
    RunTrace t = run(minions_script({kPass, kPass}, {kGeneralPass, kGeneralPass}), cfg);
    CHECK(roles(t) == std::vector<std::string>{"solver", "introspector_improve", "physics_verifier", "general_verifier",
                                               "physics_verifier", "general_verifier"});
    CHECK(t.accepted);
}

TEST_CASE("image problems run the visual studio first")
{
    auto script = minions_script({kPass, kPass}, {kGeneralPass, kGeneralPass});
    script["inspector"] = {kVisualJson};
    script["introspector_image"] = {kVisualJson};
    script["verifier_image"] = {kYes, kYes};
    RunTrace t = run(script, minions_cfg(), image_problem());
    CHECK(t.accepted);
    CHECK(t.visual_verified == std::optional<bool>(true));
    REQUIRE(t.calls.size() == 11);
    CHECK(t.calls[4].role == "solver");
    CHECK(t.calls[4].image_count() == 0);
    CHECK(t.calls[4].loop_iteration == 0);
    CHECK(t.calls[4].c == 0);
}

TEST_CASE("backend failure leaves a partial trace")
{
    RoleScript script{{"solver", {kSolved}}};
    std::vector<std::int64_t> seen;
    bool ended = false;
    RunInfo info;
    info.hooks.on_call = [&](const AgentCall& c) { seen.push_back(c.seq); };
    info.hooks.on_end = [&](const RunTrace& t) { ended = t.error.has_value(); };
    auto backend = role_backend(script);
    RunTrace t = solve(text_problem(), minions_cfg(), backend, PromptRegistry::defaults(), info);
    CHECK_FALSE(t.accepted);
    REQUIRE(t.error);
    CHECK(t.error->find("seq 2") != std::string::npos);
    CHECK(t.calls.size() == 1);
    CHECK(seen == std::vector<std::int64_t>{1});
    CHECK(ended);
}

TEST_CASE("baseline call counts")
{
    SUBCASE("single sees raw images")
    {
        RunTrace t = run({{"solver", {kSolved}}}, [] {
            PipelineConfig c;
            c.framework = Framework::Single;
            return c;
        }(), image_problem());
        REQUIRE(t.calls.size() == 1);
        CHECK(t.calls[0].image_count() == 1);
        CHECK(t.calls[0].studio == Studio::Logic);
        CHECK(t.final_solution.final_answer.has_value());
        CHECK(t.accepted);
    }
    SUBCASE("self-moa at defaults")
    {
        PipelineConfig cfg;
        cfg.framework = Framework::SelfMoA;
        RunTrace t = run({{"solver", {kSolved, kSolved}}, {"moa_critique", {"Both agree."}}, {"moa_synthesize", {kSolved}}},
                         cfg);
        CHECK(roles(t) == std::vector<std::string>{"solver", "solver", "moa_critique", "moa_synthesize"});
        for (const auto& c : t.calls) CHECK(c.studio == Studio::Baseline);
        CHECK(t.calls[2].messages[0].content.find("Candidate 2") != std::string::npos);
        CHECK(t.calls[3].messages.size() == 3);
        CHECK(t.calls[2].outcome == "reply");
        CHECK(t.final_solution.raw == kSolved);
        cfg.moa_candidates = 1;
        auto b = role_backend({});
        CHECK_THROWS_AS(solve(text_problem(), cfg, b, PromptRegistry::defaults()), std::invalid_argument);
    }
    SUBCASE("self-refine at defaults")
    {
        PipelineConfig cfg;
        cfg.framework = Framework::SelfRefine;
        RunTrace t = run({{"solver", {"draft"}},
                          {"refine_critique", {"c1", "c2", "c3"}},
                          {"refine_revise", {"r1", "r2", kSolved}}},
                         cfg);
        CHECK(t.calls.size() == 7);
        CHECK(t.calls.back().messages.size() == 13);
        CHECK(t.final_solution.raw == kSolved);
        cfg.refine_iterations = 0;
        auto b = role_backend({});
        CHECK_THROWS_AS(solve(text_problem(), cfg, b, PromptRegistry::defaults()), std::invalid_argument);
    }
}

TEST_CASE("config validation")
{
    PipelineConfig c;
    CHECK(c.validate().empty());
    c.cv = 0;
    CHECK_FALSE(c.validate().empty());
    c = {};
    c.temperature = -0.1;
    CHECK_FALSE(c.validate().empty());
    c = {};
    c.max_tokens = 0;
    CHECK_FALSE(c.validate().empty());

    json j = PipelineConfig{};
    CHECK(j["cv"] == 2);
    CHECK(j["framework"] == "Minions");
    auto partial = json::parse(R"({"cv": 3, "framework": "self_refine"})").get<PipelineConfig>();
    CHECK(partial.cv == 3);
    CHECK(partial.framework == Framework::SelfRefine);
    CHECK(partial.max_iterations == 5);
    CHECK(json(partial).get<PipelineConfig>() == partial);
}

TEST_CASE("best-of-n selection")
{
    CHECK(select_best_run({Rational::parse("16.6"), Rational(15), Rational::parse("14.2")}) == 0);
    CHECK(select_best_run({Rational(10), Rational(10), Rational(9)}) == 0);
    CHECK(select_best_run({Rational(1), Rational(3), Rational(3)}) == 1);
    CHECK_THROWS(select_best_run({}));

    auto prompts = PromptRegistry::defaults();
    std::vector<Problem> problems{text_problem("a"), text_problem("b")};
    ExamEnv env{prompts,
                [](const Problem&, int, std::optional<int>) {
                    return std::make_unique<ScriptedBackend>(role_backend({{"solver", {kSolved}}}));
                },
                {},
                2};
    // Graded totals per pass: 16.6, 15.0, 14.2 split over two problems.
    std::vector<Rational> per_problem{Rational::parse("8.3"), Rational::parse("7.5"), Rational::parse("7.1")};
    ExamGrader grader = [&](const Problem&, const RunTrace& t) { return per_problem.at(*t.pass_index); };

    PipelineConfig cfg;
    cfg.framework = Framework::BestOfN;
    auto r = solve_best_of_n(problems, cfg, env, grader);
    REQUIRE(r.passes.size() == 3);
    CHECK(r.totals[0] == Rational::parse("16.6"));
    CHECK(r.selected == 0);
    CHECK(r.best()[1].problem_id == "b");
    CHECK(r.best()[0].run_id == "E1/a/run0.pass0");
    for (const auto& pass : r.passes) {
        for (const auto& t : pass) {
            CHECK(t.calls.size() == 1);
            CHECK(t.framework == Framework::BestOfN);
        }
    }

    // n = 1 is a single Single pass.
    cfg.n_best_of = 1;
    auto one = solve_best_of_n(problems, cfg, env, grader);
    REQUIRE(one.passes.size() == 1);
    PipelineConfig single_cfg;
    single_cfg.framework = Framework::Single;
    auto b = role_backend({{"solver", {kSolved}}});
    RunTrace single = solve(problems[0], single_cfg, b, prompts);
    CHECK(one.best()[0].calls == single.calls);
    CHECK(one.best()[0].final_solution == single.final_solution);
}

TEST_CASE("run_exam_pass keeps problem order under parallelism")
{
    auto prompts = PromptRegistry::defaults();
    std::vector<Problem> problems;
    for (int i = 0; i < 7; ++i) problems.push_back(text_problem("q" + std::to_string(i)));
    std::atomic<int> begun{0};
    ExamEnv env{prompts,
                [](const Problem& p, int, std::optional<int>) {
                    return std::make_unique<ScriptedBackend>(role_backend({{"solver", {"answer for " + p.id}}}));
                },
                [&](const Problem&, int, std::optional<int>) {
                    TraceHooks h;
                    h.on_begin = [&](const RunTrace&) { ++begun; };
                    return h;
                },
                3};
    PipelineConfig cfg;
    cfg.framework = Framework::Single;
    auto traces = run_exam_pass(problems, cfg, env, 4);
    REQUIRE(traces.size() == 7);
    for (int i = 0; i < 7; ++i) {
        CHECK(traces[i].problem_id == "q" + std::to_string(i));
        CHECK(traces[i].final_solution.raw == "answer for q" + std::to_string(i));
        CHECK(traces[i].run_index == 4);
    }
    CHECK(begun == 7);
}

TEST_CASE("parallel_for")
{
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += static_cast<int>(i); });
    CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 4950);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 5) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
    int count = 0;
    parallel_for(0, 4, [&](std::size_t) { ++count; });
    CHECK(count == 0);
}
