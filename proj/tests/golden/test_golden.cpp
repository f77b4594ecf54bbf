#include "golden.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace duma;
using namespace duma::testing;

namespace {

bool updating() {
    const char* v = std::getenv("DUMA_UPDATE_GOLDEN");
    return v != nullptr && std::string(v) == "1";
}

class Golden : public ::testing::TestWithParam<std::string> {};

TEST_P(Golden, SessionFileMatchesFixture) {
    const auto run = run_golden(GetParam());
    const auto actual = run.jsonl();
    if (updating()) {
        write_file(run.expected_path(), actual);
        GTEST_SKIP() << "rewrote " << run.expected_path();
    }
    ASSERT_TRUE(std::filesystem::exists(run.expected_path())) << run.expected_path();
    EXPECT_EQ(actual, read_file(run.expected_path()));
}

TEST_P(Golden, ReplayEqualsLiveResult) {
    const auto run = run_golden(GetParam());
    for (std::size_t t = 0; t < run.results.size(); ++t) {
        const auto trace = run.engine->get_trace(run.session_id, t);
        EXPECT_EQ(trace.result, run.results[t]) << "turn " << t;
        EXPECT_EQ(trace.events, run.events[t]) << "turn " << t;
        EXPECT_FALSE(trace.failed);
    }
}

TEST_P(Golden, ReloadedMemoryEqualsLiveMemory) {
    const auto run = run_golden(GetParam());
    const auto reloaded = run.engine->store().load(run.session_id);
    EXPECT_EQ(reloaded.records(), run.engine->memory(run.session_id).records());
}

TEST_P(Golden, SlowTracesAreWellFormed) {
    const auto run = run_golden(GetParam());
    for (const auto& r : run.results) {
        if (r.o_s) EXPECT_EQ(check_trace(*r.o_s), "");
    }
}

INSTANTIATE_TEST_SUITE_P(Scenarios, Golden, ::testing::ValuesIn(golden_scenarios()),
                         [](const auto& info) { return info.param; });

TEST(GoldenDetails, GreetingNeverCallsSlowMind) {
    const auto run = run_golden("greeting");
    EXPECT_EQ(run.slow->call_count(), 0u);
    EXPECT_FALSE(run.results[0].o_s.has_value());
    EXPECT_EQ(run.results[0].user_visible_reply, "Hello! Welcome in. Are you looking to buy or to rent?");
}

TEST(GoldenDetails, PriceLookupUsesOneTool) {
    const auto run = run_golden("price_lookup");
    const auto& trace = *run.results[0].o_s;
    std::size_t acts = 0;
    for (const auto& s : trace.steps) acts += s.kind == StepKind::Act;
    EXPECT_EQ(acts, 1u);
    EXPECT_EQ(trace.terminated_by, Termination::Finish);
    EXPECT_EQ(trace.final_result, "L-004 Metro Loft Studio: price_total 680000, 38.2 sqm, available");
}

TEST(GoldenDetails, TwoToolEpisodeComputesPayment) {
    const auto run = run_golden("two_tool");
    const auto& steps = run.results[0].o_s->steps;
    ASSERT_EQ(steps.size(), 7u);
    EXPECT_EQ(*steps[4].tool_name, "mortgage_calc");
    EXPECT_EQ(steps[5].payload.substr(0, 26), "monthly_payment: 7103.02; ");
}

TEST(GoldenDetails, StepBudgetUsesLastObservation) {
    const auto run = run_golden("step_budget");
    const auto& trace = *run.results[0].o_s;
    EXPECT_EQ(trace.terminated_by, Termination::StepBudget);
    EXPECT_EQ(trace.steps.size(), 6u);
    EXPECT_EQ(trace.final_result, trace.steps.back().payload);
    EXPECT_EQ(run.slow->call_count(), 2u);
}

TEST(GoldenDetails, MalformedFastOutputDegrades) {
    const auto run = run_golden("malformed_fast");
    EXPECT_FALSE(run.results[0].o_f.invoke);
    EXPECT_EQ(run.results[0].o_f.response, "Of course, the Parkview flat has two bedrooms.");
    ASSERT_EQ(run.violations.size(), 1u);
    EXPECT_EQ(run.violations[0].source, "fast_mind");
}

TEST(GoldenDetails, MalformedSlowEmissionRecovers) {
    const auto run = run_golden("malformed_slow_recovery");
    const auto prompts = run.slow->prompts();
    ASSERT_EQ(prompts.size(), 3u);
    EXPECT_NE(prompts[1].find(SlowMindConfig{}.corrective_instruction), std::string::npos);
    EXPECT_EQ(prompts[0].find(SlowMindConfig{}.corrective_instruction), std::string::npos);
    const auto& steps = run.results[0].o_s->steps;
    ASSERT_EQ(steps.size(), 4u);
    EXPECT_EQ(steps[2].payload, "21319.7969543147");  // the model's own Obs[21000] was dropped
    EXPECT_EQ(run.violations.size(), 2u);
}

} // namespace
