#include "duma/protocol.hpp"
#include "duma/text.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace duma;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no duma::Error thrown";
    return ErrorCode::InvalidArgument;
}

TEST(FastInput, SerializesBothKinds) {
    EXPECT_EQ(FastInput::user("Is L-001 available?").serialize(), "User[Is L-001 available?]");
    EXPECT_EQ(FastInput::slow_result("price 2.1M").serialize(), "SlowMind[price 2.1M]");
}

TEST(FastInput, RejectsBlankPayload) {
    EXPECT_EQ(code_of([] { FastInput::user(""); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { FastInput::slow_result(" \n\t"); }), ErrorCode::InvalidArgument);
}

TEST(FastOutput, ParsesCanonicalForm) {
    const auto o = parse_fast_output("Invoke[True]\nResponse[Let me check.]");
    EXPECT_TRUE(o.invoke);
    EXPECT_EQ(o.response, "Let me check.");
    EXPECT_EQ(o.raw, "Invoke[True]\nResponse[Let me check.]");
}

TEST(FastOutput, InvokeIsCaseInsensitive) {
    EXPECT_TRUE(parse_fast_output("Invoke[TRUE]\nResponse[x]").invoke);
    EXPECT_FALSE(parse_fast_output("Invoke[false]\nResponse[x]").invoke);
    EXPECT_TRUE(parse_fast_output("Invoke[ true ]\nResponse[x]").invoke);
}

TEST(FastOutput, ResponseRunsToLastBracket) {
    EXPECT_EQ(parse_fast_output("Invoke[False]\nResponse[Unit [B] is free]").response, "Unit [B] is free");
    EXPECT_EQ(parse_fast_output("Invoke[False]\nResponse[a]b]\ntrailing").response, "a]b");
    EXPECT_EQ(parse_fast_output("Invoke[False]\nResponse[line one\nline two]").response, "line one\nline two");
}

TEST(FastOutput, LeadingChatterIsTolerated) {
    const auto o = parse_fast_output("Sure.\nInvoke[False]\nResponse[Hello]");
    EXPECT_FALSE(o.invoke);
    EXPECT_EQ(o.response, "Hello");
}

TEST(FastOutput, UnterminatedResponseRunsToEnd) {
    EXPECT_EQ(parse_fast_output("Invoke[False]\nResponse[cut off mid").response, "cut off mid");
}

TEST(FastOutput, MalformedInputsThrow) {
    EXPECT_EQ(code_of([] { parse_fast_output("Response[x]"); }), ErrorCode::MalformedFastOutput);
    EXPECT_EQ(code_of([] { parse_fast_output("Invoke[True]"); }), ErrorCode::MalformedFastOutput);
    EXPECT_EQ(code_of([] { parse_fast_output("Invoke[maybe]\nResponse[x]"); }), ErrorCode::MalformedFastOutput);
    EXPECT_EQ(code_of([] { parse_fast_output(""); }), ErrorCode::MalformedFastOutput);
}

TEST(FastOutput, MakeUsesCanonicalRaw) {
    const auto o = make_fast_output(true, "one moment");
    EXPECT_EQ(o.raw, "Invoke[True]\nResponse[one moment]");
    EXPECT_EQ(parse_fast_output(o.raw), o);
}

TEST(ChatTemplate, Validation) {
    EXPECT_NO_THROW((ChatTemplate{"<u>", "<a>", ""}.validate()));
    EXPECT_EQ(code_of([] { ChatTemplate{"", "<a>", ""}.validate(); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { ChatTemplate{"<a>", "<a>", ""}.validate(); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { ChatTemplate{"<a>", "<a>x", ""}.validate(); }), ErrorCode::InvalidArgument);
}

TEST(SlowStep, SerializesInGrammar) {
    EXPECT_EQ(SlowStep::reason("think").serialize(), "Reason[think]");
    EXPECT_EQ(SlowStep::act("calculator", "1+2").serialize(), "Act[calculator]{1+2}");
    EXPECT_EQ(SlowStep::obs("3").serialize(), "Obs[3]");
    EXPECT_EQ(SlowStep::finish("done").serialize(), "Finish[done]");
}

TEST(SlowEmission, ReasonThenAct) {
    const auto e = parse_slow_emission("Reason[need the price]\nAct[listing_lookup]{{\"id\": \"L-001\"}}");
    ASSERT_EQ(e.steps.size(), 2u);
    EXPECT_EQ(e.steps[0], SlowStep::reason("need the price"));
    EXPECT_EQ(e.steps[1], SlowStep::act("listing_lookup", "{\"id\": \"L-001\"}"));
}

TEST(SlowEmission, StopsAtFirstActOrFinish) {
    const auto e = parse_slow_emission("Act[calculator]{1+1}\nAct[calculator]{2+2}\nFinish[x]");
    ASSERT_EQ(e.steps.size(), 1u);
    EXPECT_EQ(*e.steps[0].tool_args, "1+1");
    const auto f = parse_slow_emission("Finish[done]\nReason[after]");
    ASSERT_EQ(f.steps.size(), 1u);
    EXPECT_EQ(f.steps[0].payload, "done");
}

TEST(SlowEmission, DiscardsModelWrittenObs) {
    const auto e = parse_slow_emission("Reason[r]\nObs[made up]\nFinish[ok]");
    EXPECT_EQ(e.discarded_obs, 1u);
    ASSERT_EQ(e.steps.size(), 2u);
    EXPECT_EQ(e.steps[1].kind, StepKind::Finish);
}

TEST(SlowEmission, MarkersOnlyAtLineStart) {
    const auto e = parse_slow_emission("Reason[I could Act[calculator]{1} here]\n  Finish[fine]");
    ASSERT_EQ(e.steps.size(), 2u);
    EXPECT_EQ(e.steps[0].payload, "I could Act[calculator]{1} here");
    EXPECT_EQ(e.steps[1].payload, "fine");
}

TEST(SlowEmission, MultiLinePayloadsAndBrackets) {
    const auto e = parse_slow_emission("Reason[line [1]\nline 2]\nFinish[a [b] c]");
    EXPECT_EQ(e.steps[0].payload, "line [1]\nline 2");
    EXPECT_EQ(e.steps[1].payload, "a [b] c");
}

TEST(SlowEmission, ActWithoutArguments) {
    const auto e = parse_slow_emission("Act[calculator]");
    ASSERT_EQ(e.steps.size(), 1u);
    EXPECT_EQ(*e.steps[0].tool_args, "");
}

TEST(SlowEmission, NothingParsableThrows) {
    EXPECT_EQ(code_of([] { parse_slow_emission("just prose"); }), ErrorCode::MalformedSlowEmission);
    EXPECT_EQ(code_of([] { parse_slow_emission("Obs[only]"); }), ErrorCode::MalformedSlowEmission);
    EXPECT_EQ(code_of([] { parse_slow_emission(""); }), ErrorCode::MalformedSlowEmission);
}

TEST(CheckTrace, AcceptsWellFormed) {
    SlowTrace t{{SlowStep::reason("r"), SlowStep::act("calculator", "1"), SlowStep::obs("1"), SlowStep::finish("one")},
                "one",
                Termination::Finish};
    EXPECT_EQ(check_trace(t), "");
    SlowTrace b{{SlowStep::act("calculator", "1"), SlowStep::obs("1")}, "1", Termination::StepBudget};
    EXPECT_EQ(check_trace(b), "");
}

TEST(CheckTrace, FlagsViolations) {
    EXPECT_NE(check_trace({{SlowStep::act("c", "1")}, "", Termination::StepBudget}), "");
    EXPECT_NE(check_trace({{SlowStep::obs("x")}, "x", Termination::StepBudget}), "");
    EXPECT_NE(check_trace({{SlowStep::finish("a"), SlowStep::reason("b")}, "a", Termination::Finish}), "");
    EXPECT_NE(check_trace({{SlowStep::finish("a")}, "b", Termination::Finish}), "");
    EXPECT_NE(check_trace({{SlowStep::reason("a")}, "", Termination::StepBudget}), "");
}

TEST(TurnResult, UserVisibleReplyPrefersSecondFastOutput) {
    const auto o_f = make_fast_output(true, "checking");
    EXPECT_EQ(make_turn_result(o_f, std::nullopt, std::nullopt).user_visible_reply, "checking");
    const auto r = make_turn_result(o_f, SlowTrace{{SlowStep::finish("x")}, "x", Termination::Finish},
                                    make_fast_output(false, "it is x"));
    EXPECT_EQ(r.user_visible_reply, "it is x");
    EXPECT_EQ(code_of([&] { make_turn_result(o_f, std::nullopt, make_fast_output(false, "y")); }),
              ErrorCode::InvariantViolation);
}

TEST(Text, Utf8Helpers) {
    EXPECT_EQ(text::char_count("h\xC3\xA9llo"), 5u);
    EXPECT_EQ(text::char_prefix_bytes("\xE6\x88\xBF\xE5\xB1\x8B", 1), 3u);
    EXPECT_EQ(text::sanitize_utf8("ok\xFFok"), "ok\xEF\xBF\xBDok");
    EXPECT_EQ(text::sanitize_utf8("\xE6\x88"), "\xEF\xBF\xBD\xEF\xBF\xBD");
    EXPECT_EQ(text::to_code_points("a\xC3\xA9"), std::u32string(U"aé"));
}

TEST(Text, Rfc3339) {
    using namespace std::chrono;
    const auto tp = system_clock::time_point(sys_days{year{2026} / October / 16}) + hours(9) + milliseconds(42);
    EXPECT_EQ(text::rfc3339(tp), "2026-10-16T09:00:00.042Z");
}

} // namespace
