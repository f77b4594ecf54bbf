// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include "golden.hpp"

#include <array>
#include <condition_variable>
#include <cstdio>
#include <functional>
#include <iostream>
#include <latch>
#include <random>
#include <sstream>
#include <thread>

using namespace duma;
using namespace duma::testing;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

// ---------------------------------------------------------------------------

Outcome golden_traces() {
    Outcome out;
    const std::array<const char*, 6> required = {"greeting",      "price_lookup",   "two_tool",
                                                 "step_budget",   "malformed_fast", "malformed_slow_recovery"};
    const auto names = golden_scenarios();
    for (const auto* r : required) {
        out.require(std::find(names.begin(), names.end(), r) != names.end(), std::string("missing scenario ") + r);
    }
    out.require(names.size() >= 6, "fewer than 6 scenarios");
    const auto start = std::chrono::steady_clock::now();
    for (const auto& n : names) {
        const auto run = run_golden(n);
        const auto expected = golden_dir() / "expected" / (n + ".jsonl");
        out.require(std::filesystem::exists(expected), "no fixture for " + n);
        out.require(run.jsonl() == read_file(expected), n + ": session file differs from fixture");
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    out.require(ms.count() < 5000, "suite took " + std::to_string(ms.count()) + " ms");
    if (out.ok) out.detail = std::to_string(names.size()) + " scenarios byte-identical in " + std::to_string(ms.count()) + " ms";
    return out;
}

// ---------------------------------------------------------------------------

std::string random_text(std::mt19937_64& rng, std::size_t max_len, const std::vector<std::string>& forbidden = {}) {
    static const std::vector<std::string> atoms = {
        "a", "b", "Z", "7", " ", "\n", "\t", "[", "]", "{", "}", "Response[", "Invoke[True]", "]]", "\xC3\xA9",
        "\xE6\x88\xBF", "\xF0\x9F\x8F\xA0", "User[", "SlowMind[", "<", ">", "|", "\\", "\"", "price 2.1M",
    };
    for (;;) {
        std::uniform_int_distribution<std::size_t> len(0, max_len);
        std::uniform_int_distribution<std::size_t> pick(0, atoms.size() - 1);
        std::string s;
        const auto n = len(rng);
        for (std::size_t i = 0; i < n; ++i) s += atoms[pick(rng)];
        bool clean = true;
        for (const auto& f : forbidden) clean = clean && s.find(f) == std::string::npos;
        if (clean) return s;
    }
}

Outcome round_trips() {
    Outcome out;
    std::mt19937_64 rng(20261016);
    std::size_t fast_failures = 0;
    for (int i = 0; i < 10000; ++i) {
        const bool invoke = rng() & 1;
        const auto response = random_text(rng, 24);
        const auto parsed = parse_fast_output(serialize_fast_output(invoke, response));
        if (parsed.invoke != invoke || parsed.response != response) ++fast_failures;
    }
    out.require(fast_failures == 0, std::to_string(fast_failures) + " FastOutput round-trip failures");

    const std::vector<ChatTemplate> templates = {
        {"<|user|>", "<|assistant|>", ""},
        {"<|im_start|>user\n", "<|im_end|>\n<|im_start|>assistant\n", ""},
        {"[INST]", "[/INST]", ""},
    };
    std::size_t chat_failures = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto& base = templates[static_cast<std::size_t>(i) % templates.size()];
        const std::vector<std::string> markers = {base.begin_marker, base.end_marker};
        ChatTemplate tpl = base;
        tpl.system_prompt = random_text(rng, 6, markers);
        std::string prompt = tpl.system_prompt;
        const auto rounds = rng() % 5;
        for (std::size_t r = 0; r < rounds; ++r) {
            prompt += tpl.begin_marker + random_text(rng, 8, markers) + tpl.end_marker + random_text(rng, 8, markers);
        }
        prompt += tpl.begin_marker + random_text(rng, 8, markers) + tpl.end_marker;
        try {
            if (backends::join_chat_messages(backends::split_chat_prompt(prompt, tpl), tpl) != prompt) ++chat_failures;
        } catch (const Error&) {
            ++chat_failures;
        }
    }
    out.require(chat_failures == 0, std::to_string(chat_failures) + " chat split/join round-trip failures");
    if (out.ok) out.detail = "10000 FastOutput + 10000 chat split/join cases, 0 failures";
    return out;
}

// ---------------------------------------------------------------------------

Outcome loop_safety() {
    Outcome out;
    const auto tools = builtin_tools();
    for (const std::size_t max_steps : {1u, 2u, 8u}) {
        // The trailing Finish is never honoured: parsing stops at the Act.
        backends::ScriptedBackend never_finishes(
            "adversary", {backends::ScriptRule::always("Reason[keep going]\nAct[calculator]{1+1}\nFinish[done]")});
        SlowMindConfig cfg;
        cfg.max_steps = max_steps;
        cfg.per_tool_timeout = std::chrono::milliseconds(0);
        const auto trace = run_slow_episode(SessionMemory("loop"), "keep going", never_finishes, *tools, cfg, {}, {});
        std::size_t acts = 0;
        std::size_t obs = 0;
        for (const auto& s : trace.steps) {
            acts += s.kind == StepKind::Act;
            obs += s.kind == StepKind::Obs;
        }
        const auto tag = "max_steps=" + std::to_string(max_steps) + ": ";
        out.require(trace.terminated_by == Termination::StepBudget, tag + "did not end with StepBudget");
        out.require(acts == max_steps && obs == max_steps,
                    tag + std::to_string(acts) + " Act / " + std::to_string(obs) + " Obs");
        out.require(never_finishes.call_count() == max_steps, tag + "backend called " +
                                                                   std::to_string(never_finishes.call_count()) + " times");
        out.require(check_trace(trace).empty(), tag + check_trace(trace));
    }
    if (out.ok) out.detail = "StepBudget with exactly max_steps Act/Obs pairs for max_steps 1, 2, 8";
    return out;
}

// ---------------------------------------------------------------------------

Outcome memoization() {
    Outcome out;
    const auto run = run_golden("memoization");
    const auto memory = run.engine->memory(run.session_id);
    std::size_t episodes = 0;
    for (const auto& r : memory.records()) episodes += std::holds_alternative<SlowTraceRecord>(r.entry);
    out.require(episodes == 1, std::to_string(episodes) + " slow episodes recorded");
    out.require(run.results.size() == 2 && !run.results[1].o_s, "second turn ran the slow mind");
    out.require(run.slow->call_count() == 2, "slow backend called " + std::to_string(run.slow->call_count()) + " times");

    const auto tpl = test_template();
    const auto& o_b = *run.results[0].o_b;
    const auto exchange = tpl.begin_marker + FastInput::slow_result(run.results[0].o_s->final_result).serialize() +
                          tpl.end_marker + o_b.raw;
    const auto prompts = run.fast->prompts();
    out.require(prompts.size() == 3, "expected 3 fast-mind calls, got " + std::to_string(prompts.size()));
    if (prompts.size() == 3) {
        out.require(prompts[2].find(exchange) != std::string::npos,
                    "turn-1 context lacks the turn-0 SlowMind exchange verbatim");
    }
    if (out.ok) out.detail = "1 slow episode over 2 turns; turn-1 context holds the SlowMind[...] exchange verbatim";
    return out;
}

// ---------------------------------------------------------------------------

Outcome replay_equivalence() {
    Outcome out;
    std::size_t turns = 0;
    for (const auto& n : golden_scenarios()) {
        const auto run = run_golden(n);
        for (std::size_t t = 0; t < run.results.size(); ++t) {
            const auto trace = run.engine->get_trace(run.session_id, t);
            out.require(trace.result == run.results[t], n + " turn " + std::to_string(t) + ": TurnResult differs");
            out.require(trace.events == run.events[t], n + " turn " + std::to_string(t) + ": events differ");
            // and from a cold load of the file
            const auto cold = Engine::reconstruct_turn(run.engine->store().load(run.session_id), t);
            out.require(cold.result == run.results[t], n + " turn " + std::to_string(t) + ": cold replay differs");
            ++turns;
        }
    }
    if (out.ok) out.detail = std::to_string(turns) + " golden turns replayed identically";
    return out;
}

// ---------------------------------------------------------------------------

Outcome eval_arithmetic() {
    Outcome out;
    const auto scores = source_dir() / "data" / "eval" / "duma_synthetic_scores.jsonl";
    const auto [code, stdout_text] = run_command(std::string("\"") + DUMA_CLI_PATH + "\" eval --scores \"" + scores.string() + "\"");
    out.require(code == 0, "duma eval exited with " + std::to_string(code));
    const std::string row = "| DUMA | 1.550 | 1.417 | 1.125 | 1.810 | 1.357 | 1.471 |";
    out.require(stdout_text.find(row) != std::string::npos, "mean row not found in output:\n" + stdout_text);
    const auto records = eval::load_scores(scores);
    std::set<std::string> dialogues;
    for (const auto& r : records) dialogues.insert(r.dialogue_id);
    out.require(records.size() == 80 && dialogues.size() == 80, "score file does not hold 80 dialogues");
    if (out.ok) out.detail = "duma eval prints " + row + " over 80 dialogues";
    return out;
}

// ---------------------------------------------------------------------------

// Holds every generate() call until released, so one turn stays in flight.
class GatedBackend final : public backends::ModelBackend {
public:
    std::string generate(const std::string&) override {
        std::unique_lock lock(mu_);
        cv_.wait_for(lock, std::chrono::seconds(20), [this] { return open_; });
        return "Invoke[False]\nResponse[ok]";
    }
    std::string name() const override { return "gated"; }
    void open() {
        {
            std::lock_guard lock(mu_);
            open_ = true;
        }
        cv_.notify_all();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    bool open_ = false;
};

Outcome turn_serialization() {
    Outcome out;
    TempDir dir;
    EngineOptions opts;
    opts.clock = stepping_clock();
    opts.on_violation = {};
    Engine engine(MemoryStore(dir.path()), builtin_tools(), opts);
    auto gated = std::make_shared<GatedBackend>();
    engine.register_backend(gated);
    const auto id = engine.create_session(session_config("gated", "gated"));

    constexpr int kCallers = 100;
    std::atomic<int> ok{0};
    std::atomic<int> busy{0};
    std::atomic<int> other{0};
    std::latch start(kCallers);
    std::vector<std::thread> threads;
    for (int i = 0; i < kCallers; ++i) {
        threads.emplace_back([&] {
            start.arrive_and_wait();
            try {
                engine.run_turn(id, "Is L-002 still available?");
                ++ok;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::TurnInProgress) {
                    if (++busy == kCallers - 1) gated->open();
                } else {
                    ++other;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    out.require(ok == 1 && busy == kCallers - 1 && other == 0,
                std::to_string(ok.load()) + " successes, " + std::to_string(busy.load()) + " TurnInProgress, " +
                    std::to_string(other.load()) + " other errors");
    out.require(engine.memory(id).size() == 2, "memory holds " + std::to_string(engine.memory(id).size()) + " records");
    if (out.ok) out.detail = "100 concurrent calls: 1 success, 99 TurnInProgress";
    return out;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"AC1 golden traces", golden_traces},
        {"AC2 randomized round trips", round_trips},
        {"AC3 loop safety", loop_safety},
        {"AC4 memoization", memoization},
        {"AC5 replay equivalence", replay_equivalence},
        {"AC6 eval arithmetic", eval_arithmetic},
        {"AC7 turn serialization", turn_serialization},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.ok ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
        failed += !o.ok;
    }
    return failed == 0 ? 0 : 1;
}
