#pragma once

// Slow mind: reviews the dialogue, then loops Reason/Act/Obs until the model
// emits Finish or the cycle budget runs out.
//
// Each iteration the prompt is rebuilt as
//
//   <system prompt>
//
//   <review heading>
//   Query 0: ...
//   Answer 0: ...
//   Query t: ...
//
//   <transcript heading>
//   Reason[...]
//   Act[tool]{args}
//   Obs[...]
//
// and one model emission is parsed. Tool failures become Obs text, so the
// model can react to them on the next iteration.

#include "duma/backends/backend.hpp"
#include "duma/diagnostics.hpp"
#include "duma/error.hpp"
#include "duma/memory.hpp"
#include "duma/protocol.hpp"
#include "duma/text.hpp"
#include "duma/tools/registry.hpp"

#include <chrono>
#include <functional>
#include <string>
#include <vector>

namespace duma {

struct SlowMindConfig {
    // `{tools}` expands to the tool listing, `{tool_usage}` to argument docs.
    std::string system_prompt =
        "You are the slow-thinking mind of a real-estate assistant. Think step by step.\n"
        "Write Reason[...] for your reasoning, Act[tool]{arguments} to call a tool, and\n"
        "Finish[...] with the final result once you know it. Available tools:\n{tools}\n"
        "Call syntax:\n{tool_usage}";
    std::string review_heading = "Dialogue review:";
    std::string transcript_heading = "Reasoning so far:";
    std::string corrective_instruction =
        "Your last output could not be parsed. Reply with Reason[...] followed by either "
        "Act[tool]{arguments} or Finish[result].";
    std::size_t max_steps = 4;
    std::chrono::milliseconds per_tool_timeout{5000};
    std::size_t max_obs_chars = 2000;

    void validate() const {
        if (max_steps < 1) throw Error(ErrorCode::InvalidArgument, "max_steps must be at least 1");
        if (max_obs_chars < 1) throw Error(ErrorCode::InvalidArgument, "max_obs_chars must be positive");
    }
};

inline std::string render_dialogue_review(const SessionMemory& memory, std::string_view current_question) {
    std::string out;
    std::size_t i = 0;
    for (const auto& round : memory.rounds()) {
        out += "Query " + std::to_string(i) + ": " + round.question + "\n";
        out += "Answer " + std::to_string(i) + ": " + round.answer + "\n";
        ++i;
    }
    out += "Query " + std::to_string(i) + ": " + std::string(current_question);
    return out;
}

inline std::string render_transcript(const std::vector<SlowStep>& steps) {
    std::string out;
    for (const auto& s : steps) {
        if (!out.empty()) out.push_back('\n');
        out += s.serialize();
    }
    return out;
}

inline std::string expand_system_prompt(const std::string& tpl, const tools::ToolRegistry& registry) {
    auto replace_all = [](std::string s, std::string_view key, const std::string& value) {
        for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
            s.replace(pos, key.size(), value);
        }
        return s;
    };
    auto s = replace_all(tpl, "{tools}", registry.render_listing());
    return replace_all(std::move(s), "{tool_usage}", registry.render_usage());
}

inline std::string build_slow_prompt(const SlowMindConfig& config, const tools::ToolRegistry& registry,
                                     const std::string& review, const std::vector<SlowStep>& steps,
                                     bool corrective = false) {
    std::string out = expand_system_prompt(config.system_prompt, registry);
    auto section = [&out](const std::string& body) {
        if (!out.empty()) out += "\n\n";
        out += body;
    };
    section(config.review_heading + "\n" + review);
    if (!steps.empty()) section(config.transcript_heading + "\n" + render_transcript(steps));
    if (corrective) section(config.corrective_instruction);
    return out;
}

inline std::string truncate_observation(std::string obs, std::size_t max_chars) {
    if (text::char_count(obs) <= max_chars) return obs;
    obs.resize(text::char_prefix_bytes(obs, max_chars));
    obs += "\xE2\x80\xA6[truncated]";  // …[truncated]
    return obs;
}

using StepSink = std::function<void(const SlowStep&, std::size_t index)>;

inline SlowTrace run_slow_episode(const SessionMemory& memory, std::string_view current_question,
                                  backends::ModelBackend& backend, const tools::ToolRegistry& registry,
                                  const SlowMindConfig& config, const StepSink& on_step = {},
                                  const ViolationSink& on_violation = log_violation) {
    config.validate();
    const auto review = render_dialogue_review(memory, current_question);
    SlowTrace trace;
    auto push = [&](SlowStep s) {
        trace.steps.push_back(std::move(s));
        if (on_step) on_step(trace.steps.back(), trace.steps.size() - 1);
    };
    auto report = [&](const std::string& detail, const std::string& raw) {
        if (on_violation) on_violation({"slow_mind", detail, raw});
    };

    for (std::size_t cycle = 0; cycle < config.max_steps; ++cycle) {
        const auto prompt = build_slow_prompt(config, registry, review, trace.steps);
        auto raw = text::sanitize_utf8(backend.generate(prompt));
        SlowEmission emission;
        try {
            emission = parse_slow_emission(raw);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::MalformedSlowEmission) throw;
            report(e.what(), raw);
            raw = text::sanitize_utf8(
                backend.generate(build_slow_prompt(config, registry, review, trace.steps, true)));
            try {
                emission = parse_slow_emission(raw);
            } catch (const Error& e2) {
                if (e2.code() != ErrorCode::MalformedSlowEmission) throw;
                report(std::string(e2.what()) + " (after corrective re-prompt; used as Finish)", raw);
                emission.steps = {SlowStep::finish(std::string(text::trim(raw)))};
            }
        }
        if (emission.discarded_obs > 0) {
            report("model emitted " + std::to_string(emission.discarded_obs) + " Obs block(s); discarded", raw);
        }

        for (auto& step : emission.steps) {
            const auto kind = step.kind;
            if (kind == StepKind::Act) {
                const auto name = *step.tool_name;
                const auto args = *step.tool_args;
                push(std::move(step));
                push(SlowStep::obs(truncate_observation(registry.execute(name, args, config.per_tool_timeout),
                                                        config.max_obs_chars)));
            } else {
                push(std::move(step));
            }
            if (kind == StepKind::Finish) {
                trace.final_result = trace.steps.back().payload;
                trace.terminated_by = Termination::Finish;
                return trace;
            }
        }
    }

    trace.terminated_by = Termination::StepBudget;
    for (auto it = trace.steps.rbegin(); it != trace.steps.rend(); ++it) {
        if (it->kind == StepKind::Obs) {
            trace.final_result = it->payload;
            return trace;
        }
    }
    throw Error(ErrorCode::SlowEpisodeFailed,
                "step budget of " + std::to_string(config.max_steps) + " exhausted without any observation");
}

} // namespace duma
