#pragma once

// Fast mind: builds the multi-turn context from Dialogue Memory and asks the
// backend for an Invoke/Response output.
//
//   <system_prompt> M_b I_0 M_e O_0 ... M_b I_{t-1} M_e O_{t-1} M_b I_t M_e
//
// I_k is a serialized FastInput, O_k the raw text the model produced for it.
// Slow-result injections are ordinary exchanges, so later turns see earlier
// slow results without running the slow mind again.

#include "duma/backends/backend.hpp"
#include "duma/diagnostics.hpp"
#include "duma/error.hpp"
#include "duma/memory.hpp"
#include "duma/protocol.hpp"
#include "duma/text.hpp"

#include <deque>
#include <string>

namespace duma {

enum class TruncationPolicy { DropOldestRounds, Fail };

struct FastMindConfig {
    ChatTemplate chat_template;
    std::size_t max_context_chars = 16000;
    TruncationPolicy truncation = TruncationPolicy::DropOldestRounds;

    void validate() const {
        chat_template.validate();
        const auto floor = text::char_count(chat_template.system_prompt) +
                           text::char_count(chat_template.begin_marker) +
                           text::char_count(chat_template.end_marker);
        if (max_context_chars == 0 || max_context_chars < floor) {
            throw Error(ErrorCode::InvalidArgument,
                        "max_context_chars " + std::to_string(max_context_chars) +
                            " cannot hold the system prompt plus one round");
        }
    }
};

inline std::string assemble_context(const SessionMemory& memory, const FastInput& current,
                                    const FastMindConfig& config) {
    const auto& tpl = config.chat_template;
    std::deque<std::string> blocks;
    for (const auto& ex : memory.exchanges()) {
        blocks.push_back(tpl.begin_marker + ex.input + tpl.end_marker + ex.output);
    }
    const std::string tail = tpl.begin_marker + current.serialize() + tpl.end_marker;

    std::size_t total = text::char_count(tpl.system_prompt) + text::char_count(tail);
    for (const auto& b : blocks) total += text::char_count(b);

    if (total > config.max_context_chars) {
        if (config.truncation == TruncationPolicy::Fail) {
            throw Error(ErrorCode::ContextOverflow, "context of " + std::to_string(total) +
                                                        " chars exceeds budget " +
                                                        std::to_string(config.max_context_chars));
        }
        while (total > config.max_context_chars && !blocks.empty()) {
            total -= text::char_count(blocks.front());
            blocks.pop_front();
        }
        if (total > config.max_context_chars) {
            throw Error(ErrorCode::ContextOverflow, "system prompt plus current input (" +
                                                        std::to_string(total) + " chars) exceed budget " +
                                                        std::to_string(config.max_context_chars));
        }
    }

    std::string out = tpl.system_prompt;
    for (const auto& b : blocks) out += b;
    out += tail;
    return out;
}

// Runs one fast-mind step. A reply that breaks the Invoke/Response grammar is
// kept as a plain response with invoke=false and reported to `on_violation`.
inline FastOutput fast_step(const SessionMemory& memory, const FastInput& current,
                            backends::ModelBackend& backend, const FastMindConfig& config,
                            const ViolationSink& on_violation = log_violation) {
    const auto context = assemble_context(memory, current, config);
    auto raw = text::sanitize_utf8(backend.generate(context));
    try {
        return parse_fast_output(raw);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedFastOutput) throw;
        if (on_violation) on_violation({"fast_mind", e.what(), raw});
        FastOutput degraded;
        degraded.invoke = false;
        degraded.response = raw;
        degraded.raw = std::move(raw);
        return degraded;
    }
}

} // namespace duma
