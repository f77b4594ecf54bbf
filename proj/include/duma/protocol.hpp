#pragma once

// Value types and bracket grammars exchanged between the two minds.
//
// Fast-mind inputs:   User[<question>]  |  SlowMind[<slow result>]
// Fast-mind outputs:  Invoke[True|False]\nResponse[<reply>]
// Slow-mind steps:    Reason[...]  Act[<tool>]{<raw args>}  Obs[...]  Finish[...]
//
// Payloads are never escaped. Closing brackets are resolved greedily: a
// payload runs to the last `]` of its block, so brackets inside a payload
// survive unchanged.

#include "duma/error.hpp"
#include "duma/text.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace duma {

// ---------------------------------------------------------------------------
// FastInput

class FastInput {
public:
    enum class Kind { UserUtterance, SlowResult };

    static FastInput user(std::string question) {
        return FastInput(Kind::UserUtterance, std::move(question));
    }
    static FastInput slow_result(std::string result) {
        return FastInput(Kind::SlowResult, std::move(result));
    }

    Kind kind() const noexcept { return kind_; }
    const std::string& payload() const noexcept { return payload_; }

    std::string serialize() const {
        return (kind_ == Kind::UserUtterance ? "User[" : "SlowMind[") + payload_ + "]";
    }

    friend bool operator==(const FastInput&, const FastInput&) = default;

private:
    FastInput(Kind kind, std::string payload) : kind_(kind), payload_(std::move(payload)) {
        if (text::trim(payload_).empty()) {
            throw Error(ErrorCode::InvalidArgument, "fast input payload is empty");
        }
    }

    Kind kind_;
    std::string payload_;
};

inline std::string serialize_fast_input(const FastInput& input) { return input.serialize(); }

// ---------------------------------------------------------------------------
// FastOutput

struct FastOutput {
    bool invoke = false;
    std::string response;
    std::string raw;

    friend bool operator==(const FastOutput&, const FastOutput&) = default;
};

inline std::string serialize_fast_output(bool invoke, std::string_view response) {
    std::string out = invoke ? "Invoke[True]\nResponse[" : "Invoke[False]\nResponse[";
    out.append(response);
    out.push_back(']');
    return out;
}

// Builds a FastOutput whose raw text is its canonical serialization.
inline FastOutput make_fast_output(bool invoke, std::string response) {
    FastOutput out;
    out.invoke = invoke;
    out.raw = serialize_fast_output(invoke, response);
    out.response = std::move(response);
    return out;
}

inline FastOutput parse_fast_output(std::string_view raw) {
    constexpr std::string_view invoke_marker = "Invoke[";
    constexpr std::string_view response_marker = "Response[";

    const auto ipos = raw.find(invoke_marker);
    if (ipos == std::string_view::npos) {
        throw Error(ErrorCode::MalformedFastOutput, "missing Invoke[ marker");
    }
    const auto vstart = ipos + invoke_marker.size();
    auto vend = raw.find('\n', vstart);
    if (vend == std::string_view::npos) vend = raw.size();
    auto value = raw.substr(vstart, vend - vstart);
    if (const auto close = value.find(']'); close != std::string_view::npos) {
        value = value.substr(0, close);
    }
    value = text::trim(value);

    FastOutput out;
    if (text::iequals(value, "true")) {
        out.invoke = true;
    } else if (text::iequals(value, "false")) {
        out.invoke = false;
    } else {
        throw Error(ErrorCode::MalformedFastOutput,
                    "Invoke value is not True/False: '" + std::string(value) + "'");
    }

    const auto rpos = raw.find(response_marker);
    if (rpos == std::string_view::npos) {
        throw Error(ErrorCode::MalformedFastOutput, "missing Response[ marker");
    }
    const auto rstart = rpos + response_marker.size();
    const auto rclose = raw.rfind(']');
    if (rclose == std::string_view::npos || rclose < rstart) {
        // Unterminated: the model stopped before closing the block.
        out.response = std::string(raw.substr(rstart));
    } else {
        out.response = std::string(raw.substr(rstart, rclose - rstart));
    }
    out.raw = std::string(raw);
    return out;
}

// ---------------------------------------------------------------------------
// ChatTemplate

struct ChatTemplate {
    std::string begin_marker;
    std::string end_marker;
    std::string system_prompt;

    void validate() const {
        if (begin_marker.empty() || end_marker.empty()) {
            throw Error(ErrorCode::InvalidArgument, "chat template markers must be non-empty");
        }
        if (begin_marker == end_marker) {
            throw Error(ErrorCode::InvalidArgument, "chat template markers must be distinct");
        }
        if (begin_marker.find(end_marker) != std::string::npos ||
            end_marker.find(begin_marker) != std::string::npos) {
            throw Error(ErrorCode::InvalidArgument,
                        "one chat template marker is a substring of the other");
        }
    }

    friend bool operator==(const ChatTemplate&, const ChatTemplate&) = default;
};

// ---------------------------------------------------------------------------
// Slow mind steps and traces

enum class StepKind { Reason, Act, Obs, Finish };

inline std::string_view to_string(StepKind kind) {
    switch (kind) {
        case StepKind::Reason: return "Reason";
        case StepKind::Act: return "Act";
        case StepKind::Obs: return "Obs";
        case StepKind::Finish: return "Finish";
    }
    return "?";
}

inline StepKind step_kind_from_string(std::string_view s) {
    if (s == "Reason") return StepKind::Reason;
    if (s == "Act") return StepKind::Act;
    if (s == "Obs") return StepKind::Obs;
    if (s == "Finish") return StepKind::Finish;
    throw Error(ErrorCode::InvalidArgument, "unknown step kind '" + std::string(s) + "'");
}

struct SlowStep {
    StepKind kind = StepKind::Reason;
    std::string payload;
    std::optional<std::string> tool_name;  // Act only
    std::optional<std::string> tool_args;  // Act only

    static SlowStep reason(std::string p) { return {StepKind::Reason, std::move(p), {}, {}}; }
    static SlowStep obs(std::string p) { return {StepKind::Obs, std::move(p), {}, {}}; }
    static SlowStep finish(std::string p) { return {StepKind::Finish, std::move(p), {}, {}}; }
    static SlowStep act(std::string tool, std::string args) {
        return {StepKind::Act, {}, std::move(tool), std::move(args)};
    }

    // Same bracket grammar the model emits, so transcripts can be fed back verbatim.
    std::string serialize() const {
        switch (kind) {
            case StepKind::Act:
                return "Act[" + tool_name.value_or("") + "]{" + tool_args.value_or("") + "}";
            case StepKind::Reason: return "Reason[" + payload + "]";
            case StepKind::Obs: return "Obs[" + payload + "]";
            case StepKind::Finish: return "Finish[" + payload + "]";
        }
        return {};
    }

    friend bool operator==(const SlowStep&, const SlowStep&) = default;
};

enum class Termination { Finish, StepBudget };

inline std::string_view to_string(Termination t) {
    return t == Termination::Finish ? "Finish" : "StepBudget";
}

inline Termination termination_from_string(std::string_view s) {
    if (s == "Finish") return Termination::Finish;
    if (s == "StepBudget") return Termination::StepBudget;
    throw Error(ErrorCode::InvalidArgument, "unknown termination '" + std::string(s) + "'");
}

struct SlowTrace {
    std::vector<SlowStep> steps;
    std::string final_result;
    Termination terminated_by = Termination::Finish;

    friend bool operator==(const SlowTrace&, const SlowTrace&) = default;
};

// Linear scan over the trace. Returns an empty string when well formed,
// otherwise a description of the first violation.
inline std::string check_trace(const SlowTrace& trace) {
    const auto& steps = trace.steps;
    const SlowStep* last_obs = nullptr;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        if (s.tool_name.has_value() != (s.kind == StepKind::Act)) {
            return "step " + std::to_string(i) + ": tool_name must be present exactly on Act";
        }
        if (s.kind == StepKind::Act) {
            if (i + 1 >= steps.size() || steps[i + 1].kind != StepKind::Obs) {
                return "step " + std::to_string(i) + ": Act not followed by Obs";
            }
        }
        if (s.kind == StepKind::Obs) {
            if (i == 0 || steps[i - 1].kind != StepKind::Act) {
                return "step " + std::to_string(i) + ": Obs without preceding Act";
            }
            last_obs = &s;
        }
        if (s.kind == StepKind::Finish && i + 1 != steps.size()) {
            return "step " + std::to_string(i) + ": Finish is not last";
        }
    }
    if (trace.terminated_by == Termination::Finish) {
        if (steps.empty() || steps.back().kind != StepKind::Finish) {
            return "terminated_by Finish but no Finish step";
        }
        if (trace.final_result != steps.back().payload) {
            return "final_result differs from Finish payload";
        }
    } else {
        if (!steps.empty() && steps.back().kind == StepKind::Finish) {
            return "terminated_by StepBudget but trace ends with Finish";
        }
        if (last_obs == nullptr) return "terminated_by StepBudget without any Obs";
        if (trace.final_result != last_obs->payload) {
            return "final_result differs from last Obs payload";
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Slow emission grammar

struct SlowEmission {
    std::vector<SlowStep> steps;
    std::size_t discarded_obs = 0;  // model-written Obs blocks, dropped
};

namespace detail {

struct BlockMarker {
    StepKind kind;
    std::size_t line_start;     // offset of the line holding the marker
    std::size_t content_start;  // offset just past the opening bracket
};

// Block markers are recognised only at the start of a line (leading
// spaces/tabs allowed), so `Act[` inside a Reason sentence is plain text.
inline std::vector<BlockMarker> find_block_markers(std::string_view raw) {
    static constexpr std::pair<std::string_view, StepKind> kMarkers[] = {
        {"Reason[", StepKind::Reason},
        {"Act[", StepKind::Act},
        {"Obs[", StepKind::Obs},
        {"Finish[", StepKind::Finish},
    };
    std::vector<BlockMarker> out;
    std::size_t line = 0;
    while (line <= raw.size()) {
        std::size_t p = line;
        while (p < raw.size() && (raw[p] == ' ' || raw[p] == '\t')) ++p;
        const auto rest = raw.substr(p);
        for (const auto& [tag, kind] : kMarkers) {
            if (rest.starts_with(tag)) {
                out.push_back({kind, line, p + tag.size()});
                break;
            }
        }
        const auto nl = raw.find('\n', line);
        if (nl == std::string_view::npos) break;
        line = nl + 1;
    }
    return out;
}

// Text between `from` and the last `close` in [from, to); runs to `to`
// (right-trimmed) when the block was never closed.
inline std::string bracket_payload(std::string_view raw, std::size_t from, std::size_t to,
                                   char close) {
    const auto seg = raw.substr(from, to - from);
    const auto c = seg.rfind(close);
    if (c == std::string_view::npos) {
        auto s = seg;
        while (!s.empty() && text::is_space(s.back())) s.remove_suffix(1);
        return std::string(s);
    }
    return std::string(seg.substr(0, c));
}

} // namespace detail

// Parses one model emission. Stops at the first Act or Finish; anything
// after it is dropped. Throws MalformedSlowEmission when no Reason, Act or
// Finish block is present.
inline SlowEmission parse_slow_emission(std::string_view raw) {
    SlowEmission out;
    const auto markers = detail::find_block_markers(raw);
    bool stop = false;
    for (std::size_t i = 0; i < markers.size() && !stop; ++i) {
        const auto& m = markers[i];
        const std::size_t seg_end = i + 1 < markers.size() ? markers[i + 1].line_start : raw.size();
        switch (m.kind) {
            case StepKind::Reason:
                out.steps.push_back(
                    SlowStep::reason(detail::bracket_payload(raw, m.content_start, seg_end, ']')));
                break;
            case StepKind::Finish:
                out.steps.push_back(
                    SlowStep::finish(detail::bracket_payload(raw, m.content_start, seg_end, ']')));
                stop = true;
                break;
            case StepKind::Obs:
                ++out.discarded_obs;
                break;
            case StepKind::Act: {
                const auto seg = raw.substr(m.content_start, seg_end - m.content_start);
                const auto close = seg.find(']');
                if (close == std::string_view::npos) break;
                const auto name = text::trim(seg.substr(0, close));
                if (name.empty()) break;
                std::size_t p = close + 1;
                while (p < seg.size() && text::is_space(seg[p])) ++p;
                std::string args;
                if (p < seg.size() && seg[p] == '{') {
                    args = detail::bracket_payload(raw, m.content_start + p + 1, seg_end, '}');
                }
                out.steps.push_back(SlowStep::act(std::string(name), std::move(args)));
                stop = true;
                break;
            }
        }
    }
    if (out.steps.empty()) {
        throw Error(ErrorCode::MalformedSlowEmission, "no Reason, Act or Finish block found");
    }
    return out;
}

// ---------------------------------------------------------------------------
// TurnResult: O_f, optional O_s and O_b, plus the reply the user should trust.

struct TurnResult {
    FastOutput o_f;
    std::optional<SlowTrace> o_s;
    std::optional<FastOutput> o_b;
    std::string user_visible_reply;

    friend bool operator==(const TurnResult&, const TurnResult&) = default;
};

inline TurnResult make_turn_result(FastOutput o_f, std::optional<SlowTrace> o_s,
                                   std::optional<FastOutput> o_b) {
    if (o_s.has_value() != o_b.has_value()) {
        throw Error(ErrorCode::InvariantViolation, "o_s and o_b must be present together");
    }
    TurnResult r;
    r.user_visible_reply = o_b ? o_b->response : o_f.response;
    r.o_f = std::move(o_f);
    r.o_s = std::move(o_s);
    r.o_b = std::move(o_b);
    return r;
}

} // namespace duma
