#pragma once

// Per-turn event stream. Order within a turn:
//   fast_reply [, slow_step*, slow_done, final_reply]   (error may end it early)

#include "duma/memory.hpp"
#include "duma/protocol.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace duma {

struct TurnEvent {
    std::string type;  // fast_reply | slow_step | slow_done | final_reply | error
    ordered_json data;

    friend bool operator==(const TurnEvent& a, const TurnEvent& b) {
        return a.type == b.type && a.data == b.data;
    }
};

using EventSink = std::function<void(const TurnEvent&)>;

namespace events {

inline TurnEvent fast_reply(std::uint64_t turn, const FastOutput& o_f) {
    ordered_json d;
    d["turn"] = turn;
    d["invoke"] = o_f.invoke;
    d["response"] = o_f.response;
    return {"fast_reply", std::move(d)};
}

inline TurnEvent slow_step(std::uint64_t turn, std::size_t index, const SlowStep& step) {
    ordered_json d;
    d["turn"] = turn;
    d["index"] = index;
    d["step"] = step_to_json(step);
    return {"slow_step", std::move(d)};
}

inline TurnEvent slow_done(std::uint64_t turn, const SlowTrace& trace) {
    ordered_json d;
    d["turn"] = turn;
    d["final_result"] = trace.final_result;
    d["terminated_by"] = to_string(trace.terminated_by);
    d["steps"] = trace.steps.size();
    return {"slow_done", std::move(d)};
}

inline TurnEvent final_reply(std::uint64_t turn, const FastOutput& o_b) {
    ordered_json d;
    d["turn"] = turn;
    d["invoke"] = o_b.invoke;
    d["response"] = o_b.response;
    return {"final_reply", std::move(d)};
}

inline TurnEvent error(std::uint64_t turn, std::string_view code, const std::string& message) {
    ordered_json d;
    d["turn"] = turn;
    d["code"] = code;
    d["message"] = message;
    return {"error", std::move(d)};
}

// The view of an event a client may see when slow traces are not exposed:
// slow_step is dropped (nullopt) and slow_done keeps only the turn number.
inline std::optional<TurnEvent> redact(const TurnEvent& e) {
    if (e.type == "slow_step") return std::nullopt;
    if (e.type == "slow_done") {
        ordered_json d;
        d["turn"] = e.data.at("turn");
        return TurnEvent{e.type, std::move(d)};
    }
    return e;
}

} // namespace events
} // namespace duma
