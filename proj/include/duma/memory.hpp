#pragma once

// Dialogue Memory: the ordered, append-only record of one session.
//
// A turn is one user utterance. Within a turn the orchestrator appends, in
// order: user, fast (O_f) and, when the slow mind ran, slow_trace (O_s),
// slow_input (S_t) and fast (O_b).

#include "duma/error.hpp"
#include "duma/protocol.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace duma {

struct UserTurn {
    std::string question;
    friend bool operator==(const UserTurn&, const UserTurn&) = default;
};

struct FastTurn {
    FastOutput output;
    friend bool operator==(const FastTurn&, const FastTurn&) = default;
};

struct SlowInput {
    std::string result;
    friend bool operator==(const SlowInput&, const SlowInput&) = default;
};

struct SlowTraceRecord {
    SlowTrace trace;
    friend bool operator==(const SlowTraceRecord&, const SlowTraceRecord&) = default;
};

using MemoryEntry = std::variant<UserTurn, FastTurn, SlowInput, SlowTraceRecord>;

struct MemoryRecord {
    std::uint64_t turn_index = 0;
    MemoryEntry entry;
    std::string ts;  // RFC 3339
    // Set on the record that closes a turn which could not complete.
    bool failed = false;
    std::string error;

    friend bool operator==(const MemoryRecord&, const MemoryRecord&) = default;
};

inline std::string_view record_kind(const MemoryEntry& e) {
    switch (e.index()) {
        case 0: return "user";
        case 1: return "fast";
        case 2: return "slow_input";
        default: return "slow_trace";
    }
}

// One I -> O pair of the fast mind's multi-turn context.
struct Exchange {
    std::uint64_t turn_index = 0;
    std::string input;   // serialized FastInput
    std::string output;  // raw FastOutput text
};

// A completed round as the slow mind's dialogue review sees it.
struct Round {
    std::string question;
    std::string answer;  // user-visible reply of that round
};

class SessionMemory {
public:
    SessionMemory() = default;
    explicit SessionMemory(std::string session_id) : session_id_(std::move(session_id)) {}

    const std::string& session_id() const noexcept { return session_id_; }
    const std::vector<MemoryRecord>& records() const& noexcept { return records_; }
    // Lets `for (auto& r : engine.memory(id).records())` own its snapshot.
    std::vector<MemoryRecord> records() && { return std::move(records_); }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    std::uint64_t next_turn_index() const {
        return records_.empty() ? 0 : records_.back().turn_index + 1;
    }

    // Throws OutOfOrderTurn / InvariantViolation when `rec` cannot follow the
    // current records.
    void check_append(const MemoryRecord& rec) const {
        if (!records_.empty() && rec.turn_index < records_.back().turn_index) {
            throw Error(ErrorCode::OutOfOrderTurn,
                        "turn " + std::to_string(rec.turn_index) + " after turn " +
                            std::to_string(records_.back().turn_index));
        }
        if (std::holds_alternative<SlowInput>(rec.entry) && !rec.failed) {
            bool invoked = false;
            for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
                if (it->turn_index != rec.turn_index) break;
                if (const auto* f = std::get_if<FastTurn>(&it->entry); f && !it->failed) {
                    invoked = f->output.invoke;
                    if (invoked) break;
                }
            }
            if (!invoked) {
                throw Error(ErrorCode::InvariantViolation,
                            "slow_input at turn " + std::to_string(rec.turn_index) +
                                " without a preceding Invoke[True] fast output");
            }
        }
    }

    void append(MemoryRecord rec) {
        check_append(rec);
        records_.push_back(std::move(rec));
    }

    std::set<std::uint64_t> failed_turns() const {
        std::set<std::uint64_t> out;
        for (const auto& r : records_) {
            if (r.failed) out.insert(r.turn_index);
        }
        return out;
    }

    // Fast-mind exchanges in order, skipping failed turns. Slow-result
    // injections are exchanges of their own inside the same turn.
    std::vector<Exchange> exchanges() const {
        const auto failed = failed_turns();
        std::vector<Exchange> out;
        std::optional<Exchange> pending;
        for (const auto& r : records_) {
            if (failed.contains(r.turn_index)) continue;
            if (const auto* u = std::get_if<UserTurn>(&r.entry)) {
                pending = Exchange{r.turn_index, FastInput::user(u->question).serialize(), {}};
            } else if (const auto* s = std::get_if<SlowInput>(&r.entry)) {
                pending = Exchange{r.turn_index, FastInput::slow_result(s->result).serialize(), {}};
            } else if (const auto* f = std::get_if<FastTurn>(&r.entry)) {
                if (pending) {
                    pending->output = f->output.raw;
                    out.push_back(std::move(*pending));
                    pending.reset();
                }
            }
        }
        return out;
    }

    // Completed, non-failed rounds: question plus the last fast reply of the turn.
    std::vector<Round> rounds() const {
        const auto failed = failed_turns();
        std::vector<Round> out;
        std::optional<std::uint64_t> current;
        bool answered = false;
        for (const auto& r : records_) {
            if (failed.contains(r.turn_index)) continue;
            if (const auto* u = std::get_if<UserTurn>(&r.entry)) {
                if (current && !answered) out.pop_back();
                out.push_back({u->question, {}});
                current = r.turn_index;
                answered = false;
            } else if (const auto* f = std::get_if<FastTurn>(&r.entry)) {
                if (current && r.turn_index == *current) {
                    out.back().answer = f->output.response;
                    answered = true;
                }
            }
        }
        if (current && !answered) out.pop_back();
        return out;
    }

private:
    std::string session_id_;
    std::vector<MemoryRecord> records_;
};

// ---------------------------------------------------------------------------
// JSON codec (one record per JSONL line)

using ordered_json = nlohmann::ordered_json;

inline ordered_json step_to_json(const SlowStep& s) {
    ordered_json j;
    j["kind"] = to_string(s.kind);
    j["payload"] = s.payload;
    if (s.tool_name) j["tool_name"] = *s.tool_name;
    if (s.tool_args) j["tool_args"] = *s.tool_args;
    return j;
}

inline SlowStep step_from_json(const nlohmann::ordered_json& j) {
    SlowStep s;
    s.kind = step_kind_from_string(j.at("kind").get<std::string>());
    s.payload = j.value("payload", std::string{});
    if (j.contains("tool_name")) s.tool_name = j.at("tool_name").get<std::string>();
    if (j.contains("tool_args")) s.tool_args = j.at("tool_args").get<std::string>();
    return s;
}

inline ordered_json trace_to_json(const SlowTrace& t) {
    ordered_json j;
    auto steps = ordered_json::array();
    for (const auto& s : t.steps) steps.push_back(step_to_json(s));
    j["steps"] = std::move(steps);
    j["final_result"] = t.final_result;
    j["terminated_by"] = to_string(t.terminated_by);
    return j;
}

inline SlowTrace trace_from_json(const ordered_json& j) {
    SlowTrace t;
    for (const auto& s : j.at("steps")) t.steps.push_back(step_from_json(s));
    t.final_result = j.at("final_result").get<std::string>();
    t.terminated_by = termination_from_string(j.at("terminated_by").get<std::string>());
    return t;
}

inline ordered_json fast_output_to_json(const FastOutput& f) {
    ordered_json j;
    j["invoke"] = f.invoke;
    j["response"] = f.response;
    j["raw"] = f.raw;
    return j;
}

inline FastOutput fast_output_from_json(const ordered_json& j) {
    FastOutput f;
    f.invoke = j.at("invoke").get<bool>();
    f.response = j.at("response").get<std::string>();
    f.raw = j.at("raw").get<std::string>();
    return f;
}

inline ordered_json record_to_json(const MemoryRecord& r) {
    ordered_json j;
    j["turn"] = r.turn_index;
    j["kind"] = record_kind(r.entry);
    ordered_json payload;
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, UserTurn>) {
                payload["question"] = e.question;
            } else if constexpr (std::is_same_v<T, FastTurn>) {
                payload = fast_output_to_json(e.output);
            } else if constexpr (std::is_same_v<T, SlowInput>) {
                payload["result"] = e.result;
            } else {
                payload = trace_to_json(e.trace);
            }
        },
        r.entry);
    j["payload"] = std::move(payload);
    j["ts"] = r.ts;
    if (r.failed) {
        j["failed"] = true;
        j["error"] = r.error;
    }
    return j;
}

inline MemoryRecord record_from_json(const ordered_json& j) {
    MemoryRecord r;
    r.turn_index = j.at("turn").get<std::uint64_t>();
    const auto kind = j.at("kind").get<std::string>();
    const auto& p = j.at("payload");
    if (kind == "user") {
        r.entry = UserTurn{p.at("question").get<std::string>()};
    } else if (kind == "fast") {
        r.entry = FastTurn{fast_output_from_json(p)};
    } else if (kind == "slow_input") {
        r.entry = SlowInput{p.at("result").get<std::string>()};
    } else if (kind == "slow_trace") {
        r.entry = SlowTraceRecord{trace_from_json(p)};
    } else {
        throw Error(ErrorCode::StorageFailure, "unknown record kind '" + kind + "'");
    }
    r.ts = j.at("ts").get<std::string>();
    r.failed = j.value("failed", false);
    r.error = j.value("error", std::string{});
    return r;
}

inline std::string dump_json(const ordered_json& j) {
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

} // namespace duma
