#pragma once

// The turn engine. One turn:
//   1. append user
//   2. fast step on User[q]             -> O_f, append fast,       emit fast_reply
//   3. if O_f.invoke:
//        slow episode                   -> O_s, append slow_trace, emit slow_step* + slow_done
//        fast step on SlowMind[S_t]     -> O_b, append slow_input + fast, emit final_reply
//   4. O_b.invoke is honoured only up to max_slow_invocations_per_turn
//
// Turns on one session never overlap: a second caller gets TurnInProgress.
// A failed turn keeps everything already written and ends with a record
// flagged `failed`; failed turns are left out of later contexts.

#include "duma/backends/backend.hpp"
#include "duma/diagnostics.hpp"
#include "duma/error.hpp"
#include "duma/fast_mind.hpp"
#include "duma/memory.hpp"
#include "duma/memory_store.hpp"
#include "duma/orchestrator/events.hpp"
#include "duma/protocol.hpp"
#include "duma/slow_mind.hpp"
#include "duma/text.hpp"
#include "duma/tools/registry.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

namespace duma {

struct SessionConfig {
    std::string fast_backend;
    std::string slow_backend;  // may equal fast_backend
    FastMindConfig fast;
    SlowMindConfig slow;
    bool expose_o_s = true;
    std::size_t max_slow_invocations_per_turn = 1;

    void validate() const {
        fast.validate();
        slow.validate();
        if (max_slow_invocations_per_turn < 1) {
            throw Error(ErrorCode::InvalidArgument, "max_slow_invocations_per_turn must be >= 1");
        }
    }
};

// A turn rebuilt from persisted records.
struct TurnTrace {
    std::uint64_t turn_index = 0;
    std::string question;
    TurnResult result;
    std::vector<TurnEvent> events;
    bool failed = false;
    std::string error;
};

using Clock = std::function<std::chrono::system_clock::time_point()>;
using IdGenerator = std::function<std::string()>;

inline IdGenerator random_id_generator() {
    auto state = std::make_shared<std::pair<std::mutex, std::mt19937_64>>();
    std::random_device rd;
    state->second.seed((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
    return [state] {
        std::lock_guard lock(state->first);
        char buf[33];
        std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(state->second()),
                      static_cast<unsigned long long>(state->second()));
        return std::string(buf);
    };
}

struct EngineOptions {
    Clock clock = [] { return std::chrono::system_clock::now(); };
    IdGenerator new_id = random_id_generator();
    ViolationSink on_violation = log_violation;
};

class Engine {
    struct Session {
        SessionConfig config;
        SessionMemory memory;
        std::atomic<bool> busy{false};
        mutable std::mutex mu;  // guards memory against concurrent readers
    };

public:
    // Exclusive right to run one turn on a session; released on destruction.
    class TurnTicket {
    public:
        TurnTicket(TurnTicket&& o) noexcept : session_(std::move(o.session_)) {}
        TurnTicket& operator=(TurnTicket&&) = delete;
        ~TurnTicket() {
            if (session_) session_->busy.store(false);
        }

    private:
        friend class Engine;
        explicit TurnTicket(std::shared_ptr<Session> s) : session_(std::move(s)) {}
        std::shared_ptr<Session> session_;
    };

    Engine(MemoryStore store, std::shared_ptr<const tools::ToolRegistry> tools, EngineOptions options = {})
        : store_(std::move(store)), tools_(std::move(tools)), options_(std::move(options)) {
        if (!tools_) tools_ = std::make_shared<const tools::ToolRegistry>();
    }

    const MemoryStore& store() const noexcept { return store_; }
    const tools::ToolRegistry& tools() const noexcept { return *tools_; }

    void register_backend(std::shared_ptr<backends::ModelBackend> backend) {
        std::unique_lock lock(mu_);
        const auto name = backend->name();
        backends_[name] = std::move(backend);
    }

    std::shared_ptr<backends::ModelBackend> backend(const std::string& name) const {
        std::shared_lock lock(mu_);
        const auto it = backends_.find(name);
        if (it == backends_.end()) throw Error(ErrorCode::UnknownBackend, "backend '" + name + "' is not registered");
        return it->second;
    }

    std::map<std::string, backends::Health> health() const {
        std::shared_lock lock(mu_);
        std::map<std::string, backends::Health> out;
        for (const auto& [name, b] : backends_) out[name] = b->health();
        return out;
    }

    std::string create_session(const SessionConfig& config) {
        config.validate();
        backend(config.fast_backend);
        backend(config.slow_backend);
        std::string id;
        do {
            id = options_.new_id();
        } while (store_.exists(id));
        store_.create(id);
        auto s = std::make_shared<Session>();
        s->config = config;
        s->memory = SessionMemory(id);
        std::unique_lock lock(mu_);
        sessions_[id] = std::move(s);
        return id;
    }

    // Re-opens a session persisted by an earlier process.
    void attach_session(const std::string& id, const SessionConfig& config) {
        config.validate();
        backend(config.fast_backend);
        backend(config.slow_backend);
        if (!store_.exists(id)) throw Error(ErrorCode::SessionNotFound, "no stored session '" + id + "'");
        store_.repair(id);
        auto s = std::make_shared<Session>();
        s->config = config;
        s->memory = store_.load(id);
        std::unique_lock lock(mu_);
        sessions_[id] = std::move(s);
    }

    bool has_session(const std::string& id) const {
        std::shared_lock lock(mu_);
        return sessions_.contains(id);
    }

    SessionConfig session_config(const std::string& id) const { return session(id)->config; }

    SessionMemory memory(const std::string& id) const {
        auto s = session(id);
        std::lock_guard lock(s->mu);
        return s->memory;
    }

    TurnTicket begin_turn(const std::string& id) {
        auto s = session(id);
        bool expected = false;
        if (!s->busy.compare_exchange_strong(expected, true)) {
            throw Error(ErrorCode::TurnInProgress, "session '" + id + "' already has a turn in flight");
        }
        return TurnTicket(std::move(s));
    }

    TurnResult run_turn(const std::string& id, const std::string& question, const EventSink& sink = {}) {
        auto ticket = begin_turn(id);
        return run_turn(std::move(ticket), question, sink);
    }

    TurnResult run_turn(TurnTicket ticket, const std::string& question, const EventSink& sink = {}) {
        Session& s = *ticket.session_;
        const auto& cfg = s.config;
        const auto user_input = FastInput::user(question);
        auto fast_backend = backend(cfg.fast_backend);
        auto slow_backend = backend(cfg.slow_backend);
        const std::uint64_t turn = s.memory.next_turn_index();
        auto emit = [&](const TurnEvent& e) {
            if (sink) sink(e);
        };

        append(s, {turn, UserTurn{question}, {}, false, {}});

        FastOutput o_f;
        try {
            o_f = fast_step(s.memory, user_input, *fast_backend, cfg.fast, options_.on_violation);
        } catch (const Error& e) {
            fail(s, turn, FastTurn{}, e, emit);
            throw;
        }
        append(s, {turn, FastTurn{o_f}, {}, false, {}});
        emit(events::fast_reply(turn, o_f));

        std::optional<SlowTrace> o_s;
        std::optional<FastOutput> o_b;
        bool invoke = o_f.invoke;
        std::size_t invocations = 0;
        while (invoke) {
            if (invocations >= cfg.max_slow_invocations_per_turn) {
                if (options_.on_violation) {
                    options_.on_violation({"orchestrator",
                                           "Invoke[True] after a slow episode ignored (limit " +
                                               std::to_string(cfg.max_slow_invocations_per_turn) + " per turn)",
                                           o_b ? o_b->raw : o_f.raw});
                }
                break;
            }
            ++invocations;

            SlowTrace partial;
            auto on_step = [&](const SlowStep& step, std::size_t index) {
                partial.steps.push_back(step);
                emit(events::slow_step(turn, index, step));
            };
            SlowTrace trace;
            try {
                trace = run_slow_episode(s.memory, question, *slow_backend, *tools_, cfg.slow, on_step,
                                         options_.on_violation);
            } catch (const Error& e) {
                partial.terminated_by = Termination::StepBudget;
                fail(s, turn, SlowTraceRecord{std::move(partial)}, e, emit);
                throw;
            }
            append(s, {turn, SlowTraceRecord{trace}, {}, false, {}});
            emit(events::slow_done(turn, trace));

            const auto slow_input = slow_input_payload(trace.final_result);
            FastOutput reply;
            try {
                reply = fast_step(s.memory, FastInput::slow_result(slow_input), *fast_backend, cfg.fast,
                                  options_.on_violation);
            } catch (const Error& e) {
                append(s, {turn, SlowInput{slow_input}, {}, false, {}});
                fail(s, turn, FastTurn{}, e, emit);
                throw;
            }
            append(s, {turn, SlowInput{slow_input}, {}, false, {}});
            append(s, {turn, FastTurn{reply}, {}, false, {}});
            emit(events::final_reply(turn, reply));
            o_s = std::move(trace);
            o_b = reply;
            invoke = reply.invoke;
        }
        return make_turn_result(std::move(o_f), std::move(o_s), std::move(o_b));
    }

    // Rebuilds a turn from persisted records only.
    TurnTrace get_trace(const std::string& id, std::uint64_t turn_index) const {
        return reconstruct_turn(memory(id), turn_index);
    }

    static TurnTrace reconstruct_turn(const SessionMemory& memory, std::uint64_t turn_index) {
        TurnTrace out;
        out.turn_index = turn_index;
        bool found = false;
        bool after_slow_input = false;
        bool have_o_f = false;
        std::optional<SlowTrace> o_s;
        std::optional<FastOutput> o_b;
        for (const auto& r : memory.records()) {
            if (r.turn_index != turn_index) continue;
            found = true;
            if (r.failed) {
                out.failed = true;
                out.error = r.error;
                if (const auto* t = std::get_if<SlowTraceRecord>(&r.entry)) {
                    for (std::size_t i = 0; i < t->trace.steps.size(); ++i) {
                        out.events.push_back(events::slow_step(turn_index, i, t->trace.steps[i]));
                    }
                }
                // the error text carries "<Code>: message"
                const auto colon = r.error.find(':');
                out.events.push_back(events::error(turn_index, r.error.substr(0, colon),
                                                   colon == std::string::npos ? r.error : r.error.substr(colon + 2)));
                continue;
            }
            if (const auto* u = std::get_if<UserTurn>(&r.entry)) {
                out.question = u->question;
            } else if (const auto* f = std::get_if<FastTurn>(&r.entry)) {
                if (!have_o_f) {
                    out.result.o_f = f->output;
                    have_o_f = true;
                    out.events.push_back(events::fast_reply(turn_index, f->output));
                } else if (after_slow_input) {
                    o_b = f->output;
                    out.events.push_back(events::final_reply(turn_index, f->output));
                }
                after_slow_input = false;
            } else if (const auto* t = std::get_if<SlowTraceRecord>(&r.entry)) {
                for (std::size_t i = 0; i < t->trace.steps.size(); ++i) {
                    out.events.push_back(events::slow_step(turn_index, i, t->trace.steps[i]));
                }
                out.events.push_back(events::slow_done(turn_index, t->trace));
                o_s = t->trace;
            } else if (std::holds_alternative<SlowInput>(r.entry)) {
                after_slow_input = true;
            }
        }
        if (!found) throw Error(ErrorCode::TurnNotFound, "turn " + std::to_string(turn_index) + " not found");
        if (o_s && o_b) {
            out.result = make_turn_result(out.result.o_f, std::move(o_s), std::move(o_b));
        } else {
            out.result = make_turn_result(out.result.o_f, std::nullopt, std::nullopt);
        }
        return out;
    }

private:
    // The fast mind cannot take an empty SlowMind[] input.
    static std::string slow_input_payload(const std::string& final_result) {
        return text::trim(final_result).empty() ? std::string("(no result)") : final_result;
    }

    std::shared_ptr<Session> session(const std::string& id) const {
        std::shared_lock lock(mu_);
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) throw Error(ErrorCode::SessionNotFound, "session '" + id + "' not found");
        return it->second;
    }

    void append(Session& s, MemoryRecord rec) {
        rec.ts = text::rfc3339(options_.clock());
        s.memory.check_append(rec);
        store_.append(s.memory.session_id(), rec);
        std::lock_guard lock(s.mu);
        s.memory.append(std::move(rec));
    }

    template <typename Emit>
    void fail(Session& s, std::uint64_t turn, MemoryEntry entry, const Error& e, Emit& emit) {
        try {
            append(s, {turn, std::move(entry), {}, true, e.what()});
        } catch (const Error&) {
            // storage itself failed; the original error is what the caller sees
        }
        const std::string what = e.what();
        const auto colon = what.find(':');
        emit(events::error(turn, to_string(e.code()), colon == std::string::npos ? what : what.substr(colon + 2)));
    }

    MemoryStore store_;
    std::shared_ptr<const tools::ToolRegistry> tools_;
    EngineOptions options_;
    mutable std::shared_mutex mu_;
    std::map<std::string, std::shared_ptr<backends::ModelBackend>> backends_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

} // namespace duma
