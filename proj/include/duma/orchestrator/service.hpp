#pragma once

// HTTP front end for the engine.
//
//   POST /v1/sessions                      {config_name}  -> {session_id}
//   POST /v1/sessions/{id}/turns           {question}     -> TurnResult
//        (Accept: text/event-stream streams fast_reply, slow_step, slow_done,
//         final_reply and error events instead)
//   GET  /v1/sessions/{id}/memory[?debug=true]             -> [MemoryRecord]
//   GET  /v1/sessions/{id}/turns/{t}/trace[?debug=true]    -> trace
//   GET  /healthz
//
// With expose_o_s=false the public views drop slow traces; ?debug=true
// bypasses that.

#include "duma/error.hpp"
#include "duma/orchestrator/config.hpp"
#include "duma/orchestrator/engine.hpp"
#include "duma/orchestrator/events.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <string>

namespace duma {

inline ordered_json turn_result_to_json(std::uint64_t turn, const TurnResult& r, bool expose_o_s) {
    ordered_json j;
    j["turn"] = turn;
    j["o_f"] = fast_output_to_json(r.o_f);
    if (r.o_s && expose_o_s) j["o_s"] = trace_to_json(*r.o_s);
    if (r.o_b) j["o_b"] = fast_output_to_json(*r.o_b);
    j["user_visible_reply"] = r.user_visible_reply;
    return j;
}

inline ordered_json event_to_json(const TurnEvent& e) {
    ordered_json j;
    j["type"] = e.type;
    j["data"] = e.data;
    return j;
}

inline ordered_json turn_trace_to_json(const TurnTrace& t, bool expose_o_s) {
    auto j = turn_result_to_json(t.turn_index, t.result, expose_o_s);
    j["question"] = t.question;
    auto evs = ordered_json::array();
    for (const auto& e : t.events) {
        if (expose_o_s) {
            evs.push_back(event_to_json(e));
        } else if (auto r = events::redact(e)) {
            evs.push_back(event_to_json(*r));
        }
    }
    j["events"] = std::move(evs);
    j["failed"] = t.failed;
    if (t.failed) j["error"] = t.error;
    return j;
}

inline int http_status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::SessionNotFound:
        case ErrorCode::TurnNotFound: return 404;
        case ErrorCode::TurnInProgress: return 409;
        case ErrorCode::InvalidArgument:
        case ErrorCode::ConfigError:
        case ErrorCode::UnknownBackend: return 400;
        case ErrorCode::BackendUnavailable:
        case ErrorCode::AuthError:
        case ErrorCode::ContractError:
        case ErrorCode::NoScriptMatch:
        case ErrorCode::SlowEpisodeFailed: return 502;
        default: return 500;
    }
}

inline std::string sse_frame(const TurnEvent& e) {
    return "event: " + e.type + "\ndata: " + dump_json(e.data) + "\n\n";
}

class SessionService {
public:
    SessionService(Engine& engine, const AppConfig& config) : engine_(engine), config_(config) {}

    void install(httplib::Server& server) {
        server.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                std::string profile = "default";
                if (!req.body.empty()) {
                    const auto body = parse_body(req.body);
                    profile = body.value("config_name", profile);
                }
                const auto id = engine_.create_session(config_.profile(profile));
                reply(res, 201, ordered_json{{"session_id", id}});
            });
        });

        server.Post(R"(/v1/sessions/([A-Za-z0-9_-]+)/turns)", [this](const httplib::Request& req,
                                                                       httplib::Response& res) {
            guarded(res, [&] { post_turn(req, res); });
        });

        server.Get(R"(/v1/sessions/([A-Za-z0-9_-]+)/memory)", [this](const httplib::Request& req,
                                                                       httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                const bool expose = engine_.session_config(id).expose_o_s || debug(req);
                auto out = ordered_json::array();
                for (const auto& r : engine_.memory(id).records()) {
                    if (!expose && std::holds_alternative<SlowTraceRecord>(r.entry)) continue;
                    out.push_back(record_to_json(r));
                }
                reply(res, 200, out);
            });
        });

        server.Get(R"(/v1/sessions/([A-Za-z0-9_-]+)/turns/(\d+)/trace)", [this](const httplib::Request& req,
                                                                                 httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                const auto turn = std::stoull(req.matches[2]);
                const bool expose = engine_.session_config(id).expose_o_s || debug(req);
                reply(res, 200, turn_trace_to_json(engine_.get_trace(id, turn), expose));
            });
        });

        server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            ordered_json j;
            bool ok = true;
            ordered_json backends = ordered_json::object();
            for (const auto& [name, h] : engine_.health()) {
                backends[name] = ordered_json{{"ok", h.ok}, {"detail", h.detail}};
                ok = ok && h.ok;
            }
            j["status"] = ok ? "ok" : "degraded";
            j["backends"] = std::move(backends);
            reply(res, 200, j);
        });
    }

private:
    void post_turn(const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto body = parse_body(req.body);
        if (!body.contains("question") || !body["question"].is_string()) {
            throw Error(ErrorCode::InvalidArgument, "body must contain a string 'question'");
        }
        const auto question = body["question"].get<std::string>();
        FastInput::user(question);  // rejects blank questions before anything is persisted
        const bool expose = engine_.session_config(id).expose_o_s;
        auto ticket = std::make_shared<Engine::TurnTicket>(engine_.begin_turn(id));

        const auto accept = req.get_header_value("Accept");
        if (accept.find("text/event-stream") == std::string::npos) {
            const auto turn = engine_.memory(id).next_turn_index();
            const auto result = engine_.run_turn(std::move(*ticket), question);
            reply(res, 200, turn_result_to_json(turn, result, expose));
            return;
        }

        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream", [this, ticket, question, expose](std::size_t, httplib::DataSink& sink) {
                auto write = [&](const TurnEvent& e) {
                    if (!expose) {
                        auto r = events::redact(e);
                        if (!r) return;
                        const auto frame = sse_frame(*r);
                        sink.write(frame.data(), frame.size());
                        return;
                    }
                    const auto frame = sse_frame(e);
                    sink.write(frame.data(), frame.size());
                };
                try {
                    engine_.run_turn(std::move(*ticket), question, write);
                } catch (const Error&) {
                    // already reported through an error event
                } catch (const std::exception& e) {
                    write(events::error(0, "Internal", e.what()));
                }
                sink.done();
                return true;
            });
    }

    static bool debug(const httplib::Request& req) {
        const auto v = req.get_param_value("debug");
        return v == "true" || v == "1";
    }

    static nlohmann::json parse_body(const std::string& body) {
        try {
            return nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorCode::InvalidArgument, "request body is not valid JSON");
        }
    }

    static void reply(httplib::Response& res, int status, const ordered_json& j) {
        res.status = status;
        res.set_content(dump_json(j), "application/json");
    }

    template <typename F>
    static void guarded(httplib::Response& res, F&& f) {
        try {
            f();
        } catch (const Error& e) {
            reply(res, http_status_for(e.code()),
                  ordered_json{{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}});
        } catch (const std::exception& e) {
            reply(res, 500, ordered_json{{"error", {{"code", "Internal"}, {"message", e.what()}}}});
        }
    }

    Engine& engine_;
    const AppConfig& config_;
};

} // namespace duma
