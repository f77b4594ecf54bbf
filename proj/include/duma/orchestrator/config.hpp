#pragma once

// Application config file (JSON):
//
// {
//   "data_dir": "./runtime",                       // relative to the config file
//   "templates": {
//     "chat": {"<name>": {"begin_marker", "end_marker", "system_prompt"}},
//     "slow": {"<name>": {"system_prompt", "review_heading", "transcript_heading",
//                         "corrective_instruction"}}
//   },
//   "backends": {
//     "<name>": {"type": "http", "base_url", "model_name", "api_key_env_var",
//                "timeout_ms", "max_retries", "retry_backoff_ms",
//                "mode": "chat_messages" | "raw_completion", "chat_template",
//                "max_tokens", "temperature"},
//     "<name>": {"type": "scripted", "rules": [...], "default": "..."}
//   },
//   "tools": {"enabled": ["calculator", "mortgage_calc", "listing_lookup"],
//             "listings_path": "optional, relative to the config file"},
//   "session_defaults": {
//     "<profile>": {"fast_backend", "slow_backend", "chat_template", "slow_template",
//                   "max_context_chars", "truncation_policy": "drop_oldest_rounds" | "fail",
//                   "max_steps", "per_tool_timeout_ms", "max_obs_chars",
//                   "expose_o_s", "max_slow_invocations_per_turn"}
//   }
// }
//
// The profile named "default" is used when a client does not pick one.

#include "duma/backends/http.hpp"
#include "duma/backends/scripted.hpp"
#include "duma/error.hpp"
#include "duma/orchestrator/engine.hpp"
#include "duma/tools/builtin.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace duma {

struct AppConfig {
    std::filesystem::path data_dir;
    std::map<std::string, ChatTemplate> chat_templates;
    std::map<std::string, SlowMindConfig> slow_templates;
    nlohmann::json backend_specs = nlohmann::json::object();
    std::vector<std::string> tools_enabled = tools::builtin_tool_names();
    std::filesystem::path listings_path;
    std::map<std::string, SessionConfig> profiles;

    static AppConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ConfigError, "invalid JSON in " + path.string() + ": " + e.what());
        }
        return from_json(j, std::filesystem::absolute(path).parent_path());
    }

    static AppConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
        try {
            return parse(j, base_dir);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ConfigError, e.what());
        }
    }

    const SessionConfig& profile(const std::string& name) const {
        const auto it = profiles.find(name);
        if (it == profiles.end()) throw Error(ErrorCode::ConfigError, "no session profile '" + name + "'");
        return it->second;
    }

    std::vector<std::shared_ptr<backends::ModelBackend>> make_backends() const {
        std::vector<std::shared_ptr<backends::ModelBackend>> out;
        for (const auto& [name, spec] : backend_specs.items()) {
            const auto type = spec.value("type", std::string{});
            if (type == "scripted") {
                out.push_back(backends::ScriptedBackend::from_json(name, spec));
            } else if (type == "http") {
                backends::HttpBackendConfig c;
                c.base_url = spec.at("base_url").get<std::string>();
                c.model_name = spec.at("model_name").get<std::string>();
                c.api_key_env_var = spec.value("api_key_env_var", std::string{});
                c.timeout = std::chrono::milliseconds(spec.value("timeout_ms", 30000));
                c.max_retries = spec.value("max_retries", 2);
                c.retry_backoff = std::chrono::milliseconds(spec.value("retry_backoff_ms", 500));
                const auto mode = spec.value("mode", std::string("chat_messages"));
                if (mode == "chat_messages") {
                    c.mode = backends::HttpMode::ChatMessages;
                } else if (mode == "raw_completion") {
                    c.mode = backends::HttpMode::RawCompletion;
                } else {
                    throw Error(ErrorCode::ConfigError, "backend '" + name + "': unknown mode '" + mode + "'");
                }
                if (spec.contains("chat_template")) c.chat_template = chat_template(spec.at("chat_template").get<std::string>());
                c.max_tokens = spec.value("max_tokens", 512);
                c.temperature = spec.value("temperature", 0.7);
                out.push_back(std::make_shared<backends::HttpBackend>(name, std::move(c)));
            } else {
                throw Error(ErrorCode::ConfigError, "backend '" + name + "': unknown type '" + type + "'");
            }
        }
        return out;
    }

    std::shared_ptr<const tools::ToolRegistry> make_tools() const {
        auto reg = std::make_shared<tools::ToolRegistry>();
        tools::register_builtin_tools(*reg, tools_enabled, data_dir, listings_path);
        return reg;
    }

    // Engine with every configured backend registered.
    std::unique_ptr<Engine> make_engine(EngineOptions options = {}) const {
        auto engine = std::make_unique<Engine>(MemoryStore(data_dir), make_tools(), std::move(options));
        for (auto& b : make_backends()) engine->register_backend(std::move(b));
        return engine;
    }

    const ChatTemplate& chat_template(const std::string& name) const {
        const auto it = chat_templates.find(name);
        if (it == chat_templates.end()) throw Error(ErrorCode::ConfigError, "no chat template '" + name + "'");
        return it->second;
    }

private:
    static AppConfig parse(const nlohmann::json& j, const std::filesystem::path& base_dir) {
        AppConfig c;
        c.data_dir = base_dir / j.value("data_dir", std::string("."));
        c.data_dir = c.data_dir.lexically_normal();

        const auto templates = j.value("templates", nlohmann::json::object());
        const auto chat_templates = templates.value("chat", nlohmann::json::object());
        for (const auto& [name, t] : chat_templates.items()) {
            ChatTemplate ct{t.at("begin_marker").get<std::string>(), t.at("end_marker").get<std::string>(),
                            t.value("system_prompt", std::string{})};
            ct.validate();
            c.chat_templates[name] = std::move(ct);
        }
        c.slow_templates["default"] = SlowMindConfig{};
        const auto slow_templates = templates.value("slow", nlohmann::json::object());
        for (const auto& [name, t] : slow_templates.items()) {
            SlowMindConfig s;
            s.system_prompt = t.value("system_prompt", s.system_prompt);
            s.review_heading = t.value("review_heading", s.review_heading);
            s.transcript_heading = t.value("transcript_heading", s.transcript_heading);
            s.corrective_instruction = t.value("corrective_instruction", s.corrective_instruction);
            c.slow_templates[name] = std::move(s);
        }

        c.backend_specs = j.value("backends", nlohmann::json::object());

        const auto tools = j.value("tools", nlohmann::json::object());
        if (tools.contains("enabled")) c.tools_enabled = tools.at("enabled").get<std::vector<std::string>>();
        if (tools.contains("listings_path")) c.listings_path = (base_dir / tools.at("listings_path").get<std::string>()).lexically_normal();

        const auto profiles = j.value("session_defaults", nlohmann::json::object());
        for (const auto& [name, p] : profiles.items()) {
            SessionConfig s;
            s.fast_backend = p.at("fast_backend").get<std::string>();
            s.slow_backend = p.value("slow_backend", s.fast_backend);
            s.fast.chat_template = c.chat_template(p.at("chat_template").get<std::string>());
            s.fast.max_context_chars = p.value("max_context_chars", std::size_t{16000});
            const auto policy = p.value("truncation_policy", std::string("drop_oldest_rounds"));
            if (policy == "drop_oldest_rounds") {
                s.fast.truncation = TruncationPolicy::DropOldestRounds;
            } else if (policy == "fail") {
                s.fast.truncation = TruncationPolicy::Fail;
            } else {
                throw Error(ErrorCode::ConfigError, "unknown truncation_policy '" + policy + "'");
            }
            const auto slow_name = p.value("slow_template", std::string("default"));
            const auto it = c.slow_templates.find(slow_name);
            if (it == c.slow_templates.end()) throw Error(ErrorCode::ConfigError, "no slow template '" + slow_name + "'");
            s.slow = it->second;
            s.slow.max_steps = p.value("max_steps", s.slow.max_steps);
            s.slow.per_tool_timeout = std::chrono::milliseconds(p.value("per_tool_timeout_ms", s.slow.per_tool_timeout.count()));
            s.slow.max_obs_chars = p.value("max_obs_chars", s.slow.max_obs_chars);
            s.expose_o_s = p.value("expose_o_s", true);
            s.max_slow_invocations_per_turn = p.value("max_slow_invocations_per_turn", std::size_t{1});
            s.validate();
            c.profiles[name] = std::move(s);
        }
        return c;
    }
};

} // namespace duma
