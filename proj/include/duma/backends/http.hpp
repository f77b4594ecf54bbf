#pragma once

// Client for OpenAI-compatible completion servers.
//
//   raw_completion: POST <base_url>/v1/completions
//                   {model, prompt, max_tokens, temperature, stop:[M_b]}
//   chat_messages:  POST <base_url>/v1/chat/completions
//                   {model, messages, max_tokens, temperature}
//
// Transport errors, timeouts, 408/429 and 5xx are retried with exponential
// backoff. 401/403 fail at once. The bearer token is read from the
// environment variable named in the config, never from the config itself.

#include "duma/backends/backend.hpp"
#include "duma/backends/chat_split.hpp"
#include "duma/error.hpp"
#include "duma/protocol.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace duma::backends {

enum class HttpMode { RawCompletion, ChatMessages };

struct HttpBackendConfig {
    std::string base_url;
    std::string model_name;
    std::string api_key_env_var;  // empty: no Authorization header
    std::chrono::milliseconds timeout{30000};
    int max_retries = 2;
    std::chrono::milliseconds retry_backoff{500};
    HttpMode mode = HttpMode::ChatMessages;
    std::optional<ChatTemplate> chat_template;
    int max_tokens = 512;
    double temperature = 0.7;

    void validate() const {
        if (base_url.empty()) throw Error(ErrorCode::ConfigError, "http backend needs base_url");
        if (model_name.empty()) throw Error(ErrorCode::ConfigError, "http backend needs model_name");
        if (max_retries < 0) throw Error(ErrorCode::ConfigError, "max_retries must be >= 0");
        if (timeout.count() <= 0) throw Error(ErrorCode::ConfigError, "timeout must be positive");
        if (mode == HttpMode::ChatMessages && !chat_template) {
            throw Error(ErrorCode::ConfigError, "chat_messages mode needs a chat template");
        }
        if (chat_template) chat_template->validate();
    }
};

namespace detail {

struct ParsedUrl {
    std::string scheme_host_port;
    std::string path_prefix;
};

inline ParsedUrl parse_base_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::ConfigError, "base_url needs a scheme: '" + url + "'");
    }
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw Error(ErrorCode::ConfigError, "unsupported scheme in base_url '" + url + "'");
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") {
        throw Error(ErrorCode::ConfigError, "https base_url but the build has no TLS support");
    }
#endif
    const auto path_start = url.find('/', scheme_end + 3);
    ParsedUrl out;
    out.scheme_host_port = url.substr(0, path_start);
    if (path_start != std::string::npos) out.path_prefix = url.substr(path_start);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
    return out;
}

} // namespace detail

class HttpBackend final : public ModelBackend {
public:
    HttpBackend(std::string name, HttpBackendConfig config)
        : name_(std::move(name)), config_(std::move(config)) {
        config_.validate();
        url_ = detail::parse_base_url(config_.base_url);
    }

    const HttpBackendConfig& config() const noexcept { return config_; }

    // Exposed for tests: the JSON body generate() would post.
    nlohmann::json request_body(const std::string& prompt) const {
        nlohmann::json body;
        body["model"] = config_.model_name;
        if (config_.mode == HttpMode::RawCompletion) {
            body["prompt"] = prompt;
            body["max_tokens"] = config_.max_tokens;
            body["temperature"] = config_.temperature;
            if (config_.chat_template) body["stop"] = nlohmann::json::array({config_.chat_template->begin_marker});
        } else {
            auto messages = nlohmann::json::array();
            for (const auto& m : split_chat_prompt(prompt, *config_.chat_template)) {
                messages.push_back({{"role", m.role}, {"content", m.content}});
            }
            body["messages"] = std::move(messages);
            body["max_tokens"] = config_.max_tokens;
            body["temperature"] = config_.temperature;
        }
        return body;
    }

    std::string endpoint_path() const {
        return url_.path_prefix +
               (config_.mode == HttpMode::RawCompletion ? "/v1/completions" : "/v1/chat/completions");
    }

    std::string generate(const std::string& prompt) override {
        const auto payload = request_body(prompt).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
        httplib::Headers headers;
        if (!config_.api_key_env_var.empty()) {
            const char* key = std::getenv(config_.api_key_env_var.c_str());
            if (key == nullptr || *key == '\0') {
                throw Error(ErrorCode::AuthError, "environment variable " + config_.api_key_env_var + " is not set");
            }
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        std::string last_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) std::this_thread::sleep_for(config_.retry_backoff * (1LL << (attempt - 1)));
            auto client = acquire();
            auto res = client->Post(endpoint_path(), headers, payload, "application/json");
            release(std::move(client));
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            const int status = res->status;
            if (status == 401 || status == 403) {
                record(false, "auth rejected (" + std::to_string(status) + ")");
                throw Error(ErrorCode::AuthError, name_ + ": server returned " + std::to_string(status));
            }
            if (status >= 500 || status == 408 || status == 429) {
                last_error = "server returned " + std::to_string(status);
                continue;
            }
            if (status < 200 || status >= 300) {
                record(false, "request rejected (" + std::to_string(status) + ")");
                throw Error(ErrorCode::ContractError,
                            name_ + ": server returned " + std::to_string(status) + ": " + res->body.substr(0, 200));
            }
            auto text = extract_text(res->body);
            record(true, "ok");
            return text;
        }
        record(false, last_error);
        throw Error(ErrorCode::BackendUnavailable, name_ + ": " + last_error + " after " +
                                                       std::to_string(config_.max_retries + 1) + " attempt(s)");
    }

    std::string name() const override { return name_; }

    Health health() const override {
        std::lock_guard lock(mu_);
        return {last_ok_, last_detail_};
    }

private:
    std::string extract_text(const std::string& body) const {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorCode::ContractError, name_ + ": response body is not JSON");
        }
        const auto* choices = j.contains("choices") ? &j["choices"] : nullptr;
        if (!choices || !choices->is_array() || choices->empty()) {
            throw Error(ErrorCode::ContractError, name_ + ": response has no choices");
        }
        const auto& first = (*choices)[0];
        if (config_.mode == HttpMode::RawCompletion) {
            if (first.contains("text") && first["text"].is_string()) return first["text"].get<std::string>();
        } else if (first.contains("message") && first["message"].contains("content") &&
                   first["message"]["content"].is_string()) {
            return first["message"]["content"].get<std::string>();
        }
        throw Error(ErrorCode::ContractError, name_ + ": first choice carries no text");
    }

    std::unique_ptr<httplib::Client> acquire() {
        {
            std::lock_guard lock(mu_);
            if (!pool_.empty()) {
                auto c = std::move(pool_.back());
                pool_.pop_back();
                return c;
            }
        }
        auto c = std::make_unique<httplib::Client>(url_.scheme_host_port);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
        c->set_connection_timeout(secs.count(), usecs.count());
        c->set_read_timeout(secs.count(), usecs.count());
        c->set_write_timeout(secs.count(), usecs.count());
        c->set_keep_alive(true);
        return c;
    }

    void release(std::unique_ptr<httplib::Client> c) {
        std::lock_guard lock(mu_);
        if (pool_.size() < 8) pool_.push_back(std::move(c));
    }

    void record(bool ok, std::string detail) {
        std::lock_guard lock(mu_);
        last_ok_ = ok;
        last_detail_ = std::move(detail);
    }

    std::string name_;
    HttpBackendConfig config_;
    detail::ParsedUrl url_;
    mutable std::mutex mu_;
    std::vector<std::unique_ptr<httplib::Client>> pool_;
    bool last_ok_ = true;
    std::string last_detail_ = "no requests yet";
};

} // namespace duma::backends
