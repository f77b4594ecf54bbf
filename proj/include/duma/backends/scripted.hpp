#pragma once

// Deterministic backend for tests and golden traces. Rules are tried in
// order against the full prompt; the first match answers.
//
//   {"type": "scripted",
//    "rules": [{"contains": "Query 0: Hi", "response": "Finish[hello]"},
//              {"regex": "User\\[.*\\]", "responses": ["first", "second"]}],
//    "default": "optional fallback"}
//
// A rule with `response` answers every time. A rule with `responses` hands
// them out in order and stops matching once they are used up.

#include "duma/backends/backend.hpp"
#include "duma/error.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace duma::backends {

enum class MatchKind { Exact, Contains, Regex, Any };

struct ScriptRule {
    MatchKind match = MatchKind::Any;
    std::string pattern;
    std::vector<std::string> responses;
    bool repeat = true;  // false: consume `responses` as a queue

    static ScriptRule exact(std::string p, std::string r) { return {MatchKind::Exact, std::move(p), {std::move(r)}, true}; }
    static ScriptRule contains(std::string p, std::string r) { return {MatchKind::Contains, std::move(p), {std::move(r)}, true}; }
    static ScriptRule regex(std::string p, std::string r) { return {MatchKind::Regex, std::move(p), {std::move(r)}, true}; }
    static ScriptRule always(std::string r) { return {MatchKind::Any, {}, {std::move(r)}, true}; }
    static ScriptRule queue(MatchKind m, std::string p, std::vector<std::string> rs) {
        return {m, std::move(p), std::move(rs), false};
    }
};

class ScriptedBackend final : public ModelBackend {
public:
    explicit ScriptedBackend(std::string name, std::vector<ScriptRule> rules = {},
                             std::optional<std::string> default_response = std::nullopt)
        : name_(std::move(name)), default_(std::move(default_response)) {
        for (auto& r : rules) add_rule(std::move(r));
    }

    void add_rule(ScriptRule rule) {
        if (rule.responses.empty()) {
            throw Error(ErrorCode::ConfigError, "scripted rule without responses in backend '" + name_ + "'");
        }
        std::optional<std::regex> re;
        if (rule.match == MatchKind::Regex) {
            try {
                re.emplace(rule.pattern, std::regex::ECMAScript);
            } catch (const std::regex_error& e) {
                throw Error(ErrorCode::ConfigError, "bad regex '" + rule.pattern + "': " + e.what());
            }
        }
        std::lock_guard lock(mu_);
        rules_.push_back({std::move(rule), std::move(re), 0});
    }

    std::string generate(const std::string& prompt) override {
        std::lock_guard lock(mu_);
        prompts_.push_back(prompt);
        for (auto& r : rules_) {
            if (!r.rule.repeat && r.next >= r.rule.responses.size()) continue;
            if (!matches(r, prompt)) continue;
            if (r.rule.repeat) return r.rule.responses.front();
            return r.rule.responses[r.next++];
        }
        if (default_) return *default_;
        const auto tail = prompt.size() > 160 ? "..." + prompt.substr(prompt.size() - 160) : prompt;
        throw Error(ErrorCode::NoScriptMatch, "backend '" + name_ + "' has no rule for prompt: " + tail);
    }

    std::string name() const override { return name_; }

    // Every prompt seen so far, in call order.
    std::vector<std::string> prompts() const {
        std::lock_guard lock(mu_);
        return prompts_;
    }

    std::size_t call_count() const {
        std::lock_guard lock(mu_);
        return prompts_.size();
    }

    static std::unique_ptr<ScriptedBackend> from_json(const std::string& name, const nlohmann::json& j) {
        std::optional<std::string> def;
        if (j.contains("default") && !j.at("default").is_null()) def = j.at("default").get<std::string>();
        auto backend = std::make_unique<ScriptedBackend>(name, std::vector<ScriptRule>{}, def);
        for (const auto& r : j.value("rules", nlohmann::json::array())) {
            ScriptRule rule;
            if (r.contains("exact")) {
                rule.match = MatchKind::Exact;
                rule.pattern = r.at("exact").get<std::string>();
            } else if (r.contains("contains")) {
                rule.match = MatchKind::Contains;
                rule.pattern = r.at("contains").get<std::string>();
            } else if (r.contains("regex")) {
                rule.match = MatchKind::Regex;
                rule.pattern = r.at("regex").get<std::string>();
            } else {
                rule.match = MatchKind::Any;
            }
            if (r.contains("responses")) {
                rule.responses = r.at("responses").get<std::vector<std::string>>();
                rule.repeat = false;
            } else if (r.contains("response")) {
                rule.responses = {r.at("response").get<std::string>()};
                rule.repeat = true;
            }
            backend->add_rule(std::move(rule));
        }
        return backend;
    }

private:
    struct CompiledRule {
        ScriptRule rule;
        std::optional<std::regex> re;
        std::size_t next;
    };

    static bool matches(const CompiledRule& r, const std::string& prompt) {
        switch (r.rule.match) {
            case MatchKind::Exact: return prompt == r.rule.pattern;
            case MatchKind::Contains: return prompt.find(r.rule.pattern) != std::string::npos;
            case MatchKind::Regex: return std::regex_search(prompt, *r.re);
            case MatchKind::Any: return true;
        }
        return false;
    }

    std::string name_;
    std::optional<std::string> default_;
    mutable std::mutex mu_;
    std::vector<CompiledRule> rules_;
    std::vector<std::string> prompts_;
};

} // namespace duma::backends
