#pragma once

#include "duma/error.hpp"
#include "duma/text.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace duma::tools {

// Thrown by executors for bad arguments; becomes an `Error: ...` observation.
class ToolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Executor = std::function<std::string(std::string_view raw_args)>;

struct ToolSpec {
    std::string name;  // [a-z0-9_]+
    std::string description;
    std::string arg_schema_doc;
    Executor executor;
};

inline bool is_valid_tool_name(std::string_view name) {
    return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

// Read-only once populated; execute() may be called from many threads.
class ToolRegistry {
public:
    void register_tool(ToolSpec spec) {
        if (!is_valid_tool_name(spec.name)) {
            throw Error(ErrorCode::InvalidArgument, "invalid tool name '" + spec.name + "'");
        }
        if (!spec.executor) {
            throw Error(ErrorCode::InvalidArgument, "tool '" + spec.name + "' has no executor");
        }
        if (index_.contains(spec.name)) {
            throw Error(ErrorCode::DuplicateToolName, "tool '" + spec.name + "' already registered");
        }
        index_.emplace(spec.name, tools_.size());
        tools_.push_back(std::make_shared<const ToolSpec>(std::move(spec)));
    }

    std::size_t size() const noexcept { return tools_.size(); }

    const ToolSpec* find(std::string_view name) const {
        const auto it = index_.find(std::string(name));
        return it == index_.end() ? nullptr : tools_[it->second].get();
    }

    std::vector<std::string> sorted_names() const {
        std::vector<std::string> out;
        for (const auto& [name, _] : index_) out.push_back(name);
        return out;  // std::map keeps them sorted
    }

    // `name: description`, one line per tool, registration order.
    std::string render_listing() const {
        std::string out;
        for (const auto& t : tools_) {
            if (!out.empty()) out.push_back('\n');
            out += t->name + ": " + t->description;
        }
        return out;
    }

    // Argument documentation, one line per tool, registration order.
    std::string render_usage() const {
        std::string out;
        for (const auto& t : tools_) {
            if (!out.empty()) out.push_back('\n');
            out += "Act[" + t->name + "]{" + t->arg_schema_doc + "}";
        }
        return out;
    }

    // Never throws. Every failure comes back as text starting with "Error:".
    // A timeout of zero runs the tool inline without a deadline.
    std::string execute(std::string_view name, std::string_view raw_args,
                        std::chrono::milliseconds timeout = std::chrono::milliseconds{0}) const noexcept {
        try {
            const auto it = index_.find(std::string(name));
            if (it == index_.end()) {
                std::string avail;
                for (const auto& n : sorted_names()) {
                    if (!avail.empty()) avail += ", ";
                    avail += n;
                }
                return text::sanitize_utf8("Error: unknown tool '" + std::string(name) + "'; available: " + avail);
            }
            const auto tool = tools_[it->second];
            if (timeout.count() <= 0) return text::sanitize_utf8(invoke(*tool, raw_args));

            // Detached so a runaway tool cannot hold the episode; the shared
            // state keeps the spec and result alive until it finishes.
            auto promise = std::make_shared<std::promise<std::string>>();
            auto result = promise->get_future();
            std::thread([tool, promise, args = std::string(raw_args)] {
                promise->set_value(invoke(*tool, args));
            }).detach();
            if (result.wait_for(timeout) != std::future_status::ready) {
                return "Error: tool '" + tool->name + "' timed out after " + std::to_string(timeout.count()) + " ms";
            }
            return text::sanitize_utf8(result.get());
        } catch (const std::exception& e) {
            return text::sanitize_utf8(std::string("Error: ") + e.what());
        } catch (...) {
            return "Error: tool execution failed";
        }
    }

private:
    static std::string invoke(const ToolSpec& tool, std::string_view args) noexcept {
        try {
            return tool.executor(args);
        } catch (const ToolError& e) {
            return std::string("Error: ") + e.what();
        } catch (const std::exception& e) {
            return "Error: tool '" + tool.name + "' failed: " + e.what();
        } catch (...) {
            return "Error: tool '" + tool.name + "' failed";
        }
    }

    std::vector<std::shared_ptr<const ToolSpec>> tools_;
    std::map<std::string, std::size_t> index_;
};

} // namespace duma::tools
