#pragma once

// Converts between the canonical string context
//   <system> M_b u_0 M_e a_0 ... M_b u_t M_e [a_t]
// and an OpenAI-style message list. join(split(p)) == p for any prompt whose
// message contents do not contain either marker.

#include "duma/error.hpp"
#include "duma/protocol.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace duma::backends {

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

inline std::vector<ChatMessage> split_chat_prompt(std::string_view prompt, const ChatTemplate& tpl) {
    const std::string_view mb = tpl.begin_marker;
    const std::string_view me = tpl.end_marker;
    std::vector<ChatMessage> out;

    auto pos = prompt.find(mb);
    const auto prefix = prompt.substr(0, pos == std::string_view::npos ? prompt.size() : pos);
    if (prefix.find(me) != std::string_view::npos) {
        throw Error(ErrorCode::ContractError, "end marker before any begin marker in prompt");
    }
    if (!prefix.empty()) out.push_back({"system", std::string(prefix)});

    while (pos != std::string_view::npos) {
        pos += mb.size();
        const auto end = prompt.find(me, pos);
        if (end == std::string_view::npos) {
            throw Error(ErrorCode::ContractError, "begin marker without matching end marker in prompt");
        }
        if (prompt.substr(pos, end - pos).find(mb) != std::string_view::npos) {
            throw Error(ErrorCode::ContractError, "nested begin marker in prompt");
        }
        out.push_back({"user", std::string(prompt.substr(pos, end - pos))});
        pos = end + me.size();
        const auto next = prompt.find(mb, pos);
        const auto reply = prompt.substr(pos, (next == std::string_view::npos ? prompt.size() : next) - pos);
        if (reply.find(me) != std::string_view::npos) {
            throw Error(ErrorCode::ContractError, "end marker inside assistant turn");
        }
        if (next != std::string_view::npos || !reply.empty()) {
            out.push_back({"assistant", std::string(reply)});
        }
        pos = next;
    }
    return out;
}

inline std::string join_chat_messages(const std::vector<ChatMessage>& messages, const ChatTemplate& tpl) {
    std::string out;
    std::size_t i = 0;
    if (!messages.empty() && messages.front().role == "system") {
        out += messages.front().content;
        i = 1;
    }
    bool expect_user = true;
    for (; i < messages.size(); ++i) {
        const auto& m = messages[i];
        if (m.role != (expect_user ? "user" : "assistant")) {
            throw Error(ErrorCode::ContractError, "messages must alternate user/assistant after an optional system message");
        }
        if (expect_user) {
            out += tpl.begin_marker + m.content + tpl.end_marker;
        } else {
            out += m.content;
        }
        expect_user = !expect_user;
    }
    return out;
}

} // namespace duma::backends
