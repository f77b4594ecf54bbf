#pragma once

#include <functional>
#include <iostream>
#include <string>

namespace duma {

// A backend broke the output contract and the runtime recovered.
struct ProtocolViolation {
    std::string source;  // "fast_mind" or "slow_mind"
    std::string detail;
    std::string raw;
};

using ViolationSink = std::function<void(const ProtocolViolation&)>;

inline void log_violation(const ProtocolViolation& v) {
    std::clog << "[duma] protocol_violation source=" << v.source << " detail=\"" << v.detail << "\"\n";
}

} // namespace duma
