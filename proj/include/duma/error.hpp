#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace duma {

enum class ErrorCode {
    InvalidArgument,
    MalformedFastOutput,
    MalformedSlowEmission,
    OutOfOrderTurn,
    InvariantViolation,
    StorageFailure,
    ContextOverflow,
    BackendUnavailable,
    AuthError,
    ContractError,
    NoScriptMatch,
    DuplicateToolName,
    SlowEpisodeFailed,
    TurnInProgress,
    SessionNotFound,
    TurnNotFound,
    UnknownBackend,
    ConfigError,
    EmptyScoreSet,
    InvalidScore,
    LengthMismatch,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::MalformedFastOutput: return "MalformedFastOutput";
        case ErrorCode::MalformedSlowEmission: return "MalformedSlowEmission";
        case ErrorCode::OutOfOrderTurn: return "OutOfOrderTurn";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::StorageFailure: return "StorageFailure";
        case ErrorCode::ContextOverflow: return "ContextOverflow";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::AuthError: return "AuthError";
        case ErrorCode::ContractError: return "ContractError";
        case ErrorCode::NoScriptMatch: return "NoScriptMatch";
        case ErrorCode::DuplicateToolName: return "DuplicateToolName";
        case ErrorCode::SlowEpisodeFailed: return "SlowEpisodeFailed";
        case ErrorCode::TurnInProgress: return "TurnInProgress";
        case ErrorCode::SessionNotFound: return "SessionNotFound";
        case ErrorCode::TurnNotFound: return "TurnNotFound";
        case ErrorCode::UnknownBackend: return "UnknownBackend";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::EmptyScoreSet: return "EmptyScoreSet";
        case ErrorCode::InvalidScore: return "InvalidScore";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
    }
    return "Unknown";
}

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace duma
