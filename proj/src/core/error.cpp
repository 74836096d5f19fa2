#include "error.hpp"

namespace charstrip {

const char* error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
        case ErrorCode::DivisionByZero: return "DivisionByZero";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::UnboundVariable: return "UnboundVariable";
        case ErrorCode::ValidationFailed: return "ValidationFailed";
        case ErrorCode::SingularQ: return "SingularQ";
        case ErrorCode::StateOutOfBox: return "StateOutOfBox";
        case ErrorCode::StepFailure: return "StepFailure";
        case ErrorCode::LookbackOutOfWindow: return "LookbackOutOfWindow";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::MixedSignB: return "MixedSignB";
        case ErrorCode::B3Inapplicable: return "B3Inapplicable";
        case ErrorCode::NonContraction: return "NonContraction";
        case ErrorCode::ToleranceNotReached: return "ToleranceNotReached";
        case ErrorCode::WindowTooShort: return "WindowTooShort";
        case ErrorCode::OuterDivergence: return "OuterDivergence";
        case ErrorCode::StateLeftBox: return "StateLeftBox";
        case ErrorCode::SmallnessGate: return "SmallnessGate";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ResourceLimit: return "ResourceLimit";
    }
    return "Unknown";
}

}  // namespace charstrip
