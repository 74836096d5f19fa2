#pragma once

#include <stdexcept>
#include <string>

namespace charstrip {

enum class ErrorCode {
    SyntaxError,
    UnknownIdentifier,
    DivisionByZero,
    DomainError,
    UnboundVariable,
    ValidationFailed,
    SingularQ,
    StateOutOfBox,
    StepFailure,
    LookbackOutOfWindow,
    VersionMismatch,
    MixedSignB,
    B3Inapplicable,
    NonContraction,
    ToleranceNotReached,
    WindowTooShort,
    OuterDivergence,
    StateLeftBox,
    SmallnessGate,
    ConfigError,
    IoError,
    InvalidArgument,
    ResourceLimit,
};

const char* error_name(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Parse failures also remember where in the input they happened.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& message, std::size_t offset)
        : Error(ErrorCode::SyntaxError, message + " at byte " + std::to_string(offset)),
          offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace charstrip
