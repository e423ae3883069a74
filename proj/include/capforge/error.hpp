#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace capforge {

enum class ErrorCode {
    // environment
    DuplicateFactorId,
    InvalidIdentifier,
    EmptyInstanceSet,
    DuplicateInstance,
    BadDefault,
    BadControllable,
    BadAnchor,
    NoControllableFactor,
    // scenes and policies
    UnknownFactor,
    UnknownInstance,
    MissingFactor,
    EmptyTrigger,
    ActionNotControllable,
    ActionFactorInTrigger,
    EnvironmentMismatch,
    // history
    NonMonotonicSeq,
    HistoryTooSmall,
    HistoryEmpty,
    // association
    EmptySequence,
    LengthMismatch,
    ActionNeverVaries,
    // testgen
    StaleReport,
    PolicyMismatch,
    InvalidDecision,
    // plumbing
    InvalidArgument,
    ParseError,
    NotFound,
    DuplicatePolicyId,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the engine. `subject()` names the offending
/// factor, instance, policy or field when there is one.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string subject, const std::string& detail = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& subject() const noexcept { return subject_; }

private:
    ErrorCode code_;
    std::string subject_;
};

} // namespace capforge
