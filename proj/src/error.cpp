#include "capforge/error.hpp"

namespace capforge {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::DuplicateFactorId: return "DuplicateFactorId";
    case ErrorCode::InvalidIdentifier: return "InvalidIdentifier";
    case ErrorCode::EmptyInstanceSet: return "EmptyInstanceSet";
    case ErrorCode::DuplicateInstance: return "DuplicateInstance";
    case ErrorCode::BadDefault: return "BadDefault";
    case ErrorCode::BadControllable: return "BadControllable";
    case ErrorCode::BadAnchor: return "BadAnchor";
    case ErrorCode::NoControllableFactor: return "NoControllableFactor";
    case ErrorCode::UnknownFactor: return "UnknownFactor";
    case ErrorCode::UnknownInstance: return "UnknownInstance";
    case ErrorCode::MissingFactor: return "MissingFactor";
    case ErrorCode::EmptyTrigger: return "EmptyTrigger";
    case ErrorCode::ActionNotControllable: return "ActionNotControllable";
    case ErrorCode::ActionFactorInTrigger: return "ActionFactorInTrigger";
    case ErrorCode::EnvironmentMismatch: return "EnvironmentMismatch";
    case ErrorCode::NonMonotonicSeq: return "NonMonotonicSeq";
    case ErrorCode::HistoryTooSmall: return "HistoryTooSmall";
    case ErrorCode::HistoryEmpty: return "HistoryEmpty";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ActionNeverVaries: return "ActionNeverVaries";
    case ErrorCode::StaleReport: return "StaleReport";
    case ErrorCode::PolicyMismatch: return "PolicyMismatch";
    case ErrorCode::InvalidDecision: return "InvalidDecision";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::DuplicatePolicyId: return "DuplicatePolicyId";
    }
    return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& subject, const std::string& detail)
{
    std::string msg(to_string(code));
    if (!subject.empty())
        msg += "(" + subject + ")";
    if (!detail.empty())
        msg += ": " + detail;
    return msg;
}

} // namespace

Error::Error(ErrorCode code, std::string subject, const std::string& detail)
    : std::runtime_error(compose(code, subject, detail))
    , code_(code)
    , subject_(std::move(subject))
{
}

} // namespace capforge
