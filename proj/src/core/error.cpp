#include "clerms/core/error.h"

namespace clerms {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::ValidationFailed: return "ValidationErrors";
    case Errc::MissingField: return "MissingField";
    case Errc::InvalidFormat: return "InvalidFormat";
    case Errc::DuplicateRequest: return "DuplicateRequest";
    case Errc::UnknownRequest: return "UnknownRequest";
    case Errc::UnknownDocument: return "UnknownDocument";
    case Errc::InvalidState: return "InvalidState";
    case Errc::NotEligible: return "NotEligible";
    case Errc::MissingCrisisManager: return "MissingCrisisManager";
    case Errc::InvalidDecision: return "InvalidDecision";
    case Errc::StorageFull: return "StorageFull";
    case Errc::IoFailure: return "IoFailure";
    case Errc::NotFound: return "NotFound";
    case Errc::Destroyed: return "Destroyed";
    case Errc::IntegrityViolation: return "IntegrityViolation";
    case Errc::ChainBroken: return "ChainBroken";
    case Errc::AfterDestruction: return "AfterDestruction";
    case Errc::EmptyCase: return "EmptyCase";
    case Errc::InsufficientAuthorization: return "InsufficientAuthorization";
    case Errc::FrameTooLarge: return "FrameTooLarge";
    case Errc::MalformedFrame: return "MalformedFrame";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::MalformedHello: return "MalformedHello";
    case Errc::UnknownAgent: return "UnknownAgent";
    case Errc::UnknownFlow: return "UnknownFlow";
    case Errc::CaseClosed: return "CaseClosed";
    case Errc::Forbidden: return "Forbidden";
    case Errc::PathEscape: return "PathEscape";
    case Errc::AgentIoError: return "AgentIoError";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::EmptyFilter: return "EmptyFilter";
    case Errc::InvalidRequestState: return "InvalidRequestState";
    case Errc::DuplicateCase: return "DuplicateCase";
    case Errc::UnknownTask: return "UnknownTask";
    case Errc::OpenTasks: return "OpenTasks";
    case Errc::MissingForensicReport: return "MissingForensicReport";
    case Errc::InvalidPeriod: return "InvalidPeriod";
    case Errc::NegativeInput: return "NegativeInput";
    case Errc::Overflow: return "Overflow";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::Unauthenticated: return "Unauthenticated";
    case Errc::BadRequest: return "BadRequest";
    case Errc::UnknownRecipient: return "UnknownRecipient";
    case Errc::UnknownTicket: return "UnknownTicket";
    case Errc::CorruptLog: return "CorruptLog";
  }
  return "Unknown";
}

std::optional<Errc> errc_from_name(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Errc::CorruptLog); ++i)
    if (to_string(static_cast<Errc>(i)) == name) return static_cast<Errc>(i);
  return std::nullopt;
}

Error::Error(Errc code, std::string message, nlohmann::json detail)
    : std::runtime_error(std::move(message)), code_(code), detail_(std::move(detail)) {}

nlohmann::json Error::to_json() const {
  nlohmann::json j = {{"error", std::string(name())}, {"message", what()}};
  if (!detail_.is_null()) j["detail"] = detail_;
  return j;
}

void fail(Errc code, std::string message, nlohmann::json detail) {
  throw Error(code, std::move(message), std::move(detail));
}

}  // namespace clerms
