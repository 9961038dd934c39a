#pragma once

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace clerms {

// Every error a module can raise. The name (see to_string) is what the
// HTTP layer and the CLI put on the wire.
enum class Errc {
  // domain-model
  ValidationFailed,
  MissingField,
  InvalidFormat,
  // workflow-engine
  DuplicateRequest,
  UnknownRequest,
  UnknownDocument,
  InvalidState,
  NotEligible,
  MissingCrisisManager,
  InvalidDecision,
  // evidence-custody
  StorageFull,
  IoFailure,
  NotFound,
  Destroyed,
  IntegrityViolation,
  ChainBroken,
  AfterDestruction,
  EmptyCase,
  InsufficientAuthorization,
  // collection-flows
  FrameTooLarge,
  MalformedFrame,
  UnsupportedVersion,
  MalformedHello,
  UnknownAgent,
  UnknownFlow,
  CaseClosed,
  Forbidden,
  PathEscape,
  AgentIoError,
  MalformedRecord,
  EmptyFilter,
  // case-management
  InvalidRequestState,
  DuplicateCase,
  UnknownTask,
  OpenTasks,
  MissingForensicReport,
  // reporting-costs
  InvalidPeriod,
  NegativeInput,
  Overflow,
  UnsupportedFormat,
  // api-gateway
  Unauthenticated,
  BadRequest,
  UnknownRecipient,
  UnknownTicket,
  CorruptLog,
};

std::string_view to_string(Errc code);
std::optional<Errc> errc_from_name(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message, nlohmann::json detail = nullptr);

  Errc code() const noexcept { return code_; }
  std::string_view name() const noexcept { return to_string(code_); }
  const nlohmann::json& detail() const noexcept { return detail_; }

  nlohmann::json to_json() const;

 private:
  Errc code_;
  nlohmann::json detail_;
};

[[noreturn]] void fail(Errc code, std::string message, nlohmann::json detail = nullptr);

}  // namespace clerms
