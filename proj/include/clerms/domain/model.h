#pragma once

#include "clerms/core/enum.h"
#include "clerms/core/json.h"
#include "clerms/core/time.h"

#include <optional>
#include <string>
#include <vector>

namespace clerms::domain {

using clerms::from_json;
using clerms::to_json;

enum class Role { le_agent, crisis_manager, forensic_expert, legal_advisor, admin };

enum class IdentifierKind { account, email, username, ip };

enum class InstrumentKind {
  subpoena,
  court_order,
  search_warrant,
  mlat_request,
  rogatory_letter,
  emergency_declaration,
  other
};

enum class Objective { disclosure, preservation, removal, testimony };

enum class Regime { emergency, routine };

enum class OriginKind { domestic, foreign };

enum class Channel { mlat, rogatory, cloud_act, direct };

enum class Priority { p0_emergency, p1_preservation, p2_routine };

enum class StateValue {
  PreSubmitted,
  AwaitingDocuments,
  DocumentsReceived,
  UnderEvaluation,
  Approved,
  Rejected,
  Challenged,
  Escalated,
  ActionApplied,
  ResponseIssued,
  Closed
};

struct RequesterIdentity {
  std::string agent_name;
  std::string agent_email;
  std::string agent_phone;
  std::string badge_id;
  std::string superior_name;
  std::string superior_contact;
  std::string agency_name;
  std::string agency_country;  // ISO-3166 alpha-2
  std::string jurisdiction;
  // Requester authority type ("LEA", "FISA", ...). Stored, never interpreted.
  std::string authority_type;

  bool operator==(const RequesterIdentity&) const = default;
};

struct TargetIdentifier {
  IdentifierKind kind{};
  std::string value;

  bool operator==(const TargetIdentifier&) const = default;
};

struct DataPeriod {
  Timestamp start;
  Timestamp end;

  bool operator==(const DataPeriod&) const = default;
};

struct TargetSpec {
  std::vector<TargetIdentifier> identifiers;
  std::optional<std::string> service_uri;
  std::optional<DataPeriod> data_period;

  bool operator==(const TargetSpec&) const = default;
};

struct LegalInstrument {
  InstrumentKind kind{};
  std::string issuing_authority;
  std::string reference_number;
  std::string qualifier;  // required when kind == other
  std::vector<std::string> document_refs;

  bool operator==(const LegalInstrument&) const = default;
};

struct Origin {
  OriginKind kind = OriginKind::domestic;
  std::optional<Channel> channel;  // foreign only

  bool operator==(const Origin&) const = default;
};

struct WorkflowState {
  StateValue value = StateValue::PreSubmitted;
  bool provisional_active = false;

  bool operator==(const WorkflowState&) const = default;
};

struct LERequest {
  std::string request_id;
  RequesterIdentity requester;
  TargetSpec target;
  std::vector<LegalInstrument> instruments;
  Objective objective{};
  Regime regime{};
  Origin origin;
  std::string narrative;
  Timestamp submitted_at;
  WorkflowState state;

  bool operator==(const LERequest&) const = default;
};

void to_json(Json& j, const RequesterIdentity& v);
void to_json(Json& j, const TargetIdentifier& v);
void to_json(Json& j, const DataPeriod& v);
void to_json(Json& j, const TargetSpec& v);
void to_json(Json& j, const LegalInstrument& v);
void to_json(Json& j, const Origin& v);
void to_json(Json& j, const WorkflowState& v);
void to_json(Json& j, const LERequest& v);

void from_json(const Json& j, WorkflowState& v);
// Strict load: runs the full validator and keeps the stored state. Throws
// Error(ValidationFailed) listing every violated invariant.
void from_json(const Json& j, LERequest& v);

Priority classify_priority(Regime regime, Objective objective);
inline Priority classify_priority(const LERequest& r) { return classify_priority(r.regime, r.objective); }

}  // namespace clerms::domain

namespace clerms {

template <>
struct EnumNames<domain::Role> {
  static constexpr std::array<std::string_view, 5> names{"le_agent", "crisis_manager", "forensic_expert",
                                                         "legal_advisor", "admin"};
};
template <>
struct EnumNames<domain::IdentifierKind> {
  static constexpr std::array<std::string_view, 4> names{"account", "email", "username", "ip"};
};
template <>
struct EnumNames<domain::InstrumentKind> {
  static constexpr std::array<std::string_view, 7> names{"subpoena",        "court_order",           "search_warrant",
                                                         "mlat_request",    "rogatory_letter",       "emergency_declaration",
                                                         "other"};
};
template <>
struct EnumNames<domain::Objective> {
  static constexpr std::array<std::string_view, 4> names{"disclosure", "preservation", "removal", "testimony"};
};
template <>
struct EnumNames<domain::Regime> {
  static constexpr std::array<std::string_view, 2> names{"emergency", "routine"};
};
template <>
struct EnumNames<domain::OriginKind> {
  static constexpr std::array<std::string_view, 2> names{"domestic", "foreign"};
};
template <>
struct EnumNames<domain::Channel> {
  static constexpr std::array<std::string_view, 4> names{"mlat", "rogatory", "cloud_act", "direct"};
};
template <>
struct EnumNames<domain::Priority> {
  static constexpr std::array<std::string_view, 3> names{"p0_emergency", "p1_preservation", "p2_routine"};
};
template <>
struct EnumNames<domain::StateValue> {
  static constexpr std::array<std::string_view, 11> names{
      "PreSubmitted", "AwaitingDocuments", "DocumentsReceived", "UnderEvaluation", "Approved",      "Rejected",
      "Challenged",   "Escalated",         "ActionApplied",     "ResponseIssued",  "Closed"};
};

}  // namespace clerms
