#include "clerms/domain/model.h"

#include "clerms/domain/validation.h"

namespace clerms::domain {

void to_json(Json& j, const RequesterIdentity& v) {
  j = Json{{"agent_name", v.agent_name},         {"agent_email", v.agent_email},
           {"agent_phone", v.agent_phone},       {"badge_id", v.badge_id},
           {"superior_name", v.superior_name},   {"superior_contact", v.superior_contact},
           {"agency_name", v.agency_name},       {"agency_country", v.agency_country},
           {"jurisdiction", v.jurisdiction},     {"authority_type", v.authority_type}};
}

void to_json(Json& j, const TargetIdentifier& v) { j = Json{{"kind", v.kind}, {"value", v.value}}; }

void to_json(Json& j, const DataPeriod& v) { j = Json{{"start", v.start}, {"end", v.end}}; }

void to_json(Json& j, const TargetSpec& v) {
  j = Json{{"identifiers", v.identifiers}};
  if (v.service_uri) j["service_uri"] = *v.service_uri;
  if (v.data_period) j["data_period"] = *v.data_period;
}

void to_json(Json& j, const LegalInstrument& v) {
  j = Json{{"kind", v.kind},
           {"issuing_authority", v.issuing_authority},
           {"reference_number", v.reference_number},
           {"document_refs", v.document_refs}};
  if (!v.qualifier.empty()) j["qualifier"] = v.qualifier;
}

void to_json(Json& j, const Origin& v) {
  j = Json{{"kind", v.kind}};
  if (v.channel) j["channel"] = *v.channel;
}

void to_json(Json& j, const WorkflowState& v) {
  j = Json{{"value", v.value}, {"provisional_active", v.provisional_active}};
}

void to_json(Json& j, const LERequest& v) {
  j = Json{{"request_id", v.request_id}, {"requester", v.requester},   {"target", v.target},
           {"instruments", v.instruments}, {"objective", v.objective}, {"regime", v.regime},
           {"origin", v.origin},         {"narrative", v.narrative},   {"submitted_at", v.submitted_at},
           {"state", v.state}};
}

void from_json(const Json& j, WorkflowState& v) {
  v.value = j.at("value").get<StateValue>();
  v.provisional_active = j.at("provisional_active").get<bool>();
}

void from_json(const Json& j, LERequest& v) {
  std::vector<FieldError> errors;
  auto parsed = parse_request(j, errors, nullptr, std::nullopt, true);
  if (!parsed) fail(Errc::ValidationFailed, "stored request violates type invariants", errors);
  v = std::move(*parsed);
}

Priority classify_priority(Regime regime, Objective objective) {
  if (regime == Regime::emergency) return Priority::p0_emergency;
  if (objective == Objective::preservation) return Priority::p1_preservation;
  return Priority::p2_routine;
}

}  // namespace clerms::domain
