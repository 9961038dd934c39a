#include "clerms/workflow/engine.h"

#include <algorithm>

namespace clerms::workflow {

using domain::Objective;
using domain::Regime;
using domain::Role;

namespace {

bool escalation_objective(Objective o) { return o == Objective::disclosure || o == Objective::preservation; }

bool provisional_eligible(const LERequest& r) {
  return r.regime == Regime::emergency || r.objective == Objective::preservation;
}

std::string state_error(const RequestRecord& r, std::string_view op) {
  return std::string(op) + " not allowed in state " + std::string(name_of(r.state()));
}

}  // namespace

std::set<StateValue> allowed_transitions(const WorkflowState& state, const LERequest& request) {
  switch (state.value) {
    case StateValue::PreSubmitted: return {StateValue::AwaitingDocuments};
    case StateValue::AwaitingDocuments: return {StateValue::DocumentsReceived};
    case StateValue::DocumentsReceived:
      return {StateValue::UnderEvaluation, StateValue::Approved, StateValue::Rejected, StateValue::Challenged};
    case StateValue::UnderEvaluation: return {StateValue::Approved, StateValue::Rejected, StateValue::Challenged};
    case StateValue::Approved:
      if (escalation_objective(request.objective)) return {StateValue::Escalated, StateValue::ActionApplied};
      return {StateValue::ActionApplied};
    case StateValue::Rejected: return {StateValue::ResponseIssued};
    case StateValue::Challenged: return {StateValue::UnderEvaluation, StateValue::ResponseIssued};
    case StateValue::Escalated: return {StateValue::ActionApplied};
    case StateValue::ActionApplied: return {StateValue::ResponseIssued};
    case StateValue::ResponseIssued: return {StateValue::Closed};
    case StateValue::Closed: return {};
  }
  return {};
}

Json transition_table() {
  struct Row {
    StateValue from, to;
    const char* op;
    const char* guard;
  };
  static const Row rows[] = {
      {StateValue::PreSubmitted, StateValue::AwaitingDocuments, "submit", "request_id not yet submitted"},
      {StateValue::AwaitingDocuments, StateValue::DocumentsReceived, "receive_documents", "every document ref stored"},
      {StateValue::DocumentsReceived, StateValue::UnderEvaluation, "begin_evaluation", ""},
      {StateValue::DocumentsReceived, StateValue::Approved, "record_decision", "decision=approve"},
      {StateValue::DocumentsReceived, StateValue::Rejected, "record_decision", "decision=reject"},
      {StateValue::DocumentsReceived, StateValue::Challenged, "record_decision", "decision=challenge"},
      {StateValue::UnderEvaluation, StateValue::Approved, "record_decision", "decision=approve"},
      {StateValue::UnderEvaluation, StateValue::Rejected, "record_decision", "decision=reject"},
      {StateValue::UnderEvaluation, StateValue::Challenged, "record_decision", "decision=challenge"},
      {StateValue::Approved, StateValue::Escalated, "escalate",
       "objective in {disclosure, preservation} or crisis_manager override"},
      {StateValue::Approved, StateValue::ActionApplied, "apply_action", ""},
      {StateValue::Escalated, StateValue::ActionApplied, "apply_action", ""},
      {StateValue::Rejected, StateValue::ResponseIssued, "issue_response", "kind=refusal"},
      {StateValue::Challenged, StateValue::UnderEvaluation, "reopen_evaluation", "at most once per request"},
      {StateValue::Challenged, StateValue::ResponseIssued, "issue_response", "kind=challenge_notice"},
      {StateValue::ActionApplied, StateValue::ResponseIssued, "issue_response",
       "kind=certificate for testimony, disclosure or confirmation otherwise"},
      {StateValue::ResponseIssued, StateValue::Closed, "acknowledge", "requester acknowledgment or timeout"},
  };
  Json out = Json::array();
  for (const auto& r : rows)
    out.push_back({{"from", r.from}, {"to", r.to}, {"operation", r.op}, {"guard", r.guard}});
  return out;
}

RequestRecord& Engine::record(const std::string& request_id) {
  auto it = records_.find(request_id);
  if (it == records_.end()) fail(Errc::UnknownRequest, "unknown request " + request_id);
  return it->second;
}

const RequestRecord& Engine::get(const std::string& request_id) const {
  auto it = records_.find(request_id);
  if (it == records_.end()) fail(Errc::UnknownRequest, "unknown request " + request_id);
  return it->second;
}

void Engine::move(RequestRecord& r, StateValue to, Timestamp now) {
  r.request.state.value = to;
  if (to == StateValue::ResponseIssued || to == StateValue::Closed) r.request.state.provisional_active = false;
  r.history.push_back({to, now});
}

StateValue Engine::submit(LERequest request, Timestamp now) {
  if (records_.count(request.request_id)) fail(Errc::DuplicateRequest, "request already submitted: " + request.request_id);
  if (request.state.value != StateValue::PreSubmitted || request.state.provisional_active)
    fail(Errc::InvalidState, "only PreSubmitted requests can be submitted");
  RequestRecord rec;
  rec.history.push_back({StateValue::PreSubmitted, request.submitted_at});
  rec.request = std::move(request);
  auto [it, _] = records_.emplace(rec.request.request_id, std::move(rec));
  move(it->second, StateValue::AwaitingDocuments, now);
  return it->second.state();
}

StateValue Engine::receive_documents(const std::string& request_id, const std::vector<std::string>& document_refs,
                                     const std::function<bool(const std::string&)>& document_exists,
                                     Timestamp now) {
  RequestRecord& r = record(request_id);
  if (r.state() != StateValue::AwaitingDocuments) fail(Errc::InvalidState, state_error(r, "receive_documents"));
  for (const auto& ref : document_refs)
    if (!document_exists(ref)) fail(Errc::UnknownDocument, "document not in store: " + ref, ref);
  r.document_refs = document_refs;
  move(r, StateValue::DocumentsReceived, now);
  return r.state();
}

StateValue Engine::begin_evaluation(const std::string& request_id, Timestamp now) {
  RequestRecord& r = record(request_id);
  if (r.state() != StateValue::DocumentsReceived) fail(Errc::InvalidState, state_error(r, "begin_evaluation"));
  move(r, StateValue::UnderEvaluation, now);
  return r.state();
}

ProvisionalOutcome Engine::apply_provisional_measures(const std::string& request_id, const std::string& measure,
                                                      const std::string& actor, Timestamp now) {
  RequestRecord& r = record(request_id);
  if (!provisional_eligible(r.request))
    fail(Errc::NotEligible, "provisional measures require an emergency or preservation request");
  const StateValue s = r.state();
  if (s == StateValue::PreSubmitted || s == StateValue::ResponseIssued || s == StateValue::Closed)
    fail(Errc::InvalidState, state_error(r, "apply_provisional_measures"));
  r.request.state.provisional_active = true;
  r.provisional_measures.push_back({measure, actor, now});
  if (r.request.objective == Objective::preservation) {
    if (!r.preservation) r.preservation = PreservationOrder{request_id, now, now + config_.preservation_delay, false};
    return *r.preservation;
  }
  return Acknowledgment{request_id, measure, now};
}

PreservationOrder Engine::extend_preservation(const std::string& request_id) {
  RequestRecord& r = record(request_id);
  if (!r.preservation) fail(Errc::NotEligible, "no preservation order for " + request_id);
  if (r.preservation->extended) fail(Errc::InvalidState, "preservation order already extended");
  r.preservation->deadline = r.preservation->deadline + config_.preservation_extension;
  r.preservation->extended = true;
  return *r.preservation;
}

StateValue Engine::record_decision(const std::string& request_id, EvaluationDecision decision) {
  RequestRecord& r = record(request_id);
  if (r.state() != StateValue::DocumentsReceived && r.state() != StateValue::UnderEvaluation)
    fail(Errc::InvalidState, state_error(r, "record_decision"));
  bool has_cm = std::any_of(decision.decided_by.begin(), decision.decided_by.end(),
                            [](const Signer& s) { return s.role == Role::crisis_manager; });
  if (!has_cm) fail(Errc::MissingCrisisManager, "a crisis manager must sign the decision");
  if (decision.decision == Decision::approve && r.request.objective == Objective::disclosure &&
      decision.response_data_class == DataClass::none)
    fail(Errc::InvalidDecision, "approved disclosure requires response_data_class content or non_content");
  if (decision.decision != Decision::approve) decision.response_data_class = DataClass::none;

  StateValue to = decision.decision == Decision::approve  ? StateValue::Approved
                  : decision.decision == Decision::reject ? StateValue::Rejected
                                                          : StateValue::Challenged;
  Timestamp at = decision.decided_at;
  r.decisions.push_back(std::move(decision));
  move(r, to, at);
  return r.state();
}

StateValue Engine::reopen_evaluation(const std::string& request_id, Timestamp now) {
  RequestRecord& r = record(request_id);
  if (r.state() != StateValue::Challenged) fail(Errc::InvalidState, state_error(r, "reopen_evaluation"));
  if (r.reevaluations >= 1) fail(Errc::InvalidState, "re-evaluation already used for " + request_id);
  ++r.reevaluations;
  move(r, StateValue::UnderEvaluation, now);
  return r.state();
}

std::string Engine::escalate(const std::string& request_id, const std::string& case_id, bool override_objective,
                             Timestamp now) {
  RequestRecord& r = record(request_id);
  if (r.case_id) fail(Errc::InvalidState, "request already escalated to case " + *r.case_id);
  if (r.state() != StateValue::Approved) fail(Errc::InvalidState, state_error(r, "escalate"));
  if (!escalation_objective(r.request.objective) && !override_objective)
    fail(Errc::InvalidState, "escalation of a " + std::string(name_of(r.request.objective)) +
                                 " request needs a crisis-manager override");
  r.case_id = case_id;
  r.escalation_override = !escalation_objective(r.request.objective);
  move(r, StateValue::Escalated, now);
  return case_id;
}

StateValue Engine::apply_action(const std::string& request_id, const std::string& action_summary, Timestamp now) {
  RequestRecord& r = record(request_id);
  if (r.state() != StateValue::Approved && r.state() != StateValue::Escalated)
    fail(Errc::InvalidState, state_error(r, "apply_action"));
  r.action_summary = action_summary;
  move(r, StateValue::ActionApplied, now);
  return r.state();
}

Response Engine::issue_response(const std::string& request_id, const std::string& body,
                                bool suppress_target_notification, Timestamp now) {
  RequestRecord& r = record(request_id);
  Response resp;
  resp.body = body;
  resp.suppress_target_notification = suppress_target_notification;
  resp.issued_at = now;
  switch (r.state()) {
    case StateValue::Rejected: resp.kind = ResponseKind::refusal; break;
    case StateValue::Challenged: resp.kind = ResponseKind::challenge_notice; break;
    case StateValue::ActionApplied:
      if (r.request.objective == Objective::testimony) {
        resp.kind = ResponseKind::certificate;
        std::string text(kCertificateTemplate);
        text.replace(text.find("{request_id}"), 12, request_id);
        resp.body = std::move(text);
      } else if (r.request.objective == Objective::disclosure) {
        resp.kind = ResponseKind::disclosure;
        resp.data_class = r.latest_decision() ? r.latest_decision()->response_data_class : DataClass::none;
      } else {
        resp.kind = ResponseKind::confirmation;
      }
      break;
    default: fail(Errc::InvalidState, state_error(r, "issue_response"));
  }
  r.response = resp;
  move(r, StateValue::ResponseIssued, now);
  return resp;
}

StateValue Engine::acknowledge(const std::string& request_id, Timestamp now) {
  RequestRecord& r = record(request_id);
  if (r.state() != StateValue::ResponseIssued) fail(Errc::InvalidState, state_error(r, "acknowledge"));
  move(r, StateValue::Closed, now);
  return r.state();
}

std::vector<std::string> Engine::close_expired(Timestamp now) {
  std::vector<std::string> closed;
  for (auto& [id, r] : records_) {
    if (r.state() == StateValue::ResponseIssued && r.response && now - r.response->issued_at >= config_.ack_timeout) {
      move(r, StateValue::Closed, now);
      closed.push_back(id);
    }
  }
  return closed;
}

std::set<StateValue> Engine::successors(const std::string& request_id) const {
  const RequestRecord& r = get(request_id);
  auto out = allowed_transitions(r.request.state, r.request);
  if (r.state() == StateValue::Challenged && r.reevaluations >= 1) out.erase(StateValue::UnderEvaluation);
  if (r.state() == StateValue::Approved && r.case_id) out.erase(StateValue::Escalated);
  return out;
}

std::optional<std::string> check_invariants(const RequestRecord& r) {
  const auto& req = r.request;
  if (r.history.empty() || r.history.back().state != r.state()) return "history tail differs from current state";
  if (req.state.provisional_active) {
    if (!provisional_eligible(req)) return "provisional measures on an ineligible request";
    if (r.state() == StateValue::ResponseIssued || r.state() == StateValue::Closed)
      return "provisional measures active after response";
  }
  if (!r.provisional_measures.empty() && !provisional_eligible(req)) return "provisional measure recorded on ineligible request";
  std::map<StateValue, int> seen;
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    const StateValue s = r.history[i].state;
    int limit = (s == StateValue::UnderEvaluation || s == StateValue::Challenged) ? 2 : 1;
    if (++seen[s] > limit) return "state repeated in history: " + std::string(name_of(s));
    if (i > 0) {
      WorkflowState prev{r.history[i - 1].state, false};
      bool overridden = prev.value == StateValue::Approved && s == StateValue::Escalated && r.escalation_override;
      if (!overridden && !allowed_transitions(prev, req).count(s))
        return "illegal transition " + std::string(name_of(prev.value)) + " -> " + std::string(name_of(s));
    }
  }
  for (std::size_t i = 1; i < r.history.size(); ++i) {
    StateValue prev = r.history[i - 1].state;
    if ((prev == StateValue::Rejected || prev == StateValue::Challenged) && r.history[i].state == StateValue::ActionApplied)
      return "rejected or challenged request reached ActionApplied";
  }
  if (seen[StateValue::Escalated] != (r.case_id ? 1 : 0)) return "case reference does not match escalation";
  if (r.response && (r.state() != StateValue::ResponseIssued && r.state() != StateValue::Closed))
    return "response recorded before ResponseIssued";
  if (req.objective == domain::Objective::disclosure && r.response && r.response->kind == ResponseKind::disclosure) {
    auto approvals = std::count_if(r.decisions.begin(), r.decisions.end(),
                                   [](const EvaluationDecision& d) { return d.decision == Decision::approve; });
    if (approvals != 1) return "approved disclosure must carry exactly one approval";
    if (r.response->data_class == DataClass::none) return "disclosure response without data class";
  }
  if (r.preservation) {
    if (req.objective != domain::Objective::preservation) return "preservation order on non-preservation request";
  }
  return std::nullopt;
}

// --- serialization ---

void to_json(Json& j, const Signer& v) { j = Json{{"principal_id", v.principal_id}, {"role", v.role}}; }
void from_json(const Json& j, Signer& v) {
  v.principal_id = j.at("principal_id").get<std::string>();
  v.role = j.at("role").get<domain::Role>();
}

void to_json(Json& j, const EvaluationDecision& v) {
  j = Json{{"decision", v.decision},       {"rationale", v.rationale},     {"public_summary", v.public_summary},
           {"decided_by", v.decided_by},   {"decided_at", v.decided_at},   {"response_data_class", v.response_data_class}};
}
void from_json(const Json& j, EvaluationDecision& v) {
  v.decision = j.at("decision").get<Decision>();
  v.rationale = j.value("rationale", "");
  v.public_summary = j.value("public_summary", "");
  v.decided_by = j.at("decided_by").get<std::vector<Signer>>();
  v.decided_at = j.at("decided_at").get<Timestamp>();
  v.response_data_class = j.contains("response_data_class") ? j.at("response_data_class").get<DataClass>() : DataClass::none;
}

void to_json(Json& j, const PreservationOrder& v) {
  j = Json{{"request_id", v.request_id}, {"issued_at", v.issued_at}, {"deadline", v.deadline}, {"extended", v.extended}};
}
void from_json(const Json& j, PreservationOrder& v) {
  v.request_id = j.at("request_id").get<std::string>();
  v.issued_at = j.at("issued_at").get<Timestamp>();
  v.deadline = j.at("deadline").get<Timestamp>();
  v.extended = j.at("extended").get<bool>();
}

void to_json(Json& j, const Acknowledgment& v) {
  j = Json{{"request_id", v.request_id}, {"measure", v.measure}, {"at", v.at}, {"provisional_active", true}};
}

void to_json(Json& j, const Response& v) {
  j = Json{{"kind", v.kind},
           {"body", v.body},
           {"data_class", v.data_class},
           {"suppress_target_notification", v.suppress_target_notification},
           {"issued_at", v.issued_at}};
}
void from_json(const Json& j, Response& v) {
  v.kind = j.at("kind").get<ResponseKind>();
  v.body = j.at("body").get<std::string>();
  v.data_class = j.at("data_class").get<DataClass>();
  v.suppress_target_notification = j.at("suppress_target_notification").get<bool>();
  v.issued_at = j.at("issued_at").get<Timestamp>();
}

void to_json(Json& j, const RequestRecord& v) {
  Json history = Json::array();
  for (const auto& h : v.history) history.push_back({{"state", h.state}, {"at", h.at}});
  Json measures = Json::array();
  for (const auto& m : v.provisional_measures) measures.push_back({{"measure", m.measure}, {"actor", m.actor}, {"at", m.at}});
  j = Json{{"request", v.request},
           {"history", history},
           {"document_refs", v.document_refs},
           {"decisions", v.decisions},
           {"provisional_measures", measures},
           {"reevaluations", v.reevaluations},
           {"escalation_override", v.escalation_override}};
  j["preservation"] = v.preservation ? Json(*v.preservation) : Json(nullptr);
  j["case_id"] = v.case_id ? Json(*v.case_id) : Json(nullptr);
  j["action_summary"] = v.action_summary ? Json(*v.action_summary) : Json(nullptr);
  j["response"] = v.response ? Json(*v.response) : Json(nullptr);
}

void from_json(const Json& j, RequestRecord& v) {
  v.request = j.at("request").get<LERequest>();
  v.history.clear();
  for (const auto& h : j.at("history")) v.history.push_back({h.at("state").get<StateValue>(), h.at("at").get<Timestamp>()});
  v.document_refs = j.at("document_refs").get<std::vector<std::string>>();
  v.decisions = j.at("decisions").get<std::vector<EvaluationDecision>>();
  v.provisional_measures.clear();
  for (const auto& m : j.at("provisional_measures"))
    v.provisional_measures.push_back({m.at("measure").get<std::string>(), m.at("actor").get<std::string>(), m.at("at").get<Timestamp>()});
  v.reevaluations = j.at("reevaluations").get<int>();
  v.escalation_override = j.at("escalation_override").get<bool>();
  v.preservation = j.at("preservation").is_null() ? std::nullopt : std::optional(j.at("preservation").get<PreservationOrder>());
  v.case_id = j.at("case_id").is_null() ? std::nullopt : std::optional(j.at("case_id").get<std::string>());
  v.action_summary = j.at("action_summary").is_null() ? std::nullopt : std::optional(j.at("action_summary").get<std::string>());
  v.response = j.at("response").is_null() ? std::nullopt : std::optional(j.at("response").get<Response>());
}

Json Engine::to_json() const {
  Json out = Json::object();
  for (const auto& [id, r] : records_) out[id] = r;
  return out;
}

Engine Engine::from_json(const Json& j, Config config) {
  Engine e(config);
  for (const auto& [id, r] : j.items()) e.records_.emplace(id, r.get<RequestRecord>());
  return e;
}

}  // namespace clerms::workflow
