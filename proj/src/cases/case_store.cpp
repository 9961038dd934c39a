#include "clerms/cases/case_store.h"

#include <algorithm>

namespace clerms::cases {

namespace {

using domain::Role;

void add_participant(Case& c, const Actor& actor) {
  auto it = std::find_if(c.participants.begin(), c.participants.end(),
                         [&](const Actor& p) { return p.principal == actor.principal && p.role == actor.role; });
  if (it == c.participants.end()) c.participants.push_back(actor);
}

Assignment* find_task(Case& c, const std::string& task_id) {
  for (auto& a : c.assignments)
    if (a.task_id == task_id) return &a;
  return nullptr;
}

bool has_id(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

template <typename T>
std::optional<T> opt(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

std::vector<std::string> Case::document_ids() const {
  std::vector<std::string> out;
  for (const auto& d : documents) out.push_back(d.doc_id);
  return out;
}

void CaseStore::record(Case& c, const Actor& actor, std::string action, Timestamp now, Json detail) {
  detail["role"] = actor.role;
  add_participant(c, actor);
  c.audit.push_back({c.audit.size() + 1, c.case_id, actor.principal, std::move(action), now, std::move(detail)});
}

const Case& CaseStore::get(const std::string& case_id) const {
  auto it = cases_.find(case_id);
  if (it == cases_.end()) fail(Errc::NotFound, "no case " + case_id);
  return it->second;
}

Case& CaseStore::open_for_mutation(const std::string& case_id) {
  auto it = cases_.find(case_id);
  if (it == cases_.end()) fail(Errc::NotFound, "no case " + case_id);
  if (it->second.status == CaseStatus::closed) fail(Errc::CaseClosed, "case " + case_id + " is closed");
  return it->second;
}

std::optional<std::string> CaseStore::case_for_request(const std::string& request_id) const {
  auto it = by_request_.find(request_id);
  if (it == by_request_.end()) return std::nullopt;
  return it->second;
}

const Case& CaseStore::open_case(const std::string& case_id, const std::string& request_id,
                                 domain::StateValue request_state, const Actor& opened_by, Timestamp now) {
  if (request_state != domain::StateValue::Escalated)
    fail(Errc::InvalidRequestState, "request " + request_id + " is " + std::string(name_of(request_state)),
         Json{{"state", request_state}});
  if (by_request_.count(request_id)) fail(Errc::DuplicateCase, "request " + request_id + " already has a case");
  if (cases_.count(case_id)) fail(Errc::DuplicateCase, "case id " + case_id + " in use");
  Case c;
  c.case_id = case_id;
  c.request_id = request_id;
  c.opened_at = now;
  record(c, opened_by, "open_case", now, Json{{"request_id", request_id}});
  by_request_[request_id] = case_id;
  return cases_.emplace(case_id, std::move(c)).first->second;
}

void CaseStore::link_evidence(const std::string& case_id, const std::string& evidence_id, const Actor& actor,
                              Timestamp now, const ChainCheck& check) {
  Case& c = open_for_mutation(case_id);
  custody::ChainStatus st = check(evidence_id);
  if (!st.ok)
    fail(Errc::ChainBroken, "custody chain of " + evidence_id + " broken at seq " + std::to_string(st.broken_at),
         Json{{"evidence_id", evidence_id}, {"broken_at", st.broken_at}, {"reason", st.reason}});
  if (!has_id(c.evidence_ids, evidence_id)) c.evidence_ids.push_back(evidence_id);
  record(c, actor, "link_evidence", now, Json{{"evidence_id", evidence_id}, {"chain_head", st.head}});
}

ReportAck CaseStore::add_report(const std::string& case_id, const CaseDocument& document, const Actor& actor,
                                Timestamp now, const DocumentCheck& exists) {
  Case& c = open_for_mutation(case_id);
  if (!exists(document.doc_id)) fail(Errc::UnknownDocument, "document " + document.doc_id + " is not stored");
  c.documents.push_back(document);
  record(c, actor, "add_report", now, Json{{"document", document}});
  return {document.kind == DocumentKind::forensic_report};
}

const Assignment& CaseStore::assign_task(const std::string& case_id, const std::string& task_id,
                                         const std::string& description, domain::Role assignee_role,
                                         std::optional<Timestamp> due, const Actor& actor, Timestamp now) {
  Case& c = open_for_mutation(case_id);
  if (description.empty()) fail(Errc::MissingField, "description");
  if (find_task(c, task_id)) fail(Errc::InvalidState, "task id " + task_id + " in use");
  Assignment a{task_id, case_id, description, assignee_role, due, TaskStatus::open};
  c.assignments.push_back(a);
  record(c, actor, "assign_task", now, Json{{"assignment", a}});
  return c.assignments.back();
}

const Assignment& CaseStore::finish_task(const std::string& case_id, const std::string& task_id, TaskStatus outcome,
                                         const Actor& actor, Timestamp now) {
  if (outcome == TaskStatus::open) fail(Errc::InvalidFormat, "outcome must be done or cancelled");
  auto it = cases_.find(case_id);
  if (it == cases_.end()) fail(Errc::NotFound, "no case " + case_id);
  Assignment* a = find_task(it->second, task_id);
  if (!a) fail(Errc::UnknownTask, "no task " + task_id + " on case " + case_id);
  Case& c = open_for_mutation(case_id);
  if (a->status != TaskStatus::open)
    fail(Errc::InvalidState, "task " + task_id + " is already " + std::string(name_of(a->status)));
  a->status = outcome;
  record(c, actor, outcome == TaskStatus::done ? "complete_task" : "cancel_task", now, Json{{"task_id", task_id}});
  return *a;
}

const Case& CaseStore::close_case(const std::string& case_id, const Actor& actor, Timestamp now,
                                  const ChainCheck& check) {
  Case& c = open_for_mutation(case_id);
  std::vector<std::string> open;
  for (const auto& a : c.assignments)
    if (a.status == TaskStatus::open) open.push_back(a.task_id);
  if (!open.empty()) fail(Errc::OpenTasks, std::to_string(open.size()) + " task(s) still open", Json{{"tasks", open}});
  if (!c.evidence_ids.empty() &&
      std::none_of(c.documents.begin(), c.documents.end(),
                   [](const CaseDocument& d) { return d.kind == DocumentKind::forensic_report; }))
    fail(Errc::MissingForensicReport, "evidence is linked but no forensic report is attached");
  Json heads = Json::object();
  for (const auto& id : c.evidence_ids) {
    custody::ChainStatus st = check(id);
    if (!st.ok)
      fail(Errc::ChainBroken, "custody chain of " + id + " broken at seq " + std::to_string(st.broken_at),
           Json{{"evidence_id", id}, {"broken_at", st.broken_at}, {"reason", st.reason}});
    heads[id] = st.head;
  }
  c.status = CaseStatus::closed;
  c.closed_at = now;
  record(c, actor, "close_case", now, Json{{"chain_heads", heads}});
  return c;
}

const Case& CaseStore::read_case(const std::string& case_id, domain::Role role) const {
  if (role == Role::le_agent) fail(Errc::Forbidden, "cases are internal");
  return get(case_id);
}

Json CaseStore::dossier(const std::string& case_id, const std::map<std::string, std::string>& chain_heads) const {
  const Case& c = get(case_id);
  Json docs = Json::array();
  for (const auto& d : c.documents) docs.push_back(d);
  Json heads = Json::object();
  for (const auto& id : c.evidence_ids) {
    auto it = chain_heads.find(id);
    heads[id] = it == chain_heads.end() ? Json(nullptr) : Json(it->second);
  }
  Json view = c;
  view.erase("audit");
  return Json{{"case", view}, {"documents", docs}, {"custody_heads", heads}, {"audit_length", c.audit.size()}};
}

Case replay_audit(const std::vector<AuditEntry>& audit) {
  Case c;
  std::uint64_t expect = 1;
  for (const auto& e : audit) {
    if (e.seq != expect++) fail(Errc::InvalidFormat, "audit seq gap at " + std::to_string(e.seq));
    if (c.case_id.empty()) c.case_id = e.case_id;
    if (e.case_id != c.case_id) fail(Errc::InvalidFormat, "audit entry for another case");
    add_participant(c, Actor{e.actor, e.detail.at("role").get<Role>()});
    if (e.action == "open_case") {
      c.request_id = e.detail.at("request_id").get<std::string>();
      c.opened_at = e.timestamp;
    } else if (e.action == "link_evidence") {
      auto id = e.detail.at("evidence_id").get<std::string>();
      if (!has_id(c.evidence_ids, id)) c.evidence_ids.push_back(id);
    } else if (e.action == "add_report") {
      c.documents.push_back(e.detail.at("document").get<CaseDocument>());
    } else if (e.action == "assign_task") {
      c.assignments.push_back(e.detail.at("assignment").get<Assignment>());
    } else if (e.action == "complete_task" || e.action == "cancel_task") {
      Assignment* a = find_task(c, e.detail.at("task_id").get<std::string>());
      if (!a) fail(Errc::InvalidFormat, "audit finishes an unknown task");
      a->status = e.action == "complete_task" ? TaskStatus::done : TaskStatus::cancelled;
    } else if (e.action == "close_case") {
      c.status = CaseStatus::closed;
      c.closed_at = e.timestamp;
    } else {
      fail(Errc::InvalidFormat, "unknown audit action " + e.action);
    }
  }
  c.audit = audit;
  return c;
}

Json CaseStore::to_json() const {
  Json out = Json::object();
  for (const auto& [id, c] : cases_) out[id] = c;
  return out;
}

CaseStore CaseStore::from_json(const Json& j) {
  CaseStore s;
  for (const auto& [id, c] : j.items()) {
    Case v = c.get<Case>();
    s.by_request_[v.request_id] = id;
    s.cases_.emplace(id, std::move(v));
  }
  return s;
}

void to_json(Json& j, const Actor& v) { j = Json{{"principal", v.principal}, {"role", v.role}}; }
void from_json(const Json& j, Actor& v) {
  v.principal = j.at("principal").get<std::string>();
  v.role = j.at("role").get<Role>();
}

void to_json(Json& j, const CaseDocument& v) {
  j = Json{{"doc_id", v.doc_id}, {"kind", v.kind}, {"uploaded_by", v.uploaded_by}, {"uploaded_at", v.uploaded_at}};
}
void from_json(const Json& j, CaseDocument& v) {
  v.doc_id = j.at("doc_id").get<std::string>();
  v.kind = j.at("kind").get<DocumentKind>();
  v.uploaded_by = j.at("uploaded_by").get<std::string>();
  v.uploaded_at = j.at("uploaded_at").get<Timestamp>();
}

void to_json(Json& j, const Assignment& v) {
  j = Json{{"task_id", v.task_id},
           {"case_id", v.case_id},
           {"description", v.description},
           {"assignee_role", v.assignee_role},
           {"status", v.status}};
  j["due"] = v.due ? Json(*v.due) : Json(nullptr);
}
void from_json(const Json& j, Assignment& v) {
  v.task_id = j.at("task_id").get<std::string>();
  v.case_id = j.at("case_id").get<std::string>();
  v.description = j.at("description").get<std::string>();
  v.assignee_role = j.at("assignee_role").get<Role>();
  v.due = opt<Timestamp>(j, "due");
  v.status = j.at("status").get<TaskStatus>();
}

void to_json(Json& j, const AuditEntry& v) {
  j = Json{{"seq", v.seq},       {"case_id", v.case_id},     {"actor", v.actor},
           {"action", v.action}, {"timestamp", v.timestamp}, {"detail", v.detail}};
}
void from_json(const Json& j, AuditEntry& v) {
  v.seq = j.at("seq").get<std::uint64_t>();
  v.case_id = j.at("case_id").get<std::string>();
  v.actor = j.at("actor").get<std::string>();
  v.action = j.at("action").get<std::string>();
  v.timestamp = j.at("timestamp").get<Timestamp>();
  v.detail = j.value("detail", Json::object());
}

void to_json(Json& j, const Case& v) {
  j = Json{{"case_id", v.case_id},
           {"request_id", v.request_id},
           {"opened_at", v.opened_at},
           {"status", v.status},
           {"participants", v.participants},
           {"evidence_ids", v.evidence_ids},
           {"document_ids", v.document_ids()},
           {"documents", v.documents},
           {"assignments", v.assignments},
           {"audit", v.audit}};
  j["closed_at"] = v.closed_at ? Json(*v.closed_at) : Json(nullptr);
}
void from_json(const Json& j, Case& v) {
  v.case_id = j.at("case_id").get<std::string>();
  v.request_id = j.at("request_id").get<std::string>();
  v.opened_at = j.at("opened_at").get<Timestamp>();
  v.status = j.at("status").get<CaseStatus>();
  v.participants = j.at("participants").get<std::vector<Actor>>();
  v.evidence_ids = j.at("evidence_ids").get<std::vector<std::string>>();
  v.documents = j.at("documents").get<std::vector<CaseDocument>>();
  v.assignments = j.at("assignments").get<std::vector<Assignment>>();
  v.closed_at = opt<Timestamp>(j, "closed_at");
  v.audit = j.at("audit").get<std::vector<AuditEntry>>();
}

}  // namespace clerms::cases
