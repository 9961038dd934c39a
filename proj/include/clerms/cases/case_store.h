#pragma once

#include "clerms/core/enum.h"
#include "clerms/core/json.h"
#include "clerms/core/time.h"
#include "clerms/custody/evidence_store.h"
#include "clerms/domain/model.h"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace clerms::cases {

using clerms::from_json;
using clerms::to_json;

enum class CaseStatus { open, closed };
enum class DocumentKind {
  request_scan,
  evaluation_report,
  briefing_memo,
  forensic_report,
  custody_export,
  invoice,
  response_letter
};
enum class TaskStatus { open, done, cancelled };

struct Actor {
  std::string principal;
  domain::Role role{};

  bool operator==(const Actor&) const = default;
};

struct CaseDocument {
  std::string doc_id;  // content hash in the evidence store
  DocumentKind kind{};
  std::string uploaded_by;
  Timestamp uploaded_at;

  bool operator==(const CaseDocument&) const = default;
};

struct Assignment {
  std::string task_id;
  std::string case_id;
  std::string description;
  domain::Role assignee_role{};
  std::optional<Timestamp> due;
  TaskStatus status = TaskStatus::open;

  bool operator==(const Assignment&) const = default;
};

struct AuditEntry {
  std::uint64_t seq = 0;
  std::string case_id;
  std::string actor;
  std::string action;
  Timestamp timestamp;
  Json detail = Json::object();

  bool operator==(const AuditEntry&) const = default;
};

struct Case {
  std::string case_id;
  std::string request_id;
  Timestamp opened_at;
  CaseStatus status = CaseStatus::open;
  std::vector<Actor> participants;
  std::vector<std::string> evidence_ids;
  std::vector<CaseDocument> documents;
  std::vector<Assignment> assignments;
  std::optional<Timestamp> closed_at;
  std::vector<AuditEntry> audit;

  std::vector<std::string> document_ids() const;
  bool operator==(const Case&) const = default;
};

// Chain check used by link_evidence and close_case. Live operation verifies
// the custody log; replay returns what was recorded at the time.
using ChainCheck = std::function<custody::ChainStatus(const std::string& evidence_id)>;
using DocumentCheck = std::function<bool(const std::string& doc_id)>;

struct ReportAck {
  bool notify_ticket = false;  // forensic reports go to the request's ticket
};

// All cases, keyed by id. Not internally synchronized; the owner serializes
// mutations.
class CaseStore {
 public:
  // InvalidRequestState unless the request is Escalated, DuplicateCase.
  const Case& open_case(const std::string& case_id, const std::string& request_id, domain::StateValue request_state,
                        const Actor& opened_by, Timestamp now);

  // CaseClosed, ChainBroken. Re-linking an id already on the case is a no-op
  // that still records an audit entry.
  void link_evidence(const std::string& case_id, const std::string& evidence_id, const Actor& actor, Timestamp now,
                     const ChainCheck& check);

  // CaseClosed, UnknownDocument.
  ReportAck add_report(const std::string& case_id, const CaseDocument& document, const Actor& actor, Timestamp now,
                       const DocumentCheck& exists);

  // CaseClosed.
  const Assignment& assign_task(const std::string& case_id, const std::string& task_id, const std::string& description,
                                domain::Role assignee_role, std::optional<Timestamp> due, const Actor& actor,
                                Timestamp now);
  // UnknownTask, CaseClosed, InvalidState once terminal.
  const Assignment& finish_task(const std::string& case_id, const std::string& task_id, TaskStatus outcome,
                                const Actor& actor, Timestamp now);

  // OpenTasks, MissingForensicReport, ChainBroken. The closing audit entry
  // records each linked chain head.
  const Case& close_case(const std::string& case_id, const Actor& actor, Timestamp now, const ChainCheck& check);

  // Forbidden for le_agent, NotFound.
  const Case& read_case(const std::string& case_id, domain::Role role) const;

  bool contains(const std::string& case_id) const { return cases_.count(case_id) != 0; }
  const Case& get(const std::string& case_id) const;  // NotFound
  std::optional<std::string> case_for_request(const std::string& request_id) const;
  const std::map<std::string, Case>& cases() const { return cases_; }

  // Canonical dossier consumed by export_transport_package.
  Json dossier(const std::string& case_id, const std::map<std::string, std::string>& chain_heads) const;

  Json to_json() const;
  static CaseStore from_json(const Json& j);

 private:
  Case& open_for_mutation(const std::string& case_id);
  void record(Case& c, const Actor& actor, std::string action, Timestamp now, Json detail);

  std::map<std::string, Case> cases_;
  std::map<std::string, std::string> by_request_;
};

// Rebuilds participants, evidence, documents, tasks and status from the audit
// trail alone. Throws InvalidFormat on a gap in seq or an unknown action.
Case replay_audit(const std::vector<AuditEntry>& audit);

void to_json(Json& j, const Actor& v);
void from_json(const Json& j, Actor& v);
void to_json(Json& j, const CaseDocument& v);
void from_json(const Json& j, CaseDocument& v);
void to_json(Json& j, const Assignment& v);
void from_json(const Json& j, Assignment& v);
void to_json(Json& j, const AuditEntry& v);
void from_json(const Json& j, AuditEntry& v);
void to_json(Json& j, const Case& v);
void from_json(const Json& j, Case& v);

}  // namespace clerms::cases

namespace clerms {

template <>
struct EnumNames<cases::CaseStatus> {
  static constexpr std::array<std::string_view, 2> names{"open", "closed"};
};
template <>
struct EnumNames<cases::DocumentKind> {
  static constexpr std::array<std::string_view, 7> names{"request_scan",   "evaluation_report", "briefing_memo",
                                                         "forensic_report", "custody_export",    "invoice",
                                                         "response_letter"};
};
template <>
struct EnumNames<cases::TaskStatus> {
  static constexpr std::array<std::string_view, 3> names{"open", "done", "cancelled"};
};

}  // namespace clerms
