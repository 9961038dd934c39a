#pragma once

#include "clerms/api/auth.h"
#include "clerms/api/config.h"
#include "clerms/api/event_log.h"
#include "clerms/api/tickets.h"
#include "clerms/cases/case_store.h"
#include "clerms/custody/evidence_store.h"
#include "clerms/flows/log_index.h"
#include "clerms/flows/registry.h"
#include "clerms/flows/session.h"
#include "clerms/reporting/money.h"
#include "clerms/reporting/transparency.h"
#include "clerms/workflow/engine.h"

#include <memory>
#include <shared_mutex>

namespace clerms::api {

struct ServiceOptions {
  Config config;
  Clock* clock = nullptr;      // SystemClock when null
  IdGenerator* ids = nullptr;  // RandomIdGenerator when null
  std::shared_ptr<NotificationSender> sender;  // quiet LogSender when null
  bool read_only = false;                      // no appends, no lock file
  bool start_worker = true;                    // background notification delivery
};

struct Recovery {
  std::optional<std::uint64_t> snapshot_seq;
  std::uint64_t replayed = 0;
  // CorruptLog at the final seq: a torn last line that was dropped.
  std::optional<std::uint64_t> truncated_tail_seq;
};

// Hosts every module over one data directory:
//   events.jsonl    append-only event log (canonical JSON lines)
//   snapshots/      periodic state snapshots
//   objects/ chains/ meta/ manifests/ exports/   evidence store
//   logsindex/      log index dump written with each snapshot
//
// Every mutation is validated and applied in memory, then appended as one
// event; replaying events.jsonl rebuilds the same state. Side effects on the
// evidence store happen once, live, and are not replayed.
class Service : public flows::AgentBackend {
 public:
  explicit Service(ServiceOptions options);
  ~Service() override;
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const Config& config() const { return config_; }
  const Recovery& recovery() const { return recovery_; }
  custody::EvidenceStore& evidence() { return *evidence_; }
  Clock& clock() { return *clock_; }

  // requests
  Json submit_request(const Principal& p, const Json& body);
  Json get_request(const Principal& p, const std::string& request_id) const;
  Json list_requests(const Principal& p) const;
  Json upload_document(const Principal& p, std::span<const std::uint8_t> content);
  Json receive_documents(const Principal& p, const std::string& request_id, const std::vector<std::string>& refs);
  Json begin_evaluation(const Principal& p, const std::string& request_id);
  Json apply_provisional(const Principal& p, const std::string& request_id, const std::string& measure);
  Json extend_preservation(const Principal& p, const std::string& request_id);
  Json record_decision(const Principal& p, const std::string& request_id, const Json& body);
  Json reopen_evaluation(const Principal& p, const std::string& request_id);
  Json escalate(const Principal& p, const std::string& request_id, bool override_objective);
  Json apply_action(const Principal& p, const std::string& request_id, const std::string& summary);
  Json issue_response(const Principal& p, const std::string& request_id, const std::string& body,
                      bool suppress_target_notification);
  Json acknowledge(const Principal& p, const std::string& request_id);
  Json successors(const Principal& p, const std::string& request_id) const;
  std::vector<std::string> close_expired();

  // tickets and notifications
  Json get_ticket(const Principal& p, const std::string& ticket_id) const;
  Json post_ticket_message(const Principal& p, const std::string& ticket_id, const std::string& body);
  // recipient: a role name or a principal id. UnknownRecipient otherwise.
  Notification notify(const std::string& recipient, const std::string& subject, const std::string& body);
  Json notifications(const Principal& p) const;
  void flush_notifications();

  // cases
  Json read_case(const Principal& p, const std::string& case_id) const;
  Json link_evidence(const Principal& p, const std::string& case_id, const std::string& evidence_id);
  Json add_report(const Principal& p, const std::string& case_id, const std::string& doc_id,
                  cases::DocumentKind kind);
  Json assign_task(const Principal& p, const std::string& case_id, const std::string& description,
                   domain::Role assignee_role, std::optional<Timestamp> due);
  Json finish_task(const Principal& p, const std::string& case_id, const std::string& task_id,
                   cases::TaskStatus outcome);
  Json close_case(const Principal& p, const std::string& case_id);
  Json export_case(const Principal& p, const std::string& case_id, const std::string& recipient);
  Json dossier(const Principal& p, const std::string& case_id) const;

  // reporting
  reporting::TransparencyReport transparency_report(const Principal& p, const reporting::Period& period,
                                                    std::optional<std::string> previous_period_ref) const;
  reporting::Invoice compute_invoice(const Principal& p, const Json& body);

  // collection
  Json list_agents(const Principal& p) const;
  Json launch_flow(const Principal& p, const Json& body);
  Json get_flow(const Principal& p, const std::string& flow_id) const;
  Json query_logs(const Principal& p, const flows::LogFilter& filter) const;

  // evidence
  Json evidence_info(const Principal& p, const std::string& evidence_id) const;
  custody::ChainStatus verify_evidence(const Principal& p, const std::string& evidence_id) const;
  Json evidence_chain(const Principal& p, const std::string& evidence_id) const;
  Json destroy_evidence(const Principal& p, const std::string& evidence_id, const std::vector<std::string>& signers,
                        const std::string& reason);

  // state
  Json state_json() const;
  std::string state_digest() const;
  Json state_summary(const Principal& p) const;
  void snapshot_now();
  std::uint64_t last_seq() const;

  // flows::AgentBackend
  flows::AgentInfo agent_register(const flows::RegisterHello& hello) override;
  std::vector<flows::FlowRequest> agent_poll(const std::string& agent_id) override;
  flows::FlowRequest agent_flow(const std::string& agent_id, const std::string& flow_id) override;
  std::string agent_fetched(const flows::FlowRequest& flow, const std::string& path, const Bytes& content) override;
  flows::FlowResult agent_done(const std::string& agent_id, flows::FlowResult result) override;
  flows::IngestResult agent_logs(const std::string& agent_id, const std::vector<Json>& records) override;

 private:
  struct DocumentInfo {
    std::string uploader;
    Timestamp at;
  };

  void recover();
  void restore_state(const Json& state);
  Json core_state() const;  // everything but the on-disk evidence heads
  // Applies an event to in-memory state. Never touches disk.
  void apply(const std::string& type, const Json& payload);
  // apply + append under the caller's unique lock.
  std::uint64_t commit(const std::string& type, Json payload);
  void maybe_snapshot();
  Json new_notification(const std::string& recipient, const std::string& subject, const std::string& body,
                        Timestamp at);
  void enqueue_created(const Json& notification);
  std::string resolve_recipient(const std::string& recipient) const;

  const workflow::RequestRecord& record_for(const Principal& p, const std::string& request_id, Action action) const;
  Json request_view(const Principal& p, const workflow::RequestRecord& r) const;
  cases::Actor actor(const Principal& p) const { return {p.principal_id, p.role}; }
  void sync_ticket(const std::string& request_id);
  void post_system(const std::string& request_id, const std::string& body, Timestamp at);

  Config config_;
  std::unique_ptr<Clock> owned_clock_;
  std::unique_ptr<IdGenerator> owned_ids_;
  Clock* clock_;
  IdGenerator* ids_;
  bool read_only_;
  int lock_fd_ = -1;

  mutable std::shared_mutex mu_;
  std::unique_ptr<custody::EvidenceStore> evidence_;
  std::unique_ptr<EventLog> log_;
  Recovery recovery_;
  std::uint64_t applied_seq_ = 0;

  workflow::Engine engine_;
  cases::CaseStore cases_;
  flows::FlowRegistry flows_;
  flows::LogIndex logs_;
  TicketStore tickets_;
  std::map<std::string, std::string> owners_;  // request -> principal
  std::map<std::string, DocumentInfo> documents_;
  std::map<std::string, Json> invoices_;
  std::map<std::string, Json> exports_;
  std::map<std::string, Notification> notifications_;
  flows::IngestResult last_ingest_;  // outcome of the latest logs_ingested event

  std::shared_ptr<NotificationSender> sender_;
  std::unique_ptr<NotificationWorker> worker_;
};

}  // namespace clerms::api
