#include "clerms/api/service.h"

#include "clerms/core/hash.h"
#include "clerms/domain/validation.h"

#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <fcntl.h>
#include <fstream>

namespace clerms::api {

namespace fs = std::filesystem;
using domain::Role;
using domain::StateValue;

namespace {

const std::string& str(const Json& j, const char* key) { return j.at(key).get_ref<const std::string&>(); }

Timestamp at_of(const Json& j) { return j.at("at").get<Timestamp>(); }

std::string body_string(const Json& body, const char* key, bool required) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) {
    if (required) fail(Errc::MissingField, key, Json{{"field", key}});
    return {};
  }
  if (!it->is_string()) fail(Errc::InvalidFormat, std::string(key) + " must be a string", Json{{"field", key}});
  return it->get<std::string>();
}

template <typename E>
E body_enum(const Json& body, const char* key, std::optional<E> fallback = std::nullopt) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) {
    if (fallback) return *fallback;
    fail(Errc::MissingField, key, Json{{"field", key}});
  }
  auto v = it->is_string() ? enum_from<E>(it->get_ref<const std::string&>()) : std::nullopt;
  if (!v) fail(Errc::InvalidFormat, "bad value for " + std::string(key), Json{{"field", key}});
  return *v;
}

void write_atomic(const fs::path& file, const std::string& data) {
  fs::create_directories(file.parent_path());
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << data;
    if (!out) fail(Errc::IoFailure, "cannot write " + tmp.string());
  }
  fs::rename(tmp, file);
}

custody::ChainStatus recorded_status(const Json& status) {
  if (status.at("ok").get<bool>()) return custody::ChainStatus::good(status.value("length", 0ULL), str(status, "head"));
  return custody::ChainStatus::broken(status.at("broken_at").get<std::uint64_t>(), str(status, "reason"));
}

Json status_json(const custody::ChainStatus& s) {
  if (s.ok) return Json{{"ok", true}, {"length", s.length}, {"head", s.head}};
  return Json{{"ok", false}, {"broken_at", s.broken_at}, {"reason", s.reason}};
}

bool is_role_name(const std::string& s) { return enum_from<Role>(s).has_value(); }

}  // namespace

// ---------------------------------------------------------------- lifecycle

Service::Service(ServiceOptions options)
    : config_(std::move(options.config)), read_only_(options.read_only), engine_(config_.workflow) {
  if (!options.clock) owned_clock_ = std::make_unique<SystemClock>();
  if (!options.ids) owned_ids_ = std::make_unique<RandomIdGenerator>();
  clock_ = options.clock ? options.clock : owned_clock_.get();
  ids_ = options.ids ? options.ids : owned_ids_.get();

  fs::create_directories(config_.data_dir);
  if (!read_only_) {
    lock_fd_ = ::open((config_.data_dir / ".lock").c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (lock_fd_ < 0 || ::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
      if (lock_fd_ >= 0) ::close(lock_fd_);
      fail(Errc::IoFailure, "data directory " + config_.data_dir.string() + " is in use by another process");
    }
  }
  custody::EvidenceStore::Options eo;
  if (config_.storage_capacity_bytes) eo.capacity_bytes = config_.storage_capacity_bytes;
  evidence_ = std::make_unique<custody::EvidenceStore>(config_.data_dir, *clock_, *ids_, eo);

  recover();

  sender_ = options.sender ? options.sender : std::make_shared<LogSender>(true);
  worker_ = std::make_unique<NotificationWorker>(sender_, [this](const std::string& id, bool ok) {
    std::unique_lock lock(mu_);
    if (!read_only_ && notifications_.count(id)) commit("notification_delivered", Json{{"id", id}, {"delivered", ok}});
  });
  if (!read_only_ && options.start_worker) {
    worker_->start();
    for (const auto& [id, n] : notifications_)
      if (!n.delivered) worker_->enqueue(n);
  }
}

Service::~Service() {
  if (worker_) worker_->stop();
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

void Service::recover() {
  fs::path events = config_.data_dir / "events.jsonl";
  LoadedLog loaded = read_event_log(events);

  // Newest snapshot that the log still covers.
  std::vector<fs::path> snaps;
  if (fs::is_directory(config_.data_dir / "snapshots"))
    for (const auto& e : fs::directory_iterator(config_.data_dir / "snapshots"))
      if (e.path().extension() == ".json") snaps.push_back(e.path());
  std::sort(snaps.rbegin(), snaps.rend());
  for (const auto& s : snaps) {
    try {
      std::ifstream in(s);
      Json j = Json::parse(in);
      auto seq = j.at("seq").get<std::uint64_t>();
      if (seq > loaded.records.size()) continue;
      if (loaded.records.empty() || seq == 0) continue;
      restore_state(j.at("state"));
      applied_seq_ = seq;
      recovery_.snapshot_seq = seq;
      break;
    } catch (const std::exception&) {
      engine_ = workflow::Engine(config_.workflow);
      cases_ = {};
      flows_ = {};
      logs_.restore(Json::array());
      tickets_ = {};
      owners_.clear();
      documents_.clear();
      invoices_.clear();
      exports_.clear();
      notifications_.clear();
      applied_seq_ = 0;
    }
  }

  for (const auto& r : loaded.records) {
    if (r.seq <= applied_seq_) continue;
    try {
      apply(r.event_type, r.payload);
    } catch (const std::exception& e) {
      fail(Errc::CorruptLog, "event " + std::to_string(r.seq) + " (" + r.event_type + ") does not apply: " + e.what(),
           Json{{"seq", r.seq}});
    }
    applied_seq_ = r.seq;
    ++recovery_.replayed;
  }
  recovery_.truncated_tail_seq = loaded.truncated_tail_seq;
  if (!read_only_) log_ = std::make_unique<EventLog>(events, loaded.records.size(), loaded.valid_bytes);
}

void Service::restore_state(const Json& s) {
  engine_ = workflow::Engine::from_json(s.at("requests"), config_.workflow);
  cases_ = cases::CaseStore::from_json(s.at("cases"));
  flows_ = flows::FlowRegistry::from_json(s.at("flows"));
  logs_.restore(s.at("logs"));
  tickets_ = TicketStore::from_json(s.at("tickets"));
  owners_ = s.at("owners").get<std::map<std::string, std::string>>();
  documents_.clear();
  for (const auto& [id, d] : s.at("documents").items())
    documents_[id] = {str(d, "uploader"), d.at("at").get<Timestamp>()};
  invoices_ = s.at("invoices").get<std::map<std::string, Json>>();
  exports_ = s.at("exports").get<std::map<std::string, Json>>();
  notifications_.clear();
  for (const auto& [id, n] : s.at("notifications").items()) notifications_[id] = n.get<Notification>();
}

Json Service::core_state() const {
  Json docs = Json::object();
  for (const auto& [id, d] : documents_) docs[id] = Json{{"uploader", d.uploader}, {"at", d.at}};
  Json notes = Json::object();
  for (const auto& [id, n] : notifications_) notes[id] = n;
  return Json{{"requests", engine_.to_json()},
              {"cases", cases_.to_json()},
              {"flows", flows_.to_json()},
              {"logs", logs_.snapshot()},
              {"tickets", tickets_.to_json()},
              {"owners", owners_},
              {"documents", docs},
              {"invoices", invoices_},
              {"exports", exports_},
              {"notifications", notes}};
}

Json Service::state_json() const {
  Json s;
  {
    std::shared_lock lock(mu_);
    s = core_state();
  }
  Json heads = Json::object();
  for (const auto& id : evidence_->list()) {
    auto st = evidence_->verify_chain(id);
    heads[id] = st.ok ? Json(st.head) : Json("broken@" + std::to_string(st.broken_at));
  }
  s["evidence"] = heads;
  return s;
}

std::string Service::state_digest() const { return sha256_hex(canonical(state_json())); }

std::uint64_t Service::last_seq() const {
  std::shared_lock lock(mu_);
  return applied_seq_;
}

Json Service::state_summary(const Principal& p) const {
  require(config_.roles, p, Action::state_read);
  std::shared_lock lock(mu_);
  return Json{{"seq", applied_seq_},
              {"requests", engine_.records().size()},
              {"cases", cases_.cases().size()},
              {"agents", flows_.agents().size()},
              {"flows", flows_.flows().size()},
              {"log_records", logs_.size()},
              {"notifications", notifications_.size()}};
}

void Service::snapshot_now() {
  if (read_only_) return;
  std::shared_lock lock(mu_);
  Json snap{{"seq", applied_seq_}, {"state", core_state()}};
  char name[32];
  std::snprintf(name, sizeof name, "%020llu.json", static_cast<unsigned long long>(applied_seq_));
  write_atomic(config_.data_dir / "snapshots" / name, canonical(snap));
  fs::create_directories(config_.data_dir / "logsindex");
  logs_.save(config_.data_dir / "logsindex" / "index.json");
}

void Service::maybe_snapshot() {
  if (config_.snapshot_every == 0 || applied_seq_ % config_.snapshot_every != 0) return;
  Json snap{{"seq", applied_seq_}, {"state", core_state()}};
  char name[32];
  std::snprintf(name, sizeof name, "%020llu.json", static_cast<unsigned long long>(applied_seq_));
  write_atomic(config_.data_dir / "snapshots" / name, canonical(snap));
  fs::create_directories(config_.data_dir / "logsindex");
  logs_.save(config_.data_dir / "logsindex" / "index.json");
}

std::uint64_t Service::commit(const std::string& type, Json payload) {
  if (read_only_) fail(Errc::Forbidden, "service is open read-only");
  apply(type, payload);
  applied_seq_ = log_->append(clock_->now(), type, payload);
  maybe_snapshot();
  return applied_seq_;
}

// ---------------------------------------------------------------- apply

void Service::sync_ticket(const std::string& request_id) {
  tickets_.sync_status(request_id, engine_.get(request_id).state());
}

void Service::post_system(const std::string& request_id, const std::string& body, Timestamp at) {
  if (const Ticket* t = tickets_.for_request(request_id))
    tickets_.post(t->ticket_id, TicketMessage{"system", body, at, true});
}

void Service::apply(const std::string& type, const Json& p) {
  if (type == "request_submitted") {
    domain::LERequest req = p.at("request").get<domain::LERequest>();
    std::string id = req.request_id;
    if (tickets_.for_request(id)) fail(Errc::DuplicateRequest, "request " + id + " already has a ticket");
    engine_.submit(req, at_of(p));
    owners_[id] = str(p, "owner");
    tickets_.open(str(p, "ticket_id"), id, domain::classify_priority(req.regime, req.objective),
                  engine_.get(id).state());
    auto n = p.at("notification").get<Notification>();
    notifications_[n.id] = n;
  } else if (type == "document_stored") {
    documents_.try_emplace(str(p, "doc_id"), DocumentInfo{str(p, "uploader"), at_of(p)});
  } else if (type == "documents_received") {
    const std::string& id = str(p, "request_id");
    engine_.receive_documents(id, p.at("document_refs").get<std::vector<std::string>>(),
                              [this](const std::string& ref) { return documents_.count(ref) != 0; }, at_of(p));
    sync_ticket(id);
  } else if (type == "evaluation_started") {
    engine_.begin_evaluation(str(p, "request_id"), at_of(p));
    sync_ticket(str(p, "request_id"));
  } else if (type == "provisional_applied") {
    engine_.apply_provisional_measures(str(p, "request_id"), str(p, "measure"), str(p, "actor"), at_of(p));
  } else if (type == "preservation_extended") {
    engine_.extend_preservation(str(p, "request_id"));
  } else if (type == "decision_recorded") {
    const std::string& id = str(p, "request_id");
    auto d = p.at("decision").get<workflow::EvaluationDecision>();
    engine_.record_decision(id, d);
    std::string msg = "Decision: " + std::string(name_of(d.decision)) + ".";
    if (!d.public_summary.empty()) msg += " " + d.public_summary;
    post_system(id, msg, d.decided_at);
    sync_ticket(id);
  } else if (type == "evaluation_reopened") {
    engine_.reopen_evaluation(str(p, "request_id"), at_of(p));
    post_system(str(p, "request_id"), "The request is under evaluation again.", at_of(p));
    sync_ticket(str(p, "request_id"));
  } else if (type == "escalated") {
    const std::string& id = str(p, "request_id");
    const std::string& case_id = str(p, "case_id");
    if (cases_.case_for_request(id)) fail(Errc::DuplicateCase, "request " + id + " already has a case");
    engine_.escalate(id, case_id, p.at("override").get<bool>(), at_of(p));
    cases_.open_case(case_id, id, engine_.get(id).state(), p.at("actor").get<cases::Actor>(), at_of(p));
    post_system(id, "The request has been escalated for investigation.", at_of(p));
    sync_ticket(id);
    auto n = p.at("notification").get<Notification>();
    notifications_[n.id] = n;
  } else if (type == "action_applied") {
    engine_.apply_action(str(p, "request_id"), str(p, "summary"), at_of(p));
    sync_ticket(str(p, "request_id"));
  } else if (type == "response_issued") {
    const std::string& id = str(p, "request_id");
    auto r = engine_.issue_response(id, str(p, "body"), p.at("suppress_target_notification").get<bool>(), at_of(p));
    post_system(id, "Response issued (" + std::string(name_of(r.kind)) + "): " + r.body, at_of(p));
    sync_ticket(id);
    auto n = p.at("notification").get<Notification>();
    notifications_[n.id] = n;
  } else if (type == "acknowledged") {
    engine_.acknowledge(str(p, "request_id"), at_of(p));
    sync_ticket(str(p, "request_id"));
  } else if (type == "expired_closed") {
    for (const auto& id : engine_.close_expired(at_of(p))) sync_ticket(id);
  } else if (type == "ticket_message") {
    tickets_.post(str(p, "ticket_id"), p.at("message").get<TicketMessage>());
  } else if (type == "notification_created") {
    auto n = p.at("notification").get<Notification>();
    notifications_[n.id] = n;
  } else if (type == "notification_delivered") {
    auto it = notifications_.find(str(p, "id"));
    if (it == notifications_.end()) fail(Errc::NotFound, "no notification " + str(p, "id"));
    it->second.delivered = p.at("delivered").get<bool>();
  } else if (type == "evidence_linked") {
    auto status = custody::ChainStatus::good(0, str(p, "chain_head"));
    cases_.link_evidence(str(p, "case_id"), str(p, "evidence_id"), p.at("actor").get<cases::Actor>(), at_of(p),
                         [&](const std::string&) { return status; });
  } else if (type == "report_added") {
    const std::string& case_id = str(p, "case_id");
    auto ack = cases_.add_report(case_id, p.at("document").get<cases::CaseDocument>(),
                                 p.at("actor").get<cases::Actor>(), at_of(p),
                                 [this](const std::string& doc) { return documents_.count(doc) != 0; });
    if (ack.notify_ticket)
      post_system(cases_.get(case_id).request_id, "Forensic findings have been reported by the investigation team.",
                  at_of(p));
  } else if (type == "task_assigned") {
    std::optional<Timestamp> due;
    if (!p.at("due").is_null()) due = p.at("due").get<Timestamp>();
    cases_.assign_task(str(p, "case_id"), str(p, "task_id"), str(p, "description"),
                       p.at("assignee_role").get<Role>(), due, p.at("actor").get<cases::Actor>(), at_of(p));
  } else if (type == "task_finished") {
    cases_.finish_task(str(p, "case_id"), str(p, "task_id"), p.at("outcome").get<cases::TaskStatus>(),
                       p.at("actor").get<cases::Actor>(), at_of(p));
  } else if (type == "case_closed") {
    const Json& chains = p.at("chains");
    cases_.close_case(str(p, "case_id"), p.at("actor").get<cases::Actor>(), at_of(p),
                      [&](const std::string& id) { return recorded_status(chains.at(id)); });
  } else if (type == "case_exported") {
    exports_[str(p.at("manifest"), "manifest_id")] = p;
  } else if (type == "invoice_computed") {
    invoices_[str(p.at("invoice"), "invoice_id")] = p.at("invoice");
  } else if (type == "agent_registered") {
    flows_.register_agent(flows::parse_hello(p.at("hello")), str(p, "new_id"), at_of(p));
  } else if (type == "flow_launched") {
    auto flow = p.at("flow").get<flows::FlowRequest>();
    if (!cases_.contains(flow.case_id)) fail(Errc::NotFound, "no case " + flow.case_id);
    bool open = cases_.get(flow.case_id).status == cases::CaseStatus::open;
    flows_.launch_flow(flow, p.at("issuer_role").get<Role>(), open);
  } else if (type == "flows_taken") {
    auto expected = p.at("flow_ids").get<std::vector<std::string>>();
    auto taken = flows_.take_pending(str(p, "agent_id"), at_of(p));
    std::vector<std::string> ids;
    for (const auto& f : taken) ids.push_back(f.flow_id);
    if (ids != expected) fail(Errc::CorruptLog, "pending flows differ from the recorded assignment");
  } else if (type == "flow_completed") {
    const auto& result = flows_.complete(str(p, "agent_id"), p.at("result").get<flows::FlowResult>(), at_of(p));
    const auto& flow = flows_.flow(result.flow_id).request;
    if (cases_.contains(flow.case_id) && cases_.get(flow.case_id).status == cases::CaseStatus::open) {
      auto actor = p.at("actor").get<cases::Actor>();
      for (const auto& link : p.at("links")) {
        auto status = custody::ChainStatus::good(0, str(link, "chain_head"));
        cases_.link_evidence(flow.case_id, str(link, "evidence_id"), actor, at_of(p),
                             [&](const std::string&) { return status; });
      }
    }
  } else if (type == "logs_ingested") {
    last_ingest_ = logs_.ingest(p.at("records").get<std::vector<Json>>());
  } else if (type == "evidence_destroyed") {
    // Recorded for the audit trail; the store itself holds the outcome.
  } else {
    fail(Errc::CorruptLog, "unknown event type " + type);
  }
}

// ---------------------------------------------------------------- notifications

std::string Service::resolve_recipient(const std::string& recipient) const {
  if (is_role_name(recipient) || config_.find_principal(recipient)) return recipient;
  fail(Errc::UnknownRecipient, "unknown recipient " + recipient);
}

Json Service::new_notification(const std::string& recipient, const std::string& subject, const std::string& body,
                               Timestamp at) {
  return Notification{ids_->uuid(), resolve_recipient(recipient), subject, body, at, false};
}

void Service::enqueue_created(const Json& notification) {
  if (worker_) worker_->enqueue(notification.get<Notification>());
}

Notification Service::notify(const std::string& recipient, const std::string& subject, const std::string& body) {
  Json n;
  {
    std::unique_lock lock(mu_);
    n = new_notification(recipient, subject, body, clock_->now());
    commit("notification_created", Json{{"notification", n}, {"at", n.at("created_at")}});
  }
  enqueue_created(n);
  return n.get<Notification>();
}

Json Service::notifications(const Principal& p) const {
  require(config_.roles, p, Action::notifications_read);
  std::shared_lock lock(mu_);
  Json out = Json::array();
  for (const auto& [id, n] : notifications_) out.push_back(n);
  return out;
}

void Service::flush_notifications() {
  if (worker_) worker_->flush();
}

// ---------------------------------------------------------------- requests

const workflow::RequestRecord& Service::record_for(const Principal& p, const std::string& request_id,
                                                   Action action) const {
  const auto& r = engine_.get(request_id);
  require(config_.roles, p, action, Resource{owners_.at(request_id)});
  return r;
}

Json Service::request_view(const Principal& p, const workflow::RequestRecord& r) const {
  Json v = r;
  const std::string& id = r.request.request_id;
  if (const Ticket* t = tickets_.for_request(id)) v["ticket_id"] = t->ticket_id;
  v["priority"] = domain::classify_priority(r.request.regime, r.request.objective);
  if (p.role == Role::le_agent) {
    // Requesters see the decision kind and the public summary only.
    Json decisions = Json::array();
    for (const auto& d : r.decisions)
      decisions.push_back(
          Json{{"decision", d.decision}, {"public_summary", d.public_summary}, {"decided_at", d.decided_at}});
    v["decisions"] = decisions;
    v.erase("case_id");
    v.erase("escalation_override");
    v.erase("action_summary");
    return v;
  }
  v["owner"] = owners_.at(id);
  Json succ = Json::array();
  for (auto s : engine_.successors(id)) succ.push_back(s);
  v["successors"] = succ;
  return v;
}

Json Service::submit_request(const Principal& p, const Json& body) {
  require(config_.roles, p, Action::request_submit);
  Json payload;
  {
    std::unique_lock lock(mu_);
    Timestamp now = clock_->now();
    auto result = domain::validate_submission(body, *ids_, now);
    if (!result.ok()) {
      Json errors = Json::array();
      for (const auto& e : result.errors) errors.push_back(e);
      fail(Errc::ValidationFailed, std::to_string(result.errors.size()) + " field error(s)", Json{{"errors", errors}});
    }
    const auto& req = *result.request;
    if (engine_.contains(req.request_id)) fail(Errc::DuplicateRequest, "request " + req.request_id + " exists");
    payload = Json{{"request", req},
                   {"owner", p.principal_id},
                   {"ticket_id", ids_->uuid()},
                   {"at", now},
                   {"notification", new_notification("crisis_manager", "New law-enforcement request",
                                                     "Request " + req.request_id + " (" +
                                                         std::string(name_of(req.objective)) + ", " +
                                                         std::string(name_of(req.regime)) + ") awaits documents.",
                                                     now)}};
    commit("request_submitted", payload);
  }
  enqueue_created(payload["notification"]);
  std::shared_lock lock(mu_);
  const auto& r = engine_.get(payload["request"]["request_id"].get<std::string>());
  return Json{{"request_id", r.request.request_id},
              {"ticket_id", payload["ticket_id"]},
              {"state", r.state()},
              {"priority", domain::classify_priority(r.request.regime, r.request.objective)}};
}

Json Service::get_request(const Principal& p, const std::string& request_id) const {
  std::shared_lock lock(mu_);
  return request_view(p, record_for(p, request_id, Action::request_read));
}

Json Service::list_requests(const Principal& p) const {
  require(config_.roles, p, Action::request_list);
  std::shared_lock lock(mu_);
  std::vector<const workflow::RequestRecord*> rows;
  for (const auto& [id, r] : engine_.records())
    if (authorize(config_.roles, p, Action::request_list, Resource{owners_.at(id)})) rows.push_back(&r);
  auto priority = [](const workflow::RequestRecord* r) {
    return domain::classify_priority(r->request.regime, r->request.objective);
  };
  std::stable_sort(rows.begin(), rows.end(), [&](auto* a, auto* b) {
    if (priority(a) != priority(b)) return priority(a) < priority(b);
    return a->request.submitted_at < b->request.submitted_at;
  });
  Json out = Json::array();
  for (const auto* r : rows) {
    const Ticket* t = tickets_.for_request(r->request.request_id);
    out.push_back(Json{{"request_id", r->request.request_id},
                       {"state", r->state()},
                       {"objective", r->request.objective},
                       {"regime", r->request.regime},
                       {"priority", priority(r)},
                       {"agency", r->request.requester.agency_name},
                       {"submitted_at", r->request.submitted_at},
                       {"ticket_id", t ? Json(t->ticket_id) : Json(nullptr)}});
  }
  return out;
}

Json Service::upload_document(const Principal& p, std::span<const std::uint8_t> content) {
  require(config_.roles, p, Action::document_upload);
  if (content.empty()) fail(Errc::MissingField, "document content is empty");
  auto item = evidence_->store(content, custody::Format::document, custody::UploadSource{p.principal_id},
                               p.principal_id);
  std::unique_lock lock(mu_);
  commit("document_stored", Json{{"doc_id", item.evidence_id}, {"uploader", p.principal_id}, {"at", clock_->now()}});
  return Json{{"doc_id", item.evidence_id}, {"size_bytes", item.size_bytes}};
}

Json Service::receive_documents(const Principal& p, const std::string& request_id,
                                const std::vector<std::string>& refs) {
  std::unique_lock lock(mu_);
  record_for(p, request_id, Action::documents_receive);
  commit("documents_received", Json{{"request_id", request_id}, {"document_refs", refs}, {"at", clock_->now()}});
  return Json{{"request_id", request_id}, {"state", engine_.get(request_id).state()}};
}

Json Service::begin_evaluation(const Principal& p, const std::string& request_id) {
  std::unique_lock lock(mu_);
  record_for(p, request_id, Action::evaluation_begin);
  commit("evaluation_started", Json{{"request_id", request_id}, {"at", clock_->now()}});
  return Json{{"request_id", request_id}, {"state", engine_.get(request_id).state()}};
}

Json Service::apply_provisional(const Principal& p, const std::string& request_id, const std::string& measure) {
  if (measure.empty()) fail(Errc::MissingField, "measure", Json{{"field", "measure"}});
  std::unique_lock lock(mu_);
  record_for(p, request_id, Action::provisional_apply);
  Timestamp now = clock_->now();
  commit("provisional_applied",
         Json{{"request_id", request_id}, {"measure", measure}, {"actor", p.principal_id}, {"at", now}});
  const auto& r = engine_.get(request_id);
  if (r.request.objective == domain::Objective::preservation && r.preservation)
    return Json{{"preservation_order", *r.preservation}};
  return Json{{"acknowledgment", workflow::Acknowledgment{request_id, measure, now}}};
}

Json Service::extend_preservation(const Principal& p, const std::string& request_id) {
  std::unique_lock lock(mu_);
  record_for(p, request_id, Action::preservation_extend);
  commit("preservation_extended", Json{{"request_id", request_id}, {"at", clock_->now()}});
  return Json{{"preservation_order", *engine_.get(request_id).preservation}};
}

Json Service::record_decision(const Principal& p, const std::string& request_id, const Json& body) {
  workflow::EvaluationDecision d;
  d.decision = body_enum<workflow::Decision>(body, "decision");
  d.rationale = body_string(body, "rationale", false);
  d.public_summary = body_string(body, "public_summary", false);
  d.response_data_class = body_enum<workflow::DataClass>(body, "response_data_class", workflow::DataClass::none);
  d.decided_by.push_back({p.principal_id, p.role});
  if (auto it = body.find("cosigners"); it != body.end() && !it->is_null()) {
    for (const auto& c : *it) {
      const Principal* s = c.is_string() ? config_.find_principal(c.get<std::string>()) : nullptr;
      if (!s) fail(Errc::InvalidFormat, "unknown cosigner " + c.dump(), Json{{"field", "cosigners"}});
      if (s->principal_id != p.principal_id) d.decided_by.push_back({s->principal_id, s->role});
    }
  }
  std::unique_lock lock(mu_);
  record_for(p, request_id, Action::decision_record);
  d.decided_at = clock_->now();
  commit("decision_recorded", Json{{"request_id", request_id}, {"decision", d}, {"at", d.decided_at}});
  return Json{{"request_id", request_id}, {"state", engine_.get(request_id).state()}};
}

Json Service::reopen_evaluation(const Principal& p, const std::string& request_id) {
  std::unique_lock lock(mu_);
  record_for(p, request_id, Action::evaluation_reopen);
  commit("evaluation_reopened", Json{{"request_id", request_id}, {"at", clock_->now()}});
  return Json{{"request_id", request_id}, {"state", engine_.get(request_id).state()}};
}

Json Service::escalate(const Principal& p, const std::string& request_id, bool override_objective) {
  Json payload;
  {
    std::unique_lock lock(mu_);
    record_for(p, request_id, Action::escalate);
    Timestamp now = clock_->now();
    std::string case_id = ids_->uuid();
    payload = Json{{"request_id", request_id},
                   {"case_id", case_id},
                   {"override", override_objective},
                   {"actor", actor(p)},
                   {"at", now},
                   {"notification", new_notification("forensic_expert", "Case opened",
                                                     "Case " + case_id + " was opened for request " + request_id +
                                                         ".",
                                                     now)}};
    commit("escalated", payload);
  }
  enqueue_created(payload["notification"]);
  std::shared_lock lock(mu_);
  return Json{{"request_id", request_id}, {"case_id", payload["case_id"]}, {"state", engine_.get(request_id).state()}};
}

Json Service::apply_action(const Principal& p, const std::string& request_id, const std::string& summary) {
  if (summary.empty()) fail(Errc::MissingField, "summary", Json{{"field", "summary"}});
  std::unique_lock lock(mu_);
  record_for(p, request_id, Action::action_apply);
  commit("action_applied", Json{{"request_id", request_id}, {"summary", summary}, {"at", clock_->now()}});
  return Json{{"request_id", request_id}, {"state", engine_.get(request_id).state()}};
}

Json Service::issue_response(const Principal& p, const std::string& request_id, const std::string& body,
                             bool suppress_target_notification) {
  Json payload;
  {
    std::unique_lock lock(mu_);
    record_for(p, request_id, Action::response_issue);
    Timestamp now = clock_->now();
    payload = Json{{"request_id", request_id},
                   {"body", body},
                   {"suppress_target_notification", suppress_target_notification},
                   {"at", now},
                   {"notification", new_notification(owners_.at(request_id), "Response issued",
                                                     "A response was issued for request " + request_id + ".", now)}};
    commit("response_issued", payload);
  }
  enqueue_created(payload["notification"]);
  std::shared_lock lock(mu_);
  const auto& r = engine_.get(request_id);
  return Json{{"request_id", request_id}, {"state", r.state()}, {"response", *r.response}};
}

Json Service::acknowledge(const Principal& p, const std::string& request_id) {
  std::unique_lock lock(mu_);
  record_for(p, request_id, Action::request_acknowledge);
  commit("acknowledged", Json{{"request_id", request_id}, {"at", clock_->now()}});
  return Json{{"request_id", request_id}, {"state", engine_.get(request_id).state()}};
}

Json Service::successors(const Principal& p, const std::string& request_id) const {
  std::shared_lock lock(mu_);
  record_for(p, request_id, Action::request_read);
  Json out = Json::array();
  for (auto s : engine_.successors(request_id)) out.push_back(s);
  return out;
}

std::vector<std::string> Service::close_expired() {
  std::unique_lock lock(mu_);
  Timestamp now = clock_->now();
  std::vector<std::string> due;
  for (const auto& [id, r] : engine_.records())
    if (r.state() == StateValue::ResponseIssued && r.response &&
        !(now < r.response->issued_at + config_.workflow.ack_timeout))
      due.push_back(id);
  if (due.empty()) return due;
  commit("expired_closed", Json{{"at", now}});
  return due;
}

// ---------------------------------------------------------------- tickets

Json Service::get_ticket(const Principal& p, const std::string& ticket_id) const {
  std::shared_lock lock(mu_);
  const Ticket& t = tickets_.get(ticket_id);
  require(config_.roles, p, Action::ticket_read, Resource{owners_.at(t.request_id)});
  return t;
}

Json Service::post_ticket_message(const Principal& p, const std::string& ticket_id, const std::string& body) {
  if (body.empty()) fail(Errc::MissingField, "body", Json{{"field", "body"}});
  std::unique_lock lock(mu_);
  const Ticket& t = tickets_.get(ticket_id);
  require(config_.roles, p, Action::ticket_post, Resource{owners_.at(t.request_id)});
  Timestamp now = clock_->now();
  TicketMessage m{p.principal_id, body, now, false};
  commit("ticket_message", Json{{"ticket_id", ticket_id}, {"message", m}, {"at", now}});
  return tickets_.get(ticket_id);
}

// ---------------------------------------------------------------- cases

Json Service::read_case(const Principal& p, const std::string& case_id) const {
  require(config_.roles, p, Action::case_read);
  std::shared_lock lock(mu_);
  return cases_.read_case(case_id, p.role);
}

Json Service::link_evidence(const Principal& p, const std::string& case_id, const std::string& evidence_id) {
  require(config_.roles, p, Action::case_link_evidence);
  {
    std::unique_lock lock(mu_);
    if (!cases_.contains(case_id)) fail(Errc::NotFound, "no case " + case_id);
    auto st = evidence_->verify_chain(evidence_id);
    if (!st.ok)
      fail(Errc::ChainBroken, "custody chain of " + evidence_id + " broken at seq " + std::to_string(st.broken_at),
           Json{{"evidence_id", evidence_id}, {"broken_at", st.broken_at}, {"reason", st.reason}});
    commit("evidence_linked", Json{{"case_id", case_id},
                                   {"evidence_id", evidence_id},
                                   {"actor", actor(p)},
                                   {"at", clock_->now()},
                                   {"chain_head", st.head}});
  }
  evidence_->append_custody_event(evidence_id, custody::CustodyAction::transferred, p.principal_id,
                                  "linked to case " + case_id);
  return Json{{"case_id", case_id}, {"evidence_id", evidence_id}, {"linked", true}};
}

Json Service::add_report(const Principal& p, const std::string& case_id, const std::string& doc_id,
                         cases::DocumentKind kind) {
  require(config_.roles, p, Action::case_add_report);
  std::unique_lock lock(mu_);
  Timestamp now = clock_->now();
  cases::CaseDocument doc{doc_id, kind, p.principal_id, now};
  commit("report_added", Json{{"case_id", case_id}, {"document", doc}, {"actor", actor(p)}, {"at", now}});
  return Json{{"case_id", case_id}, {"document", doc}};
}

Json Service::assign_task(const Principal& p, const std::string& case_id, const std::string& description,
                          Role assignee_role, std::optional<Timestamp> due) {
  require(config_.roles, p, Action::case_assign_task);
  std::unique_lock lock(mu_);
  std::string task_id = ids_->uuid();
  commit("task_assigned", Json{{"case_id", case_id},
                               {"task_id", task_id},
                               {"description", description},
                               {"assignee_role", assignee_role},
                               {"due", due ? Json(*due) : Json(nullptr)},
                               {"actor", actor(p)},
                               {"at", clock_->now()}});
  for (const auto& a : cases_.get(case_id).assignments)
    if (a.task_id == task_id) return a;
  return nullptr;
}

Json Service::finish_task(const Principal& p, const std::string& case_id, const std::string& task_id,
                          cases::TaskStatus outcome) {
  require(config_.roles, p, Action::case_finish_task);
  std::unique_lock lock(mu_);
  commit("task_finished", Json{{"case_id", case_id},
                               {"task_id", task_id},
                               {"outcome", outcome},
                               {"actor", actor(p)},
                               {"at", clock_->now()}});
  for (const auto& a : cases_.get(case_id).assignments)
    if (a.task_id == task_id) return a;
  return nullptr;
}

Json Service::close_case(const Principal& p, const std::string& case_id) {
  require(config_.roles, p, Action::case_close);
  std::unique_lock lock(mu_);
  const auto& c = cases_.get(case_id);
  Json chains = Json::object();
  for (const auto& id : c.evidence_ids) chains[id] = status_json(evidence_->verify_chain(id));
  commit("case_closed", Json{{"case_id", case_id}, {"actor", actor(p)}, {"at", clock_->now()}, {"chains", chains}});
  return cases_.get(case_id);
}

Json Service::dossier(const Principal& p, const std::string& case_id) const {
  require(config_.roles, p, Action::case_read);
  std::shared_lock lock(mu_);
  const auto& c = cases_.read_case(case_id, p.role);
  std::map<std::string, std::string> heads;
  for (const auto& id : c.evidence_ids) {
    auto st = evidence_->verify_chain(id);
    if (st.ok) heads[id] = st.head;
  }
  return cases_.dossier(case_id, heads);
}

Json Service::export_case(const Principal& p, const std::string& case_id, const std::string& recipient) {
  require(config_.roles, p, Action::case_export);
  if (recipient.empty()) fail(Errc::MissingField, "recipient", Json{{"field", "recipient"}});
  std::unique_lock lock(mu_);
  const auto& c = cases_.read_case(case_id, p.role);
  std::map<std::string, std::string> heads;
  for (const auto& id : c.evidence_ids) {
    auto st = evidence_->verify_chain(id);
    if (st.ok) heads[id] = st.head;
  }
  custody::CaseBundle bundle{case_id, c.evidence_ids, cases_.dossier(case_id, heads)};
  auto result = evidence_->export_transport_package(bundle, recipient, p.principal_id);
  Json m = Json(result.manifest.body());
  m["manifest_hash"] = result.manifest.manifest_hash;
  Json payload{{"case_id", case_id},
               {"manifest", m},
               {"archive", fs::relative(result.archive_path, config_.data_dir).string()},
               {"archive_sha256", result.archive_sha256},
               {"actor", actor(p)},
               {"at", clock_->now()}};
  commit("case_exported", payload);
  return payload;
}

// ---------------------------------------------------------------- reporting

reporting::TransparencyReport Service::transparency_report(const Principal& p, const reporting::Period& period,
                                                           std::optional<std::string> previous_period_ref) const {
  require(config_.roles, p, Action::report_transparency);
  std::shared_lock lock(mu_);
  std::vector<const workflow::RequestRecord*> corpus;
  for (const auto& [id, r] : engine_.records()) corpus.push_back(&r);
  return reporting::generate_transparency_report(corpus, period, std::move(previous_period_ref));
}

reporting::Invoice Service::compute_invoice(const Principal& p, const Json& body) {
  require(config_.roles, p, Action::invoice_compute);
  if (!body.is_object()) fail(Errc::InvalidFormat, "invoice body must be an object");
  std::vector<reporting::ResourceLine> lines;
  for (const auto& l : body.value("resource_lines", Json::array())) {
    Json line = l;
    // A line may be priced per month; hours then follow hours_per_month.
    if (!line.contains("hours") && line.contains("months")) {
      std::int64_t months = reporting::decimal_from_json(line.at("months"), 3);
      line["hours"] = reporting::format_decimal(months * config_.hours_per_month, 3);
    }
    lines.push_back(line.get<reporting::ResourceLine>());
  }
  std::vector<reporting::LaborLine> labor = body.value("labor_lines", std::vector<reporting::LaborLine>{});
  reporting::Cents fees = body.contains("support_fees") ? reporting::decimal_from_json(body["support_fees"], 2) : 0;
  std::unique_lock lock(mu_);
  auto inv = reporting::compute_invoice(ids_->uuid(), body.value("case_id", ""), std::move(lines), std::move(labor),
                                        fees);
  if (!inv.case_id.empty() && !cases_.contains(inv.case_id)) fail(Errc::NotFound, "no case " + inv.case_id);
  commit("invoice_computed", Json{{"invoice", inv}, {"at", clock_->now()}});
  return inv;
}

// ---------------------------------------------------------------- collection

Json Service::list_agents(const Principal& p) const {
  require(config_.roles, p, Action::agents_list);
  std::shared_lock lock(mu_);
  Json out = Json::array();
  for (const auto& [id, a] : flows_.agents()) out.push_back(a);
  return out;
}

Json Service::launch_flow(const Principal& p, const Json& body) {
  require(config_.roles, p, Action::flow_launch);
  flows::FlowRequest f;
  f.agent_id = body_string(body, "agent_id", true);
  f.case_id = body_string(body, "case_id", true);
  if (!body.contains("kind")) fail(Errc::MissingField, "kind", Json{{"field", "kind"}});
  f.kind = body.at("kind").get<flows::FlowKind>();
  f.issued_by = p.principal_id;
  std::unique_lock lock(mu_);
  f.flow_id = ids_->uuid();
  f.issued_at = clock_->now();
  commit("flow_launched", Json{{"flow", f}, {"issuer_role", p.role}, {"at", f.issued_at}});
  return Json{{"flow_id", f.flow_id}, {"status", flows_.flow(f.flow_id).result.status}};
}

Json Service::get_flow(const Principal& p, const std::string& flow_id) const {
  require(config_.roles, p, Action::flow_read);
  std::shared_lock lock(mu_);
  const auto& r = flows_.flow(flow_id);
  return Json{{"request", r.request}, {"result", r.result}};
}

Json Service::query_logs(const Principal& p, const flows::LogFilter& filter) const {
  require(config_.roles, p, Action::logs_query);
  Json out = Json::array();
  for (const auto& r : logs_.query(filter)) out.push_back(r);
  return out;
}

// ---------------------------------------------------------------- evidence

Json Service::evidence_info(const Principal& p, const std::string& evidence_id) const {
  require(config_.roles, p, Action::evidence_read);
  Json item = evidence_->item(evidence_id);
  return Json{{"item", item}, {"chain", status_json(evidence_->verify_chain(evidence_id))}};
}

custody::ChainStatus Service::verify_evidence(const Principal& p, const std::string& evidence_id) const {
  require(config_.roles, p, Action::evidence_verify);
  return evidence_->verify_chain(evidence_id);
}

Json Service::evidence_chain(const Principal& p, const std::string& evidence_id) const {
  require(config_.roles, p, Action::evidence_read);
  Json out = Json::array();
  for (const auto& e : evidence_->chain(evidence_id)) out.push_back(e);
  return out;
}

Json Service::destroy_evidence(const Principal& p, const std::string& evidence_id,
                               const std::vector<std::string>& signers, const std::string& reason) {
  require(config_.roles, p, Action::evidence_destroy);
  for (const auto& s : signers)
    if (!config_.find_principal(s)) fail(Errc::InsufficientAuthorization, "unknown signer " + s);
  custody::DestructionRecord rec{evidence_id, signers, reason, clock_->now()};
  evidence_->destroy(evidence_id, rec);
  std::unique_lock lock(mu_);
  commit("evidence_destroyed", Json{{"record", rec}, {"at", rec.destroyed_at}});
  return Json{{"evidence_id", evidence_id}, {"destroyed", true}, {"record", rec}};
}

// ---------------------------------------------------------------- agent backend

flows::AgentInfo Service::agent_register(const flows::RegisterHello& hello) {
  std::unique_lock lock(mu_);
  std::string id = hello.agent_id && flows_.has_agent(*hello.agent_id) ? *hello.agent_id : ids_->uuid();
  Json h{{"hostname", hello.hostname}, {"os", hello.os}, {"labels", hello.labels}};
  if (hello.agent_id) h["agent_id"] = *hello.agent_id;
  commit("agent_registered", Json{{"hello", h}, {"new_id", id}, {"at", clock_->now()}});
  return flows_.agent(id);
}

std::vector<flows::FlowRequest> Service::agent_poll(const std::string& agent_id) {
  std::unique_lock lock(mu_);
  if (!flows_.has_agent(agent_id)) fail(Errc::UnknownAgent, "unknown agent " + agent_id);
  auto pending = flows_.pending(agent_id);
  if (pending.empty()) return {};
  commit("flows_taken", Json{{"agent_id", agent_id}, {"flow_ids", pending}, {"at", clock_->now()}});
  std::vector<flows::FlowRequest> out;
  for (const auto& id : pending) out.push_back(flows_.flow(id).request);
  return out;
}

flows::FlowRequest Service::agent_flow(const std::string& agent_id, const std::string& flow_id) {
  std::shared_lock lock(mu_);
  const auto& rec = flows_.flow(flow_id);
  if (rec.request.agent_id != agent_id) fail(Errc::Forbidden, "flow " + flow_id + " belongs to another agent");
  if (rec.result.status != flows::FlowStatus::running) fail(Errc::InvalidState, "flow " + flow_id + " is not running");
  return rec.request;
}

std::string Service::agent_fetched(const flows::FlowRequest& flow, const std::string& path, const Bytes& content) {
  auto item = evidence_->store(content, custody::Format::raw, custody::FlowSource{flow.agent_id, path, flow.flow_id},
                               "agent:" + flow.agent_id);
  return item.evidence_id;
}

flows::FlowResult Service::agent_done(const std::string& agent_id, flows::FlowResult result) {
  std::vector<std::string> linked;
  std::string case_id;
  std::string issuer;
  {
    std::unique_lock lock(mu_);
    const auto& rec = flows_.flow(result.flow_id);
    case_id = rec.request.case_id;
    issuer = rec.request.issued_by;
    const Principal* who = config_.find_principal(issuer);
    cases::Actor act{issuer, who ? who->role : Role::forensic_expert};
    Json links = Json::array();
    if (result.status == flows::FlowStatus::complete) {
      for (const auto& f : result.files) {
        if (!f.evidence_id) continue;
        auto st = evidence_->verify_chain(*f.evidence_id);
        if (!st.ok) continue;
        links.push_back(Json{{"evidence_id", *f.evidence_id}, {"chain_head", st.head}});
      }
    }
    commit("flow_completed",
           Json{{"agent_id", agent_id}, {"result", result}, {"actor", act}, {"links", links}, {"at", clock_->now()}});
    bool open = cases_.contains(case_id) && cases_.get(case_id).status == cases::CaseStatus::open;
    if (open)
      for (const auto& l : links) linked.push_back(l["evidence_id"].get<std::string>());
    result = flows_.flow(result.flow_id).result;
  }
  for (const auto& id : linked)
    evidence_->append_custody_event(id, custody::CustodyAction::transferred, issuer, "linked to case " + case_id);
  return result;
}

flows::IngestResult Service::agent_logs(const std::string& agent_id, const std::vector<Json>& records) {
  std::unique_lock lock(mu_);
  if (!flows_.has_agent(agent_id)) fail(Errc::UnknownAgent, "unknown agent " + agent_id);
  commit("logs_ingested", Json{{"agent_id", agent_id}, {"records", records}, {"at", clock_->now()}});
  return last_ingest_;
}

}  // namespace clerms::api
