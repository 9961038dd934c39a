#include "clerms/api/tickets.h"

#include <iostream>

namespace clerms::api {

using domain::StateValue;

TicketStatus ticket_status_for(StateValue state) {
  switch (state) {
    case StateValue::PreSubmitted:
    case StateValue::AwaitingDocuments:
      return TicketStatus::pending_requester;
    case StateValue::ResponseIssued:
    case StateValue::Closed:
      return TicketStatus::resolved;
    default:
      return TicketStatus::open;
  }
}

const Ticket& TicketStore::open(const std::string& ticket_id, const std::string& request_id,
                                domain::Priority priority, StateValue state) {
  if (by_request_.count(request_id)) fail(Errc::DuplicateRequest, "request " + request_id + " already has a ticket");
  if (tickets_.count(ticket_id)) fail(Errc::DuplicateRequest, "ticket id " + ticket_id + " in use");
  Ticket t{ticket_id, request_id, priority, ticket_status_for(state), {}};
  by_request_[request_id] = ticket_id;
  return tickets_.emplace(ticket_id, std::move(t)).first->second;
}

void TicketStore::post(const std::string& ticket_id, TicketMessage message) {
  auto it = tickets_.find(ticket_id);
  if (it == tickets_.end()) fail(Errc::UnknownTicket, "no ticket " + ticket_id);
  if (message.body.empty()) fail(Errc::MissingField, "body");
  it->second.messages.push_back(std::move(message));
}

void TicketStore::sync_status(const std::string& request_id, StateValue state) {
  auto it = by_request_.find(request_id);
  if (it != by_request_.end()) tickets_.at(it->second).status = ticket_status_for(state);
}

const Ticket& TicketStore::get(const std::string& ticket_id) const {
  auto it = tickets_.find(ticket_id);
  if (it == tickets_.end()) fail(Errc::UnknownTicket, "no ticket " + ticket_id);
  return it->second;
}

const Ticket* TicketStore::for_request(const std::string& request_id) const {
  auto it = by_request_.find(request_id);
  return it == by_request_.end() ? nullptr : &tickets_.at(it->second);
}

Json TicketStore::to_json() const {
  Json out = Json::object();
  for (const auto& [id, t] : tickets_) out[id] = t;
  return out;
}

TicketStore TicketStore::from_json(const Json& j) {
  TicketStore s;
  for (const auto& [id, t] : j.items()) {
    Ticket v = t.get<Ticket>();
    s.by_request_[v.request_id] = id;
    s.tickets_.emplace(id, std::move(v));
  }
  return s;
}

bool LogSender::send(const Notification& n) {
  if (!quiet_) std::cerr << "[notify] to=" << n.recipient << " subject=\"" << n.subject << "\"\n";
  return true;
}

NotificationWorker::NotificationWorker(std::shared_ptr<NotificationSender> sender, Outcome on_outcome)
    : sender_(std::move(sender)), on_outcome_(std::move(on_outcome)) {}

NotificationWorker::~NotificationWorker() { stop(); }

void NotificationWorker::start() {
  std::lock_guard lock(mu_);
  if (running_) return;
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

void NotificationWorker::stop() {
  {
    std::lock_guard lock(mu_);
    if (!running_) return;
    running_ = false;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  idle_.notify_all();
}

void NotificationWorker::enqueue(Notification n) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(n));
  }
  cv_.notify_one();
}

void NotificationWorker::flush() {
  std::unique_lock lock(mu_);
  idle_.wait(lock, [this] { return !running_ || (queue_.empty() && !busy_); });
}

void NotificationWorker::run() {
  for (;;) {
    Notification n;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return !running_ || !queue_.empty(); });
      if (!running_) return;
      n = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
    }
    bool ok = false;
    try {
      ok = sender_->send(n);
    } catch (const std::exception&) {
      ok = false;
    }
    try {
      on_outcome_(n.id, ok);
    } catch (const std::exception&) {
    }
    {
      std::lock_guard lock(mu_);
      busy_ = false;
    }
    idle_.notify_all();
  }
}

void to_json(Json& j, const TicketMessage& v) {
  j = Json{{"author", v.author}, {"body", v.body}, {"timestamp", v.timestamp}, {"system", v.system}};
}
void from_json(const Json& j, TicketMessage& v) {
  v.author = j.at("author").get<std::string>();
  v.body = j.at("body").get<std::string>();
  v.timestamp = j.at("timestamp").get<Timestamp>();
  v.system = j.at("system").get<bool>();
}

void to_json(Json& j, const Ticket& v) {
  j = Json{{"ticket_id", v.ticket_id},
           {"request_id", v.request_id},
           {"priority", v.priority},
           {"status", v.status},
           {"messages", v.messages}};
}
void from_json(const Json& j, Ticket& v) {
  v.ticket_id = j.at("ticket_id").get<std::string>();
  v.request_id = j.at("request_id").get<std::string>();
  v.priority = j.at("priority").get<domain::Priority>();
  v.status = j.at("status").get<TicketStatus>();
  v.messages = j.at("messages").get<std::vector<TicketMessage>>();
}

void to_json(Json& j, const Notification& v) {
  j = Json{{"id", v.id},          {"recipient", v.recipient},   {"subject", v.subject},
           {"body", v.body},      {"created_at", v.created_at}, {"delivered", v.delivered}};
}
void from_json(const Json& j, Notification& v) {
  v.id = j.at("id").get<std::string>();
  v.recipient = j.at("recipient").get<std::string>();
  v.subject = j.at("subject").get<std::string>();
  v.body = j.at("body").get<std::string>();
  v.created_at = j.at("created_at").get<Timestamp>();
  v.delivered = j.at("delivered").get<bool>();
}

}  // namespace clerms::api
