#pragma once

#include "clerms/core/enum.h"
#include "clerms/core/json.h"
#include "clerms/core/time.h"
#include "clerms/domain/model.h"

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace clerms::api {

using clerms::from_json;
using clerms::to_json;

enum class TicketStatus { open, pending_requester, resolved };

struct TicketMessage {
  std::string author;  // principal id, or "system"
  std::string body;
  Timestamp timestamp;
  bool system = false;

  bool operator==(const TicketMessage&) const = default;
};

struct Ticket {
  std::string ticket_id;
  std::string request_id;
  domain::Priority priority{};
  TicketStatus status = TicketStatus::open;
  std::vector<TicketMessage> messages;

  bool operator==(const Ticket&) const = default;
};

// Ticket status implied by a request state: waiting on the requester only
// while documents are outstanding.
TicketStatus ticket_status_for(domain::StateValue state);

// One ticket per request; messages are append-only.
class TicketStore {
 public:
  const Ticket& open(const std::string& ticket_id, const std::string& request_id, domain::Priority priority,
                     domain::StateValue state);
  void post(const std::string& ticket_id, TicketMessage message);  // UnknownTicket
  void sync_status(const std::string& request_id, domain::StateValue state);

  const Ticket& get(const std::string& ticket_id) const;  // UnknownTicket
  const Ticket* for_request(const std::string& request_id) const;
  const std::map<std::string, Ticket>& tickets() const { return tickets_; }

  Json to_json() const;
  static TicketStore from_json(const Json& j);

 private:
  std::map<std::string, Ticket> tickets_;
  std::map<std::string, std::string> by_request_;
};

struct Notification {
  std::string id;
  std::string recipient;  // role name or principal id
  std::string subject;
  std::string body;
  Timestamp created_at;
  bool delivered = false;

  bool operator==(const Notification&) const = default;
};

// Delivery backend. Returns false (or throws) when delivery failed.
class NotificationSender {
 public:
  virtual ~NotificationSender() = default;
  virtual bool send(const Notification& n) = 0;
};

// Default sender: writes one line per notification to stderr.
class LogSender final : public NotificationSender {
 public:
  explicit LogSender(bool quiet = false) : quiet_(quiet) {}
  bool send(const Notification& n) override;

 private:
  bool quiet_;
};

// Background delivery queue. Outcomes are reported through `on_outcome`;
// failed deliveries are not retried automatically.
class NotificationWorker {
 public:
  using Outcome = std::function<void(const std::string& id, bool delivered)>;
  NotificationWorker(std::shared_ptr<NotificationSender> sender, Outcome on_outcome);
  ~NotificationWorker();

  void start();
  void stop();
  void enqueue(Notification n);
  // Blocks until the queue is drained (or the worker is stopped).
  void flush();

 private:
  void run();

  std::shared_ptr<NotificationSender> sender_;
  Outcome on_outcome_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_;
  std::deque<Notification> queue_;
  bool running_ = false;
  bool busy_ = false;
  std::thread thread_;
};

void to_json(Json& j, const TicketMessage& v);
void from_json(const Json& j, TicketMessage& v);
void to_json(Json& j, const Ticket& v);
void from_json(const Json& j, Ticket& v);
void to_json(Json& j, const Notification& v);
void from_json(const Json& j, Notification& v);

}  // namespace clerms::api

namespace clerms {

template <>
struct EnumNames<api::TicketStatus> {
  static constexpr std::array<std::string_view, 3> names{"open", "pending_requester", "resolved"};
};

}  // namespace clerms
