#pragma once

#include "clerms/flows/log_index.h"
#include "clerms/flows/net.h"
#include "clerms/flows/protocol.h"
#include "clerms/flows/registry.h"

#include <atomic>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

namespace clerms::flows {

// Server-side operations a connected agent can trigger. Implementations are
// thread-safe; errors are raised as clerms::Error.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual AgentInfo agent_register(const RegisterHello& hello) = 0;
  virtual std::vector<FlowRequest> agent_poll(const std::string& agent_id) = 0;
  // Flow owned by agent_id and currently running. UnknownFlow / Forbidden.
  virtual FlowRequest agent_flow(const std::string& agent_id, const std::string& flow_id) = 0;
  // Stores a fetched file as evidence and returns its evidence id.
  virtual std::string agent_fetched(const FlowRequest& flow, const std::string& path, const Bytes& content) = 0;
  virtual FlowResult agent_done(const std::string& agent_id, FlowResult result) = 0;
  virtual IngestResult agent_logs(const std::string& agent_id, const std::vector<Json>& records) = 0;
};

// One agent conversation. handle() returns the reply, if the message type has
// one. RESULT_CHUNK has no reply: chunk failures are remembered and surface
// as a failed flow at FLOW_DONE.
class ProtocolSession {
 public:
  explicit ProtocolSession(AgentBackend& backend) : backend_(backend) {}

  std::optional<Message> handle(const Message& message);
  const std::optional<std::string>& agent_id() const { return agent_id_; }

 private:
  struct Transfer {
    Bytes data;
    bool finished = false;
    std::optional<std::string> evidence_id;
  };

  Message dispatch(const Message& message);
  void on_chunk(const Json& payload);
  Message on_done(const Json& payload);
  const std::string& require_agent() const;

  AgentBackend& backend_;
  std::optional<std::string> agent_id_;
  std::map<std::string, std::map<std::string, Transfer>> transfers_;  // flow -> path
  std::map<std::string, std::string> chunk_failures_;                 // flow -> reason
};

// Accepts agent connections on a TCP port, one thread per connection.
class AgentServer {
 public:
  AgentServer(AgentBackend& backend, const std::string& host, std::uint16_t port);
  ~AgentServer();
  AgentServer(const AgentServer&) = delete;
  AgentServer& operator=(const AgentServer&) = delete;

  std::uint16_t port() const { return listener_.port(); }
  void start();
  void stop();

 private:
  struct Conn {
    Socket sock;
    std::thread thread;
    std::atomic<bool> done{false};
  };

  void accept_loop();
  void serve(Conn& conn);
  void reap(bool all);

  AgentBackend& backend_;
  Listener listener_;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::list<std::unique_ptr<Conn>> conns_;
};

}  // namespace clerms::flows
