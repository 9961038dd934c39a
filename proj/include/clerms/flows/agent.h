#pragma once

#include "clerms/core/time.h"
#include "clerms/flows/net.h"
#include "clerms/flows/session.h"

#include <deque>
#include <filesystem>
#include <functional>

namespace clerms::flows {

// Message pipe seen from the agent side.
class AgentTransport {
 public:
  virtual ~AgentTransport() = default;
  virtual void send(const Message& message) = 0;
  virtual Message receive() = 0;  // IoFailure when the peer is gone
};

class TcpTransport : public AgentTransport {
 public:
  TcpTransport(const std::string& host, std::uint16_t port) : sock_(connect_tcp(host, port)) {}
  void send(const Message& message) override { send_message(sock_, message); }
  Message receive() override;

 private:
  Socket sock_;
  FrameReader reader_;
};

// In-process pipe straight into a ProtocolSession, frames included.
class LoopbackTransport : public AgentTransport {
 public:
  explicit LoopbackTransport(AgentBackend& backend) : session_(backend) {}
  void send(const Message& message) override;
  Message receive() override;

 private:
  ProtocolSession session_;
  std::deque<Message> replies_;
};

struct AgentConfig {
  std::optional<std::string> agent_id;  // resume an earlier registration
  std::string hostname = "sim-agent";
  AgentOs os = AgentOs::linux;
  std::vector<std::string> labels;
  std::filesystem::path root;             // sandbox served to FileFinder
  std::vector<ProcessEntry> processes;    // ProcessList table
  std::vector<Json> logs;                 // pushed once after registration
  std::size_t chunk_size = kFetchChunkSize;
};

// Loads a ProcessList table: a JSON array of entries or {"processes":[...]}.
std::vector<ProcessEntry> load_process_table(const std::filesystem::path& file);
// Loads a log file: a JSON array or JSON lines.
std::vector<Json> load_log_records(const std::filesystem::path& file);

// Scriptable agent that executes flows against a sandbox directory.
class SimulatedAgent {
 public:
  SimulatedAgent(AgentConfig config, Clock& clock) : config_(std::move(config)), clock_(clock) {}

  const AgentInfo& register_with(AgentTransport& t);
  IngestResult push_logs(AgentTransport& t, const std::vector<Json>& records);
  // One POLL; executes every assigned flow. Returns the final results.
  std::vector<FlowResult> poll_once(AgentTransport& t);
  FlowResult execute(const FlowRequest& flow, AgentTransport& t);

  const std::optional<AgentInfo>& info() const { return info_; }
  const AgentConfig& config() const { return config_; }

 private:
  Message expect(AgentTransport& t, MessageType type);
  void stream_file(AgentTransport& t, const std::string& flow_id, const FileItem& item);

  AgentConfig config_;
  Clock& clock_;
  std::optional<AgentInfo> info_;
};

struct AgentRunOptions {
  int max_polls = 0;  // 0 = until stopped
  std::chrono::milliseconds interval{500};
  std::function<bool()> stop;  // polled between rounds
  std::function<void(const FlowResult&)> on_result;
};

// Register, push configured logs, then poll until stopped or max_polls.
void run_agent(SimulatedAgent& agent, AgentTransport& t, const AgentRunOptions& options);

}  // namespace clerms::flows
