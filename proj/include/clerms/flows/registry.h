#pragma once

#include "clerms/domain/model.h"
#include "clerms/flows/types.h"

#include <deque>
#include <map>
#include <string>
#include <vector>

namespace clerms::flows {

struct RegisterHello {
  std::optional<std::string> agent_id;  // set on re-registration
  std::string hostname;
  AgentOs os = AgentOs::other;
  std::vector<std::string> labels;
};

// MalformedHello on a missing/empty hostname or malformed fields.
RegisterHello parse_hello(const Json& payload);

struct FlowRecord {
  FlowRequest request;
  FlowResult result;

  bool operator==(const FlowRecord&) const = default;
};

// Server-side agent and flow bookkeeping. Queues are per-agent FIFO. Not
// internally synchronized.
class FlowRegistry {
 public:
  // `new_id` is used when the hello carries no known agent_id.
  AgentInfo register_agent(const RegisterHello& hello, const std::string& new_id, Timestamp now);

  // UnknownAgent, CaseClosed, Forbidden, InvalidFormat (empty glob).
  std::string launch_flow(const FlowRequest& request, domain::Role issuer_role, bool case_open);

  // Pending flows for the agent in FIFO order; they become running.
  std::vector<FlowRequest> take_pending(const std::string& agent_id, Timestamp now);

  // Records a terminal result reported by `agent_id`. UnknownFlow, Forbidden
  // (flow of another agent), InvalidState (not running), InvalidFormat.
  const FlowResult& complete(const std::string& agent_id, FlowResult result, Timestamp now);

  bool has_agent(const std::string& agent_id) const { return agents_.count(agent_id) != 0; }
  const AgentInfo& agent(const std::string& agent_id) const;
  const FlowRecord& flow(const std::string& flow_id) const;
  const std::map<std::string, AgentInfo>& agents() const { return agents_; }
  const std::map<std::string, FlowRecord>& flows() const { return flows_; }
  std::vector<std::string> pending(const std::string& agent_id) const;

  Json to_json() const;
  static FlowRegistry from_json(const Json& j);

 private:
  void touch(const std::string& agent_id, Timestamp now);

  std::map<std::string, AgentInfo> agents_;
  std::map<std::string, FlowRecord> flows_;
  std::map<std::string, std::deque<std::string>> queues_;
};

}  // namespace clerms::flows
