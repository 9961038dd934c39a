#include "clerms/flows/registry.h"

#include "clerms/core/ids.h"
#include "clerms/flows/file_finder.h"

#include <algorithm>

namespace clerms::flows {

RegisterHello parse_hello(const Json& p) {
  RegisterHello h;
  if (!p.is_object()) fail(Errc::MalformedHello, "hello must be an object");
  auto host = p.find("hostname");
  if (host == p.end() || !host->is_string() || host->get_ref<const std::string&>().empty())
    fail(Errc::MalformedHello, "hostname is required");
  h.hostname = host->get<std::string>();
  if (auto id = p.find("agent_id"); id != p.end() && !id->is_null()) {
    if (!id->is_string() || !is_uuid(id->get_ref<const std::string&>())) fail(Errc::MalformedHello, "agent_id must be a UUID");
    h.agent_id = id->get<std::string>();
  }
  if (auto os = p.find("os"); os != p.end() && !os->is_null()) {
    auto v = os->is_string() ? enum_from<AgentOs>(os->get_ref<const std::string&>()) : std::nullopt;
    if (!v) fail(Errc::MalformedHello, "unknown os");
    h.os = *v;
  }
  if (auto labels = p.find("labels"); labels != p.end() && !labels->is_null()) {
    if (!labels->is_array()) fail(Errc::MalformedHello, "labels must be a list");
    for (const auto& l : *labels) {
      if (!l.is_string()) fail(Errc::MalformedHello, "labels must be strings");
      h.labels.push_back(l.get<std::string>());
    }
  }
  return h;
}

void FlowRegistry::touch(const std::string& agent_id, Timestamp now) {
  auto& a = agents_.at(agent_id);
  a.last_seen = std::max(a.last_seen, now);
}

AgentInfo FlowRegistry::register_agent(const RegisterHello& hello, const std::string& new_id, Timestamp now) {
  if (hello.hostname.empty()) fail(Errc::MalformedHello, "hostname is required");
  std::string id = hello.agent_id && agents_.count(*hello.agent_id) ? *hello.agent_id : new_id;
  auto [it, created] = agents_.try_emplace(id);
  AgentInfo& a = it->second;
  a.agent_id = id;
  a.hostname = hello.hostname;
  a.os = hello.os;
  a.labels = hello.labels;
  if (created) a.last_seen = now;
  touch(id, now);
  return a;
}

std::string FlowRegistry::launch_flow(const FlowRequest& request, domain::Role issuer_role, bool case_open) {
  if (issuer_role != domain::Role::forensic_expert && issuer_role != domain::Role::crisis_manager)
    fail(Errc::Forbidden, "role " + std::string(name_of(issuer_role)) + " cannot launch flows");
  if (!agents_.count(request.agent_id)) fail(Errc::UnknownAgent, "unknown agent " + request.agent_id);
  if (!case_open) fail(Errc::CaseClosed, "flows need an open case");
  if (const auto* ff = std::get_if<FileFinderSpec>(&request.kind)) Glob check(ff->glob);
  if (flows_.count(request.flow_id)) fail(Errc::InvalidState, "flow id already used");
  FlowRecord rec{request, FlowResult{request.flow_id, FlowStatus::pending, {}, {}, std::nullopt, std::nullopt}};
  flows_.emplace(request.flow_id, std::move(rec));
  queues_[request.agent_id].push_back(request.flow_id);
  return request.flow_id;
}

std::vector<FlowRequest> FlowRegistry::take_pending(const std::string& agent_id, Timestamp now) {
  if (!agents_.count(agent_id)) fail(Errc::UnknownAgent, "unknown agent " + agent_id);
  std::vector<FlowRequest> out;
  auto& q = queues_[agent_id];
  while (!q.empty()) {
    FlowRecord& rec = flows_.at(q.front());
    q.pop_front();
    rec.result.status = FlowStatus::running;
    out.push_back(rec.request);
  }
  if (!out.empty()) touch(agent_id, now);
  return out;
}

const FlowResult& FlowRegistry::complete(const std::string& agent_id, FlowResult result, Timestamp now) {
  auto it = flows_.find(result.flow_id);
  if (it == flows_.end()) fail(Errc::UnknownFlow, "unknown flow " + result.flow_id);
  FlowRecord& rec = it->second;
  if (rec.request.agent_id != agent_id) fail(Errc::Forbidden, "flow belongs to another agent");
  if (rec.result.status != FlowStatus::running) fail(Errc::InvalidState, "flow is not running");
  if (result.status != FlowStatus::complete && result.status != FlowStatus::failed)
    fail(Errc::InvalidFormat, "result status must be terminal");
  if (!result.completed_at) result.completed_at = now;
  if (auto why = check_flow_result(result, rec.request.kind)) fail(Errc::InvalidFormat, *why);
  rec.result = std::move(result);
  touch(agent_id, now);
  return rec.result;
}

const AgentInfo& FlowRegistry::agent(const std::string& agent_id) const {
  auto it = agents_.find(agent_id);
  if (it == agents_.end()) fail(Errc::UnknownAgent, "unknown agent " + agent_id);
  return it->second;
}

const FlowRecord& FlowRegistry::flow(const std::string& flow_id) const {
  auto it = flows_.find(flow_id);
  if (it == flows_.end()) fail(Errc::UnknownFlow, "unknown flow " + flow_id);
  return it->second;
}

std::vector<std::string> FlowRegistry::pending(const std::string& agent_id) const {
  auto it = queues_.find(agent_id);
  if (it == queues_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

Json FlowRegistry::to_json() const {
  Json agents = Json::object(), flows = Json::object(), queues = Json::object();
  for (const auto& [id, a] : agents_) agents[id] = a;
  for (const auto& [id, f] : flows_) flows[id] = Json{{"request", f.request}, {"result", f.result}};
  for (const auto& [id, q] : queues_)
    if (!q.empty()) queues[id] = std::vector<std::string>(q.begin(), q.end());
  return Json{{"agents", agents}, {"flows", flows}, {"queues", queues}};
}

FlowRegistry FlowRegistry::from_json(const Json& j) {
  FlowRegistry r;
  for (const auto& [id, a] : j.at("agents").items()) r.agents_.emplace(id, a.get<AgentInfo>());
  for (const auto& [id, f] : j.at("flows").items())
    r.flows_.emplace(id, FlowRecord{f.at("request").get<FlowRequest>(), f.at("result").get<FlowResult>()});
  for (const auto& [id, q] : j.at("queues").items()) {
    auto ids = q.get<std::vector<std::string>>();
    r.queues_[id] = std::deque<std::string>(ids.begin(), ids.end());
  }
  return r;
}

}  // namespace clerms::flows
