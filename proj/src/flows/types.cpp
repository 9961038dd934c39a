#include "clerms/flows/types.h"

#include "clerms/core/hash.h"
#include "clerms/domain/validation.h"

#include <arpa/inet.h>

namespace clerms::flows {

namespace {

template <class T>
std::optional<T> opt(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

std::optional<std::string> normalize_ip(const std::string& s) {
  unsigned char buf[sizeof(struct in6_addr)];
  char out[INET6_ADDRSTRLEN];
  if (inet_pton(AF_INET, s.c_str(), buf) == 1) return std::string(inet_ntop(AF_INET, buf, out, sizeof out));
  if (inet_pton(AF_INET6, s.c_str(), buf) == 1) return std::string(inet_ntop(AF_INET6, buf, out, sizeof out));
  return std::nullopt;
}

}  // namespace

std::string_view kind_name(const FlowKind& kind) {
  switch (kind.index()) {
    case 0: return "FileFinder";
    case 1: return "ProcessList";
    default: return "DiskImage";
  }
}

std::optional<std::string> check_process_entry(const ProcessEntry& p) {
  if (p.pid <= 0) return "pid must be positive";
  for (const auto& ep : p.remote_endpoints) {
    auto colon = ep.rfind(':');
    if (colon == std::string::npos || colon + 1 == ep.size()) return "endpoint without port: " + ep;
    std::string host = ep.substr(0, colon);
    if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    if (!domain::is_ip_address(host)) return "endpoint host is not an IP address: " + ep;
  }
  return std::nullopt;
}

std::optional<std::string> check_flow_result(const FlowResult& r, const FlowKind& kind) {
  if (r.status == FlowStatus::complete) {
    if (r.error) return "complete result carries an error";
    if (!r.completed_at) return "complete result without completion time";
  }
  if (r.status == FlowStatus::failed && !r.error) return "failed result without error";
  if (const auto* ff = std::get_if<FileFinderSpec>(&kind)) {
    if (!r.processes.empty()) return "file finder result with process rows";
    for (const auto& f : r.files) {
      if (f.path.empty() || f.path.front() != '/') return "file path must be sandbox-rooted";
      if (ff->action != FileAction::stat && r.status == FlowStatus::complete && !f.sha256) return "hash missing for " + f.path;
      if (ff->action == FileAction::fetch && r.status == FlowStatus::complete && !f.evidence_id)
        return "fetched file without evidence id: " + f.path;
    }
  } else {
    if (!r.files.empty()) return "non file-finder result with file rows";
    for (const auto& p : r.processes)
      if (auto why = check_process_entry(p)) return why;
  }
  return std::nullopt;
}

LogRecord parse_log_record(const Json& j) {
  if (!j.is_object()) fail(Errc::MalformedRecord, "record must be an object");
  LogRecord r;
  auto str = [&](const char* key, bool required) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
      if (required) fail(Errc::MalformedRecord, std::string("missing ") + key);
      return {};
    }
    if (!it->is_string()) fail(Errc::MalformedRecord, std::string(key) + " must be a string");
    return it->get<std::string>();
  };
  r.source = str("source", false);
  auto ts = Timestamp::parse(str("timestamp", true));
  if (!ts) fail(Errc::MalformedRecord, "timestamp not parseable");
  r.timestamp = *ts;
  auto ip = normalize_ip(str("client_ip", true));
  if (!ip) fail(Errc::MalformedRecord, "client_ip is not an IP address");
  r.client_ip = *ip;
  r.message = str("message", false);
  if (auto it = j.find("attrs"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) fail(Errc::MalformedRecord, "attrs must be an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) fail(Errc::MalformedRecord, "attr values must be strings");
      r.attrs[k] = v.get<std::string>();
    }
  }
  return r;
}

void to_json(Json& j, const AgentInfo& v) {
  j = Json{{"agent_id", v.agent_id}, {"hostname", v.hostname}, {"os", v.os}, {"last_seen", v.last_seen}, {"labels", v.labels}};
}
void from_json(const Json& j, AgentInfo& v) {
  v.agent_id = j.at("agent_id").get<std::string>();
  v.hostname = j.at("hostname").get<std::string>();
  v.os = j.at("os").get<AgentOs>();
  v.last_seen = j.at("last_seen").get<Timestamp>();
  v.labels = j.at("labels").get<std::vector<std::string>>();
}

void to_json(Json& j, const FlowKind& v) {
  if (const auto* ff = std::get_if<FileFinderSpec>(&v))
    j = Json{{"type", "FileFinder"}, {"glob", ff->glob}, {"action", ff->action}};
  else if (std::holds_alternative<ProcessListSpec>(v))
    j = Json{{"type", "ProcessList"}};
  else
    j = Json{{"type", "DiskImage"}, {"device", std::get<DiskImageSpec>(v).device}};
}
void from_json(const Json& j, FlowKind& v) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "FileFinder")
    v = FileFinderSpec{j.at("glob").get<std::string>(), j.at("action").get<FileAction>()};
  else if (type == "ProcessList")
    v = ProcessListSpec{};
  else if (type == "DiskImage")
    v = DiskImageSpec{j.value("device", "")};
  else
    fail(Errc::InvalidFormat, "unknown flow kind " + type);
}

void to_json(Json& j, const FlowRequest& v) {
  j = Json{{"flow_id", v.flow_id},     {"agent_id", v.agent_id}, {"kind", v.kind},
           {"issued_by", v.issued_by}, {"case_id", v.case_id},   {"issued_at", v.issued_at}};
}
void from_json(const Json& j, FlowRequest& v) {
  v.flow_id = j.at("flow_id").get<std::string>();
  v.agent_id = j.at("agent_id").get<std::string>();
  v.kind = j.at("kind").get<FlowKind>();
  v.issued_by = j.at("issued_by").get<std::string>();
  v.case_id = j.at("case_id").get<std::string>();
  v.issued_at = j.at("issued_at").get<Timestamp>();
}

void to_json(Json& j, const FileItem& v) {
  j = Json{{"path", v.path}, {"size_bytes", v.size_bytes}};
  if (v.sha256) j["sha256"] = *v.sha256;
  if (v.evidence_id) j["evidence_id"] = *v.evidence_id;
}
void from_json(const Json& j, FileItem& v) {
  v.path = j.at("path").get<std::string>();
  v.size_bytes = j.at("size_bytes").get<std::uint64_t>();
  v.sha256 = opt<std::string>(j, "sha256");
  v.evidence_id = opt<std::string>(j, "evidence_id");
}

void to_json(Json& j, const ProcessEntry& v) {
  j = Json{{"pid", v.pid}, {"name", v.name}, {"cmdline", v.cmdline}, {"remote_endpoints", v.remote_endpoints}};
}
void from_json(const Json& j, ProcessEntry& v) {
  v.pid = j.at("pid").get<std::int64_t>();
  v.name = j.at("name").get<std::string>();
  v.cmdline = j.value("cmdline", "");
  v.remote_endpoints = j.value("remote_endpoints", std::vector<std::string>{});
}

void to_json(Json& j, const FlowResult& v) {
  j = Json{{"flow_id", v.flow_id}, {"status", v.status}};
  if (!v.processes.empty()) {
    j["item_kind"] = "process";
    j["items"] = v.processes;
  } else {
    j["item_kind"] = "file";
    j["items"] = v.files;
  }
  j["error"] = v.error ? Json(*v.error) : Json(nullptr);
  j["completed_at"] = v.completed_at ? Json(*v.completed_at) : Json(nullptr);
}
void from_json(const Json& j, FlowResult& v) {
  v.flow_id = j.at("flow_id").get<std::string>();
  v.status = j.at("status").get<FlowStatus>();
  v.files.clear();
  v.processes.clear();
  if (j.value("item_kind", "file") == "process")
    v.processes = j.at("items").get<std::vector<ProcessEntry>>();
  else
    v.files = j.value("items", std::vector<FileItem>{});
  v.error = opt<std::string>(j, "error");
  v.completed_at = opt<Timestamp>(j, "completed_at");
}

void to_json(Json& j, const LogRecord& v) {
  j = Json{{"source", v.source}, {"timestamp", v.timestamp}, {"client_ip", v.client_ip}, {"message", v.message}, {"attrs", v.attrs}};
}
void from_json(const Json& j, LogRecord& v) { v = parse_log_record(j); }

}  // namespace clerms::flows
