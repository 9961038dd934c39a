#pragma once

#include "clerms/core/enum.h"
#include "clerms/core/json.h"
#include "clerms/core/time.h"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace clerms::flows {

using clerms::from_json;
using clerms::to_json;

enum class AgentOs { linux, windows, other };
enum class FileAction { stat, hash, fetch };
enum class FlowStatus { pending, running, complete, failed };

struct AgentInfo {
  std::string agent_id;
  std::string hostname;
  AgentOs os = AgentOs::other;
  Timestamp last_seen;
  std::vector<std::string> labels;

  bool operator==(const AgentInfo&) const = default;
};

struct FileFinderSpec {
  std::string glob;
  FileAction action = FileAction::stat;

  bool operator==(const FileFinderSpec&) const = default;
};

struct ProcessListSpec {
  bool operator==(const ProcessListSpec&) const = default;
};

struct DiskImageSpec {
  std::string device;

  bool operator==(const DiskImageSpec&) const = default;
};

using FlowKind = std::variant<FileFinderSpec, ProcessListSpec, DiskImageSpec>;

struct FlowRequest {
  std::string flow_id;
  std::string agent_id;
  FlowKind kind;
  std::string issued_by;
  std::string case_id;
  Timestamp issued_at;

  bool operator==(const FlowRequest&) const = default;
};

struct FileItem {
  std::string path;  // sandbox-relative, rooted at "/"
  std::uint64_t size_bytes = 0;
  std::optional<std::string> sha256;
  std::optional<std::string> evidence_id;

  bool operator==(const FileItem&) const = default;
};

struct ProcessEntry {
  std::int64_t pid = 0;
  std::string name;
  std::string cmdline;
  std::vector<std::string> remote_endpoints;  // "ip:port" / "[ipv6]:port"

  bool operator==(const ProcessEntry&) const = default;
};

struct FlowResult {
  std::string flow_id;
  FlowStatus status = FlowStatus::pending;
  std::vector<FileItem> files;
  std::vector<ProcessEntry> processes;
  std::optional<std::string> error;
  std::optional<Timestamp> completed_at;

  bool operator==(const FlowResult&) const = default;
};

struct LogRecord {
  std::string source;
  Timestamp timestamp;
  std::string client_ip;
  std::string message;
  std::map<std::string, std::string> attrs;

  bool operator==(const LogRecord&) const = default;
};

std::string_view kind_name(const FlowKind& kind);

// Shape checks; return a reason on violation.
std::optional<std::string> check_process_entry(const ProcessEntry& p);
std::optional<std::string> check_flow_result(const FlowResult& r, const FlowKind& kind);

// Parses a log record; throws Error(MalformedRecord) naming the problem. The
// client_ip is normalized to its canonical textual form.
LogRecord parse_log_record(const Json& j);

void to_json(Json& j, const AgentInfo& v);
void from_json(const Json& j, AgentInfo& v);
void to_json(Json& j, const FlowKind& v);
void from_json(const Json& j, FlowKind& v);
void to_json(Json& j, const FlowRequest& v);
void from_json(const Json& j, FlowRequest& v);
void to_json(Json& j, const FileItem& v);
void from_json(const Json& j, FileItem& v);
void to_json(Json& j, const ProcessEntry& v);
void from_json(const Json& j, ProcessEntry& v);
void to_json(Json& j, const FlowResult& v);
void from_json(const Json& j, FlowResult& v);
void to_json(Json& j, const LogRecord& v);
void from_json(const Json& j, LogRecord& v);

}  // namespace clerms::flows

namespace clerms {

template <>
struct EnumNames<flows::AgentOs> {
  static constexpr std::array<std::string_view, 3> names{"linux", "windows", "other"};
};
template <>
struct EnumNames<flows::FileAction> {
  static constexpr std::array<std::string_view, 3> names{"stat", "hash", "fetch"};
};
template <>
struct EnumNames<flows::FlowStatus> {
  static constexpr std::array<std::string_view, 4> names{"pending", "running", "complete", "failed"};
};

}  // namespace clerms
