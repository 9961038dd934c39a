#pragma once

#include "clerms/core/json.h"
#include "clerms/core/time.h"

#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace clerms::api {

struct EventLogRecord {
  std::uint64_t seq = 0;  // dense, from 1
  Timestamp timestamp;
  std::string event_type;
  Json payload = Json::object();

  bool operator==(const EventLogRecord&) const = default;
};

Json to_json(const EventLogRecord& r);
EventLogRecord record_from_json(const Json& j);  // InvalidFormat

struct LoadedLog {
  std::vector<EventLogRecord> records;
  // Set when the final line was an incomplete write: the seq it would have
  // carried and the byte offset where the valid prefix ends.
  std::optional<std::uint64_t> truncated_tail_seq;
  std::uintmax_t valid_bytes = 0;
};

// Reads an events.jsonl file. A damaged final line is reported through
// truncated_tail_seq; damage anywhere else, or a seq gap, is CorruptLog.
LoadedLog read_event_log(const std::filesystem::path& file);

// Single appender with a total order. Each record is one canonical JSON line,
// flushed before append() returns.
class EventLog {
 public:
  // Truncates any damaged tail reported by read_event_log first.
  EventLog(std::filesystem::path file, std::uint64_t last_seq, std::uintmax_t valid_bytes);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  std::uint64_t append(Timestamp timestamp, const std::string& event_type, const Json& payload);
  std::uint64_t last_seq() const;
  const std::filesystem::path& path() const { return file_; }

 private:
  std::filesystem::path file_;
  mutable std::mutex mu_;
  std::FILE* out_ = nullptr;
  std::uint64_t seq_ = 0;
};

}  // namespace clerms::api
