#pragma once

#include "clerms/flows/types.h"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

namespace clerms::flows {

struct LogFilter {
  std::optional<std::string> client_ip;
  std::optional<std::pair<Timestamp, Timestamp>> time_range;  // inclusive
  std::optional<std::string> substring;                       // in message

  bool empty() const { return !client_ip && !time_range && !substring; }
};

struct RejectedRecord {
  std::size_t index = 0;
  std::string reason;
};

struct IngestResult {
  std::size_t accepted = 0;    // newly indexed
  std::size_t duplicates = 0;  // identical to an indexed record
  std::vector<RejectedRecord> rejected;
};

Json to_json(const IngestResult& r);

// In-memory log index keyed by (client_ip, timestamp). Ingest batches are
// applied atomically, so a concurrent query sees a consistent prefix.
class LogIndex {
 public:
  IngestResult ingest(const std::vector<Json>& batch);
  IngestResult ingest(const std::vector<LogRecord>& batch);

  // Conjunction of the set filters, ascending by timestamp (ties in ingest
  // order). EmptyFilter when nothing is set.
  std::vector<LogRecord> query(const LogFilter& filter) const;

  std::size_t size() const;
  std::vector<LogRecord> all() const;

  Json snapshot() const;
  void restore(const Json& snapshot);
  void save(const std::filesystem::path& file) const;
  void load(const std::filesystem::path& file);

 private:
  bool add_locked(LogRecord record);

  mutable std::shared_mutex mu_;
  std::vector<LogRecord> records_;
  std::set<std::string> digests_;
  std::map<std::string, std::multimap<Timestamp, std::size_t>> by_ip_;
  std::multimap<Timestamp, std::size_t> by_time_;
};

}  // namespace clerms::flows
