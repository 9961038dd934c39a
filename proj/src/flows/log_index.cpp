#include "clerms/flows/log_index.h"

#include "clerms/core/hash.h"
#include "clerms/custody/evidence_store.h"


#include <algorithm>
#include <mutex>

namespace clerms::flows {

Json to_json(const IngestResult& r) {
  Json rejected = Json::array();
  for (const auto& x : r.rejected)
    rejected.push_back({{"error", "MalformedRecord"}, {"index", x.index}, {"reason", x.reason}});
  return Json{{"accepted", r.accepted}, {"duplicates", r.duplicates}, {"rejected", rejected}};
}

bool LogIndex::add_locked(LogRecord record) {
  std::string digest = sha256_hex(canonical(Json(record)));
  if (!digests_.insert(digest).second) return false;
  const std::size_t idx = records_.size();
  by_ip_[record.client_ip].emplace(record.timestamp, idx);
  by_time_.emplace(record.timestamp, idx);
  records_.push_back(std::move(record));
  return true;
}

IngestResult LogIndex::ingest(const std::vector<Json>& batch) {
  IngestResult result;
  std::vector<LogRecord> parsed;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    try {
      parsed.push_back(parse_log_record(batch[i]));
    } catch (const Error& e) {
      result.rejected.push_back({i, e.what()});
    }
  }
  std::unique_lock lock(mu_);
  for (auto& r : parsed) {
    if (add_locked(std::move(r)))
      ++result.accepted;
    else
      ++result.duplicates;
  }
  return result;
}

IngestResult LogIndex::ingest(const std::vector<LogRecord>& batch) {
  std::vector<Json> raw;
  raw.reserve(batch.size());
  for (const auto& r : batch) raw.emplace_back(r);
  return ingest(raw);
}

std::vector<LogRecord> LogIndex::query(const LogFilter& filter) const {
  if (filter.empty()) fail(Errc::EmptyFilter, "at least one of client_ip, time range, substring is required");
  std::optional<std::string> ip;
  if (filter.client_ip) {
    try {
      ip = parse_log_record(Json{{"timestamp", "1970-01-01T00:00:00Z"}, {"client_ip", *filter.client_ip}}).client_ip;
    } catch (const Error&) {
      fail(Errc::InvalidFormat, "client_ip filter is not an IP address");
    }
  }

  std::shared_lock lock(mu_);
  const std::multimap<Timestamp, std::size_t>* source = &by_time_;
  static const std::multimap<Timestamp, std::size_t> kNone;
  if (ip) {
    auto it = by_ip_.find(*ip);
    source = it == by_ip_.end() ? &kNone : &it->second;
  }
  auto first = source->begin();
  auto last = source->end();
  if (filter.time_range) {
    first = source->lower_bound(filter.time_range->first);
    last = source->upper_bound(filter.time_range->second);
  }
  std::vector<std::pair<Timestamp, std::size_t>> hits;
  for (auto it = first; it != last; ++it) {
    const LogRecord& r = records_[it->second];
    if (filter.substring && r.message.find(*filter.substring) == std::string::npos) continue;
    hits.emplace_back(it->first, it->second);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<LogRecord> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(records_[h.second]);
  return out;
}

std::size_t LogIndex::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

std::vector<LogRecord> LogIndex::all() const {
  std::shared_lock lock(mu_);
  return records_;
}

Json LogIndex::snapshot() const {
  std::shared_lock lock(mu_);
  return Json{{"records", records_}};
}

void LogIndex::restore(const Json& snapshot) {
  std::vector<LogRecord> records = snapshot.at("records").get<std::vector<LogRecord>>();
  std::unique_lock lock(mu_);
  records_.clear();
  digests_.clear();
  by_ip_.clear();
  by_time_.clear();
  for (auto& r : records) add_locked(std::move(r));
}

void LogIndex::save(const std::filesystem::path& file) const {
  custody::write_file_atomic(file, as_bytes(canonical(snapshot())));
}

void LogIndex::load(const std::filesystem::path& file) {
  Bytes raw = custody::read_file(file);
  restore(Json::parse(raw.begin(), raw.end()));
}

}  // namespace clerms::flows
