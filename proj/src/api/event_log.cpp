#include "clerms/api/event_log.h"

#include "clerms/core/error.h"

#include <fstream>
#include <unistd.h>

namespace clerms::api {

Json to_json(const EventLogRecord& r) {
  return Json{{"seq", r.seq}, {"timestamp", r.timestamp}, {"event_type", r.event_type}, {"payload", r.payload}};
}

EventLogRecord record_from_json(const Json& j) {
  try {
    if (!j.is_object() || j.size() != 4) fail(Errc::InvalidFormat, "event record must have 4 fields");
    EventLogRecord r;
    r.seq = j.at("seq").get<std::uint64_t>();
    r.timestamp = j.at("timestamp").get<Timestamp>();
    r.event_type = j.at("event_type").get<std::string>();
    r.payload = j.at("payload");
    if (!r.payload.is_object()) fail(Errc::InvalidFormat, "payload must be an object");
    return r;
  } catch (const Json::exception& e) {
    fail(Errc::InvalidFormat, e.what());
  }
}

LoadedLog read_event_log(const std::filesystem::path& file) {
  LoadedLog out;
  std::ifstream in(file, std::ios::binary);
  if (!in) return out;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    bool complete = nl != std::string::npos;
    std::string_view line(content.data() + pos, (complete ? nl : content.size()) - pos);
    std::uint64_t expected = out.records.size() + 1;
    std::optional<EventLogRecord> rec;
    try {
      rec = record_from_json(Json::parse(line));
    } catch (const std::exception&) {
    }
    bool last_line = !complete || nl + 1 == content.size();
    if (!rec || !complete) {
      // Only an unterminated or unparsable final line counts as a torn write.
      if (last_line) {
        out.truncated_tail_seq = expected;
        break;
      }
      fail(Errc::CorruptLog, "event log damaged at seq " + std::to_string(expected), Json{{"seq", expected}});
    }
    if (rec->seq != expected)
      fail(Errc::CorruptLog, "event log seq gap: expected " + std::to_string(expected) + ", found " +
                                 std::to_string(rec->seq),
           Json{{"seq", expected}});
    out.records.push_back(std::move(*rec));
    pos = nl + 1;
    out.valid_bytes = pos;
  }
  return out;
}

EventLog::EventLog(std::filesystem::path file, std::uint64_t last_seq, std::uintmax_t valid_bytes)
    : file_(std::move(file)), seq_(last_seq) {
  std::error_code ec;
  if (std::filesystem::exists(file_, ec) && std::filesystem::file_size(file_) != valid_bytes)
    std::filesystem::resize_file(file_, valid_bytes);
  out_ = std::fopen(file_.c_str(), "ab");
  if (!out_) fail(Errc::IoFailure, "cannot open event log " + file_.string());
}

EventLog::~EventLog() {
  if (out_) std::fclose(out_);
}

std::uint64_t EventLog::append(Timestamp timestamp, const std::string& event_type, const Json& payload) {
  std::lock_guard lock(mu_);
  EventLogRecord r{seq_ + 1, timestamp, event_type, payload};
  std::string line = canonical(to_json(r));
  line.push_back('\n');
  if (std::fwrite(line.data(), 1, line.size(), out_) != line.size() || std::fflush(out_) != 0)
    fail(Errc::IoFailure, "event log write failed");
  ::fsync(::fileno(out_));
  return ++seq_;
}

std::uint64_t EventLog::last_seq() const {
  std::lock_guard lock(mu_);
  return seq_;
}

}  // namespace clerms::api
