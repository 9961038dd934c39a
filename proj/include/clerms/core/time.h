#pragma once

#include <json.hpp>

#include <chrono>
#include <compare>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace clerms {

using Duration = std::chrono::milliseconds;

constexpr Duration days(std::int64_t n) { return std::chrono::duration_cast<Duration>(std::chrono::hours(24 * n)); }

// UTC instant with millisecond precision. Serialized as
// "YYYY-MM-DDTHH:MM:SS.mmmZ".
class Timestamp {
 public:
  constexpr Timestamp() = default;
  constexpr explicit Timestamp(std::int64_t epoch_ms) : ms_(epoch_ms) {}

  static std::optional<Timestamp> parse(std::string_view text);
  static Timestamp from_iso(std::string_view text);  // throws InvalidFormat

  constexpr std::int64_t epoch_ms() const { return ms_; }
  std::string iso() const;

  constexpr Timestamp operator+(Duration d) const { return Timestamp(ms_ + d.count()); }
  constexpr Duration operator-(Timestamp other) const { return Duration(ms_ - other.ms_); }
  constexpr auto operator<=>(const Timestamp&) const = default;

 private:
  std::int64_t ms_ = 0;
};

void to_json(nlohmann::json& j, const Timestamp& t);
void from_json(const nlohmann::json& j, Timestamp& t);

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() override;
};

// Test clock. Every read advances by `step` so successive events stay ordered.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start, Duration step = Duration(1)) : now_(start), step_(step) {}
  Timestamp now() override;
  void set(Timestamp t);
  void advance(Duration d);

 private:
  std::mutex mu_;
  Timestamp now_;
  Duration step_;
};

}  // namespace clerms
