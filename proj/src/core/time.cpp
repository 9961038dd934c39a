#include "clerms/core/time.h"

#include "clerms/core/error.h"

#include <charconv>
#include <cstdio>

namespace clerms {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc{};
}

}  // namespace

// Accepts YYYY-MM-DDTHH:MM:SS[.fff...][Z|+HH:MM|-HH:MM]; fractional digits
// past milliseconds are truncated.
std::optional<Timestamp> Timestamp::parse(std::string_view s) {
  using namespace std::chrono;
  int Y, M, D, h, m, sec;
  if (!read_int(s, 0, 4, Y) || s.size() < 19 || s[4] != '-' || !read_int(s, 5, 2, M) || s[7] != '-' ||
      !read_int(s, 8, 2, D) || (s[10] != 'T' && s[10] != ' ') || !read_int(s, 11, 2, h) || s[13] != ':' ||
      !read_int(s, 14, 2, m) || s[16] != ':' || !read_int(s, 17, 2, sec))
    return std::nullopt;
  if (h > 23 || m > 59 || sec > 59) return std::nullopt;
  year_month_day ymd{year{Y}, month{static_cast<unsigned>(M)}, day{static_cast<unsigned>(D)}};
  if (!ymd.ok()) return std::nullopt;

  std::size_t pos = 19;
  std::int64_t frac_ms = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 3) frac_ms = frac_ms * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    for (int i = digits; i < 3; ++i) frac_ms *= 10;
  }
  std::int64_t offset_min = 0;
  if (pos == s.size()) return std::nullopt;  // zone designator is mandatory
  if (s[pos] == 'Z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    int oh, om;
    if (!read_int(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' || !read_int(s, pos + 4, 2, om))
      return std::nullopt;
    offset_min = (oh * 60 + om) * (s[pos] == '+' ? 1 : -1);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;

  auto tp = sys_days{ymd} + hours{h} + minutes{m} + seconds{sec};
  std::int64_t ms = duration_cast<milliseconds>(tp.time_since_epoch()).count() + frac_ms - offset_min * 60'000;
  return Timestamp(ms);
}

Timestamp Timestamp::from_iso(std::string_view text) {
  auto t = parse(text);
  if (!t) fail(Errc::InvalidFormat, "not a UTC timestamp: " + std::string(text));
  return *t;
}

std::string Timestamp::iso() const {
  using namespace std::chrono;
  auto tp = sys_time<milliseconds>(milliseconds(ms_));
  auto dp = floor<std::chrono::days>(tp);
  year_month_day ymd{dp};
  hh_mm_ss<milliseconds> tod{tp - dp};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()), static_cast<int>(tod.subseconds().count()));
  return buf;
}

void to_json(nlohmann::json& j, const Timestamp& t) { j = t.iso(); }

void from_json(const nlohmann::json& j, Timestamp& t) {
  if (!j.is_string()) fail(Errc::InvalidFormat, "timestamp must be a string");
  t = Timestamp::from_iso(j.get<std::string>());
}

Timestamp SystemClock::now() {
  using namespace std::chrono;
  return Timestamp(duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

Timestamp ManualClock::now() {
  std::lock_guard lock(mu_);
  Timestamp t = now_;
  now_ = now_ + step_;
  return t;
}

void ManualClock::set(Timestamp t) {
  std::lock_guard lock(mu_);
  now_ = t;
}

void ManualClock::advance(Duration d) {
  std::lock_guard lock(mu_);
  now_ = now_ + d;
}

}  // namespace clerms
