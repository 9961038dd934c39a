#include "clerms/api/config.h"

#include "clerms/core/hash.h"
#include "clerms/core/ids.h"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace clerms::api {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T number(const std::string& value, int line) {
  T out{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || p != value.data() + value.size())
    fail(Errc::BadRequest, "config line " + std::to_string(line) + ": not a number: " + value);
  return out;
}

}  // namespace

const Principal& Config::authenticate(std::string_view bearer_token) const {
  if (bearer_token.empty()) fail(Errc::Unauthenticated, "missing bearer token");
  std::string h = hash_token(bearer_token);
  for (const auto& [id, p] : principals)
    if (p.credential_ref == h) return p;
  fail(Errc::Unauthenticated, "unknown token");
}

const Principal* Config::find_principal(const std::string& principal_id) const {
  auto it = principals.find(principal_id);
  return it == principals.end() ? nullptr : &it->second;
}

Config parse_config(std::string_view text) {
  Config c;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string l = trim(raw);
    if (l.empty() || l[0] == '#') continue;
    auto eq = l.find('=');
    if (eq == std::string::npos) fail(Errc::BadRequest, "config line " + std::to_string(line) + ": expected key = value");
    std::string key = trim(l.substr(0, eq));
    std::string value = trim(l.substr(eq + 1));
    auto bad = [&](const std::string& why) -> void {
      fail(Errc::BadRequest, "config line " + std::to_string(line) + ": " + why);
    };

    if (key == "listen_host") {
      c.listen_host = value;
    } else if (key == "http_port") {
      c.http_port = number<std::uint16_t>(value, line);
    } else if (key == "agent_port") {
      c.agent_port = number<std::uint16_t>(value, line);
    } else if (key == "data_dir") {
      c.data_dir = value;
    } else if (key == "preservation_delay_days") {
      c.workflow.preservation_delay = days(number<std::int64_t>(value, line));
    } else if (key == "preservation_extension_days") {
      c.workflow.preservation_extension = days(number<std::int64_t>(value, line));
    } else if (key == "ack_timeout_days") {
      c.workflow.ack_timeout = days(number<std::int64_t>(value, line));
    } else if (key == "hours_per_month") {
      c.hours_per_month = number<std::int64_t>(value, line);
    } else if (key == "snapshot_every") {
      c.snapshot_every = number<std::uint64_t>(value, line);
    } else if (key == "storage_capacity_bytes") {
      c.storage_capacity_bytes = number<std::uint64_t>(value, line);
    } else if (key.rfind("principal.", 0) == 0) {
      std::string id = key.substr(10);
      if (!is_uuid(id)) bad("principal id must be a UUID");
      auto c1 = value.find(':');
      if (c1 == std::string::npos) bad("expected <role>:<token sha256>");
      auto c2 = value.find(':', c1 + 1);
      auto role = enum_from<domain::Role>(value.substr(0, c1));
      if (!role) bad("unknown role " + value.substr(0, c1));
      std::string hash = value.substr(c1 + 1, c2 == std::string::npos ? std::string::npos : c2 - c1 - 1);
      if (!is_sha256_hex(hash)) bad("token hash must be 64 lowercase hex characters");
      std::string name = c2 == std::string::npos ? std::string() : value.substr(c2 + 1);
      c.principals[id] = Principal{id, *role, hash, name};
    } else if (key.rfind("role.", 0) == 0) {
      std::string rest = key.substr(5);
      auto dot = rest.find('.');
      if (dot == std::string::npos) bad("expected role.<role>.<action>");
      auto role = enum_from<domain::Role>(rest.substr(0, dot));
      auto action = enum_from<Action>(rest.substr(dot + 1));
      auto grant = enum_from<Grant>(value);
      if (!role || !action || !grant) bad("unknown role, action or grant in " + key);
      c.roles.set(*role, *action, *grant);
    } else {
      bad("unknown key " + key);
    }
  }
  for (const auto& [a, pa] : c.principals)
    for (const auto& [b, pb] : c.principals)
      if (a < b && pa.credential_ref == pb.credential_ref)
        fail(Errc::BadRequest, "principals " + a + " and " + b + " share a token");
  return c;
}

Config load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(Errc::IoFailure, "cannot read config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Config c = parse_config(ss.str());
  if (c.data_dir.is_relative()) c.data_dir = std::filesystem::absolute(file).parent_path() / c.data_dir;
  return c;
}

std::filesystem::path config_path(const std::filesystem::path& fallback) {
  if (const char* env = std::getenv("CLERMS_CONFIG"); env && *env) return env;
  return fallback;
}

}  // namespace clerms::api
