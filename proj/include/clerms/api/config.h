#pragma once

#include "clerms/api/auth.h"
#include "clerms/workflow/engine.h"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace clerms::api {

// Key=value configuration file. '#' starts a comment line.
//
//   listen_host = 127.0.0.1
//   http_port = 8080
//   agent_port = 7070
//   data_dir = ./clerms-data
//   preservation_delay_days = 90
//   preservation_extension_days = 90
//   ack_timeout_days = 30
//   hours_per_month = 730
//   snapshot_every = 500
//   storage_capacity_bytes = 0            (0 = unlimited)
//   principal.<uuid> = <role>:<sha256 of token>[:<display name>]
//   role.<role>.<action> = allow | own | deny
struct Config {
  std::string listen_host = "127.0.0.1";
  std::uint16_t http_port = 8080;
  std::uint16_t agent_port = 7070;
  std::filesystem::path data_dir = "clerms-data";
  workflow::Config workflow;
  std::int64_t hours_per_month = 730;
  std::uint64_t snapshot_every = 500;
  std::uint64_t storage_capacity_bytes = 0;
  std::map<std::string, Principal> principals;  // by principal_id
  RoleMatrix roles = RoleMatrix::defaults();

  // Unauthenticated when no principal carries this token.
  const Principal& authenticate(std::string_view bearer_token) const;
  const Principal* find_principal(const std::string& principal_id) const;
};

// BadRequest naming the offending line.
Config parse_config(std::string_view text);
Config load_config(const std::filesystem::path& file);
// $CLERMS_CONFIG if set, else `fallback`.
std::filesystem::path config_path(const std::filesystem::path& fallback);

}  // namespace clerms::api
