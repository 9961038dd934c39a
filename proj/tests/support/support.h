#pragma once

#include "clerms/api/service.h"
#include "clerms/flows/agent.h"

#include <filesystem>
#include <memory>
#include <string>

namespace clerms::testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

fs::path fixtures();
Json load_json(const fs::path& file);
void write_text(const fs::path& file, std::string_view text);
std::string read_text(const fs::path& file);

// Well-known tokens, one principal per role.
inline constexpr const char* kLeToken = "tok-le-agent";
inline constexpr const char* kLe2Token = "tok-le-agent-2";
inline constexpr const char* kCmToken = "tok-crisis-manager";
inline constexpr const char* kFeToken = "tok-forensic-expert";
inline constexpr const char* kLaToken = "tok-legal-advisor";
inline constexpr const char* kAdminToken = "tok-admin";

// Config text for a data dir with the principals above.
std::string config_text(const fs::path& data_dir, std::uint16_t http_port = 0, std::uint16_t agent_port = 0);

// A data directory plus a deterministic clock and id source. open() may be
// called again after close() to simulate a restart.
class TestEnv {
 public:
  TestEnv();
  ~TestEnv();

  api::Service& open(bool start_worker = false);
  void close();
  api::Service& svc() { return *service_; }
  const api::Principal& as(const char* token) const { return config_.authenticate(token); }

  const fs::path& dir() const { return tmp_.path(); }
  fs::path data_dir() const { return tmp_.path() / "data"; }
  fs::path config_file() const { return tmp_.path() / "clerms.conf"; }
  const api::Config& config() const { return config_; }
  ManualClock& clock() { return clock_; }
  IdGenerator& ids() { return ids_; }

 private:
  TempDir tmp_;
  api::Config config_;
  ManualClock clock_;
  RandomIdGenerator ids_;
  std::unique_ptr<api::Service> service_;
};

flows::AgentConfig seeded_agent_config();

// The scripted disclosure scenario, step by step. Each step records what it
// observed so callers can assert on it.
struct Scenario1 {
  std::string request_id;
  std::string ticket_id;
  std::string case_id;
  std::string agent_id;
  std::string flow_id;
  std::string report_doc;
  Json flow;            // get_flow after completion
  Json log_hits;        // query_logs(client_ip=203.0.113.7)
  Json closed_case;     // close_case reply
  Json response;        // issue_response reply
  Json final_request;   // get_request as crisis manager
  std::vector<custody::ChainStatus> chains;
};

// transport == nullptr runs the agent over an in-process LoopbackTransport.
Scenario1 run_scenario1(TestEnv& env, flows::AgentTransport* transport = nullptr);

struct Scenario2 {
  std::string request_id;
  std::string case_id;
  std::string flow_id;
  Json flow;
  Json case_view;
  std::vector<std::string> states;  // request state after each step
};

Scenario2 run_scenario2(TestEnv& env, flows::AgentTransport* transport = nullptr);

}  // namespace clerms::testing
