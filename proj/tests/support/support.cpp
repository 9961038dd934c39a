#include "support.h"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace clerms::testing {

namespace {

const char* const kPrincipals[][3] = {
    {"11111111-1111-4111-8111-111111111111", "le_agent", kLeToken},
    {"11111111-1111-4111-8111-111111111112", "le_agent", kLe2Token},
    {"22222222-2222-4222-8222-222222222222", "crisis_manager", kCmToken},
    {"33333333-3333-4333-8333-333333333333", "forensic_expert", kFeToken},
    {"44444444-4444-4444-8444-444444444444", "legal_advisor", kLaToken},
    {"55555555-5555-4555-8555-555555555555", "admin", kAdminToken},
};

std::string str(const Json& j, const char* key) { return j.at(key).get<std::string>(); }

Json upload(api::Service& s, const api::Principal& p, std::string_view content) {
  return s.upload_document(p, as_bytes(content));
}

// Runs one agent round (register on first use, push logs, poll once).
struct AgentDriver {
  flows::SimulatedAgent agent;
  std::unique_ptr<flows::LoopbackTransport> loopback;
  flows::AgentTransport* transport;

  AgentDriver(TestEnv& env, flows::AgentTransport* external)
      : agent(seeded_agent_config(), env.clock()), transport(external) {
    if (!transport) {
      loopback = std::make_unique<flows::LoopbackTransport>(env.svc());
      transport = loopback.get();
    }
    agent.register_with(*transport);
    agent.push_logs(*transport, agent.config().logs);
  }
  std::vector<flows::FlowResult> poll() { return agent.poll_once(*transport); }
};

}  // namespace

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "clerms-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

fs::path fixtures() { return CLERMS_FIXTURES; }

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& file, std::string_view text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  out << text;
}

Json load_json(const fs::path& file) { return Json::parse(read_text(file)); }

std::string config_text(const fs::path& data_dir, std::uint16_t http_port, std::uint16_t agent_port) {
  std::string text = "listen_host = 127.0.0.1\n";
  text += "http_port = " + std::to_string(http_port) + "\n";
  text += "agent_port = " + std::to_string(agent_port) + "\n";
  text += "data_dir = " + data_dir.string() + "\n";
  text += "snapshot_every = 25\n";
  for (const auto& p : kPrincipals)
    text += std::string("principal.") + p[0] + " = " + p[1] + ":" + api::hash_token(p[2]) + ":" + p[1] + "\n";
  return text;
}

TestEnv::TestEnv() : clock_(Timestamp::from_iso("2019-04-01T09:00:00.000Z")), ids_(20190401) {
  write_text(config_file(), config_text(data_dir()));
  config_ = api::load_config(config_file());
}

TestEnv::~TestEnv() { close(); }

api::Service& TestEnv::open(bool start_worker) {
  close();
  api::ServiceOptions o;
  o.config = config_;
  o.clock = &clock_;
  o.ids = &ids_;
  o.start_worker = start_worker;
  service_ = std::make_unique<api::Service>(std::move(o));
  return *service_;
}

void TestEnv::close() { service_.reset(); }

flows::AgentConfig seeded_agent_config() {
  flows::AgentConfig cfg;
  cfg.hostname = "forum-host";
  cfg.labels = {"fluxbb"};
  cfg.root = fixtures() / "sandbox";
  cfg.processes = flows::load_process_table(fixtures() / "processes.json");
  cfg.logs = flows::load_log_records(fixtures() / "fluxbb_access.jsonl");
  return cfg;
}

Scenario1 run_scenario1(TestEnv& env, flows::AgentTransport* transport) {
  api::Service& s = env.svc();
  const auto& le = env.as(kLeToken);
  const auto& cm = env.as(kCmToken);
  const auto& fe = env.as(kFeToken);
  Scenario1 out;

  Json submitted = s.submit_request(le, load_json(fixtures() / "scenario1_request.json"));
  out.request_id = str(submitted, "request_id");
  out.ticket_id = str(submitted, "ticket_id");

  std::string scan = str(upload(s, le, "court order WMC-2019-0311 (scan)"), "doc_id");
  s.receive_documents(cm, out.request_id, {scan});
  s.begin_evaluation(cm, out.request_id);
  s.record_decision(cm, out.request_id,
                    Json{{"decision", "approve"},
                         {"rationale", "valid court order, domestic jurisdiction"},
                         {"public_summary", "approved for disclosure"},
                         {"response_data_class", "content"}});
  out.case_id = str(s.escalate(cm, out.request_id, false), "case_id");

  AgentDriver driver(env, transport);
  out.agent_id = driver.agent.info()->agent_id;
  Json flow = s.launch_flow(fe, Json{{"agent_id", out.agent_id},
                                     {"case_id", out.case_id},
                                     {"kind", {{"type", "FileFinder"}, {"glob", "/var/lib/mysql/fluxbb/**"}, {"action", "fetch"}}}});
  out.flow_id = str(flow, "flow_id");
  driver.poll();
  out.flow = s.get_flow(fe, out.flow_id);
  for (const auto& item : out.flow.at("result").at("items"))
    out.chains.push_back(s.verify_evidence(fe, str(item, "evidence_id")));

  flows::LogFilter filter;
  filter.client_ip = "203.0.113.7";
  out.log_hits = s.query_logs(fe, filter);

  out.report_doc = str(upload(s, fe, "Forensic report: 3 database files acquired; posts 881 and 902 from 203.0.113.7."),
                       "doc_id");
  s.add_report(fe, out.case_id, out.report_doc, cases::DocumentKind::forensic_report);
  s.apply_action(cm, out.request_id, "account data and forum database files collected");
  out.closed_case = s.close_case(cm, out.case_id);
  out.response = s.issue_response(cm, out.request_id, "Requested account data and posts are attached.", false);
  out.final_request = s.get_request(cm, out.request_id);
  return out;
}

Scenario2 run_scenario2(TestEnv& env, flows::AgentTransport* transport) {
  api::Service& s = env.svc();
  const auto& le = env.as(kLeToken);
  const auto& cm = env.as(kCmToken);
  const auto& fe = env.as(kFeToken);
  Scenario2 out;
  auto state = [&] {
    out.states.push_back(s.get_request(cm, out.request_id).at("request").at("state").at("value").get<std::string>());
  };

  out.request_id = str(s.submit_request(le, load_json(fixtures() / "scenario2_request.json")), "request_id");
  std::string scan = str(upload(s, le, "court order WMC-2019-0412 (scan)"), "doc_id");
  s.receive_documents(cm, out.request_id, {scan});
  s.begin_evaluation(cm, out.request_id);
  s.record_decision(cm, out.request_id,
                    Json{{"decision", "approve"}, {"rationale", "C2 host on our network"}, {"public_summary", "removal approved"}});
  state();
  // Removal is not escalated by default; the crisis manager overrides.
  out.case_id = str(s.escalate(cm, out.request_id, true), "case_id");
  state();

  AgentDriver driver(env, transport);
  out.flow_id = str(s.launch_flow(fe, Json{{"agent_id", driver.agent.info()->agent_id},
                                           {"case_id", out.case_id},
                                           {"kind", {{"type", "ProcessList"}}}}),
                    "flow_id");
  driver.poll();
  out.flow = s.get_flow(fe, out.flow_id);

  std::string report = str(upload(s, fe, "Process 4242 'c2d' talking to 198.51.100.9:443 killed and binary removed."),
                           "doc_id");
  s.add_report(fe, out.case_id, report, cases::DocumentKind::forensic_report);
  s.apply_action(cm, out.request_id, "c2d (pid 4242, 198.51.100.9:443) terminated and removed");
  state();
  s.close_case(cm, out.case_id);
  s.issue_response(cm, out.request_id, "The reported command-and-control process was removed.", false);
  state();
  out.case_view = s.read_case(cm, out.case_id);
  return out;
}

}  // namespace clerms::testing
