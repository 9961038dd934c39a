#include "clerms/api/http_server.h"
#include "clerms/api/service.h"
#include "clerms/flows/agent.h"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <pthread.h>
#include <sstream>

namespace {

using clerms::Errc;
using clerms::Json;
namespace api = clerms::api;
namespace fs = std::filesystem;

struct Globals {
  std::string config_file;
  std::string token;
  bool json = false;
};

// Usage problems found after parsing (bad combinations, unreadable input).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_input(path));
  } catch (const Json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

api::Config load(const Globals& g) {
  fs::path file = g.config_file.empty() ? api::config_path("clerms.conf") : fs::path(g.config_file);
  if (!fs::exists(file)) throw UsageError("config file not found: " + file.string());
  return api::load_config(file);
}

std::unique_ptr<api::Service> open_service(const api::Config& cfg, bool read_only) {
  api::ServiceOptions o;
  o.config = cfg;
  o.read_only = read_only;
  o.start_worker = false;
  return std::make_unique<api::Service>(std::move(o));
}

const api::Principal& principal(const api::Config& cfg, const Globals& g) {
  if (g.token.empty()) throw UsageError("--token (or CLERMS_TOKEN) is required for this command");
  return cfg.authenticate(g.token);
}

std::string scalar(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "-";
  return v.dump();
}

// key: value lines; nested values stay as compact JSON.
void print_fields(std::ostream& out, const Json& j) {
  if (!j.is_object()) {
    out << scalar(j) << "\n";
    return;
  }
  std::size_t width = 0;
  for (const auto& [k, v] : j.items()) width = std::max(width, k.size());
  for (const auto& [k, v] : j.items()) out << std::left << std::setw(static_cast<int>(width) + 2) << (k + ":") << scalar(v) << "\n";
}

void print_table(std::ostream& out, const std::vector<std::string>& cols, const Json& rows) {
  std::vector<std::size_t> width(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) width[i] = cols[i].size();
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    auto& row = cells.emplace_back();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      row.push_back(r.contains(cols[i]) ? scalar(r[cols[i]]) : "-");
      width[i] = std::max(width[i], row.back().size());
    }
  }
  auto line = [&](const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i + 1 < v.size())
        out << std::left << std::setw(static_cast<int>(width[i]) + 2) << v[i];
      else
        out << v[i];
    }
    out << "\n";
  };
  line(cols);
  for (const auto& row : cells) line(row);
}

void emit(const Globals& g, const Json& j) {
  if (g.json)
    std::cout << clerms::canonical(j) << "\n";
  else
    print_fields(std::cout, j);
}

// serve ---------------------------------------------------------------------

int serve(const Globals& g) {
  api::Config cfg = load(g);
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);  // inherited by every worker thread

  api::ServiceOptions o;
  o.config = cfg;
  o.sender = std::make_shared<api::LogSender>(false);
  api::Service service(std::move(o));
  const auto& rec = service.recovery();
  if (rec.truncated_tail_seq)
    std::cerr << "dropped torn event log tail at seq " << *rec.truncated_tail_seq << "\n";

  api::HttpServer http(service);
  http.bind(cfg.listen_host, cfg.http_port);
  clerms::flows::AgentServer agents(service, cfg.listen_host, cfg.agent_port);
  agents.start();
  http.start();

  std::atomic<bool> stopping{false};
  std::mutex timer_mu;
  std::condition_variable timer_cv;
  std::thread timer([&] {
    std::unique_lock lock(timer_mu);
    while (!stopping) {
      timer_cv.wait_for(lock, std::chrono::seconds(60));
      if (stopping) break;
      try {
        for (const auto& id : service.close_expired()) std::cerr << "closed expired request " << id << "\n";
      } catch (const std::exception& e) {
        std::cerr << "expiry sweep failed: " << e.what() << "\n";
      }
    }
  });

  Json ready = {{"http_port", http.port()}, {"agent_port", agents.port()}, {"data_dir", cfg.data_dir.string()},
                {"events", service.last_seq()}};
  if (g.json)
    std::cout << clerms::canonical(ready) << std::endl;
  else
    std::cout << "listening http=" << cfg.listen_host << ":" << http.port() << " agent=" << cfg.listen_host << ":"
              << agents.port() << " data=" << cfg.data_dir.string() << std::endl;

  int sig = 0;
  sigwait(&set, &sig);
  {
    std::lock_guard lock(timer_mu);
    stopping = true;
  }
  timer_cv.notify_all();
  timer.join();
  http.stop();
  agents.stop();
  service.flush_notifications();
  service.snapshot_now();
  return 0;
}

// agent-sim -----------------------------------------------------------------

struct AgentSimArgs {
  std::string server;
  std::string root;
  std::string processes;
  std::string logs;
  std::string hostname = "sim-agent";
  std::string agent_id;
  std::vector<std::string> labels;
  int max_polls = 0;
  int interval_ms = 500;
};

int agent_sim(const Globals& g, const AgentSimArgs& a) {
  auto [host, port] = clerms::flows::split_host_port(a.server);
  clerms::flows::AgentConfig cfg;
  cfg.hostname = a.hostname;
  if (!a.agent_id.empty()) cfg.agent_id = a.agent_id;
  cfg.labels = a.labels;
  cfg.root = a.root;
  if (!a.processes.empty()) cfg.processes = clerms::flows::load_process_table(a.processes);
  if (!a.logs.empty()) cfg.logs = clerms::flows::load_log_records(a.logs);

  clerms::SystemClock clock;
  clerms::flows::SimulatedAgent agent(cfg, clock);
  clerms::flows::TcpTransport transport(host, port);

  static std::atomic<bool> interrupted{false};
  std::signal(SIGINT, [](int) { interrupted = true; });
  std::signal(SIGTERM, [](int) { interrupted = true; });

  clerms::flows::AgentRunOptions opts;
  opts.max_polls = a.max_polls;
  opts.interval = std::chrono::milliseconds(a.interval_ms);
  opts.stop = [] { return interrupted.load(); };
  bool announced = false;
  opts.on_result = [&](const clerms::flows::FlowResult& r) {
    Json j = r;
    if (g.json) {
      std::cout << clerms::canonical(j) << std::endl;
    } else {
      std::cout << "flow " << r.flow_id << " " << (r.error ? "failed: " + *r.error : "complete") << std::endl;
    }
  };
  // run_agent registers first; report the id once it is known.
  auto report_registration = [&] {
    if (announced || !agent.info()) return;
    announced = true;
    if (!g.json) std::cout << "registered agent " << agent.info()->agent_id << std::endl;
  };
  auto stop = opts.stop;
  opts.stop = [&, stop] {
    report_registration();
    return stop();
  };
  clerms::flows::run_agent(agent, transport, opts);
  report_registration();
  return 0;
}

// token ---------------------------------------------------------------------

int token_new(const Globals& g, const std::string& role_name, const std::string& display, bool append) {
  if (!clerms::enum_from<clerms::domain::Role>(role_name)) throw UsageError("unknown role " + role_name);
  clerms::RandomIdGenerator ids;
  std::string token = clerms::random_hex(24);
  std::string principal_id = ids.uuid();
  std::string line = "principal." + principal_id + " = " + role_name + ":" + api::hash_token(token);
  if (!display.empty()) line += ":" + display;
  if (append) {
    fs::path file = g.config_file.empty() ? api::config_path("clerms.conf") : fs::path(g.config_file);
    if (fs::exists(file)) api::load_config(file);  // refuse to extend a broken file
    std::ofstream out(file, std::ios::app);
    if (!out) throw UsageError("cannot append to " + file.string());
    out << line << "\n";
  }
  Json j = {{"principal_id", principal_id}, {"role", role_name}, {"token", token}, {"config_line", line}};
  emit(g, j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  CLI::App app{"clerms: legal request, evidence and case management"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.add_option("--config", g.config_file, "Config file (default $CLERMS_CONFIG or ./clerms.conf)");
  app.add_option("--token", g.token, "Bearer token of the acting principal")->envname("CLERMS_TOKEN");
  app.add_flag("--json", g.json, "Machine-readable JSON output");
  app.fallthrough();

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API and the agent listener");

  auto* request_cmd = app.add_subcommand("request", "Legal requests");
  request_cmd->require_subcommand(1);
  std::string submit_file;
  auto* submit_cmd = request_cmd->add_subcommand("submit", "Submit a request body (JSON file, - for stdin)");
  submit_cmd->add_option("file", submit_file)->required();
  auto* list_cmd = request_cmd->add_subcommand("list", "List visible requests");
  std::string show_id;
  auto* show_cmd = request_cmd->add_subcommand("show", "Show one request");
  show_cmd->add_option("request_id", show_id)->required();

  auto* case_cmd = app.add_subcommand("case", "Cases");
  case_cmd->require_subcommand(1);
  std::string case_id;
  auto* case_show = case_cmd->add_subcommand("show", "Show a case");
  case_show->add_option("case_id", case_id)->required();

  auto* report_cmd = app.add_subcommand("report", "Reports");
  report_cmd->require_subcommand(1);
  std::string from, to, previous, report_format = "json";
  auto* transparency_cmd = report_cmd->add_subcommand("transparency", "Transparency report for [from, to)");
  transparency_cmd->add_option("--from", from)->required();
  transparency_cmd->add_option("--to", to)->required();
  transparency_cmd->add_option("--previous", previous, "report_id of the previous period");
  transparency_cmd->add_option("--format", report_format)->check(CLI::IsMember({"json", "csv"}));

  auto* invoice_cmd = app.add_subcommand("invoice", "Invoices");
  invoice_cmd->require_subcommand(1);
  std::string invoice_file, invoice_format = "json";
  auto* compute_cmd = invoice_cmd->add_subcommand("compute", "Compute an invoice from a JSON body");
  compute_cmd->add_option("file", invoice_file)->required();
  compute_cmd->add_option("--format", invoice_format)->check(CLI::IsMember({"json", "csv"}));

  auto* evidence_cmd = app.add_subcommand("evidence", "Evidence store");
  evidence_cmd->require_subcommand(1);
  std::string evidence_id;
  auto* verify_cmd = evidence_cmd->add_subcommand("verify", "Verify a custody chain");
  verify_cmd->add_option("evidence_id", evidence_id)->required();

  AgentSimArgs sim;
  auto* sim_cmd = app.add_subcommand("agent-sim", "Run a simulated collection agent");
  sim_cmd->add_option("--server", sim.server, "host:port of the agent listener")->required();
  sim_cmd->add_option("--root", sim.root, "Sandbox directory served to FileFinder")->required()->check(CLI::ExistingDirectory);
  sim_cmd->add_option("--processes", sim.processes, "ProcessList table (JSON)")->check(CLI::ExistingFile);
  sim_cmd->add_option("--logs", sim.logs, "Log records to push after registering")->check(CLI::ExistingFile);
  sim_cmd->add_option("--hostname", sim.hostname);
  sim_cmd->add_option("--agent-id", sim.agent_id, "Resume this registration instead of enrolling anew");
  sim_cmd->add_option("--label", sim.labels);
  sim_cmd->add_option("--max-polls", sim.max_polls, "Stop after this many polls (0 = run until killed)");
  sim_cmd->add_option("--interval-ms", sim.interval_ms);

  auto* token_cmd = app.add_subcommand("token", "Bearer tokens");
  token_cmd->require_subcommand(1);
  std::string token_role, token_name;
  bool token_append = false;
  auto* token_new_cmd = token_cmd->add_subcommand("new", "Provision a principal and print its token once");
  token_new_cmd->add_option("--role", token_role)->required();
  token_new_cmd->add_option("--name", token_name);
  token_new_cmd->add_flag("--append", token_append, "Append the principal line to the config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (serve_cmd->parsed()) return serve(g);
    if (sim_cmd->parsed()) return agent_sim(g, sim);
    if (token_new_cmd->parsed()) return token_new(g, token_role, token_name, token_append);

    api::Config cfg = load(g);
    if (submit_cmd->parsed()) {
      Json body = read_json(submit_file);
      auto svc = open_service(cfg, false);
      emit(g, svc->submit_request(principal(cfg, g), body));
    } else if (list_cmd->parsed()) {
      auto svc = open_service(cfg, true);
      Json rows = svc->list_requests(principal(cfg, g));
      if (g.json)
        std::cout << clerms::canonical(rows) << "\n";
      else
        print_table(std::cout, {"request_id", "state", "priority", "objective", "submitted_at"}, rows);
    } else if (show_cmd->parsed()) {
      auto svc = open_service(cfg, true);
      emit(g, svc->get_request(principal(cfg, g), show_id));
    } else if (case_show->parsed()) {
      auto svc = open_service(cfg, true);
      emit(g, svc->read_case(principal(cfg, g), case_id));
    } else if (transparency_cmd->parsed()) {
      auto svc = open_service(cfg, true);
      std::optional<std::string> prev;
      if (!previous.empty()) prev = previous;
      auto report = svc->transparency_report(
          principal(cfg, g), {clerms::Timestamp::from_iso(from), clerms::Timestamp::from_iso(to)}, prev);
      auto format = g.json ? clerms::reporting::ExportFormat::json : clerms::reporting::parse_export_format(report_format);
      std::cout << clerms::reporting::export_report(report, format);
      if (format == clerms::reporting::ExportFormat::json) std::cout << "\n";
    } else if (compute_cmd->parsed()) {
      Json body = read_json(invoice_file);
      auto svc = open_service(cfg, false);
      auto inv = svc->compute_invoice(principal(cfg, g), body);
      auto format = g.json ? clerms::reporting::ExportFormat::json : clerms::reporting::parse_export_format(invoice_format);
      std::cout << clerms::reporting::export_invoice(inv, format);
      if (format == clerms::reporting::ExportFormat::json) std::cout << "\n";
    } else if (verify_cmd->parsed()) {
      auto svc = open_service(cfg, true);
      auto st = svc->evidence().verify_chain(evidence_id);
      Json j = st.ok ? Json{{"evidence_id", evidence_id}, {"status", "Ok"}, {"length", st.length}, {"head", st.head}}
                     : Json{{"evidence_id", evidence_id}, {"status", "BrokenAt"}, {"seq", st.broken_at},
                            {"reason", st.reason}};
      if (g.json)
        std::cout << clerms::canonical(j) << "\n";
      else if (st.ok)
        std::cout << "Ok (" << st.length << " events, head " << st.head << ")\n";
      else
        std::cout << "BrokenAt(" << st.broken_at << "): " << st.reason << "\n";
      return st.ok ? 0 : 1;
    }
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return 2;
  } catch (const clerms::Error& e) {
    if (g.json)
      std::cout << clerms::canonical(e.to_json()) << "\n";
    else
      std::cerr << e.name() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
