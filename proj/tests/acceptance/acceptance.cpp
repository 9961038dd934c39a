// One line per acceptance criterion; exit status 1 if any fails.

#include "oracles.h"
#include "support.h"

#include "clerms/reporting/money.h"
#include "clerms/reporting/transparency.h"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>

using namespace clerms;
using namespace clerms::testing;
using Clock_ = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const Error& e) {
    o = {false, std::string(e.name()) + ": " + e.what()};
  } catch (const std::exception& e) {
    o = {false, e.what()};
  }
  if (!o.ok) ++failures;
  std::printf("%s %s: %s\n", o.ok ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock_::time_point t) { return std::chrono::duration<double>(Clock_::now() - t).count(); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::fixed << v;
  return s.str();
}

}  // namespace

int main() {
  using namespace clerms::reporting;

  criterion("table2.c5a_line", [] {
    Cents c = compute_line_cost(parse_decimal("0.077", 6), parse_decimal("5040", 3), 5);
    return Outcome{c == 194040, "0.077/h x 5040 h x 5 = " + format_cents(c) + " (want 1940.40)"};
  });

  criterion("table2.r3_line", [] {
    Cents c = compute_line_cost(parse_decimal("1.328", 6), parse_decimal("5040", 3), 1);
    return Outcome{c == 669312, "1.328/h x 5040 h x 1 = " + format_cents(c) + " (want 6693.12)"};
  });

  criterion("table2.invoice_total", [] {
    auto t = Clock_::now();
    std::vector<ResourceLine> lines{{"Osticket", parse_decimal("24.27", 6), 1000, 1, 0},
                                    {"Kirjuri", parse_decimal("24.27", 6), 1000, 1, 0},
                                    {"ELK", parse_decimal("165.63", 6), 1000, 1, 0},
                                    {"Grr c5a.xlarge", parse_decimal("0.077", 6), parse_decimal("5040", 3), 5, 0},
                                    {"Grr r3.4xlarge", parse_decimal("1.328", 6), parse_decimal("5040", 3), 1, 0}};
    auto inv = compute_invoice("acceptance", "", lines, {}, 0);
    double s = seconds_since(t);
    return Outcome{inv.total == 884769 && s < 1.0,
                   "total " + format_cents(inv.total) + " (want 8847.69) in " + fmt(s) + " s"};
  });

  criterion("scenario1.disclosure", [] {
    auto t = Clock_::now();
    TestEnv env;
    env.open();
    flows::AgentServer server(env.svc(), "127.0.0.1", 0);
    server.start();
    flows::TcpTransport tcp("127.0.0.1", server.port());
    auto sc = run_scenario1(env, &tcp);
    server.stop();
    double s = seconds_since(t);

    std::vector<std::string> problems;
    const Json& items = sc.flow.at("result").at("items");
    if (items.size() != 3) problems.push_back(std::to_string(items.size()) + " files fetched");
    std::size_t good = 0;
    for (const auto& c : sc.chains) good += c.ok;
    if (good != 3) problems.push_back(std::to_string(good) + "/3 chains verify");
    if (sc.log_hits.size() != 2) problems.push_back(std::to_string(sc.log_hits.size()) + " log matches");
    const Json& req = sc.final_request.at("request");
    if (req.at("requester").at("agent_name") != "Mike Davies") problems.push_back("agent name");
    if (req.at("target").at("identifiers").at(0).at("value") != "John Smith") problems.push_back("target");
    bool has_report = false;
    for (const auto& d : sc.closed_case.at("documents")) has_report |= d.at("kind") == "forensic_report";
    if (!has_report) problems.push_back("no forensic report on case");
    if (sc.closed_case.at("status") != "closed") problems.push_back("case not closed");
    if (sc.response.at("response").at("data_class") != "content") problems.push_back("response data class");
    if (sc.response.at("state") != "ResponseIssued") problems.push_back("request not ResponseIssued");
    if (s >= 10.0) problems.push_back("took " + fmt(s) + " s");

    std::string detail = "3 files, " + std::to_string(good) + " chains ok, " + std::to_string(sc.log_hits.size()) +
                         " log hits, case closed, content response, " + fmt(s) + " s";
    for (const auto& p : problems) detail += "; " + p;
    return Outcome{problems.empty(), detail};
  });

  criterion("scenario2.removal", [] {
    TestEnv env;
    env.open();
    flows::AgentServer server(env.svc(), "127.0.0.1", 0);
    server.start();
    flows::TcpTransport tcp("127.0.0.1", server.port());
    auto sc = run_scenario2(env, &tcp);
    server.stop();

    bool c2d = false;
    for (const auto& p : sc.flow.at("result").at("items"))
      c2d |= p.at("pid") == 4242 && p.at("name") == "c2d" &&
             p.at("remote_endpoints") == Json::array({"198.51.100.9:443"});
    bool documented = false;
    for (const auto& d : sc.case_view.at("documents")) documented |= d.at("kind") == "forensic_report";
    const std::vector<std::string> want{"Approved", "Escalated", "ActionApplied", "ResponseIssued"};
    std::string path;
    for (const auto& st : sc.states) path += (path.empty() ? "" : " -> ") + st;
    return Outcome{c2d && documented && sc.states == want,
                   std::string(c2d ? "c2d pid 4242 -> 198.51.100.9:443 found" : "c2d not found") +
                       (documented ? ", removal documented" : ", removal not documented") + ", " + path};
  });

  criterion("custody.tamper_100", [] {
    auto r = run_tamper_trials(100, 20190401);
    std::string detail = std::to_string(r.detected) + "/" + std::to_string(r.trials) + " mutations flagged";
    if (!r.misses.empty()) detail += "; first miss: " + r.misses.front();
    return Outcome{r.trials == 100 && r.detected == 100, detail};
  });

  criterion("workflow.property_10000", [] {
    auto r = run_workflow_property(10000, 4242);
    std::string detail = std::to_string(r.sequences) + " sequences, " + std::to_string(r.operations) +
                         " operations, " + std::to_string(r.rejected_ops) + " rejected as predicted, " +
                         std::to_string(r.violations.size()) + " violations";
    if (!r.violations.empty()) detail += "; first: " + r.violations.front();
    return Outcome{r.sequences == 10000 && r.violations.empty(), detail};
  });

  criterion("transparency.oracle_1000", [] {
    auto engine = make_request_corpus(1000, 31337);
    std::vector<const workflow::RequestRecord*> corpus;
    std::vector<Json> records;
    for (const auto& [id, r] : engine.records()) {
      corpus.push_back(&r);
      records.push_back(Json(r));
    }
    const char* from = "2019-01-01T00:00:00.000Z";
    const char* to = "2020-01-01T00:00:00.000Z";
    auto rep = generate_transparency_report(corpus, {Timestamp::from_iso(from), Timestamp::from_iso(to)});
    Json body = rep.body();
    body.erase("period");
    body.erase("previous_period_ref");
    bool same = canonical(body) == canonical(linear_scan_transparency(records, from, to));
    return Outcome{same && rep.received == 1000,
                   std::to_string(rep.received) + " requests, report " + (same ? "equals" : "differs from") +
                       " linear scan"};
  });

  criterion("replay.determinism", [] {
    TestEnv env;
    env.open();
    run_scenario1(env);
    run_scenario2(env);
    std::string before = env.svc().state_digest();
    auto seq = env.svc().last_seq();
    env.close();
    std::string after_snapshot = env.open().state_digest();
    env.close();
    std::filesystem::remove_all(env.data_dir() / "snapshots");
    std::filesystem::remove_all(env.data_dir() / "logsindex");
    std::string after_full = env.open().state_digest();
    bool ok = before == after_snapshot && before == after_full;
    return Outcome{ok, std::to_string(seq) + " events, digest " + before.substr(0, 16) +
                           (ok ? " identical after restart (snapshot and full replay)" : " changed after restart")};
  });

  criterion("protocol.fuzz_10000", [] {
    auto f = run_frame_fuzz(10000, 777);
    auto rt = run_frame_roundtrip(10000, 778);
    std::string detail = std::to_string(f.frames) + " frames: " + std::to_string(f.declared_errors) +
                         " declared errors, " + std::to_string(f.decoded) + " valid, " +
                         std::to_string(f.violations.size()) + " violations; " + std::to_string(rt.messages) +
                         " round trips, " + std::to_string(rt.violations.size()) + " violations";
    if (!f.violations.empty()) detail += "; first: " + f.violations.front();
    if (!rt.violations.empty()) detail += "; first: " + rt.violations.front();
    return Outcome{f.frames == 10000 && f.violations.empty() && f.decoded + f.declared_errors == f.frames &&
                       rt.violations.empty(),
                   detail};
  });

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
