#include "support.h"

#include "clerms/api/http_server.h"
#include "clerms/flows/agent.h"

#include <doctest.h>
#include <httplib.h>

using namespace clerms;
using namespace clerms::testing;

namespace {

struct Server {
  TestEnv env;
  api::HttpServer http{env.open()};
  flows::AgentServer agents{env.svc(), "127.0.0.1", 0};
  httplib::Client client;

  Server() : client("127.0.0.1", http.bind("127.0.0.1", 0)) {
    http.start();
    agents.start();
  }
  ~Server() {
    agents.stop();
    http.stop();
  }

  httplib::Headers auth(const char* token) { return {{"Authorization", std::string("Bearer ") + token}}; }

  std::pair<int, Json> get(const std::string& path, const char* token) {
    auto r = client.Get("/api/v1" + path, auth(token));
    REQUIRE(r);
    return {r->status, r->body.empty() ? Json() : Json::parse(r->body, nullptr, false)};
  }
  std::pair<int, Json> post(const std::string& path, const char* token, const Json& body) {
    auto r = client.Post("/api/v1" + path, auth(token), body.dump(), "application/json");
    REQUIRE(r);
    return {r->status, Json::parse(r->body, nullptr, false)};
  }
};

}  // namespace

TEST_CASE("public endpoints need no token") {
  Server s;
  auto r = s.client.Get("/api/v1/health");
  REQUIRE(r);
  CHECK(r->status == 200);
  auto schema = s.client.Get("/api/v1/schema/request");
  CHECK(Json::parse(schema->body)["type"] == "object");
  auto table = Json::parse(s.client.Get("/api/v1/workflow/transitions")->body);
  CHECK(table.size() >= 15);
  CHECK(table[0].contains("guard"));
}

TEST_CASE("error statuses") {
  Server s;
  auto r = s.client.Get("/api/v1/requests");
  CHECK(r->status == 401);
  CHECK(Json::parse(r->body)["error"] == "Unauthenticated");
  CHECK(s.get("/requests", "bogus").first == 401);
  CHECK(s.get("/requests/00000000-0000-4000-8000-000000000000", kCmToken).first == 404);
  CHECK(s.get("/cases/x", kLeToken).first == 403);
  CHECK(s.get("/no/such/thing", kCmToken).first == 404);

  auto bad = s.client.Post("/api/v1/requests", s.auth(kLeToken), "{not json", "application/json");
  CHECK(bad->status == 400);

  Json body = load_json(fixtures() / "scenario1_request.json");
  body["requester"].erase("agent_name");
  auto [code, err] = s.post("/requests", kLeToken, body);
  CHECK(code == 400);
  CHECK(err["error"] == "ValidationErrors");
  CHECK(err["detail"]["errors"][0]["field"] == "agent_name");
  CHECK(err["detail"]["errors"][0]["block"] == "a");

  auto [c2, sub] = s.post("/requests", kLeToken, load_json(fixtures() / "scenario1_request.json"));
  REQUIRE(c2 == 201);
  std::string id = sub["request_id"];
  auto [c3, e3] = s.post("/requests/" + id + "/evaluation", kCmToken, Json::object());
  CHECK(c3 == 409);
  CHECK(e3["error"] == "InvalidState");
  CHECK(s.post("/requests/" + id + "/evaluation", kLeToken, Json::object()).first == 403);
}

TEST_CASE("scenario 1 over HTTP with the agent on TCP") {
  Server s;
  auto [c1, sub] = s.post("/requests", kLeToken, load_json(fixtures() / "scenario1_request.json"));
  REQUIRE(c1 == 201);
  std::string id = sub["request_id"];
  std::string ticket = sub["ticket_id"];

  auto up = s.client.Post("/api/v1/documents", s.auth(kLeToken), "court order scan", "application/octet-stream");
  REQUIRE(up->status == 201);
  std::string doc = Json::parse(up->body)["doc_id"];
  CHECK(doc == sha256_hex(std::string_view("court order scan")));

  CHECK(s.post("/requests/" + id + "/documents", kCmToken, {{"document_refs", {doc}}}).first == 200);
  CHECK(s.post("/requests/" + id + "/evaluation", kCmToken, Json::object()).first == 200);
  auto [c2, dec] = s.post("/requests/" + id + "/decision", kCmToken,
                          {{"decision", "approve"},
                           {"rationale", "court order checks out"},
                           {"public_summary", "approved"},
                           {"response_data_class", "content"}});
  REQUIRE(c2 == 200);
  auto [c3, esc] = s.post("/requests/" + id + "/escalate", kCmToken, Json::object());
  REQUIRE(c3 == 200);
  std::string case_id = esc["case_id"];

  flows::TcpTransport tcp("127.0.0.1", s.agents.port());
  flows::SimulatedAgent agent(seeded_agent_config(), s.env.clock());
  auto info = agent.register_with(tcp);
  CHECK(agent.push_logs(tcp, agent.config().logs).accepted == 50);
  auto [ca, agents] = s.get("/agents", kFeToken);
  CHECK(agents.size() == 1);
  CHECK(agents[0]["hostname"] == "forum-host");

  CHECK(s.post("/flows", kLeToken, Json::object()).first == 403);
  auto [c4, flow] = s.post("/flows", kFeToken,
                           {{"agent_id", info.agent_id},
                            {"case_id", case_id},
                            {"kind", {{"type", "FileFinder"}, {"glob", "/var/lib/mysql/fluxbb/**"}, {"action", "fetch"}}}});
  REQUIRE(c4 == 201);
  auto results = agent.poll_once(tcp);
  REQUIRE(results.size() == 1);
  auto [c5, got] = s.get("/flows/" + flow["flow_id"].get<std::string>(), kFeToken);
  CHECK(got["result"]["status"] == "complete");
  REQUIRE(got["result"]["items"].size() == 3);
  for (const auto& item : got["result"]["items"]) {
    auto [cv, v] = s.get("/evidence/" + item["evidence_id"].get<std::string>() + "/verify", kFeToken);
    CHECK(cv == 200);
    CHECK(v["status"] == "Ok");
  }

  auto [c6, hits] = s.get("/logs/query?client_ip=203.0.113.7", kFeToken);
  CHECK(c6 == 200);
  CHECK(hits.size() == 2);
  CHECK(s.get("/logs/query", kFeToken).first == 400);

  auto rep = s.client.Post("/api/v1/documents", s.auth(kFeToken), "forensic findings", "text/plain");
  std::string rep_doc = Json::parse(rep->body)["doc_id"];
  CHECK(s.post("/cases/" + case_id + "/reports", kFeToken, {{"doc_id", rep_doc}, {"kind", "forensic_report"}}).first ==
        201);
  CHECK(s.post("/requests/" + id + "/action", kCmToken, {{"summary", "collected"}}).first == 200);
  auto [c7, closed] = s.post("/cases/" + case_id + "/close", kCmToken, Json::object());
  CHECK(c7 == 200);
  auto [c8, resp] = s.post("/requests/" + id + "/response", kCmToken, {{"body", "attached"}});
  REQUIRE(c8 == 200);
  CHECK(resp["state"] == "ResponseIssued");
  CHECK(resp["response"]["data_class"] == "content");

  auto [c9, msgs] = s.get("/tickets/" + ticket + "/messages", kLeToken);
  CHECK(c9 == 200);
  CHECK(msgs.size() >= 3);
  auto [c10, mine] = s.get("/requests/" + id, kLeToken);
  CHECK(mine["request"]["state"]["value"] == "ResponseIssued");
  CHECK_FALSE(mine.contains("case_id"));

  auto csv = s.client.Get("/api/v1/reports/transparency?from=2019-01-01T00:00:00Z&to=2020-01-01T00:00:00Z&format=csv",
                          s.auth(kLaToken));
  REQUIRE(csv->status == 200);
  CHECK(csv->body.rfind("section,key,count\n", 0) == 0);
  CHECK(csv->body.find("outcomes,approved,1") != std::string::npos);

  auto inv = s.client.Post("/api/v1/invoices", s.auth(kAdminToken),
                           Json{{"format", "csv"},
                                {"case_id", case_id},
                                {"resource_lines",
                                 {{{"name", "c5a.xlarge"}, {"hourly_rate", "0.077"}, {"hours", "5040"}, {"quantity", 5}}}}}
                               .dump(),
                           "application/json");
  REQUIRE(inv->status == 201);
  CHECK(inv->body.find("total,,,,,1940.40") != std::string::npos);

  auto [cs, state] = s.get("/state", kAdminToken);
  CHECK(cs == 200);
  CHECK(state["digest"] == s.env.svc().state_digest());
}
