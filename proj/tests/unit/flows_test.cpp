#include "oracles.h"
#include "support.h"

#include "clerms/flows/agent.h"
#include "clerms/flows/file_finder.h"
#include "clerms/flows/log_index.h"
#include "clerms/flows/protocol.h"
#include "clerms/flows/registry.h"

#include <doctest.h>

#include <random>

using namespace clerms;
using namespace clerms::flows;
using testing::fixtures;

namespace {

std::string hex(const Bytes& b) {
  static const char* d = "0123456789abcdef";
  std::string s;
  for (auto c : b) {
    s += d[c >> 4];
    s += d[c & 15];
  }
  return s;
}

// Reference glob matcher: plain recursion over segments.
bool seg_match(const std::string& pat, std::size_t pi, const std::string& s, std::size_t si) {
  if (pi == pat.size()) return si == s.size();
  if (pat[pi] == '*') {
    for (std::size_t k = si; k <= s.size(); ++k)
      if (seg_match(pat, pi + 1, s, k)) return true;
    return false;
  }
  return si < s.size() && pat[pi] == s[si] && seg_match(pat, pi + 1, s, si + 1);
}

bool ref_match(const std::vector<std::string>& pat, std::size_t pi, const std::vector<std::string>& path,
               std::size_t si) {
  if (pi == pat.size()) return si == path.size();
  if (pat[pi] == "**") {
    for (std::size_t k = si; k <= path.size(); ++k)
      if (ref_match(pat, pi + 1, path, k)) return true;
    return false;
  }
  return si < path.size() && seg_match(pat[pi], 0, path[si], 0) && ref_match(pat, pi + 1, path, si + 1);
}

// Minimal backend: registry plus an in-memory blob map.
struct FakeBackend : AgentBackend {
  FlowRegistry registry;
  LogIndex logs;
  std::map<std::string, Bytes> blobs;
  ManualClock clock{Timestamp::from_iso("2019-04-01T09:00:00Z")};
  RandomIdGenerator ids{5};

  AgentInfo agent_register(const RegisterHello& hello) override {
    return registry.register_agent(hello, ids.uuid(), clock.now());
  }
  std::vector<FlowRequest> agent_poll(const std::string& agent_id) override {
    return registry.take_pending(agent_id, clock.now());
  }
  FlowRequest agent_flow(const std::string& agent_id, const std::string& flow_id) override {
    const auto& rec = registry.flow(flow_id);
    if (rec.request.agent_id != agent_id) fail(Errc::Forbidden, "not yours");
    return rec.request;
  }
  std::string agent_fetched(const FlowRequest&, const std::string&, const Bytes& content) override {
    auto id = sha256_hex(content);
    blobs[id] = content;
    return id;
  }
  FlowResult agent_done(const std::string& agent_id, FlowResult result) override {
    return registry.complete(agent_id, std::move(result), clock.now());
  }
  IngestResult agent_logs(const std::string&, const std::vector<Json>& records) override {
    return logs.ingest(records);
  }

  std::string launch(const std::string& agent_id, FlowKind kind) {
    FlowRequest r{ids.uuid(), agent_id, std::move(kind), "fe-1", "case-1", clock.now()};
    return registry.launch_flow(r, domain::Role::forensic_expert, true);
  }
};

AgentConfig sandbox_agent(std::size_t chunk = kFetchChunkSize) {
  AgentConfig c;
  c.hostname = "forum-host";
  c.root = fixtures() / "sandbox";
  c.processes = load_process_table(fixtures() / "processes.json");
  c.logs = load_log_records(fixtures() / "fluxbb_access.jsonl");
  c.chunk_size = chunk;
  return c;
}

}  // namespace

TEST_CASE("frame encoding is bit exact") {
  Bytes frame = encode_frame({MessageType::POLL, Json{{"a", 1}}});
  CHECK(hex(frame) ==
        "000000277b227061796c6f6164223a7b2261223a317d2c2274797065223a22504f4c4c222c2276223a317d");
  CHECK(decode_frame(frame) == Message{MessageType::POLL, Json{{"a", 1}}});
}

TEST_CASE("frame decoding rejects with declared errors") {
  auto code_of = [](const Bytes& b) {
    try {
      decode_frame(b);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::BadRequest;
  };
  auto frame = [](std::string body) {
    Bytes b{0, 0, 0, 0};
    auto n = body.size();
    b[2] = static_cast<std::uint8_t>(n >> 8);
    b[3] = static_cast<std::uint8_t>(n);
    b.insert(b.end(), body.begin(), body.end());
    return b;
  };
  CHECK(code_of(frame(R"({"payload":{},"type":"POLL","v":2})")) == Errc::UnsupportedVersion);
  CHECK(code_of(frame(R"({"payload":{},"type":"NOPE","v":1})")) == Errc::MalformedFrame);
  CHECK(code_of(frame("{not json")) == Errc::MalformedFrame);
  CHECK(code_of(Bytes{0, 0, 1}) == Errc::MalformedFrame);
  CHECK(code_of(Bytes{0x01, 0x00, 0x00, 0x01}) == Errc::FrameTooLarge);
  Bytes trailing = frame(R"({"payload":{},"type":"POLL","v":1})");
  trailing.push_back('x');
  CHECK(code_of(trailing) == Errc::MalformedFrame);
}

TEST_CASE("frame reader reassembles split streams") {
  Bytes stream;
  for (int i = 0; i < 3; ++i) {
    auto f = encode_frame({MessageType::LOG_BATCH, Json{{"i", i}}});
    stream.insert(stream.end(), f.begin(), f.end());
  }
  FrameReader r;
  std::vector<int> seen;
  for (auto b : stream) {
    r.feed(std::span<const std::uint8_t>(&b, 1));
    while (auto m = r.next()) seen.push_back(m->payload["i"]);
  }
  CHECK(seen == std::vector<int>{0, 1, 2});
  CHECK(r.buffered() == 0);
}

TEST_CASE("protocol fuzz and round trip") {
  auto fuzz = testing::run_frame_fuzz(10000, 99);
  CHECK(fuzz.frames == 10000);
  if (!fuzz.violations.empty()) FAIL_CHECK(fuzz.violations.front());
  CHECK(fuzz.decoded + fuzz.declared_errors == fuzz.frames);
  auto rt = testing::run_frame_roundtrip(2000, 100);
  if (!rt.violations.empty()) FAIL_CHECK(rt.violations.front());
  CHECK(rt.messages == 2000);
}

TEST_CASE("glob semantics") {
  Glob g("/var/lib/mysql/fluxbb/**");
  CHECK(g.matches("/var/lib/mysql/fluxbb/db.opt"));
  CHECK(g.matches("/var/lib/mysql/fluxbb/a/b/c"));
  CHECK_FALSE(g.matches("/var/lib/mysql/other/db.opt"));
  CHECK(g.literal_prefix() == std::vector<std::string>{"var", "lib", "mysql", "fluxbb"});
  CHECK(Glob("/var/*/syslog").matches("/var/log/syslog"));
  CHECK_FALSE(Glob("/var/*/syslog").matches("/var/a/b/syslog"));
  CHECK(Glob("/**/*.ibd").matches("/var/lib/mysql/fluxbb/fluxbb_posts.ibd"));
  CHECK_THROWS_AS(Glob("/var/../etc/*"), Error);
  CHECK_THROWS_AS(Glob(""), Error);
}

TEST_CASE("glob agrees with the reference matcher on random inputs") {
  std::mt19937_64 rng(77);
  const char* segs[] = {"a", "b", "ab", "ba", "*", "a*", "*b", "**"};
  const char* names[] = {"a", "b", "ab", "ba", "aab", "bb"};
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<std::string> pat, path;
    std::string ptext, stext;
    for (int i = 0, n = 1 + rng() % 4; i < n; ++i) {
      pat.push_back(segs[rng() % 8]);
      ptext += "/" + pat.back();
    }
    for (int i = 0, n = 1 + rng() % 5; i < n; ++i) {
      path.push_back(names[rng() % 6]);
      stext += "/" + path.back();
    }
    INFO(ptext, " vs ", stext);
    CHECK(Glob(ptext).matches(stext) == ref_match(pat, 0, path, 0));
  }
}

TEST_CASE("find_files returns exactly the fluxbb files") {
  auto m = find_files(fixtures() / "sandbox", "/var/lib/mysql/fluxbb/**");
  REQUIRE(m.size() == 3);
  CHECK(m[0].path == "/var/lib/mysql/fluxbb/db.opt");
  CHECK(m[1].path == "/var/lib/mysql/fluxbb/fluxbb_posts.ibd");
  CHECK(m[2].path == "/var/lib/mysql/fluxbb/fluxbb_users.frm");
  CHECK(find_files(fixtures() / "sandbox", "/nothing/**").empty());
}

TEST_CASE("symlinks out of the sandbox are not followed") {
  testing::TempDir dir;
  std::filesystem::create_directories(dir.path() / "root/data");
  testing::write_text(dir.path() / "root/data/ok.txt", "ok");
  testing::write_text(dir.path() / "outside.txt", "secret");
  std::filesystem::create_symlink(dir.path() / "outside.txt", dir.path() / "root/data/link.txt");
  std::filesystem::create_directory_symlink(dir.path(), dir.path() / "root/up");
  auto m = find_files(dir.path() / "root", "/**");
  REQUIRE(m.size() == 1);
  CHECK(m[0].path == "/data/ok.txt");
}

TEST_CASE("file finder hash action") {
  auto r = run_file_finder(fixtures() / "sandbox", {"/etc/hostname", FileAction::hash}, "f1", Timestamp(0));
  REQUIRE(r.files.size() == 1);
  CHECK(r.status == FlowStatus::complete);
  CHECK(r.files[0].sha256 == sha256_hex(testing::read_text(fixtures() / "sandbox/etc/hostname")));
  auto s = run_file_finder(fixtures() / "sandbox", {"/etc/hostname", FileAction::stat}, "f2", Timestamp(0));
  CHECK_FALSE(s.files[0].sha256);
}

TEST_CASE("process table fixture carries the c2d row") {
  auto table = load_process_table(fixtures() / "processes.json");
  auto r = run_process_list(table, "f", Timestamp(0));
  auto it = std::find_if(r.processes.begin(), r.processes.end(), [](const ProcessEntry& p) { return p.pid == 4242; });
  REQUIRE(it != r.processes.end());
  CHECK(it->name == "c2d");
  CHECK(it->remote_endpoints == std::vector<std::string>{"198.51.100.9:443"});
  CHECK(check_process_entry({-1, "x", "", {}}));
  CHECK(check_process_entry({1, "x", "", {"nonsense"}}));
}

TEST_CASE("log index queries match a linear scan") {
  auto raw = load_log_records(fixtures() / "fluxbb_access.jsonl");
  REQUIRE(raw.size() == 50);
  LogIndex idx;
  auto res = idx.ingest(raw);
  CHECK(res.accepted == 50);
  CHECK(idx.ingest(raw).duplicates == 50);

  std::size_t expected = 0;
  for (const auto& r : raw) expected += r["client_ip"] == "203.0.113.7";
  CHECK(expected == 2);
  auto hits = idx.query({std::string("203.0.113.7"), std::nullopt, std::nullopt});
  CHECK(hits.size() == 2);
  CHECK(hits[0].timestamp <= hits[1].timestamp);

  auto from = Timestamp::from_iso("2019-03-10T00:00:00Z"), to = Timestamp::from_iso("2019-03-20T00:00:00Z");
  std::size_t in_range = 0;
  for (const auto& r : raw) {
    auto t = Timestamp::from_iso(r["timestamp"].get<std::string>());
    in_range += t >= from && t <= to;
  }
  CHECK(idx.query({std::nullopt, std::make_pair(from, to), std::nullopt}).size() == in_range);

  CHECK_THROWS_AS(idx.query({}), Error);
  CHECK_THROWS_AS(idx.query({std::string("nope"), std::nullopt, std::nullopt}), Error);

  LogIndex copy;
  copy.restore(idx.snapshot());
  CHECK(copy.all() == idx.all());
}

TEST_CASE("malformed log records are rejected individually") {
  LogIndex idx;
  std::vector<Json> batch{
      Json{{"source", "s"}, {"timestamp", "2019-03-01T00:00:00Z"}, {"client_ip", "10.0.0.1"}, {"message", "m"}},
      Json{{"source", "s"}, {"timestamp", "yesterday"}, {"client_ip", "10.0.0.1"}, {"message", "m"}},
      Json{{"source", "s"}, {"timestamp", "2019-03-01T00:00:00Z"}, {"client_ip", "999.0.0.1"}, {"message", "m"}},
      Json("text")};
  auto r = idx.ingest(batch);
  CHECK(r.accepted == 1);
  REQUIRE(r.rejected.size() == 3);
  CHECK(r.rejected[0].index == 1);
}

TEST_CASE("registry guards flow launches") {
  FlowRegistry reg;
  auto a = reg.register_agent({std::nullopt, "h", AgentOs::linux, {}}, "11111111-1111-4111-8111-111111111111",
                              Timestamp(0));
  FlowRequest r{"f1", a.agent_id, ProcessListSpec{}, "x", "c", Timestamp(0)};
  auto code = [&](domain::Role role, bool open, FlowRequest req) {
    try {
      reg.launch_flow(req, role, open);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::BadRequest;
  };
  CHECK(code(domain::Role::le_agent, true, r) == Errc::Forbidden);
  CHECK(code(domain::Role::forensic_expert, false, r) == Errc::CaseClosed);
  auto unknown = r;
  unknown.agent_id = "22222222-2222-4222-8222-222222222222";
  CHECK(code(domain::Role::forensic_expert, true, unknown) == Errc::UnknownAgent);
  CHECK(reg.launch_flow(r, domain::Role::crisis_manager, true) == "f1");
  CHECK(reg.take_pending(a.agent_id, Timestamp(1)).size() == 1);
  CHECK(reg.take_pending(a.agent_id, Timestamp(2)).empty());

  // re-registration keeps the id
  auto again = reg.register_agent({a.agent_id, "h2", AgentOs::linux, {}}, "33333333-3333-4333-8333-333333333333",
                                  Timestamp(5));
  CHECK(again.agent_id == a.agent_id);
  CHECK(FlowRegistry::from_json(reg.to_json()).to_json() == reg.to_json());
  CHECK_THROWS_AS(parse_hello(Json{{"hostname", ""}}), Error);
}

TEST_CASE("simulated agent fetch over loopback with multi-chunk streaming") {
  FakeBackend be;
  LoopbackTransport t(be);
  SimulatedAgent agent(sandbox_agent(7), be.clock);
  auto info = agent.register_with(t);
  CHECK(agent.push_logs(t, agent.config().logs).accepted == 50);
  auto fid = be.launch(info.agent_id, FileFinderSpec{"/var/lib/mysql/fluxbb/**", FileAction::fetch});
  auto results = agent.poll_once(t);
  REQUIRE(results.size() == 1);
  CHECK(results[0].flow_id == fid);
  CHECK(results[0].status == FlowStatus::complete);
  REQUIRE(results[0].files.size() == 3);
  for (const auto& f : results[0].files) {
    REQUIRE(f.evidence_id);
    auto content = testing::read_text(fixtures() / "sandbox" / f.path.substr(1));
    CHECK(*f.evidence_id == sha256_hex(content));
    CHECK(be.blobs.count(*f.evidence_id));
  }
}

TEST_CASE("session rejects out-of-order traffic with error replies") {
  FakeBackend be;
  ProtocolSession s(be);
  auto r = s.handle({MessageType::POLL, Json::object()});
  REQUIRE(r);
  CHECK(r->type == MessageType::ERROR);
  CHECK(r->payload["code"] == "UnknownAgent");
  auto hello = s.handle({MessageType::REGISTER, Json{{"os", "linux"}}});
  CHECK(hello->type == MessageType::ERROR);
  CHECK(hello->payload["code"] == "MalformedHello");
  auto ok = s.handle({MessageType::REGISTER, Json{{"hostname", "h"}, {"os", "linux"}}});
  CHECK(ok->type == MessageType::REGISTER);
  CHECK(s.handle({MessageType::FLOW_ASSIGN, Json::object()})->type == MessageType::ERROR);
  CHECK_FALSE(s.handle({MessageType::RESULT_CHUNK, Json{{"flow_id", "nope"}}}));
}

TEST_CASE("a corrupted chunk fails the flow") {
  FakeBackend be;
  ProtocolSession s(be);
  auto reg = s.handle({MessageType::REGISTER, Json{{"hostname", "h"}, {"os", "linux"}}});
  std::string agent = reg->payload["agent_id"];
  auto fid = be.launch(agent, FileFinderSpec{"/etc/hostname", FileAction::fetch});
  s.handle({MessageType::POLL, Json::object()});
  std::string content = "forum-host\n";
  s.handle({MessageType::RESULT_CHUNK, Json{{"flow_id", fid},
                                            {"path", "/etc/hostname"},
                                            {"offset", 0},
                                            {"last", true},
                                            {"data", base64_encode(as_bytes(content))},
                                            {"size", content.size()},
                                            {"sha256", std::string(64, '0')}}});
  FlowResult done;
  done.flow_id = fid;
  done.status = FlowStatus::complete;
  done.files = {{"/etc/hostname", content.size(), sha256_hex(content), std::nullopt}};
  auto reply = s.handle({MessageType::FLOW_DONE, Json(done)});
  REQUIRE(reply);
  CHECK(reply->payload["status"] == "failed");
  CHECK(reply->payload["error"].get<std::string>().find("IntegrityViolation") == 0);
}
