#include "support.h"

#include "clerms/domain/schema.h"
#include "clerms/domain/validation.h"

#include <doctest.h>

using namespace clerms;
using namespace clerms::domain;
using clerms::testing::fixtures;
using clerms::testing::load_json;

namespace {

Json scenario1() { return load_json(fixtures() / "scenario1_request.json"); }

ValidationResult validate(const Json& j) {
  RandomIdGenerator ids(1);
  return validate_submission(j, ids, Timestamp::from_iso("2019-04-01T09:00:00Z"));
}

}  // namespace

TEST_CASE("scenario 1 submission is valid and stays PreSubmitted") {
  auto r = validate(scenario1());
  REQUIRE(r.ok());
  CHECK(r.request->requester.agent_name == "Mike Davies");
  CHECK(r.request->target.identifiers.at(0).value == "John Smith");
  CHECK(r.request->target.service_uri == "http://wwww.mydomain.com/fluxbb");
  CHECK(r.request->objective == Objective::disclosure);
  CHECK(r.request->state.value == StateValue::PreSubmitted);
  CHECK(r.request->requester.authority_type == "LEA");
  CHECK(is_uuid(r.request->request_id));
}

TEST_CASE("every missing block field is reported with its block") {
  Json j = scenario1();
  j["requester"].erase("agent_name");
  j["requester"].erase("superior_contact");
  j["requester"].erase("agency_country");
  j.erase("instruments");
  j["target"].erase("identifiers");
  auto r = validate(j);
  REQUIRE_FALSE(r.ok());
  CHECK(r.errors.size() == 5);
  std::map<std::string, std::string> block;
  for (const auto& e : r.errors) {
    CHECK(e.code == Errc::MissingField);
    block[e.field] = e.block;
  }
  CHECK(block["agent_name"] == "a");
  CHECK(block["superior_contact"] == "b");
  CHECK(block["agency_country"] == "c");
  CHECK(block["instruments"] == "d");
  CHECK(block["identifiers"] == "e");
}

TEST_CASE("format errors name the field") {
  Json j = scenario1();
  j["requester"]["agent_email"] = "not-an-email";
  j["requester"]["agency_country"] = "XX";
  j["target"]["identifiers"] = Json::array({{{"kind", "ip"}, {"value", "300.1.1.1"}}});
  j["target"]["service_uri"] = "no scheme";
  j["objective"] = "surveillance";
  auto r = validate(j);
  REQUIRE_FALSE(r.ok());
  CHECK(r.has(Errc::InvalidFormat, "agent_email"));
  CHECK(r.has(Errc::InvalidFormat, "agency_country"));
  CHECK(r.has(Errc::InvalidFormat, "identifier"));
  CHECK(r.has(Errc::InvalidFormat, "service_uri"));
  CHECK(r.has(Errc::InvalidFormat, "objective"));
}

TEST_CASE("instrument kind other needs a qualifier; foreign origin needs a channel") {
  Json j = scenario1();
  j["instruments"][0]["kind"] = "other";
  j["origin"] = {{"kind", "foreign"}};
  auto r = validate(j);
  CHECK(r.has(Errc::MissingField, "qualifier"));
  CHECK(r.has(Errc::MissingField, "channel"));
  j["instruments"][0]["qualifier"] = "tax authority demand";
  j["origin"]["channel"] = "mlat";
  CHECK(validate(j).ok());
  j["origin"] = {{"kind", "domestic"}, {"channel", "mlat"}};
  CHECK(validate(j).has(Errc::InvalidFormat, "channel"));
}

TEST_CASE("data period must be ordered") {
  Json j = scenario1();
  j["target"]["data_period"] = {{"start", "2019-04-01T00:00:00Z"}, {"end", "2019-03-01T00:00:00Z"}};
  CHECK(validate(j).has(Errc::InvalidFormat, "data_period"));
}

TEST_CASE("ip, email and country helpers") {
  CHECK(is_ip_address("203.0.113.7"));
  CHECK(is_ip_address("2001:db8::1"));
  CHECK_FALSE(is_ip_address("203.0.113"));
  CHECK(is_email("mike.davies@police.example"));
  CHECK_FALSE(is_email("mike@"));
  CHECK(is_iso_country("GB"));
  CHECK_FALSE(is_iso_country("gb"));
  CHECK(is_uri("http://wwww.mydomain.com/fluxbb"));
}

TEST_CASE("priority classification") {
  CHECK(classify_priority(Regime::emergency, Objective::disclosure) == Priority::p0_emergency);
  CHECK(classify_priority(Regime::emergency, Objective::preservation) == Priority::p0_emergency);
  CHECK(classify_priority(Regime::routine, Objective::preservation) == Priority::p1_preservation);
  CHECK(classify_priority(Regime::routine, Objective::disclosure) == Priority::p2_routine);
  CHECK(classify_priority(Regime::routine, Objective::removal) == Priority::p2_routine);
}

TEST_CASE("LERequest JSON round-trips through the strict loader") {
  auto r = validate(scenario1());
  REQUIRE(r.ok());
  Json j = *r.request;
  CHECK(j.get<LERequest>() == *r.request);
  j["requester"]["agent_email"] = "bad";
  CHECK_THROWS_AS(j.get<LERequest>(), Error);
}

TEST_CASE("request schema covers the five blocks and every required field") {
  Json s = request_schema();
  CHECK(s["$schema"] == "https://json-schema.org/draft/2020-12/schema");
  for (const char* f : {"requester", "target", "instruments", "objective", "regime", "origin"})
    CHECK(std::find(s["required"].begin(), s["required"].end(), f) != s["required"].end());
  std::set<std::string> blocks;
  for (const auto& [k, v] : s["properties"]["requester"]["properties"].items()) blocks.insert(v.value("x-block", ""));
  CHECK(blocks.count("a"));
  CHECK(blocks.count("b"));
  CHECK(blocks.count("c"));
  CHECK(s["properties"]["objective"]["enum"].size() == 4);
}
