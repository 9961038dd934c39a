#include "oracles.h"
#include "support.h"

#include "clerms/domain/validation.h"

#include <doctest.h>

using namespace clerms;
using namespace clerms::workflow;
using clerms::domain::Objective;
using clerms::domain::Regime;
using clerms::domain::Role;

namespace {

const Timestamp t0 = Timestamp::from_iso("2019-04-01T09:00:00Z");

LERequest make_request(Objective objective, Regime regime = Regime::routine) {
  Json j = testing::load_json(testing::fixtures() / "scenario1_request.json");
  j["objective"] = std::string(name_of(objective));
  j["regime"] = std::string(name_of(regime));
  RandomIdGenerator ids(7);
  auto r = domain::validate_submission(j, ids, t0);
  REQUIRE(r.ok());
  return *r.request;
}

EvaluationDecision decide(Decision d, DataClass dc = DataClass::none, Role role = Role::crisis_manager) {
  EvaluationDecision e;
  e.decision = d;
  e.rationale = "r";
  e.public_summary = "s";
  e.decided_by = {{"cm-1", role}};
  e.decided_at = t0 + Duration(10);
  e.response_data_class = dc;
  return e;
}

auto always = [](const std::string&) { return true; };

std::string to_evaluation(Engine& e, LERequest req) {
  std::string id = req.request_id;
  e.submit(std::move(req), t0);
  e.receive_documents(id, {"doc"}, always, t0);
  e.begin_evaluation(id, t0);
  return id;
}

}  // namespace

TEST_CASE("disclosure happy path ends in a content response") {
  Engine e;
  auto id = to_evaluation(e, make_request(Objective::disclosure));
  CHECK(e.record_decision(id, decide(Decision::approve, DataClass::content)) == StateValue::Approved);
  CHECK(e.escalate(id, "case-1", false, t0) == "case-1");
  CHECK(e.apply_action(id, "collected", t0) == StateValue::ActionApplied);
  auto resp = e.issue_response(id, "here", false, t0);
  CHECK(resp.kind == ResponseKind::disclosure);
  CHECK(resp.data_class == DataClass::content);
  CHECK(e.acknowledge(id, t0) == StateValue::Closed);
  CHECK_FALSE(check_invariants(e.get(id)));
}

TEST_CASE("decisions need a crisis manager and disclosure approvals need a data class") {
  Engine e;
  auto id = to_evaluation(e, make_request(Objective::disclosure));
  CHECK_THROWS_WITH_AS(e.record_decision(id, decide(Decision::approve, DataClass::content, Role::legal_advisor)),
                       doctest::Contains("crisis manager"), Error);
  try {
    e.record_decision(id, decide(Decision::approve));
    FAIL("expected InvalidDecision");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::InvalidDecision);
  }
  CHECK(e.get(id).state() == StateValue::UnderEvaluation);
}

TEST_CASE("rejected and challenged requests cannot act") {
  for (Decision d : {Decision::reject, Decision::challenge}) {
    Engine e;
    auto id = to_evaluation(e, make_request(Objective::disclosure));
    e.record_decision(id, decide(d));
    CHECK_THROWS_AS(e.apply_action(id, "x", t0), Error);
    CHECK_THROWS_AS(e.escalate(id, "c", true, t0), Error);
    CHECK_FALSE(e.successors(id).count(StateValue::ActionApplied));
    auto resp = e.issue_response(id, "no", false, t0);
    CHECK(resp.kind == (d == Decision::reject ? ResponseKind::refusal : ResponseKind::challenge_notice));
  }
}

TEST_CASE("a challenge may be re-evaluated once") {
  Engine e;
  auto id = to_evaluation(e, make_request(Objective::disclosure));
  e.record_decision(id, decide(Decision::challenge));
  CHECK(e.reopen_evaluation(id, t0) == StateValue::UnderEvaluation);
  e.record_decision(id, decide(Decision::challenge));
  CHECK_FALSE(e.successors(id).count(StateValue::UnderEvaluation));
  CHECK_THROWS_AS(e.reopen_evaluation(id, t0), Error);
}

TEST_CASE("removal escalation needs an override") {
  Engine e;
  auto id = to_evaluation(e, make_request(Objective::removal));
  e.record_decision(id, decide(Decision::approve));
  CHECK_FALSE(e.successors(id).count(StateValue::Escalated));
  CHECK_THROWS_AS(e.escalate(id, "c", false, t0), Error);
  e.escalate(id, "c", true, t0);
  CHECK(e.get(id).escalation_override);
  e.apply_action(id, "removed", t0);
  CHECK(e.issue_response(id, "done", false, t0).kind == ResponseKind::confirmation);
}

TEST_CASE("testimony yields the certificate") {
  Engine e;
  auto id = to_evaluation(e, make_request(Objective::testimony));
  e.record_decision(id, decide(Decision::approve));
  e.apply_action(id, "records certified", t0);
  auto resp = e.issue_response(id, "ignored", false, t0);
  CHECK(resp.kind == ResponseKind::certificate);
  CHECK(resp.body.find(id) != std::string::npos);
  CHECK(resp.body.find("in lieu of expert testimony") != std::string::npos);
}

TEST_CASE("provisional measures only for emergency or preservation") {
  Engine e;
  auto routine = to_evaluation(e, make_request(Objective::disclosure));
  CHECK_THROWS_AS(e.apply_provisional_measures(routine, "freeze", "cm", t0), Error);

  auto pres_req = make_request(Objective::preservation);
  pres_req.request_id = "00000000-0000-4000-8000-000000000001";
  auto pres = to_evaluation(e, pres_req);
  auto out = e.apply_provisional_measures(pres, "snapshot", "cm", t0);
  auto* order = std::get_if<PreservationOrder>(&out);
  REQUIRE(order);
  CHECK(order->deadline == order->issued_at + days(90));
  CHECK(e.extend_preservation(pres).deadline == order->issued_at + days(180));
  CHECK_THROWS_AS(e.extend_preservation(pres), Error);

  auto em_req = make_request(Objective::disclosure, Regime::emergency);
  em_req.request_id = "00000000-0000-4000-8000-000000000002";
  auto em = to_evaluation(e, em_req);
  CHECK(std::holds_alternative<Acknowledgment>(e.apply_provisional_measures(em, "lock account", "cm", t0)));
  CHECK(e.get(em).request.state.provisional_active);
}

TEST_CASE("acknowledgment timeout closes responded requests") {
  Engine e;
  auto id = to_evaluation(e, make_request(Objective::disclosure));
  e.record_decision(id, decide(Decision::reject));
  e.issue_response(id, "no", false, t0);
  CHECK(e.close_expired(t0 + days(29)).empty());
  CHECK(e.close_expired(t0 + days(30)) == std::vector<std::string>{id});
  CHECK(e.get(id).state() == StateValue::Closed);
}

TEST_CASE("engine state round-trips through JSON") {
  Engine e;
  auto id = to_evaluation(e, make_request(Objective::disclosure));
  e.record_decision(id, decide(Decision::approve, DataClass::non_content));
  auto back = Engine::from_json(e.to_json(), e.config());
  CHECK(back.records() == e.records());
  CHECK(canonical(back.to_json()) == canonical(e.to_json()));
}

TEST_CASE("transition table agrees with allowed_transitions") {
  Json table = transition_table();
  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& row : table) edges.insert({row["from"].get<std::string>(), row["to"].get<std::string>()});
  for (auto objective : {Objective::disclosure, Objective::removal})
    for (std::size_t i = 0; i < EnumNames<domain::StateValue>::names.size(); ++i) {
      WorkflowState ws{static_cast<StateValue>(i), false};
      for (auto to : allowed_transitions(ws, make_request(objective)))
        CHECK(edges.count({std::string(name_of(ws.value)), std::string(name_of(to))}));
    }
  CHECK_FALSE(edges.count({"Rejected", "ActionApplied"}));
  CHECK_FALSE(edges.count({"Challenged", "ActionApplied"}));
}

TEST_CASE("workflow property: 10000 random sequences against the model") {
  auto report = testing::run_workflow_property(10000, 20190401);
  CHECK(report.sequences == 10000);
  CHECK(report.operations > 10000);
  CHECK(report.rejected_ops > 0);
  if (!report.violations.empty()) FAIL_CHECK(report.violations.front());
  CHECK(report.violations.empty());
}
