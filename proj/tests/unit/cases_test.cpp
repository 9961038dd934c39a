#include "support.h"

#include "clerms/cases/case_store.h"

#include <doctest.h>

using namespace clerms;
using namespace clerms::cases;
using domain::Role;
using domain::StateValue;

namespace {

const Timestamp t0 = Timestamp::from_iso("2019-04-01T09:00:00Z");
const Actor cm{"cm-1", Role::crisis_manager};
const Actor fe{"fe-1", Role::forensic_expert};

custody::ChainStatus good(const std::string& id) { return custody::ChainStatus::good(2, "head-" + id); }
custody::ChainStatus bad(const std::string&) { return custody::ChainStatus::broken(1, "hash mismatch"); }
bool stored(const std::string&) { return true; }

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::BadRequest;
}

CaseStore opened() {
  CaseStore s;
  s.open_case("case-1", "req-1", StateValue::Escalated, cm, t0);
  return s;
}

}  // namespace

TEST_CASE("cases open only for escalated requests, once") {
  CaseStore s;
  CHECK(code_of([&] { s.open_case("c", "r", StateValue::Approved, cm, t0); }) == Errc::InvalidRequestState);
  s.open_case("c", "r", StateValue::Escalated, cm, t0);
  CHECK(code_of([&] { s.open_case("c2", "r", StateValue::Escalated, cm, t0); }) == Errc::DuplicateCase);
  CHECK(s.case_for_request("r") == "c");
  CHECK(s.get("c").status == CaseStatus::open);
}

TEST_CASE("evidence links check the chain and are idempotent") {
  auto s = opened();
  s.link_evidence("case-1", "e1", fe, t0, good);
  s.link_evidence("case-1", "e1", fe, t0, good);
  CHECK(s.get("case-1").evidence_ids == std::vector<std::string>{"e1"});
  CHECK(code_of([&] { s.link_evidence("case-1", "e2", fe, t0, bad); }) == Errc::ChainBroken);
}

TEST_CASE("closing needs finished tasks and a forensic report") {
  auto s = opened();
  s.link_evidence("case-1", "e1", fe, t0, good);
  s.assign_task("case-1", "t1", "image disk", Role::forensic_expert, t0 + days(2), cm, t0);
  CHECK(code_of([&] { s.close_case("case-1", cm, t0, good); }) == Errc::OpenTasks);
  s.finish_task("case-1", "t1", TaskStatus::done, fe, t0);
  CHECK(code_of([&] { s.finish_task("case-1", "t1", TaskStatus::cancelled, fe, t0); }) == Errc::InvalidState);
  CHECK(code_of([&] { s.finish_task("case-1", "nope", TaskStatus::done, fe, t0); }) == Errc::UnknownTask);
  CHECK(code_of([&] { s.close_case("case-1", cm, t0, good); }) == Errc::MissingForensicReport);
  auto ack = s.add_report("case-1", {"doc-1", DocumentKind::forensic_report, "fe-1", t0}, fe, t0, stored);
  CHECK(ack.notify_ticket);
  CHECK(code_of([&] { s.close_case("case-1", cm, t0, bad); }) == Errc::ChainBroken);
  const Case& c = s.close_case("case-1", cm, t0 + Duration(5), good);
  CHECK(c.status == CaseStatus::closed);
  CHECK(c.closed_at == t0 + Duration(5));
  CHECK(c.audit.back().detail["chain_heads"]["e1"] == "head-e1");
  CHECK(code_of([&] { s.link_evidence("case-1", "e2", fe, t0, good); }) == Errc::CaseClosed);
  CHECK(code_of([&] { s.assign_task("case-1", "t2", "x", Role::admin, std::nullopt, cm, t0); }) == Errc::CaseClosed);
}

TEST_CASE("a case without evidence closes without a forensic report") {
  auto s = opened();
  CHECK(s.close_case("case-1", cm, t0, good).status == CaseStatus::closed);
}

TEST_CASE("reports must exist in the store") {
  auto s = opened();
  auto missing = [](const std::string&) { return false; };
  CHECK(code_of([&] { s.add_report("case-1", {"d", DocumentKind::briefing_memo, "cm-1", t0}, cm, t0, missing); }) ==
        Errc::UnknownDocument);
  auto ack = s.add_report("case-1", {"d", DocumentKind::briefing_memo, "cm-1", t0}, cm, t0, stored);
  CHECK_FALSE(ack.notify_ticket);
}

TEST_CASE("law enforcement cannot read cases") {
  auto s = opened();
  CHECK(code_of([&] { s.read_case("case-1", Role::le_agent); }) == Errc::Forbidden);
  CHECK(s.read_case("case-1", Role::legal_advisor).case_id == "case-1");
  CHECK(code_of([&] { s.read_case("none", Role::admin); }) == Errc::NotFound);
}

TEST_CASE("audit trail replays to the same case") {
  auto s = opened();
  s.link_evidence("case-1", "e1", fe, t0, good);
  s.link_evidence("case-1", "e2", fe, t0, good);
  s.assign_task("case-1", "t1", "triage", Role::forensic_expert, std::nullopt, cm, t0);
  s.assign_task("case-1", "t2", "obsolete", Role::forensic_expert, std::nullopt, cm, t0);
  s.finish_task("case-1", "t1", TaskStatus::done, fe, t0);
  s.finish_task("case-1", "t2", TaskStatus::cancelled, cm, t0);
  s.add_report("case-1", {"d1", DocumentKind::forensic_report, "fe-1", t0}, fe, t0, stored);
  s.close_case("case-1", cm, t0, good);
  const Case& c = s.get("case-1");
  for (std::size_t i = 0; i < c.audit.size(); ++i) CHECK(c.audit[i].seq == i + 1);

  Case rebuilt = replay_audit(c.audit);
  CHECK(rebuilt.evidence_ids == c.evidence_ids);
  CHECK(rebuilt.documents == c.documents);
  CHECK(rebuilt.assignments == c.assignments);
  CHECK(rebuilt.status == c.status);
  CHECK(rebuilt.participants == c.participants);

  auto gap = c.audit;
  gap.erase(gap.begin() + 2);
  CHECK(code_of([&] { replay_audit(gap); }) == Errc::InvalidFormat);

  auto round = CaseStore::from_json(s.to_json());
  CHECK(round.cases() == s.cases());
  CHECK(s.dossier("case-1", {{"e1", "h1"}, {"e2", "h2"}})["case"]["case_id"] == "case-1");
}
