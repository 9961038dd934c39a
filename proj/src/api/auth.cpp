#include "clerms/api/auth.h"

#include "clerms/core/hash.h"

namespace clerms::api {

using domain::Role;

namespace {

constexpr std::size_t kActions = enum_count<Action>();
static_assert(kActions == 34);

}  // namespace

RoleMatrix RoleMatrix::defaults() {
  RoleMatrix m;  // all deny
  auto allow = [&m](Role r, std::initializer_list<Action> actions, Grant g = Grant::allow) {
    for (Action a : actions) m.set(r, a, g);
  };

  allow(Role::le_agent, {Action::request_submit, Action::document_upload});
  allow(Role::le_agent,
        {Action::request_read, Action::request_list, Action::request_acknowledge, Action::ticket_read,
         Action::ticket_post},
        Grant::own);

  allow(Role::crisis_manager,
        {Action::request_read, Action::request_list, Action::document_upload, Action::documents_receive,
         Action::evaluation_begin, Action::provisional_apply, Action::preservation_extend, Action::decision_record,
         Action::evaluation_reopen, Action::escalate, Action::action_apply, Action::response_issue,
         Action::ticket_read, Action::ticket_post, Action::case_read, Action::case_link_evidence,
         Action::case_add_report, Action::case_assign_task, Action::case_finish_task, Action::case_close,
         Action::case_export, Action::report_transparency, Action::agents_list, Action::flow_read,
         Action::evidence_read, Action::evidence_verify, Action::notifications_read});

  allow(Role::forensic_expert,
        {Action::request_read, Action::request_list, Action::document_upload, Action::ticket_read,
         Action::case_read, Action::case_link_evidence, Action::case_add_report, Action::case_assign_task,
         Action::case_finish_task, Action::case_close, Action::case_export, Action::agents_list,
         Action::flow_launch, Action::flow_read, Action::logs_query, Action::evidence_read,
         Action::evidence_verify});

  // Case read plus document attach. Transparency reports are published anyway.
  allow(Role::legal_advisor,
        {Action::request_read, Action::request_list, Action::document_upload, Action::ticket_read,
         Action::case_read, Action::case_add_report, Action::evidence_verify, Action::report_transparency});

  allow(Role::admin,
        {Action::request_read, Action::request_list, Action::case_read, Action::report_transparency,
         Action::invoice_compute, Action::agents_list, Action::flow_read, Action::evidence_read,
         Action::evidence_verify, Action::evidence_destroy, Action::notifications_read, Action::state_read});
  return m;
}

Grant RoleMatrix::grant(Role role, Action action) const {
  return grants_[static_cast<std::size_t>(role)][static_cast<std::size_t>(action)];
}

void RoleMatrix::set(Role role, Action action, Grant grant) {
  grants_[static_cast<std::size_t>(role)][static_cast<std::size_t>(action)] = grant;
}

Json RoleMatrix::to_json() const {
  Json out = Json::object();
  for (std::size_t r = 0; r < enum_count<Role>(); ++r) {
    Json row = Json::object();
    for (std::size_t a = 0; a < kActions; ++a)
      row[std::string(name_of(static_cast<Action>(a)))] = grants_[r][a];
    out[std::string(name_of(static_cast<Role>(r)))] = row;
  }
  return out;
}

bool authorize(const RoleMatrix& matrix, const Principal& principal, Action action, const Resource& resource) {
  switch (matrix.grant(principal.role, action)) {
    case Grant::allow:
      return true;
    case Grant::own:
      return !resource.owner || *resource.owner == principal.principal_id;
    case Grant::deny:
      return false;
  }
  return false;
}

void require(const RoleMatrix& matrix, const Principal& principal, Action action, const Resource& resource) {
  if (!authorize(matrix, principal, action, resource))
    fail(Errc::Forbidden,
         std::string(name_of(principal.role)) + " may not " + std::string(name_of(action)),
         Json{{"role", principal.role}, {"action", action}});
}

std::string hash_token(std::string_view token) { return sha256_hex(token); }

}  // namespace clerms::api
