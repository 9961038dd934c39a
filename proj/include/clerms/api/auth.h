#pragma once

#include "clerms/core/enum.h"
#include "clerms/domain/model.h"

#include <array>
#include <map>
#include <optional>
#include <string>

namespace clerms::api {

using clerms::from_json;
using clerms::to_json;

struct Principal {
  std::string principal_id;
  domain::Role role{};
  std::string credential_ref;  // sha256 of the bearer token
  std::string display_name;

  bool operator==(const Principal&) const = default;
};

enum class Action {
  request_submit,
  request_read,
  request_list,
  request_acknowledge,
  document_upload,
  documents_receive,
  evaluation_begin,
  provisional_apply,
  preservation_extend,
  decision_record,
  evaluation_reopen,
  escalate,
  action_apply,
  response_issue,
  ticket_read,
  ticket_post,
  case_read,
  case_link_evidence,
  case_add_report,
  case_assign_task,
  case_finish_task,
  case_close,
  case_export,
  report_transparency,
  invoice_compute,
  agents_list,
  flow_launch,
  flow_read,
  logs_query,
  evidence_read,
  evidence_verify,
  evidence_destroy,
  notifications_read,
  state_read,
};

// own: allowed only on resources the principal owns (le_agent requests and
// their tickets).
enum class Grant { deny, own, allow };

struct Resource {
  std::optional<std::string> owner;  // principal owning the resource, if any
};

// Every (role, action) pair has an explicit grant; nothing defaults to allow.
class RoleMatrix {
 public:
  static RoleMatrix defaults();

  Grant grant(domain::Role role, Action action) const;
  void set(domain::Role role, Action action, Grant grant);
  Json to_json() const;

 private:
  std::array<std::array<Grant, 34>, 5> grants_{};
};

bool authorize(const RoleMatrix& matrix, const Principal& principal, Action action, const Resource& resource = {});

// Forbidden when authorize() denies.
void require(const RoleMatrix& matrix, const Principal& principal, Action action, const Resource& resource = {});

std::string hash_token(std::string_view token);

}  // namespace clerms::api

namespace clerms {

template <>
struct EnumNames<api::Action> {
  static constexpr std::array<std::string_view, 34> names{
      "request_submit",     "request_read",        "request_list",       "request_acknowledge", "document_upload",
      "documents_receive",  "evaluation_begin",    "provisional_apply",  "preservation_extend", "decision_record",
      "evaluation_reopen",  "escalate",            "action_apply",       "response_issue",      "ticket_read",
      "ticket_post",        "case_read",           "case_link_evidence", "case_add_report",     "case_assign_task",
      "case_finish_task",   "case_close",          "case_export",        "report_transparency", "invoice_compute",
      "agents_list",        "flow_launch",         "flow_read",          "logs_query",          "evidence_read",
      "evidence_verify",    "evidence_destroy",    "notifications_read", "state_read"};
};
template <>
struct EnumNames<api::Grant> {
  static constexpr std::array<std::string_view, 3> names{"deny", "own", "allow"};
};

}  // namespace clerms
