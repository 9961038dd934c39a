#pragma once

#include "clerms/domain/model.h"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace clerms::workflow {

using clerms::from_json;
using clerms::to_json;

using domain::LERequest;
using domain::StateValue;
using domain::WorkflowState;

enum class Decision { approve, reject, challenge };
enum class DataClass { content, non_content, none };
enum class ResponseKind { refusal, challenge_notice, disclosure, confirmation, certificate };

struct Config {
  Duration preservation_delay = days(90);
  Duration preservation_extension = days(90);
  Duration ack_timeout = days(30);
};

struct Signer {
  std::string principal_id;
  domain::Role role{};

  bool operator==(const Signer&) const = default;
};

struct EvaluationDecision {
  Decision decision{};
  std::string rationale;       // internal
  std::string public_summary;  // what the requester may see
  std::vector<Signer> decided_by;
  Timestamp decided_at;
  DataClass response_data_class = DataClass::none;

  bool operator==(const EvaluationDecision&) const = default;
};

struct PreservationOrder {
  std::string request_id;
  Timestamp issued_at;
  Timestamp deadline;
  bool extended = false;

  bool operator==(const PreservationOrder&) const = default;
};

struct Acknowledgment {
  std::string request_id;
  std::string measure;
  Timestamp at;

  bool operator==(const Acknowledgment&) const = default;
};

using ProvisionalOutcome = std::variant<PreservationOrder, Acknowledgment>;

struct ProvisionalMeasure {
  std::string measure;
  std::string actor;
  Timestamp at;

  bool operator==(const ProvisionalMeasure&) const = default;
};

struct Response {
  ResponseKind kind{};
  std::string body;
  DataClass data_class = DataClass::none;
  bool suppress_target_notification = false;
  Timestamp issued_at;

  bool operator==(const Response&) const = default;
};

struct StateChange {
  StateValue state{};
  Timestamp at;

  bool operator==(const StateChange&) const = default;
};

struct RequestRecord {
  LERequest request;  // request.state is the current state
  std::vector<StateChange> history;
  std::vector<std::string> document_refs;
  std::vector<EvaluationDecision> decisions;
  std::vector<ProvisionalMeasure> provisional_measures;
  std::optional<PreservationOrder> preservation;
  std::optional<std::string> case_id;
  std::optional<std::string> action_summary;
  std::optional<Response> response;
  int reevaluations = 0;
  bool escalation_override = false;

  StateValue state() const { return request.state.value; }
  const EvaluationDecision* latest_decision() const { return decisions.empty() ? nullptr : &decisions.back(); }

  bool operator==(const RequestRecord&) const = default;
};

// Successor states of `state` for `request`, filtered by static guards
// (objective, regime). Pure.
std::set<StateValue> allowed_transitions(const WorkflowState& state, const LERequest& request);

// Machine-readable transition table: [{from, to, operation, guard}, ...].
Json transition_table();

inline constexpr std::string_view kCertificateTemplate =
    "CERTIFICATE OF RECORDS. The provider does not offer live testimony. This certificate attests to the "
    "authenticity of the records produced for request {request_id} and is issued in lieu of expert testimony.";

// The request lifecycle. Not internally synchronized: callers serialize
// mutations (the service holds one writer lock).
class Engine {
 public:
  explicit Engine(Config config = {}) : config_(config) {}

  const Config& config() const { return config_; }

  StateValue submit(LERequest request, Timestamp now);
  StateValue receive_documents(const std::string& request_id, const std::vector<std::string>& document_refs,
                               const std::function<bool(const std::string&)>& document_exists, Timestamp now);
  StateValue begin_evaluation(const std::string& request_id, Timestamp now);
  ProvisionalOutcome apply_provisional_measures(const std::string& request_id, const std::string& measure,
                                                const std::string& actor, Timestamp now);
  PreservationOrder extend_preservation(const std::string& request_id);
  StateValue record_decision(const std::string& request_id, EvaluationDecision decision);
  // The single Challenged -> UnderEvaluation re-evaluation edge.
  StateValue reopen_evaluation(const std::string& request_id, Timestamp now);
  // `override_objective` is the crisis-manager override allowing escalation of
  // an approved request whose objective is neither disclosure nor preservation.
  std::string escalate(const std::string& request_id, const std::string& case_id, bool override_objective,
                       Timestamp now);
  StateValue apply_action(const std::string& request_id, const std::string& action_summary, Timestamp now);
  Response issue_response(const std::string& request_id, const std::string& body, bool suppress_target_notification,
                          Timestamp now);
  StateValue acknowledge(const std::string& request_id, Timestamp now);
  // Closes every ResponseIssued request whose acknowledgment timeout elapsed.
  std::vector<std::string> close_expired(Timestamp now);

  // Guard-filtered successors, also accounting for the re-evaluation budget.
  std::set<StateValue> successors(const std::string& request_id) const;

  bool contains(const std::string& request_id) const { return records_.count(request_id) != 0; }
  const RequestRecord& get(const std::string& request_id) const;
  const std::map<std::string, RequestRecord>& records() const { return records_; }

  Json to_json() const;
  static Engine from_json(const Json& j, Config config);

 private:
  RequestRecord& record(const std::string& request_id);
  void move(RequestRecord& r, StateValue to, Timestamp now);

  Config config_;
  std::map<std::string, RequestRecord> records_;
};

// Checks the per-record invariants; returns a description of the first
// violation, or nullopt.
std::optional<std::string> check_invariants(const RequestRecord& record);

void to_json(Json& j, const Signer& v);
void from_json(const Json& j, Signer& v);
void to_json(Json& j, const EvaluationDecision& v);
void from_json(const Json& j, EvaluationDecision& v);
void to_json(Json& j, const PreservationOrder& v);
void from_json(const Json& j, PreservationOrder& v);
void to_json(Json& j, const Acknowledgment& v);
void to_json(Json& j, const Response& v);
void from_json(const Json& j, Response& v);
void to_json(Json& j, const RequestRecord& v);
void from_json(const Json& j, RequestRecord& v);

}  // namespace clerms::workflow

namespace clerms {

template <>
struct EnumNames<workflow::Decision> {
  static constexpr std::array<std::string_view, 3> names{"approve", "reject", "challenge"};
};
template <>
struct EnumNames<workflow::DataClass> {
  static constexpr std::array<std::string_view, 3> names{"content", "non_content", "none"};
};
template <>
struct EnumNames<workflow::ResponseKind> {
  static constexpr std::array<std::string_view, 5> names{"refusal", "challenge_notice", "disclosure", "confirmation",
                                                         "certificate"};
};

}  // namespace clerms
