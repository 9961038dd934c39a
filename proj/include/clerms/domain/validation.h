#pragma once

#include "clerms/core/ids.h"
#include "clerms/domain/model.h"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clerms::domain {

struct FieldError {
  Errc code = Errc::MissingField;  // MissingField or InvalidFormat
  std::string field;               // leaf name, e.g. "agency_name", "identifier"
  std::string path;                // full path, e.g. "requester.agency_name"
  std::string block;               // pre-submission block "a".."e", or empty
  std::string reason;

  bool operator==(const FieldError&) const = default;
};

void to_json(Json& j, const FieldError& e);

struct ValidationResult {
  std::optional<LERequest> request;
  std::vector<FieldError> errors;

  bool ok() const { return request.has_value(); }
  bool has(Errc code, std::string_view field) const;
};

// Validates a submission document and returns a PreSubmitted request or every
// field-level error found. A request_id/submitted_at already present in the
// document is kept; otherwise they are drawn from `ids` and `now`.
ValidationResult validate_submission(const Json& raw, IdGenerator& ids, Timestamp now);

// Same checks, reporting into `errors`; `keep_state` preserves a stored
// "state" block instead of forcing PreSubmitted.
std::optional<LERequest> parse_request(const Json& raw, std::vector<FieldError>& errors, IdGenerator* ids,
                                       std::optional<Timestamp> now, bool keep_state);

bool is_iso_country(std::string_view code);
bool is_ip_address(std::string_view text);
bool is_email(std::string_view text);
bool is_uri(std::string_view text);

}  // namespace clerms::domain
