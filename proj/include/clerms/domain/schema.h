#pragma once

#include "clerms/core/json.h"

namespace clerms::domain {

// JSON Schema (draft 2020-12) for a submission body. Each property carries
// "x-block" naming its pre-submission block (a agent, b superior, c agency,
// d legal documents, e target) so a form can group errors the way the
// server reports them. Checks a schema cannot express (ISO country list,
// IP parsing, period ordering, origin/channel pairing, emergency narrative)
// are listed under "x-server-checks".
Json request_schema();

}  // namespace clerms::domain
