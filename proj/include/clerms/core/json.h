#pragma once

#include <json.hpp>

#include <string>

namespace clerms {

using Json = nlohmann::json;

// Sorted keys (nlohmann's object_t is a std::map), no insignificant
// whitespace, UTF-8 passthrough. This is the byte form used for hashing,
// persistence and the HTTP API.
inline std::string canonical(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::strict); }

}  // namespace clerms
