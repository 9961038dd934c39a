#pragma once

#include "clerms/core/error.h"

#include <json.hpp>

#include <array>
#include <concepts>
#include <optional>
#include <string>
#include <string_view>

namespace clerms {

// Specialize with `static constexpr std::array<std::string_view, N> names`
// listed in declaration order of the enumerators.
template <class E>
struct EnumNames;

template <class E>
concept NamedEnum = std::is_enum_v<E> && requires { EnumNames<E>::names; };

template <NamedEnum E>
constexpr std::string_view name_of(E e) {
  return EnumNames<E>::names[static_cast<std::size_t>(e)];
}

template <NamedEnum E>
constexpr std::optional<E> enum_from(std::string_view text) {
  const auto& names = EnumNames<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == text) return static_cast<E>(i);
  return std::nullopt;
}

template <NamedEnum E>
constexpr std::size_t enum_count() {
  return EnumNames<E>::names.size();
}

template <NamedEnum E>
void to_json(nlohmann::json& j, const E& e) {
  j = std::string(name_of(e));
}

template <NamedEnum E>
void from_json(const nlohmann::json& j, E& e) {
  if (!j.is_string()) fail(Errc::InvalidFormat, "expected enum string");
  auto v = enum_from<E>(j.get_ref<const std::string&>());
  if (!v) fail(Errc::InvalidFormat, "unknown value '" + j.get<std::string>() + "'");
  e = *v;
}

}  // namespace clerms
