#include "clerms/domain/validation.h"

#include "clerms/core/hash.h"

#include <arpa/inet.h>

#include <algorithm>
#include <cctype>
#include <array>
#include <regex>

namespace clerms::domain {

namespace {

constexpr std::array<std::string_view, 249> kCountries{
#include "iso_country.inc"
};

// Collects errors while walking a raw submission document.
class Reader {
 public:
  explicit Reader(std::vector<FieldError>& errors) : errors_(errors) {}

  void missing(std::string field, std::string path, std::string block) {
    errors_.push_back({Errc::MissingField, std::move(field), std::move(path), std::move(block), "required"});
  }
  void invalid(std::string field, std::string path, std::string block, std::string reason) {
    errors_.push_back({Errc::InvalidFormat, std::move(field), std::move(path), std::move(block), std::move(reason)});
  }

  const Json* child(const Json& obj, const std::string& key) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
  }

  // Required non-empty string.
  std::string text(const Json& obj, const std::string& key, const std::string& prefix, const std::string& block) {
    const Json* v = child(obj, key);
    std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!v) {
      missing(key, path, block);
      return {};
    }
    if (!v->is_string()) {
      invalid(key, path, block, "must be a string");
      return {};
    }
    std::string s = v->get<std::string>();
    if (std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); })) {
      missing(key, path, block);
      return {};
    }
    return s;
  }

  std::optional<std::string> optional_text(const Json& obj, const std::string& key, const std::string& path,
                                           const std::string& block) {
    const Json* v = child(obj, key);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      invalid(key, path, block, "must be a string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  template <class E>
  std::optional<E> enumeration(const Json& obj, const std::string& key, const std::string& path,
                               const std::string& block) {
    const Json* v = child(obj, key);
    if (!v) {
      missing(key, path, block);
      return std::nullopt;
    }
    if (!v->is_string()) {
      invalid(key, path, block, "must be a string");
      return std::nullopt;
    }
    auto e = enum_from<E>(v->get_ref<const std::string&>());
    if (!e) invalid(key, path, block, "unknown value '" + v->get<std::string>() + "'");
    return e;
  }

  std::optional<Timestamp> timestamp(const Json& obj, const std::string& key, const std::string& path,
                                     const std::string& block, bool required) {
    const Json* v = child(obj, key);
    if (!v) {
      if (required) missing(key, path, block);
      return std::nullopt;
    }
    std::optional<Timestamp> t;
    if (v->is_string()) t = Timestamp::parse(v->get_ref<const std::string&>());
    if (!t) invalid(key, path, block, "not a UTC timestamp");
    return t;
  }

 private:
  std::vector<FieldError>& errors_;
};

bool is_phone(std::string_view s) {
  int digits = 0;
  for (char c : s) {
    if (c >= '0' && c <= '9')
      ++digits;
    else if (c != ' ' && c != '+' && c != '-' && c != '(' && c != ')' && c != '.')
      return false;
  }
  return digits >= 5;
}

RequesterIdentity read_requester(Reader& r, const Json& raw) {
  RequesterIdentity id;
  const Json* block = r.child(raw, "requester");
  static const Json kEmpty = Json::object();
  if (block && !block->is_object()) {
    r.invalid("requester", "requester", "", "must be an object");
    block = nullptr;
  }
  const Json& b = block ? *block : kEmpty;
  const std::string p = "requester";

  id.agent_name = r.text(b, "agent_name", p, "a");
  id.agent_email = r.text(b, "agent_email", p, "a");
  if (!id.agent_email.empty() && !is_email(id.agent_email))
    r.invalid("agent_email", p + ".agent_email", "a", "not an email address");
  id.agent_phone = r.text(b, "agent_phone", p, "a");
  if (!id.agent_phone.empty() && !is_phone(id.agent_phone))
    r.invalid("agent_phone", p + ".agent_phone", "a", "not a phone number");
  id.badge_id = r.text(b, "badge_id", p, "a");

  id.superior_name = r.text(b, "superior_name", p, "b");
  id.superior_contact = r.text(b, "superior_contact", p, "b");

  id.agency_name = r.text(b, "agency_name", p, "c");
  id.agency_country = r.text(b, "agency_country", p, "c");
  if (!id.agency_country.empty() && !is_iso_country(id.agency_country))
    r.invalid("agency_country", p + ".agency_country", "c", "not an ISO-3166 alpha-2 code");
  id.jurisdiction = r.text(b, "jurisdiction", p, "c");
  id.authority_type = r.optional_text(b, "authority_type", p + ".authority_type", "c").value_or("LEA");
  return id;
}

std::vector<LegalInstrument> read_instruments(Reader& r, const Json& raw) {
  std::vector<LegalInstrument> out;
  const Json* list = r.child(raw, "instruments");
  if (!list || (list->is_array() && list->empty())) {
    r.missing("instruments", "instruments", "d");
    return out;
  }
  if (!list->is_array()) {
    r.invalid("instruments", "instruments", "d", "must be a list");
    return out;
  }
  for (std::size_t i = 0; i < list->size(); ++i) {
    const Json& item = (*list)[i];
    std::string p = "instruments[" + std::to_string(i) + "]";
    if (!item.is_object()) {
      r.invalid("instrument", p, "d", "must be an object");
      continue;
    }
    LegalInstrument ins;
    auto kind = r.enumeration<InstrumentKind>(item, "kind", p + ".kind", "d");
    if (kind) ins.kind = *kind;
    ins.issuing_authority = r.text(item, "issuing_authority", p, "d");
    ins.reference_number = r.text(item, "reference_number", p, "d");
    ins.qualifier = r.optional_text(item, "qualifier", p + ".qualifier", "d").value_or("");
    if (kind == InstrumentKind::other && ins.qualifier.empty()) r.missing("qualifier", p + ".qualifier", "d");
    if (const Json* refs = r.child(item, "document_refs")) {
      if (!refs->is_array()) {
        r.invalid("document_refs", p + ".document_refs", "d", "must be a list");
      } else {
        for (std::size_t k = 0; k < refs->size(); ++k) {
          const Json& ref = (*refs)[k];
          if (!ref.is_string() || !is_sha256_hex(ref.get_ref<const std::string&>()))
            r.invalid("document_refs", p + ".document_refs[" + std::to_string(k) + "]", "d",
                      "not a 64-char lowercase hex content id");
          else
            ins.document_refs.push_back(ref.get<std::string>());
        }
      }
    }
    out.push_back(std::move(ins));
  }
  return out;
}

TargetSpec read_target(Reader& r, const Json& raw) {
  TargetSpec t;
  const Json* block = r.child(raw, "target");
  if (!block) {
    r.missing("target", "target", "e");
    return t;
  }
  if (!block->is_object()) {
    r.invalid("target", "target", "e", "must be an object");
    return t;
  }
  const Json* ids = r.child(*block, "identifiers");
  if (!ids || (ids->is_array() && ids->empty())) {
    r.missing("identifiers", "target.identifiers", "e");
  } else if (!ids->is_array()) {
    r.invalid("identifiers", "target.identifiers", "e", "must be a list");
  } else {
    for (std::size_t i = 0; i < ids->size(); ++i) {
      const Json& item = (*ids)[i];
      std::string p = "target.identifiers[" + std::to_string(i) + "]";
      if (!item.is_object()) {
        r.invalid("identifier", p, "e", "must be an object");
        continue;
      }
      TargetIdentifier id;
      auto kind = r.enumeration<IdentifierKind>(item, "kind", p + ".kind", "e");
      id.value = r.text(item, "value", p, "e");
      if (kind) {
        id.kind = *kind;
        if (!id.value.empty()) {
          if (*kind == IdentifierKind::ip && !is_ip_address(id.value))
            r.invalid("identifier", p + ".value", "e", "not an IP address");
          if (*kind == IdentifierKind::email && !is_email(id.value))
            r.invalid("identifier", p + ".value", "e", "not an email address");
        }
      }
      t.identifiers.push_back(std::move(id));
    }
  }
  t.service_uri = r.optional_text(*block, "service_uri", "target.service_uri", "e");
  if (t.service_uri && !is_uri(*t.service_uri)) r.invalid("service_uri", "target.service_uri", "e", "not a URI");
  if (const Json* period = r.child(*block, "data_period")) {
    if (!period->is_object()) {
      r.invalid("data_period", "target.data_period", "e", "must be an object");
    } else {
      auto start = r.timestamp(*period, "start", "target.data_period.start", "e", true);
      auto end = r.timestamp(*period, "end", "target.data_period.end", "e", true);
      if (start && end) {
        if (*start > *end)
          r.invalid("data_period", "target.data_period", "e", "start is after end");
        else
          t.data_period = DataPeriod{*start, *end};
      }
    }
  }
  return t;
}

}  // namespace

void to_json(Json& j, const FieldError& e) {
  j = Json{{"error", std::string(to_string(e.code))}, {"field", e.field}, {"path", e.path}, {"reason", e.reason}};
  if (!e.block.empty()) j["block"] = e.block;
}

bool ValidationResult::has(Errc code, std::string_view field) const {
  return std::any_of(errors.begin(), errors.end(),
                     [&](const FieldError& e) { return e.code == code && e.field == field; });
}

std::optional<LERequest> parse_request(const Json& raw, std::vector<FieldError>& errors, IdGenerator* ids,
                                       std::optional<Timestamp> now, bool keep_state) {
  const std::size_t before = errors.size();
  Reader r(errors);
  if (!raw.is_object()) {
    r.invalid("submission", "", "", "must be a JSON object");
    return std::nullopt;
  }
  LERequest req;

  if (auto id = r.optional_text(raw, "request_id", "request_id", "")) {
    if (!is_uuid(*id))
      r.invalid("request_id", "request_id", "", "not a UUID");
    else
      req.request_id = *id;
  } else if (ids) {
    req.request_id = ids->uuid();
  } else {
    r.missing("request_id", "request_id", "");
  }

  req.requester = read_requester(r, raw);
  req.instruments = read_instruments(r, raw);
  req.target = read_target(r, raw);

  auto objective = r.enumeration<Objective>(raw, "objective", "objective", "");
  auto regime = r.enumeration<Regime>(raw, "regime", "regime", "");
  if (objective) req.objective = *objective;
  if (regime) req.regime = *regime;

  const Json* origin = r.child(raw, "origin");
  if (!origin) {
    r.missing("origin", "origin", "");
  } else if (!origin->is_object()) {
    r.invalid("origin", "origin", "", "must be an object");
  } else {
    auto kind = r.enumeration<OriginKind>(*origin, "kind", "origin.kind", "");
    if (kind) req.origin.kind = *kind;
    if (r.child(*origin, "channel")) {
      req.origin.channel = r.enumeration<Channel>(*origin, "channel", "origin.channel", "");
      if (kind == OriginKind::domestic) r.invalid("channel", "origin.channel", "", "channel applies to foreign origin only");
    } else if (kind == OriginKind::foreign) {
      r.missing("channel", "origin.channel", "");
    }
  }

  req.narrative = r.optional_text(raw, "narrative", "narrative", "").value_or("");
  if (regime == Regime::emergency && req.narrative.find_first_not_of(" \t\r\n") == std::string::npos)
    r.missing("narrative", "narrative", "");

  if (auto at = r.timestamp(raw, "submitted_at", "submitted_at", "", !now)) {
    req.submitted_at = *at;
  } else if (now && !r.child(raw, "submitted_at")) {
    req.submitted_at = *now;
  }

  if (keep_state) {
    const Json* state = r.child(raw, "state");
    if (!state) {
      r.missing("state", "state", "");
    } else {
      try {
        req.state = state->get<WorkflowState>();
      } catch (const std::exception&) {
        r.invalid("state", "state", "", "not a workflow state");
      }
    }
  }

  if (errors.size() != before) return std::nullopt;
  return req;
}

ValidationResult validate_submission(const Json& raw, IdGenerator& ids, Timestamp now) {
  ValidationResult result;
  result.request = parse_request(raw, result.errors, &ids, now, false);
  return result;
}

bool is_iso_country(std::string_view code) {
  return std::binary_search(kCountries.begin(), kCountries.end(), code);
}

bool is_ip_address(std::string_view text) {
  std::string s(text);
  unsigned char buf[sizeof(struct in6_addr)];
  return inet_pton(AF_INET, s.c_str(), buf) == 1 || inet_pton(AF_INET6, s.c_str(), buf) == 1;
}

bool is_email(std::string_view text) {
  static const std::regex re(R"(^[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(\.[A-Za-z0-9\-]+)+$)");
  return std::regex_match(text.begin(), text.end(), re);
}

bool is_uri(std::string_view text) {
  static const std::regex re(R"(^[A-Za-z][A-Za-z0-9+.\-]*://[^\s/?#]+[^\s]*$)");
  return std::regex_match(text.begin(), text.end(), re);
}

}  // namespace clerms::domain
