#include "clerms/domain/schema.h"

#include "clerms/domain/model.h"

namespace clerms::domain {

namespace {

template <typename E>
Json enum_schema() {
  Json values = Json::array();
  for (auto n : EnumNames<E>::names) values.push_back(std::string(n));
  return Json{{"type", "string"}, {"enum", values}};
}

Json text(const char* block, bool required = true) {
  Json s{{"type", "string"}, {"x-block", block}};
  if (required) s["minLength"] = 1;
  return s;
}

}  // namespace

Json request_schema() {
  Json requester{{"type", "object"},
                 {"required",
                  {"agent_name", "agent_email", "agent_phone", "badge_id", "superior_name", "superior_contact",
                   "agency_name", "agency_country", "jurisdiction"}},
                 {"properties",
                  {{"agent_name", text("a")},
                   {"agent_email", Json{{"type", "string"}, {"format", "email"}, {"x-block", "a"}}},
                   {"agent_phone", Json{{"type", "string"}, {"pattern", "^[+0-9 ().-]*([0-9][^0-9]*){5,}$"},
                                        {"x-block", "a"}}},
                   {"badge_id", text("a")},
                   {"superior_name", text("b")},
                   {"superior_contact", text("b")},
                   {"agency_name", text("c")},
                   {"agency_country", Json{{"type", "string"}, {"pattern", "^[A-Z]{2}$"}, {"x-block", "c"}}},
                   {"jurisdiction", text("c")},
                   {"authority_type", text("c", false)}}}};

  Json instrument{{"type", "object"},
                  {"required", {"kind", "issuing_authority", "reference_number"}},
                  {"properties",
                   {{"kind", enum_schema<InstrumentKind>()},
                    {"issuing_authority", text("d")},
                    {"reference_number", text("d")},
                    {"qualifier", Json{{"type", "string"}, {"description", "required when kind is other"}}},
                    {"document_refs",
                     Json{{"type", "array"}, {"items", {{"type", "string"}, {"pattern", "^[0-9a-f]{64}$"}}}}}}}};

  Json identifier{{"type", "object"},
                  {"required", {"kind", "value"}},
                  {"properties", {{"kind", enum_schema<IdentifierKind>()}, {"value", text("e")}}}};

  Json target{{"type", "object"},
              {"required", {"identifiers"}},
              {"x-block", "e"},
              {"properties",
               {{"identifiers", Json{{"type", "array"}, {"minItems", 1}, {"items", identifier}}},
                {"service_uri", Json{{"type", "string"}, {"format", "uri"}, {"x-block", "e"}}},
                {"data_period",
                 Json{{"type", "object"},
                      {"required", {"start", "end"}},
                      {"properties",
                       {{"start", {{"type", "string"}, {"format", "date-time"}}},
                        {"end", {{"type", "string"}, {"format", "date-time"}}}}}}}}}};

  Json origin{{"type", "object"},
              {"required", {"kind"}},
              {"properties", {{"kind", enum_schema<OriginKind>()}, {"channel", enum_schema<Channel>()}}}};

  return Json{
      {"$schema", "https://json-schema.org/draft/2020-12/schema"},
      {"$id", "clerms/request-submission"},
      {"title", "Law-enforcement request submission"},
      {"type", "object"},
      {"required", {"requester", "target", "instruments", "objective", "regime", "origin"}},
      {"properties",
       {{"request_id", {{"type", "string"}, {"format", "uuid"}}},
        {"requester", requester},
        {"instruments", Json{{"type", "array"}, {"minItems", 1}, {"items", instrument}, {"x-block", "d"}}},
        {"target", target},
        {"objective", enum_schema<Objective>()},
        {"regime", enum_schema<Regime>()},
        {"origin", origin},
        {"narrative", {{"type", "string"}}},
        {"submitted_at", {{"type", "string"}, {"format", "date-time"}}}}},
      {"x-server-checks",
       {"requester.agency_country must be an ISO-3166 alpha-2 code",
        "target identifiers of kind ip must parse as IPv4 or IPv6; kind email must be an address",
        "target.data_period.start must not be after end",
        "origin.channel is required for foreign origins and forbidden for domestic ones",
        "narrative is required when regime is emergency",
        "instruments of kind other require a qualifier"}},
      {"x-error-shape",
       {{"error", "ValidationErrors"},
        {"detail", {{"errors", "[{code, field, path, block, reason}]"}}}}}};
}

}  // namespace clerms::domain
