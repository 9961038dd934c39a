#include "clerms/reporting/transparency.h"

#include "clerms/core/hash.h"

#include <set>
#include <sstream>

namespace clerms::reporting {

namespace {

using domain::StateValue;
using workflow::Decision;
using workflow::DataClass;

template <typename E>
std::map<std::string, std::uint64_t> zeroed() {
  std::map<std::string, std::uint64_t> m;
  for (auto n : EnumNames<E>::names) m[std::string(n)] = 0;
  return m;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Json TransparencyReport::body() const {
  Json j{{"period", {{"start", period.start}, {"end", period.end}}},
         {"received", received},
         {"by_objective", by_objective},
         {"by_instrument_kind", by_instrument_kind},
         {"by_country", by_country},
         {"domestic_vs_foreign", domestic_vs_foreign},
         {"by_regime", by_regime},
         {"outcomes", outcomes},
         {"disclosure_data_class", disclosure_data_class},
         {"impacted_accounts", impacted_accounts}};
  j["previous_period_ref"] = previous_period_ref ? Json(*previous_period_ref) : Json(nullptr);
  return j;
}

TransparencyReport generate_transparency_report(const std::vector<const workflow::RequestRecord*>& corpus,
                                                const Period& period, std::optional<std::string> previous_period_ref) {
  if (!(period.start < period.end))
    fail(Errc::InvalidPeriod, "period start must precede end", Json{{"start", period.start}, {"end", period.end}});
  TransparencyReport r;
  r.period = period;
  r.previous_period_ref = std::move(previous_period_ref);
  r.by_objective = zeroed<domain::Objective>();
  r.by_instrument_kind = zeroed<domain::InstrumentKind>();
  r.domestic_vs_foreign = zeroed<domain::OriginKind>();
  r.by_regime = zeroed<domain::Regime>();
  r.outcomes = {{"approved", 0}, {"rejected", 0}, {"challenged", 0}, {"undecided", 0}};
  r.disclosure_data_class = {{"content", 0}, {"non_content", 0}};
  std::set<std::pair<domain::IdentifierKind, std::string>> accounts;

  for (const auto* rec : corpus) {
    const auto& req = rec->request;
    if (req.submitted_at < period.start || !(req.submitted_at < period.end)) continue;
    ++r.received;
    ++r.by_objective[std::string(name_of(req.objective))];
    if (!req.instruments.empty()) ++r.by_instrument_kind[std::string(name_of(req.instruments.front().kind))];
    ++r.by_country[req.requester.agency_country];
    ++r.domestic_vs_foreign[std::string(name_of(req.origin.kind))];
    ++r.by_regime[std::string(name_of(req.regime))];
    if (rec->decisions.empty()) {
      ++r.outcomes["undecided"];
      continue;
    }
    const auto& last = rec->decisions.back();
    switch (last.decision) {
      case Decision::approve:
        ++r.outcomes["approved"];
        for (const auto& id : req.target.identifiers) accounts.insert({id.kind, id.value});
        if (req.objective == domain::Objective::disclosure && last.response_data_class != DataClass::none)
          ++r.disclosure_data_class[std::string(name_of(last.response_data_class))];
        break;
      case Decision::reject:
        ++r.outcomes["rejected"];
        break;
      case Decision::challenge:
        ++r.outcomes["challenged"];
        break;
    }
  }
  r.impacted_accounts = accounts.size();
  r.report_id = sha256_hex(canonical(r.body()));
  return r;
}

ExportFormat parse_export_format(std::string_view name) {
  if (name == "json") return ExportFormat::json;
  if (name == "csv") return ExportFormat::csv;
  fail(Errc::UnsupportedFormat, "unsupported format '" + std::string(name) + "' (json, csv)");
}

std::string export_report(const TransparencyReport& report, ExportFormat format) {
  if (format == ExportFormat::json) return canonical(Json(report));
  std::ostringstream out;
  out << kReportCsvHeader << "\n";
  auto row = [&](const std::string& section, const std::string& key, std::uint64_t n) {
    if (n != 0) out << section << "," << csv_field(key) << "," << n << "\n";
  };
  row("received", "total", report.received);
  for (const auto& [k, n] : report.by_objective) row("by_objective", k, n);
  for (const auto& [k, n] : report.by_instrument_kind) row("by_instrument_kind", k, n);
  for (const auto& [k, n] : report.by_country) row("by_country", k, n);
  for (const auto& [k, n] : report.domestic_vs_foreign) row("domestic_vs_foreign", k, n);
  for (const auto& [k, n] : report.by_regime) row("by_regime", k, n);
  for (const auto& [k, n] : report.outcomes) row("outcomes", k, n);
  for (const auto& [k, n] : report.disclosure_data_class) row("disclosure_data_class", k, n);
  row("impacted_accounts", "total", report.impacted_accounts);
  return out.str();
}

std::string export_invoice(const Invoice& invoice, ExportFormat format) {
  if (format == ExportFormat::json) return canonical(Json(invoice));
  std::ostringstream out;
  out << kInvoiceCsvHeader << "\n";
  for (const auto& l : invoice.resource_lines)
    out << "resource," << csv_field(l.name) << "," << format_decimal(l.hourly_rate, 6) << ","
        << format_decimal(l.hours, 3) << "," << l.quantity << "," << format_cents(l.line_cost) << "\n";
  for (const auto& l : invoice.labor_lines)
    out << "labor," << csv_field(l.role) << "," << format_decimal(l.rate, 6) << "," << format_decimal(l.hours, 3)
        << ",1," << format_cents(l.cost) << "\n";
  out << "support_fees,,,,," << format_cents(invoice.support_fees) << "\n";
  out << "total,,,,," << format_cents(invoice.total) << "\n";
  return out.str();
}

TransparencyReport import_report_json(std::string_view text) {
  try {
    return Json::parse(text).get<TransparencyReport>();
  } catch (const Json::exception& e) {
    fail(Errc::InvalidFormat, std::string("report JSON: ") + e.what());
  }
}

Invoice import_invoice_json(std::string_view text) {
  try {
    return Json::parse(text).get<Invoice>();
  } catch (const Json::exception& e) {
    fail(Errc::InvalidFormat, std::string("invoice JSON: ") + e.what());
  }
}

void to_json(Json& j, const TransparencyReport& v) {
  j = v.body();
  j["report_id"] = v.report_id;
}

void from_json(const Json& j, TransparencyReport& v) {
  v.report_id = j.at("report_id").get<std::string>();
  v.period = {j.at("period").at("start").get<Timestamp>(), j.at("period").at("end").get<Timestamp>()};
  v.received = j.at("received").get<std::uint64_t>();
  using Counts = std::map<std::string, std::uint64_t>;
  v.by_objective = j.at("by_objective").get<Counts>();
  v.by_instrument_kind = j.at("by_instrument_kind").get<Counts>();
  v.by_country = j.at("by_country").get<Counts>();
  v.domestic_vs_foreign = j.at("domestic_vs_foreign").get<Counts>();
  v.by_regime = j.at("by_regime").get<Counts>();
  v.outcomes = j.at("outcomes").get<Counts>();
  v.disclosure_data_class = j.at("disclosure_data_class").get<Counts>();
  v.impacted_accounts = j.at("impacted_accounts").get<std::uint64_t>();
  const Json& prev = j.at("previous_period_ref");
  v.previous_period_ref = prev.is_null() ? std::nullopt : std::optional(prev.get<std::string>());
}

}  // namespace clerms::reporting
