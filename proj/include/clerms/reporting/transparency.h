#pragma once

#include "clerms/core/json.h"
#include "clerms/core/time.h"
#include "clerms/reporting/money.h"
#include "clerms/workflow/engine.h"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace clerms::reporting {

struct Period {
  Timestamp start;  // inclusive
  Timestamp end;    // exclusive

  bool operator==(const Period&) const = default;
};

struct TransparencyReport {
  std::string report_id;  // sha256 of the canonical body without report_id
  Period period;
  std::uint64_t received = 0;
  std::map<std::string, std::uint64_t> by_objective;
  std::map<std::string, std::uint64_t> by_instrument_kind;  // first instrument of each request
  std::map<std::string, std::uint64_t> by_country;          // agency country
  std::map<std::string, std::uint64_t> domestic_vs_foreign;
  std::map<std::string, std::uint64_t> by_regime;
  std::map<std::string, std::uint64_t> outcomes;  // approved, rejected, challenged, undecided
  std::map<std::string, std::uint64_t> disclosure_data_class;  // approved disclosures only
  std::uint64_t impacted_accounts = 0;
  std::optional<std::string> previous_period_ref;

  Json body() const;
  bool operator==(const TransparencyReport&) const = default;
};

// Aggregates requests with submitted_at in [start, end). The outcome of a
// request is its latest decision. InvalidPeriod unless start < end.
TransparencyReport generate_transparency_report(const std::vector<const workflow::RequestRecord*>& corpus,
                                                const Period& period,
                                                std::optional<std::string> previous_period_ref = std::nullopt);

enum class ExportFormat { json, csv };
ExportFormat parse_export_format(std::string_view name);  // UnsupportedFormat

// Canonical JSON or CSV. Report CSV header: section,key,count (zero rows are
// omitted). Invoice CSV header: line_type,name,hourly_rate,hours,quantity,amount.
std::string export_report(const TransparencyReport& report, ExportFormat format);
std::string export_invoice(const Invoice& invoice, ExportFormat format);
TransparencyReport import_report_json(std::string_view text);
Invoice import_invoice_json(std::string_view text);

inline constexpr std::string_view kReportCsvHeader = "section,key,count";
inline constexpr std::string_view kInvoiceCsvHeader = "line_type,name,hourly_rate,hours,quantity,amount";

void to_json(Json& j, const TransparencyReport& v);
void from_json(const Json& j, TransparencyReport& v);

}  // namespace clerms::reporting
