#pragma once

#include "clerms/core/json.h"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clerms::reporting {

// Fixed-point amounts. No floating point anywhere in this module.
using Cents = std::int64_t;       // 1/100 currency unit
using Micros = std::int64_t;      // 1/1,000,000 currency unit (rates)
using MilliHours = std::int64_t;  // 1/1000 hour

// Parses a decimal string into an integer scaled by 10^scale. Accepts a
// point or a comma as decimal mark and "," / "." / " " group separators
// ("8.847,69", "1,940.40", "0,077"). More fractional digits than `scale`
// is InvalidFormat rather than silent rounding.
std::int64_t parse_decimal(std::string_view text, int scale);
// JSON string or integer; a JSON float is read through its shortest
// round-trip text.
std::int64_t decimal_from_json(const Json& j, int scale);

std::string format_decimal(std::int64_t value, int scale);  // minimal digits, no grouping
std::string format_cents(Cents cents);                      // always two decimals

// round-half-even(rate x hours x quantity) in cents. NegativeInput for a
// negative rate or hours or quantity < 1, Overflow past int64 cents.
Cents compute_line_cost(Micros hourly_rate, MilliHours hours, std::int64_t quantity);

struct ResourceLine {
  std::string name;
  Micros hourly_rate = 0;
  MilliHours hours = 0;
  std::int64_t quantity = 1;
  Cents line_cost = 0;

  bool operator==(const ResourceLine&) const = default;
};

struct LaborLine {
  std::string role;
  MilliHours hours = 0;
  Micros rate = 0;
  Cents cost = 0;

  bool operator==(const LaborLine&) const = default;
};

struct Invoice {
  std::string invoice_id;
  std::string case_id;
  std::vector<ResourceLine> resource_lines;
  std::vector<LaborLine> labor_lines;
  Cents support_fees = 0;
  Cents total = 0;

  bool operator==(const Invoice&) const = default;
};

// Costs on the input lines are ignored and recomputed. NegativeInput for
// negative support fees, Overflow on the sum.
Invoice compute_invoice(std::string invoice_id, std::string case_id, std::vector<ResourceLine> lines,
                        std::vector<LaborLine> labor, Cents support_fees);

// Amounts are decimal strings ("1940.40", "0.077", "5040").
void to_json(Json& j, const ResourceLine& v);
void from_json(const Json& j, ResourceLine& v);
void to_json(Json& j, const LaborLine& v);
void from_json(const Json& j, LaborLine& v);
void to_json(Json& j, const Invoice& v);
void from_json(const Json& j, Invoice& v);

}  // namespace clerms::reporting
