#include "clerms/reporting/money.h"

#include "clerms/core/error.h"

#include <limits>

namespace clerms::reporting {

namespace {

constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();

std::int64_t pow10(int n) {
  std::int64_t p = 1;
  while (n-- > 0) p *= 10;
  return p;
}

// Which character, if any, is the decimal mark.
char decimal_mark(std::string_view s) {
  auto dot = s.rfind('.');
  auto comma = s.rfind(',');
  if (dot != std::string_view::npos && comma != std::string_view::npos) return dot > comma ? '.' : ',';
  if (comma != std::string_view::npos) {
    // "1,940" reads as grouping, "0,077" and "24,27" as decimals.
    bool single = s.find(',') == comma;
    std::size_t after = s.size() - comma - 1;
    bool grouping = single && after == 3 && !(comma == 1 && s[0] == '0');
    return grouping ? 0 : ',';
  }
  if (dot != std::string_view::npos) {
    if (s.find('.') != dot) return 0;  // "1.000.000"
    return '.';
  }
  return 0;
}

[[noreturn]] void bad(std::string_view text, const std::string& why) {
  fail(Errc::InvalidFormat, "bad amount '" + std::string(text) + "': " + why);
}

}  // namespace

std::int64_t parse_decimal(std::string_view text, int scale) {
  std::string_view s = text;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) bad(text, "empty");
  bool negative = false;
  if (s.front() == '-' || s.front() == '+') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!s.empty() && s.front() == '$') s.remove_prefix(1);
  if (s.empty()) bad(text, "no digits");
  char mark = decimal_mark(s);

  __int128 whole = 0;
  __int128 frac = 0;
  int frac_digits = 0;
  bool in_frac = false;
  bool any_digit = false;
  for (char ch : s) {
    if (ch >= '0' && ch <= '9') {
      any_digit = true;
      if (in_frac) {
        if (++frac_digits > scale) {
          if (ch != '0') bad(text, "more than " + std::to_string(scale) + " decimal places");
          --frac_digits;
          continue;
        }
        frac = frac * 10 + (ch - '0');
      } else {
        whole = whole * 10 + (ch - '0');
        if (whole > kMax) fail(Errc::Overflow, "amount too large: " + std::string(text));
      }
    } else if (mark != 0 && ch == mark && !in_frac) {
      in_frac = true;
    } else if (ch == ',' || ch == '.' || ch == ' ' || ch == '\'') {
      if (in_frac) bad(text, "separator after decimal mark");
    } else {
      bad(text, "unexpected character");
    }
  }
  if (!any_digit) bad(text, "no digits");
  while (frac_digits < scale) {
    frac *= 10;
    ++frac_digits;
  }
  __int128 v = whole * pow10(scale) + frac;
  if (v > kMax) fail(Errc::Overflow, "amount too large: " + std::string(text));
  return negative ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
}

std::int64_t decimal_from_json(const Json& j, int scale) {
  if (j.is_string()) return parse_decimal(j.get_ref<const std::string&>(), scale);
  if (j.is_number_integer()) {
    __int128 v = static_cast<__int128>(j.get<std::int64_t>()) * pow10(scale);
    if (v > kMax || v < -kMax) fail(Errc::Overflow, "amount too large");
    return static_cast<std::int64_t>(v);
  }
  if (j.is_number_float()) return parse_decimal(j.dump(), scale);
  fail(Errc::InvalidFormat, "amount must be a decimal string or number");
}

std::string format_decimal(std::int64_t value, int scale) {
  bool negative = value < 0;
  unsigned __int128 v = negative ? static_cast<unsigned __int128>(-static_cast<__int128>(value)) : value;
  auto p = static_cast<unsigned __int128>(pow10(scale));
  std::string whole = std::to_string(static_cast<unsigned long long>(v / p));
  std::string frac = std::to_string(static_cast<unsigned long long>(v % p));
  frac.insert(0, static_cast<std::size_t>(scale) - frac.size(), '0');
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  std::string out = (negative ? "-" : "") + whole;
  if (!frac.empty()) out += "." + frac;
  return out;
}

std::string format_cents(Cents cents) {
  bool negative = cents < 0;
  unsigned long long v = negative ? 0ULL - static_cast<unsigned long long>(cents) : static_cast<unsigned long long>(cents);
  std::string frac = std::to_string(v % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return (negative ? "-" : "") + std::to_string(v / 100) + "." + frac;
}

Cents compute_line_cost(Micros hourly_rate, MilliHours hours, std::int64_t quantity) {
  if (hourly_rate < 0) fail(Errc::NegativeInput, "hourly rate is negative");
  if (hours < 0) fail(Errc::NegativeInput, "hours are negative");
  if (quantity < 1) fail(Errc::NegativeInput, "quantity must be at least 1");
  // micro x milli = 1e-9 units; cents = 1e-2, so divide by 1e7.
  constexpr __int128 kDiv = 10'000'000;
  __int128 a = static_cast<__int128>(hourly_rate) * hours;
  if (a != 0 && quantity > std::numeric_limits<__int128>::max() / 4 / a) fail(Errc::Overflow, "line cost overflows");
  __int128 n = a * quantity;
  __int128 q = n / kDiv;
  __int128 r = n % kDiv;
  if (2 * r > kDiv || (2 * r == kDiv && (q & 1) == 1)) ++q;
  if (q > kMax) fail(Errc::Overflow, "line cost overflows");
  return static_cast<Cents>(q);
}

Invoice compute_invoice(std::string invoice_id, std::string case_id, std::vector<ResourceLine> lines,
                        std::vector<LaborLine> labor, Cents support_fees) {
  if (support_fees < 0) fail(Errc::NegativeInput, "support fees are negative");
  Invoice inv{std::move(invoice_id), std::move(case_id), std::move(lines), std::move(labor), support_fees, 0};
  __int128 total = support_fees;
  for (auto& l : inv.resource_lines) {
    l.line_cost = compute_line_cost(l.hourly_rate, l.hours, l.quantity);
    total += l.line_cost;
  }
  for (auto& l : inv.labor_lines) {
    l.cost = compute_line_cost(l.rate, l.hours, 1);
    total += l.cost;
  }
  if (total > kMax) fail(Errc::Overflow, "invoice total overflows");
  inv.total = static_cast<Cents>(total);
  return inv;
}

void to_json(Json& j, const ResourceLine& v) {
  j = Json{{"name", v.name},
           {"hourly_rate", format_decimal(v.hourly_rate, 6)},
           {"hours", format_decimal(v.hours, 3)},
           {"quantity", v.quantity},
           {"line_cost", format_cents(v.line_cost)}};
}
void from_json(const Json& j, ResourceLine& v) {
  v.name = j.value("name", "");
  v.hourly_rate = decimal_from_json(j.at("hourly_rate"), 6);
  v.hours = decimal_from_json(j.at("hours"), 3);
  v.quantity = j.contains("quantity") ? j.at("quantity").get<std::int64_t>() : 1;
  v.line_cost = j.contains("line_cost") ? decimal_from_json(j.at("line_cost"), 2) : 0;
}

void to_json(Json& j, const LaborLine& v) {
  j = Json{{"role", v.role},
           {"hours", format_decimal(v.hours, 3)},
           {"rate", format_decimal(v.rate, 6)},
           {"cost", format_cents(v.cost)}};
}
void from_json(const Json& j, LaborLine& v) {
  v.role = j.at("role").get<std::string>();
  v.hours = decimal_from_json(j.at("hours"), 3);
  v.rate = decimal_from_json(j.at("rate"), 6);
  v.cost = j.contains("cost") ? decimal_from_json(j.at("cost"), 2) : 0;
}

void to_json(Json& j, const Invoice& v) {
  j = Json{{"invoice_id", v.invoice_id},          {"case_id", v.case_id},
           {"resource_lines", v.resource_lines},  {"labor_lines", v.labor_lines},
           {"support_fees", format_cents(v.support_fees)}, {"total", format_cents(v.total)}};
}
void from_json(const Json& j, Invoice& v) {
  v.invoice_id = j.value("invoice_id", "");
  v.case_id = j.value("case_id", "");
  v.resource_lines = j.value("resource_lines", std::vector<ResourceLine>{});
  v.labor_lines = j.value("labor_lines", std::vector<LaborLine>{});
  v.support_fees = j.contains("support_fees") ? decimal_from_json(j.at("support_fees"), 2) : 0;
  v.total = j.contains("total") ? decimal_from_json(j.at("total"), 2) : 0;
}

}  // namespace clerms::reporting
