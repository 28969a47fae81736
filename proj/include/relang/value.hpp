#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "relang/error.hpp"

namespace relang {

enum class ScalarType { Int, Real, Text, Timestamp };

constexpr std::string_view scalar_type_name(ScalarType t) {
  switch (t) {
    case ScalarType::Int: return "int";
    case ScalarType::Real: return "real";
    case ScalarType::Text: return "text";
    case ScalarType::Timestamp: return "timestamp";
  }
  return "?";
}

inline std::optional<ScalarType> scalar_type_from_name(std::string_view name) {
  if (name == "int") return ScalarType::Int;
  if (name == "real") return ScalarType::Real;
  if (name == "text") return ScalarType::Text;
  if (name == "timestamp") return ScalarType::Timestamp;
  return std::nullopt;
}

using RowId = std::uint64_t;

/// A calendar instant at day granularity. Years are astronomical (1 BC is
/// year 0); month and day are 0 when the literal omitted them.
struct Timestamp {
  std::int64_t year = 0;
  std::int32_t month = 0;
  std::int32_t day = 0;

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

namespace detail {

inline bool is_leap(std::int64_t year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

inline int days_in_month(std::int64_t year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return month == 2 && is_leap(year) ? 29 : kDays[month - 1];
}

inline bool parse_digits(std::string_view s, std::int64_t& out) {
  if (s.empty() || s.size() > 18) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Accepts `±YYYY[-MM[-DD]]` and `<year> BC` / `<year> AD`.
inline std::optional<Timestamp> parse_timestamp(std::string_view text) {
  std::string_view s = detail::trim(text);
  if (s.empty()) return std::nullopt;

  for (std::string_view era : {std::string_view(" BC"), std::string_view(" AD")}) {
    if (s.size() > era.size() && s.substr(s.size() - era.size()) == era) {
      std::int64_t y = 0;
      if (!detail::parse_digits(detail::trim(s.substr(0, s.size() - era.size())), y) || y == 0)
        return std::nullopt;
      return Timestamp{era == " BC" ? 1 - y : y, 0, 0};
    }
  }

  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  Timestamp ts;
  auto dash = s.find('-');
  if (!detail::parse_digits(s.substr(0, dash), ts.year)) return std::nullopt;
  if (negative) ts.year = -ts.year;
  if (dash == std::string_view::npos) return ts;

  s.remove_prefix(dash + 1);
  dash = s.find('-');
  std::int64_t month = 0;
  std::string_view month_part = s.substr(0, dash);
  if (month_part.size() != 2 || !detail::parse_digits(month_part, month) || month < 1 ||
      month > 12)
    return std::nullopt;
  ts.month = static_cast<std::int32_t>(month);
  if (dash == std::string_view::npos) return ts;

  std::int64_t day = 0;
  std::string_view day_part = s.substr(dash + 1);
  if (day_part.size() != 2 || !detail::parse_digits(day_part, day) || day < 1 ||
      day > detail::days_in_month(ts.year, ts.month))
    return std::nullopt;
  ts.day = static_cast<std::int32_t>(day);
  return ts;
}

/// `1941-03-26`, `-0749`; with `force_sign` positive years get a `+`.
inline std::string format_timestamp(const Timestamp& ts, bool force_sign = false) {
  char buf[64];
  std::int64_t mag = ts.year < 0 ? -ts.year : ts.year;
  const char* sign = ts.year < 0 ? "-" : (force_sign ? "+" : "");
  int n = std::snprintf(buf, sizeof buf, "%s%04lld", sign, static_cast<long long>(mag));
  if (ts.month != 0) n += std::snprintf(buf + n, sizeof buf - n, "-%02d", ts.month);
  if (ts.day != 0) std::snprintf(buf + n, sizeof buf - n, "-%02d", ts.day);
  return buf;
}

/// Shortest text that reads back as the same double, always carrying a
/// fraction or exponent so it lexes as a real.
inline std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string out(buf, p);
  if (out.find_first_of(".eE") == std::string::npos) out += ".0";
  return out;
}

inline std::string quote_text(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

struct Value;

/// Reference to a row of a simple relation.
struct Ref {
  std::string relation;
  RowId row = 0;

  friend bool operator==(const Ref&, const Ref&) = default;
};

/// Inline value of a domain-class relation (a complex type such as a point).
struct Composite {
  std::string domain;
  std::vector<Value> values;

  friend bool operator==(const Composite& a, const Composite& b);
};

struct Value {
  using Storage = std::variant<std::int64_t, double, std::string, Timestamp, Ref, Composite>;
  Storage v;

  Value() : v(std::int64_t{0}) {}
  Value(std::int64_t i) : v(i) {}
  Value(int i) : v(static_cast<std::int64_t>(i)) {}
  Value(double d) : v(d) {}
  Value(std::string s) : v(std::move(s)) {}
  Value(const char* s) : v(std::string(s)) {}
  Value(Timestamp t) : v(t) {}
  Value(Ref r) : v(std::move(r)) {}
  Value(Composite c) : v(std::move(c)) {}

  bool is_int() const { return std::holds_alternative<std::int64_t>(v); }
  bool is_real() const { return std::holds_alternative<double>(v); }
  bool is_text() const { return std::holds_alternative<std::string>(v); }
  bool is_timestamp() const { return std::holds_alternative<Timestamp>(v); }
  bool is_ref() const { return std::holds_alternative<Ref>(v); }
  bool is_composite() const { return std::holds_alternative<Composite>(v); }
  bool is_scalar() const { return !is_ref() && !is_composite(); }

  std::int64_t as_int() const { return std::get<std::int64_t>(v); }
  double as_real() const { return std::get<double>(v); }
  const std::string& as_text() const { return std::get<std::string>(v); }
  const Timestamp& as_timestamp() const { return std::get<Timestamp>(v); }
  const Ref& as_ref() const { return std::get<Ref>(v); }
  const Composite& as_composite() const { return std::get<Composite>(v); }

  std::optional<ScalarType> scalar_type() const {
    switch (v.index()) {
      case 0: return ScalarType::Int;
      case 1: return ScalarType::Real;
      case 2: return ScalarType::Text;
      case 3: return ScalarType::Timestamp;
      default: return std::nullopt;
    }
  }

  friend bool operator==(const Value& a, const Value& b) {
    // -0.0 and 0.0 are the same real
    if (a.is_real() && b.is_real()) return a.as_real() == b.as_real();
    return a.v == b.v;
  }
};

inline bool operator==(const Composite& a, const Composite& b) {
  return a.domain == b.domain && a.values == b.values;
}

using Tuple = std::vector<Value>;

/// Text form of a scalar as the language would print it unquoted.
inline std::string scalar_text(const Value& v) {
  if (v.is_int()) return std::to_string(v.as_int());
  if (v.is_real()) return format_real(v.as_real());
  if (v.is_text()) return v.as_text();
  if (v.is_timestamp()) return format_timestamp(v.as_timestamp());
  return "?";
}

/// Literal that re-parses to an equal constant; timestamps become text.
inline std::string scalar_literal(const Value& v) {
  if (v.is_text()) return quote_text(v.as_text());
  if (v.is_timestamp()) return quote_text(format_timestamp(v.as_timestamp()));
  return scalar_text(v);
}

/// Conversion used by typecasts and by comparison coercion. Returns nullopt
/// when the value cannot represent the target type.
inline std::optional<Value> cast_scalar(const Value& v, ScalarType target) {
  switch (target) {
    case ScalarType::Int:
      if (v.is_int()) return v;
      if (v.is_real()) {
        double d = v.as_real();
        if (std::trunc(d) == d && std::fabs(d) < 9.2e18) return Value(static_cast<std::int64_t>(d));
        return std::nullopt;
      }
      if (v.is_text()) {
        std::string_view s = detail::trim(v.as_text());
        std::int64_t out = 0;
        const char* b = s.data();
        if (!s.empty() && s.front() == '+') ++b;
        auto [p, ec] = std::from_chars(b, s.data() + s.size(), out);
        if (s.empty() || ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
        return Value(out);
      }
      return std::nullopt;
    case ScalarType::Real:
      if (v.is_real()) return v;
      if (v.is_int()) return Value(static_cast<double>(v.as_int()));
      if (v.is_text()) {
        std::string_view s = detail::trim(v.as_text());
        double out = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (s.empty() || ec != std::errc() || p != s.data() + s.size() || !std::isfinite(out))
          return std::nullopt;
        return Value(out);
      }
      return std::nullopt;
    case ScalarType::Text:
      if (v.is_scalar()) return Value(scalar_text(v));
      return std::nullopt;
    case ScalarType::Timestamp:
      if (v.is_timestamp()) return v;
      if (v.is_text()) {
        if (auto ts = parse_timestamp(v.as_text())) return Value(*ts);
        return std::nullopt;
      }
      if (v.is_int()) return Value(Timestamp{v.as_int(), 0, 0});
      return std::nullopt;
  }
  return std::nullopt;
}

/// Conversion applied when a value is stored at a position of the given
/// type: lossless widening and text-to-timestamp parsing only.
inline std::optional<Value> conform_scalar(const Value& v, ScalarType target) {
  auto type = v.scalar_type();
  if (!type) return std::nullopt;
  if (*type == target) return v;
  if (*type == ScalarType::Int && target == ScalarType::Real)
    return Value(static_cast<double>(v.as_int()));
  if (*type == ScalarType::Text && target == ScalarType::Timestamp) {
    if (auto ts = parse_timestamp(v.as_text())) return Value(*ts);
  }
  return std::nullopt;
}

}  // namespace relang
