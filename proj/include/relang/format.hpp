#pragma once

// Output formatting. Formatting reads a result and never changes it; row
// ordering exists only here.

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relang/error.hpp"
#include "relang/eval.hpp"
#include "relang/key.hpp"
#include "relang/store.hpp"
#include "relang/syntax.hpp"
#include "relang/tuple_set.hpp"

namespace relang {

using syntax::FormatKind;

class Formatter {
 public:
  explicit Formatter(const Store& store) : store_(store) {}

  /// Literal form of a value: texts quoted, timestamps as quoted text,
  /// rows and composites as brace tuples of their components.
  std::string literal(const Value& v) const {
    if (v.is_scalar()) return scalar_literal(v);
    const Tuple* parts = components(v);
    if (!parts) return "{}";
    return brace(*parts);
  }

  /// Unquoted form used for top-level table cells.
  std::string cell(const Value& v) const {
    return v.is_scalar() ? scalar_text(v) : literal(v);
  }

  std::string format(const TupleSet& set, FormatKind kind,
                     const std::vector<std::string>& order = {}) const {
    std::vector<const Tuple*> rows = ordered(set, order);
    switch (kind) {
      case FormatKind::Tabular: return tabular(set, rows);
      case FormatKind::Csv: return csv(set, rows);
      case FormatKind::Sexpr: return sexpr(rows) + "\n";
    }
    return {};
  }

  /// A single value, as printed for a scalar query.
  std::string format(const Value& v, FormatKind kind) const {
    return (kind == FormatKind::Sexpr ? literal(v) : cell(v)) + "\n";
  }

 private:
  const Tuple* components(const Value& v) const {
    if (v.is_ref()) return store_.row(v.as_ref().relation, v.as_ref().row);
    if (v.is_composite()) return &v.as_composite().values;
    return nullptr;
  }

  std::string brace(const Tuple& t) const {
    std::string out = "{";
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) out += ' ';
      out += literal(t[i]);
    }
    return out + "}";
  }

  /// Key used for ordering: rows sort by the content they point at.
  void sort_key(std::string& out, const Value& v) const {
    if (v.is_scalar()) {
      key::put_value(out, v);
    } else if (const Tuple* parts = components(v)) {
      for (const auto& p : *parts) sort_key(out, p);
    }
  }

  std::vector<const Tuple*> ordered(const TupleSet& set,
                                    const std::vector<std::string>& order) const {
    std::vector<const Tuple*> rows;
    for (const auto& [k, t] : set.entries()) rows.push_back(&t);
    if (order.empty()) return rows;
    std::vector<std::size_t> cols;
    for (const auto& name : order) {
      std::optional<std::size_t> idx;
      for (std::size_t i = 0; i < set.width(); ++i)
        if (set.schema()[i].name == name) {
          idx = i;
          break;
        }
      if (!idx) fail(ErrorKind::UnknownAttr, "cannot order by '" + name + "': no such attribute");
      cols.push_back(*idx);
    }
    std::vector<std::pair<std::string, const Tuple*>> keyed;
    for (const Tuple* t : rows) {
      std::string k;
      for (std::size_t c : cols) sort_key(k, (*t)[c]);
      keyed.emplace_back(std::move(k), t);
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < keyed.size(); ++i) rows[i] = keyed[i].second;
    return rows;
  }

  std::string tabular(const TupleSet& set, const std::vector<const Tuple*>& rows) const {
    if (set.width() == 0) return {};
    std::vector<std::vector<std::string>> grid;
    grid.emplace_back();
    for (const auto& c : set.schema()) grid.back().push_back(c.name);
    for (const Tuple* t : rows) {
      grid.emplace_back();
      for (const auto& v : *t) grid.back().push_back(cell(v));
    }
    std::vector<std::size_t> width(set.width(), 0);
    for (const auto& r : grid)
      for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], display_width(r[i]));
    std::string out;
    for (const auto& r : grid) {
      std::string line;
      for (std::size_t i = 0; i < r.size(); ++i) {
        line += r[i];
        if (i + 1 < r.size()) line += std::string(width[i] - display_width(r[i]) + 2, ' ');
      }
      out += line + "\n";
    }
    return out;
  }

  static std::size_t display_width(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s)
      if ((c & 0xC0) != 0x80) ++n;
    return n;
  }

  static std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  }

  std::string csv(const TupleSet& set, const std::vector<const Tuple*>& rows) const {
    if (set.width() == 0) return {};
    std::string out;
    for (std::size_t i = 0; i < set.width(); ++i) {
      if (i) out += ',';
      out += csv_field(set.schema()[i].name);
    }
    out += "\r\n";
    for (const Tuple* t : rows) {
      for (std::size_t i = 0; i < t->size(); ++i) {
        if (i) out += ',';
        out += csv_field(cell((*t)[i]));
      }
      out += "\r\n";
    }
    return out;
  }

  std::string sexpr(const std::vector<const Tuple*>& rows) const {
    std::string out = "(";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i) out += ' ';
      out += brace(*rows[i]);
    }
    return out + ")";
  }

  const Store& store_;
};

}  // namespace relang
