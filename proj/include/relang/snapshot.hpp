#pragma once

// Text snapshots of a database.
//
//   ;; relang snapshot v1
//   relation (author (name text) (birthdate timestamp))
//   relation (book author (title text) timestamp)
//   row author 1 {"Austen" +1775-12-16}
//   row book 1 {#author:1 "Emma" +1815}
//
// Rows are listed per relation in canonical-key order and numbered from 1;
// a reference names the target row by its number. Row ids are not saved.
// Loading assigns row ids so that every relation scans in the saved order
// again, which makes save(load(text)) == text for any saved text.

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "relang/error.hpp"
#include "relang/syntax.hpp"
#include "relang/txn.hpp"
#include "relang/value.hpp"

namespace relang::snapshot {

inline constexpr std::string_view kHeader = ";; relang snapshot v1";

namespace detail {

using Ordinals = std::map<std::string, std::map<RowId, std::size_t>>;

inline void put_value(std::string& out, const Value& v, const Ordinals& ords) {
  if (v.is_int()) {
    out += std::to_string(v.as_int());
  } else if (v.is_real()) {
    out += format_real(v.as_real());
  } else if (v.is_text()) {
    out += quote_text(v.as_text());
  } else if (v.is_timestamp()) {
    out += format_timestamp(v.as_timestamp(), true);
  } else if (v.is_ref()) {
    const Ref& r = v.as_ref();
    out += "#" + r.relation + ":" + std::to_string(ords.at(r.relation).at(r.row));
  } else {
    out += '{';
    const auto& parts = v.as_composite().values;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out += ' ';
      put_value(out, parts[i], ords);
    }
    out += '}';
  }
}

/// A row value as read, before row ids exist.
struct Raw {
  enum Kind { Scalar, Reference, Tuple } kind = Scalar;
  Value scalar;
  std::string relation;  // Reference: target; Tuple: domain name
  std::size_t ordinal = 0;
  std::vector<Raw> parts;
};

struct RawRow {
  std::size_t line = 0;
  std::vector<Raw> values;
};

[[noreturn]] inline void bad(std::size_t line, const std::string& msg, std::size_t col = 0) {
  fail(ErrorKind::SnapshotFormatError, "line " + std::to_string(line) + ": " + msg,
       {static_cast<std::uint32_t>(line), static_cast<std::uint32_t>(col)});
}

class RowParser {
 public:
  RowParser(std::string_view text, std::size_t line, const Catalog& catalog)
      : s_(text), line_(line), catalog_(catalog) {}

  std::string word() {
    skip();
    std::size_t start = i_;
    while (i_ < s_.size() && s_[i_] != ' ' && s_[i_] != '\t' && s_[i_] != '{' && s_[i_] != '}') ++i_;
    if (start == i_) bad(line_, "expected a word", i_ + 1);
    return std::string(s_.substr(start, i_ - start));
  }

  std::size_t number() {
    std::string w = word();
    std::size_t n = 0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), n);
    if (ec != std::errc() || p != w.data() + w.size() || n == 0)
      bad(line_, "expected a row number, found '" + w + "'", i_ + 1);
    return n;
  }

  std::vector<Raw> tuple(const std::vector<Attribute>& attrs) {
    expect('{');
    std::vector<Raw> out;
    for (const auto& a : attrs) out.push_back(value(a.type));
    expect('}');
    return out;
  }

  void end() {
    skip();
    if (i_ != s_.size()) bad(line_, "trailing text", i_ + 1);
  }

 private:
  void skip() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }

  void expect(char c) {
    skip();
    if (i_ >= s_.size() || s_[i_] != c) bad(line_, std::string("expected '") + c + "'", i_ + 1);
    ++i_;
  }

  Raw value(const DomainType& type) {
    skip();
    if (!type.is_scalar()) {
      const RelationDef& target = catalog_.lookup(type.relation_name());
      Raw r;
      if (!target.is_simple()) {
        r.kind = Raw::Tuple;
        r.relation = target.name;
        r.parts = tuple(target.attrs);
        return r;
      }
      expect('#');
      std::size_t colon = s_.find(':', i_);
      if (colon == std::string_view::npos) bad(line_, "expected '#relation:number'", i_ + 1);
      r.kind = Raw::Reference;
      r.relation = std::string(s_.substr(i_, colon - i_));
      if (r.relation != target.name)
        bad(line_, "expected a row of '" + target.name + "', found '" + r.relation + "'", i_ + 1);
      i_ = colon + 1;
      r.ordinal = number();
      return r;
    }
    if (type.scalar_type() == ScalarType::Text) return {Raw::Scalar, Value(text()), {}, 0, {}};
    std::size_t start = i_;
    while (i_ < s_.size() && s_[i_] != ' ' && s_[i_] != '\t' && s_[i_] != '}') ++i_;
    std::string w(s_.substr(start, i_ - start));
    std::optional<Value> v;
    switch (type.scalar_type()) {
      case ScalarType::Int: {
        std::int64_t n = 0;
        auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), n);
        if (!w.empty() && ec == std::errc() && p == w.data() + w.size()) v = Value(n);
        break;
      }
      case ScalarType::Real: {
        double d = 0;
        auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), d);
        if (!w.empty() && ec == std::errc() && p == w.data() + w.size()) v = Value(d);
        break;
      }
      default:
        if (auto ts = parse_timestamp(w)) v = Value(*ts);
    }
    if (!v) bad(line_, "expected " + type.name() + ", found '" + w + "'", start + 1);
    return {Raw::Scalar, *v, {}, 0, {}};
  }

  std::string text() {
    expect('"');
    std::string out;
    while (true) {
      if (i_ >= s_.size()) bad(line_, "unterminated text", i_ + 1);
      char c = s_[i_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (i_ >= s_.size()) bad(line_, "unterminated text", i_ + 1);
      char e = s_[i_++];
      out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
  std::size_t line_;
  const Catalog& catalog_;
};

inline void flatten(const std::vector<Raw>& values, std::vector<const Raw*>& out) {
  for (const auto& v : values) {
    if (v.kind == Raw::Tuple) flatten(v.parts, out);
    else out.push_back(&v);
  }
}

/// Row-id order constraints: for each relation, pairs (a, b) of ordinals
/// meaning row a must get a smaller id than row b.
using Constraints = std::map<std::string, std::set<std::pair<std::size_t, std::size_t>>>;

inline void constrain(const RawRow& a, const RawRow& b, Constraints& out, std::size_t line) {
  std::vector<const Raw*> x, y;
  flatten(a.values, x);
  flatten(b.values, y);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i]->kind == Raw::Reference) {
      if (x[i]->ordinal == y[i]->ordinal) continue;
      out[x[i]->relation].insert({x[i]->ordinal, y[i]->ordinal});
      return;
    }
    if (!(x[i]->scalar == y[i]->scalar)) return;
  }
  bad(line, "duplicate row");
}

/// Ordinals 1..n in an order satisfying the constraints, preferring lower
/// ordinals; constraints that form a cycle are ignored.
inline std::vector<std::size_t> id_order(std::size_t n,
                                         const std::set<std::pair<std::size_t, std::size_t>>& cs) {
  std::vector<std::vector<std::size_t>> next(n + 1);
  std::vector<std::size_t> indegree(n + 1, 0);
  for (auto [a, b] : cs) {
    if (a < 1 || a > n || b < 1 || b > n) continue;
    next[a].push_back(b);
    ++indegree[b];
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 1; i <= n; ++i)
    if (indegree[i] == 0) ready.push(i);
  std::vector<std::size_t> out;
  std::vector<bool> placed(n + 1, false);
  while (!ready.empty()) {
    std::size_t i = ready.top();
    ready.pop();
    out.push_back(i);
    placed[i] = true;
    for (std::size_t j : next[i])
      if (--indegree[j] == 0) ready.push(j);
  }
  for (std::size_t i = 1; i <= n; ++i)
    if (!placed[i]) out.push_back(i);
  return out;
}

}  // namespace detail

inline std::string save(const Database& db) {
  std::string out(kHeader);
  out += '\n';
  for (const auto& def : db.catalog.definitions()) out += syntax::render(def->to_definition()) + "\n";

  detail::Ordinals ords;
  for (const auto& def : db.catalog.definitions()) {
    if (!def->is_simple()) continue;
    auto& m = ords[def->name];
    for (const auto& [k, id] : db.store.index(def->name).forward()) m.emplace(id, m.size() + 1);
  }
  for (const auto& def : db.catalog.definitions()) {
    if (!def->is_simple()) continue;
    const auto& idx = db.store.index(def->name);
    std::size_t ord = 0;
    for (const auto& [k, id] : idx.forward()) {
      out += "row " + def->name + " " + std::to_string(++ord) + " {";
      const Tuple& t = idx.rows().at(id);
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out += ' ';
        detail::put_value(out, t[i], ords);
      }
      out += "}\n";
    }
  }
  return out;
}

inline Database load(std::string_view text) {
  using detail::bad;
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= text.size();) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  if (lines.empty() || lines[0] != kHeader) bad(1, "missing snapshot header");

  Database db;
  std::map<std::string, std::vector<detail::RawRow>> rows;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const std::size_t line = n + 1;
    std::string_view s = relang::detail::trim(lines[n]);
    if (s.empty() || s.substr(0, 2) == ";;") continue;
    if (s.substr(0, 4) == "row ") {
      detail::RowParser p(s.substr(4), line, db.catalog);
      std::string rel = p.word();
      const RelationDef* def = db.catalog.find(rel);
      if (!def) bad(line, "row of unknown relation '" + rel + "'");
      if (!def->is_simple()) bad(line, "'" + rel + "' cannot hold rows");
      std::size_t ord = p.number();
      auto& list = rows[rel];
      if (ord != list.size() + 1)
        bad(line, "row " + std::to_string(ord) + " of '" + rel + "' out of sequence");
      try {
        list.push_back({line, p.tuple(def->attrs)});
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::SnapshotFormatError) throw;
        bad(line, e.what());
      }
      p.end();
      continue;
    }
    try {
      auto stmts = syntax::parse_script(s);
      if (stmts.size() != 1 || !stmts[0].as<syntax::Definition>())
        bad(line, "expected a definition or a row");
      db.define(*stmts[0].as<syntax::Definition>());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SnapshotFormatError) throw;
      bad(line, std::string(e.name()) + ": " + e.what());
    }
  }

  detail::Constraints cs;
  for (const auto& [rel, list] : rows)
    for (std::size_t i = 0; i + 1 < list.size(); ++i) detail::constrain(list[i], list[i + 1], cs, list[i + 1].line);

  std::map<std::string, std::vector<RowId>> ids;  // ordinal - 1 → row id
  for (const auto& [rel, list] : rows) {
    auto order = detail::id_order(list.size(), cs[rel]);
    auto& v = ids[rel];
    v.resize(list.size());
    for (std::size_t k = 0; k < order.size(); ++k) v[order[k] - 1] = k + 1;
  }

  std::function<Value(const detail::Raw&, std::size_t)> resolve = [&](const detail::Raw& r,
                                                                       std::size_t line) -> Value {
    if (r.kind == detail::Raw::Scalar) return r.scalar;
    if (r.kind == detail::Raw::Reference) {
      auto it = ids.find(r.relation);
      if (it == ids.end() || r.ordinal > it->second.size())
        fail(ErrorKind::DanglingOrdinal,
             "line " + std::to_string(line) + ": no row " + std::to_string(r.ordinal) + " in '" +
                 r.relation + "'",
             {static_cast<std::uint32_t>(line), 0});
      return Ref{r.relation, it->second[r.ordinal - 1]};
    }
    Composite c{r.relation, {}};
    for (const auto& p : r.parts) c.values.push_back(resolve(p, line));
    return c;
  };

  for (const auto& def : db.catalog.definitions()) {
    auto it = rows.find(def->name);
    if (it == rows.end()) continue;
    for (std::size_t k = 0; k < it->second.size(); ++k) {
      const auto& raw = it->second[k];
      Tuple t;
      for (const auto& v : raw.values) t.push_back(resolve(v, raw.line));
      try {
        db.store.restore(def->name, ids[def->name][k], std::move(t));
      } catch (const Error& e) {
        bad(raw.line, std::string(e.name()) + ": " + e.what());
      }
    }
  }
  return db;
}

}  // namespace relang::snapshot
