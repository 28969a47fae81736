#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relang/catalog.hpp"
#include "relang/key.hpp"
#include "relang/value.hpp"

namespace relang {

struct Column {
  std::string name;
  DomainType type;

  friend bool operator==(const Column&, const Column&) = default;
};

inline std::vector<Column> columns_of(const RelationDef& def) {
  std::vector<Column> out;
  for (const auto& a : def.attrs) out.push_back({a.name, a.type});
  return out;
}

inline DomainType type_of(const Value& v) {
  if (auto s = v.scalar_type()) return DomainType::scalar(*s);
  if (v.is_ref()) return DomainType::relation(v.as_ref().relation);
  return DomainType::relation(v.as_composite().domain);
}

/// A duplicate-free set of equally typed tuples, kept in canonical-key
/// order. `origin` names the relation whose tuples these are, when the set
/// came from selecting that relation (directly or through a variable).
///
/// A set of width zero is the untyped empty set `()`; it unifies with any
/// schema.
class TupleSet {
 public:
  TupleSet() = default;
  explicit TupleSet(std::vector<Column> schema, std::optional<std::string> origin = std::nullopt)
      : schema_(std::move(schema)), origin_(std::move(origin)) {}

  static TupleSet singleton(const Value& v, std::string name = {}) {
    DomainType t = type_of(v);
    if (name.empty()) name = t.name();
    TupleSet s({{std::move(name), std::move(t)}});
    s.insert({v});
    return s;
  }

  const std::vector<Column>& schema() const { return schema_; }
  std::size_t width() const { return schema_.size(); }
  const std::optional<std::string>& origin() const { return origin_; }
  void set_origin(std::optional<std::string> o) { origin_ = std::move(o); }

  /// Returns false when the tuple was already present.
  bool insert(Tuple t) { return tuples_.emplace(key::encode(t), std::move(t)).second; }

  bool contains(const Tuple& t) const { return tuples_.count(key::encode(t)) > 0; }

  std::size_t size() const { return tuples_.size(); }
  bool empty() const { return tuples_.empty(); }

  /// Canonical key → tuple, in key order.
  const std::map<std::string, Tuple>& entries() const { return tuples_; }

  std::vector<Tuple> tuples() const {
    std::vector<Tuple> out;
    out.reserve(tuples_.size());
    for (const auto& [k, t] : tuples_) out.push_back(t);
    return out;
  }

  std::vector<DomainType> types() const {
    std::vector<DomainType> out;
    for (const auto& c : schema_) out.push_back(c.type);
    return out;
  }

  /// Same column types and the same tuples; names and origin are labels.
  friend bool operator==(const TupleSet& a, const TupleSet& b) {
    if (a.width() == 0 || b.width() == 0) return a.empty() && b.empty();
    if (a.types() != b.types()) return false;
    if (a.tuples_.size() != b.tuples_.size()) return false;
    for (auto i = a.tuples_.begin(), j = b.tuples_.begin(); i != a.tuples_.end(); ++i, ++j)
      if (i->first != j->first) return false;
    return true;
  }

 private:
  std::vector<Column> schema_;
  std::map<std::string, Tuple> tuples_;
  std::optional<std::string> origin_;
};

}  // namespace relang
