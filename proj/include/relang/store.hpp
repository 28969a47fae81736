#pragma once

// Tuple storage. Every simple relation is exactly one ordered index from the
// canonical key of a tuple to its row id. Positions whose domain is another
// relation hold a Ref to that relation's row, and a per-position reverse
// index maps each referenced row back to the rows adopting it. There is no
// other representation of a relation: no tables, no link-tables, no foreign
// keys.

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "relang/catalog.hpp"
#include "relang/error.hpp"
#include "relang/key.hpp"
#include "relang/value.hpp"

namespace relang {

/// A (relation, row) pair.
struct RowRef {
  std::string relation;
  RowId row = 0;

  friend bool operator==(const RowRef&, const RowRef&) = default;
  friend auto operator<=>(const RowRef&, const RowRef&) = default;
};

struct Referrer {
  std::string relation;
  std::string attr;
  RowId row = 0;

  friend bool operator==(const Referrer&, const Referrer&) = default;
  friend auto operator<=>(const Referrer&, const Referrer&) = default;
};

class MultitableIndex {
 public:
  using Reverse = std::map<RowId, std::set<RowId>>;

  explicit MultitableIndex(std::size_t arity = 0) : reverse_(arity) {}

  const std::map<std::string, RowId>& forward() const { return forward_; }
  const std::map<RowId, Tuple>& rows() const { return rows_; }
  /// Reverse index of position `p`; empty for scalar positions.
  const Reverse& reverse(std::size_t p) const { return reverse_.at(p); }
  RowId next_id() const { return next_id_; }
  std::size_t size() const { return rows_.size(); }

  friend bool operator==(const MultitableIndex&, const MultitableIndex&) = default;

 private:
  friend class Store;

  void link(RowId id, const Tuple& t) {
    for (std::size_t p = 0; p < t.size(); ++p)
      if (t[p].is_ref()) reverse_[p][t[p].as_ref().row].insert(id);
  }

  void unlink(RowId id, const Tuple& t) {
    for (std::size_t p = 0; p < t.size(); ++p) {
      if (!t[p].is_ref()) continue;
      auto it = reverse_[p].find(t[p].as_ref().row);
      if (it == reverse_[p].end()) continue;
      it->second.erase(id);
      if (it->second.empty()) reverse_[p].erase(it);
    }
  }

  std::map<std::string, RowId> forward_;
  std::map<RowId, Tuple> rows_;
  std::vector<Reverse> reverse_;
  RowId next_id_ = 1;
};

class Store {
 public:
  Store() = default;

  /// Registers a relation with an empty index. Relation-valued positions
  /// must name relations registered earlier.
  void add_relation(std::shared_ptr<const RelationDef> def) {
    const std::string name = def->name;
    if (rels_.count(name)) fail(ErrorKind::DuplicateName, "relation '" + name + "' exists");
    for (std::size_t p = 0; p < def->attrs.size(); ++p) {
      const auto& type = def->attrs[p].type;
      if (!type.is_scalar()) adopters_[type.relation_name()].push_back({name, p});
    }
    auto index = std::make_shared<MultitableIndex>(def->arity());
    rels_.emplace(name, Entry{std::move(def), std::move(index)});
    order_.push_back(name);
  }

  bool has_relation(std::string_view name) const { return rels_.count(std::string(name)) > 0; }

  const RelationDef& def(std::string_view relation) const { return entry(relation).def_ref(); }

  /// Relation names in registration order.
  const std::vector<std::string>& relations() const { return order_; }

  const MultitableIndex& index(std::string_view relation) const { return *entry(relation).index; }

  /// Inserts `t`. Returns the row id holding the tuple and whether it was
  /// freshly inserted (false: the tuple was already present).
  std::pair<RowId, bool> insert(std::string_view relation, Tuple t) {
    const RelationDef& d = def(relation);
    require_alterable(d);
    validate(d, t);
    std::string k = key::encode(t);
    if (auto it = index(relation).forward().find(k); it != index(relation).forward().end())
      return {it->second, false};
    MultitableIndex& idx = mut(relation);
    RowId id = idx.next_id_++;
    idx.forward_.emplace(std::move(k), id);
    idx.link(id, t);
    idx.rows_.emplace(id, std::move(t));
    return {id, true};
  }

  /// Inserts under a caller-chosen row id (snapshot loading).
  void restore(std::string_view relation, RowId id, Tuple t) {
    const RelationDef& d = def(relation);
    require_alterable(d);
    validate(d, t);
    std::string k = key::encode(t);
    MultitableIndex& idx = mut(relation);
    if (idx.forward_.count(k))
      fail(ErrorKind::DuplicateTuple, "duplicate tuple in '" + d.name + "'");
    if (idx.rows_.count(id)) fail(ErrorKind::DuplicateTuple, "row id reused in '" + d.name + "'");
    idx.forward_.emplace(std::move(k), id);
    idx.link(id, t);
    idx.rows_.emplace(id, std::move(t));
    idx.next_id_ = std::max(idx.next_id_, id + 1);
  }

  std::optional<RowId> contains(std::string_view relation, std::string_view canonical_key) const {
    const RelationDef& d = def(relation);
    check_key(d, canonical_key);
    const auto& fwd = index(relation).forward();
    auto it = fwd.find(std::string(canonical_key));
    if (it == fwd.end()) return std::nullopt;
    return it->second;
  }

  std::optional<RowId> find(std::string_view relation, const Tuple& t) const {
    const auto& fwd = index(relation).forward();
    auto it = fwd.find(key::encode(t));
    if (it == fwd.end()) return std::nullopt;
    return it->second;
  }

  const Tuple* row(std::string_view relation, RowId id) const {
    auto it = rels_.find(std::string(relation));
    if (it == rels_.end()) return nullptr;
    const auto& rows = it->second.index->rows();
    auto r = rows.find(id);
    return r == rows.end() ? nullptr : &r->second;
  }

  const Tuple& tuple(std::string_view relation, RowId id) const {
    if (const Tuple* t = row(relation, id)) return *t;
    fail(ErrorKind::RowNotFound,
         "no row " + std::to_string(id) + " in '" + std::string(relation) + "'");
  }

  /// Removes `id`. Without cascade the row must be unreferenced; with
  /// cascade every transitively referencing row goes too. Returns all
  /// removed rows, the requested one first.
  std::vector<RowRef> erase(std::string_view relation, RowId id, bool cascade) {
    tuple(relation, id);
    std::vector<RowRef> closure{{std::string(relation), id}};
    std::set<RowRef> seen{closure.front()};
    for (std::size_t i = 0; i < closure.size(); ++i) {
      auto refs = referrers(closure[i].relation, closure[i].row);
      if (!refs.empty() && !cascade) {
        const auto& r = refs.front();
        fail(ErrorKind::ReferencedRow, "row of '" + std::string(relation) +
                                           "' is still referenced by '" + r.relation + "'");
      }
      for (auto& r : refs) {
        RowRef rr{r.relation, r.row};
        if (seen.insert(rr).second) closure.push_back(std::move(rr));
      }
    }
    for (const auto& r : closure) erase_unchecked(r.relation, r.row);
    return closure;
  }

  /// Removes one row even if other rows still reference it. The caller
  /// takes responsibility for the dangling references.
  void erase_unchecked(std::string_view relation, RowId id) {
    const Tuple& t = tuple(relation, id);
    MultitableIndex& idx = mut(relation);
    auto it = idx.rows_.find(id);
    idx.forward_.erase(key::encode(t));
    idx.unlink(id, it->second);
    idx.rows_.erase(it);
  }

  /// Replaces the tuple of `id` in place, keeping the row id so that
  /// referencing rows are unaffected.
  void rekey(std::string_view relation, RowId id, Tuple t) {
    const RelationDef& d = def(relation);
    require_alterable(d);
    const Tuple& old = tuple(relation, id);
    validate(d, t);
    std::string k = key::encode(t);
    std::string old_key = key::encode(old);
    if (k == old_key) return;
    if (index(relation).forward().count(k))
      fail(ErrorKind::DuplicateTuple, "update of '" + d.name + "' collides with an existing tuple");
    MultitableIndex& idx = mut(relation);
    auto it = idx.rows_.find(id);
    idx.unlink(id, it->second);
    idx.forward_.erase(old_key);
    idx.forward_.emplace(std::move(k), id);
    it->second = std::move(t);
    idx.link(id, it->second);
  }

  /// All tuples of a simple relation in canonical-key order.
  std::vector<std::pair<RowId, const Tuple*>> scan(std::string_view relation) const {
    const RelationDef& d = def(relation);
    if (!d.is_simple())
      fail(ErrorKind::NotEnumerable,
           "'" + d.name + "' is a " + std::string(syntax::class_keyword(d.cls)) +
               " and cannot be enumerated");
    const auto& idx = index(relation);
    std::vector<std::pair<RowId, const Tuple*>> out;
    out.reserve(idx.size());
    for (const auto& [k, id] : idx.forward()) out.emplace_back(id, &idx.rows().at(id));
    return out;
  }

  /// Every row, in any relation, holding a Ref to (relation, id).
  std::vector<Referrer> referrers(std::string_view relation, RowId id) const {
    std::vector<Referrer> out;
    auto it = adopters_.find(std::string(relation));
    if (it == adopters_.end()) return out;
    for (const auto& [owner, pos] : it->second) {
      const auto& rev = index(owner).reverse(pos);
      auto r = rev.find(id);
      if (r == rev.end()) continue;
      for (RowId row : r->second) out.push_back({owner, def(owner).attrs[pos].name, row});
    }
    return out;
  }

  /// Refs whose target row does not exist, as (owner relation, row).
  std::vector<RowRef> dangling() const {
    std::vector<RowRef> out;
    for (const auto& name : order_) {
      for (const auto& [id, t] : index(name).rows()) {
        for (const auto& v : t)
          if (v.is_ref() && !row(v.as_ref().relation, v.as_ref().row)) {
            out.push_back({name, id});
            break;
          }
      }
    }
    return out;
  }

  /// Rebuilds every index from its rows and compares. Used by tests and
  /// after snapshot loading.
  bool consistent() const {
    for (const auto& name : order_) {
      const auto& idx = index(name);
      if (idx.forward().size() != idx.rows().size()) return false;
      MultitableIndex rebuilt(def(name).arity());
      for (const auto& [id, t] : idx.rows()) {
        rebuilt.forward_.emplace(key::encode(t), id);
        rebuilt.link(id, t);
        if (id >= idx.next_id()) return false;
      }
      if (rebuilt.forward_ != idx.forward_ || rebuilt.reverse_ != idx.reverse_) return false;
    }
    return true;
  }

  friend bool operator==(const Store& a, const Store& b) {
    if (a.order_ != b.order_) return false;
    for (const auto& name : a.order_) {
      const auto& x = a.rels_.at(name);
      const auto& y = b.rels_.at(name);
      if (!(*x.def == *y.def) || !(*x.index == *y.index)) return false;
    }
    return true;
  }

 private:
  struct Entry {
    std::shared_ptr<const RelationDef> def;
    std::shared_ptr<MultitableIndex> index;  // shared between store copies until written

    const RelationDef& def_ref() const { return *def; }
  };

  const Entry& entry(std::string_view relation) const {
    auto it = rels_.find(std::string(relation));
    if (it == rels_.end())
      fail(ErrorKind::UnknownRelation, "unknown relation '" + std::string(relation) + "'");
    return it->second;
  }

  MultitableIndex& mut(std::string_view relation) {
    auto& e = rels_.at(std::string(relation));
    if (e.index.use_count() > 1) e.index = std::make_shared<MultitableIndex>(*e.index);
    return *e.index;
  }

  static void require_alterable(const RelationDef& d) {
    if (!d.is_simple())
      fail(ErrorKind::NotAlterable, "'" + d.name + "' is a " +
                                        std::string(syntax::class_keyword(d.cls)) +
                                        "; its tuples cannot be stored");
  }

  void validate_value(const DomainType& type, const Value& v, const std::string& where) const {
    if (type.is_scalar()) {
      if (v.scalar_type() != type.scalar_type())
        fail(ErrorKind::DomainTypeMismatch,
             where + " expects " + type.name() + ", got " + describe(v));
      return;
    }
    const RelationDef& target = def(type.relation_name());
    if (target.is_simple()) {
      if (!v.is_ref() || v.as_ref().relation != target.name)
        fail(ErrorKind::DomainTypeMismatch,
             where + " expects a row of '" + target.name + "', got " + describe(v));
      if (!row(target.name, v.as_ref().row))
        fail(ErrorKind::DanglingRef, where + " references a missing row of '" + target.name + "'");
      return;
    }
    if (!v.is_composite() || v.as_composite().domain != target.name ||
        v.as_composite().values.size() != target.arity())
      fail(ErrorKind::DomainTypeMismatch,
           where + " expects a '" + target.name + "' value, got " + describe(v));
    for (std::size_t i = 0; i < target.arity(); ++i)
      validate_value(target.attrs[i].type, v.as_composite().values[i],
                     where + "." + target.attrs[i].name);
  }

  void validate(const RelationDef& d, const Tuple& t) const {
    if (t.size() != d.arity())
      fail(ErrorKind::ArityMismatch, "'" + d.name + "' has " + std::to_string(d.arity()) +
                                         " domain(s), got a tuple of " + std::to_string(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i)
      validate_value(d.attrs[i].type, t[i], d.name + "." + d.attrs[i].name);
  }

  static std::string describe(const Value& v) {
    if (auto s = v.scalar_type()) return std::string(scalar_type_name(*s));
    if (v.is_ref()) return "a row of '" + v.as_ref().relation + "'";
    return "a '" + v.as_composite().domain + "' value";
  }

  /// Walks `key` as an encoding of `type`, returning the bytes consumed.
  std::size_t key_width(const DomainType& type, std::string_view key, std::size_t at) const {
    auto need = [&](std::size_t n) {
      if (at + n > key.size()) fail(ErrorKind::MalformedKey, "key truncated");
      return n;
    };
    if (!type.is_scalar()) {
      const RelationDef& target = def(type.relation_name());
      if (target.is_simple()) return need(8);
      std::size_t start = at;
      for (const auto& a : target.attrs) at += key_width(a.type, key, at);
      return at - start;
    }
    switch (type.scalar_type()) {
      case ScalarType::Int:
      case ScalarType::Real: return need(8);
      case ScalarType::Timestamp: return need(24);
      case ScalarType::Text: {
        std::size_t i = at;
        while (true) {
          if (i + 1 >= key.size()) fail(ErrorKind::MalformedKey, "unterminated text in key");
          if (key[i] == '\0') {
            if (key[i + 1] == '\x01') return i + 2 - at;
            if (key[i + 1] != '\xFF') fail(ErrorKind::MalformedKey, "bad escape in key");
            i += 2;
          } else {
            ++i;
          }
        }
      }
    }
    return 0;
  }

  void check_key(const RelationDef& d, std::string_view key) const {
    std::size_t at = 0;
    for (const auto& a : d.attrs) at += key_width(a.type, key, at);
    if (at != key.size()) fail(ErrorKind::MalformedKey, "trailing bytes in key");
  }

  std::map<std::string, Entry> rels_;
  std::vector<std::string> order_;
  std::map<std::string, std::vector<std::pair<std::string, std::size_t>>> adopters_;
};

}  // namespace relang
