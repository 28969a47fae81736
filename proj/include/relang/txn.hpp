#pragma once

// Transactions. DML statements run eagerly against a shadow copy of the
// published store; integrity problems that later statements could still
// repair (missing referenced rows, removed rows that are still referenced,
// key collisions after update) are recorded as obligations and checked at
// commit. Commit publishes the shadow only if every obligation holds.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "relang/catalog.hpp"
#include "relang/error.hpp"
#include "relang/eval.hpp"
#include "relang/store.hpp"
#include "relang/syntax.hpp"
#include "relang/tuple_set.hpp"

namespace relang {

/// The published state: schema plus stored tuples.
struct Database {
  Catalog catalog;
  Store store;

  void define(const syntax::Definition& d) {
    Catalog next = catalog.define(d);
    store.add_relation(next.definitions().back());
    catalog = std::move(next);
  }

  friend bool operator==(const Database& a, const Database& b) {
    return a.catalog == b.catalog && a.store == b.store;
  }
};

struct RelationCounts {
  std::size_t added = 0;
  std::size_t removed = 0;
  std::size_t updated = 0;

  friend bool operator==(const RelationCounts&, const RelationCounts&) = default;
};

struct CommitReport {
  std::map<std::string, RelationCounts> counts;
  std::optional<Error> error;  // set when the commit was refused

  bool ok() const { return !error; }
};

class Transaction {
 public:
  enum class Status { Open, Committed, Aborted };

  explicit Transaction(const Database& base) : catalog_(base.catalog), shadow_(base.store) {}

  Status status() const { return status_; }
  const Store& shadow() const { return shadow_; }
  const Catalog& catalog() const { return catalog_; }
  const Bindings& bindings() const { return bindings_; }

  /// Picks up relations defined in `db` after this transaction began.
  void adopt(const Database& db) {
    catalog_ = db.catalog;
    for (const auto& def : db.catalog.definitions())
      if (!shadow_.has_relation(def->name)) shadow_.add_relation(def);
  }

  Evaluator evaluator() const { return Evaluator(catalog_, shadow_, &bindings_); }

  TupleSet query(const syntax::Expr& e) const { return evaluator().eval_set(e); }

  void bind(const std::string& name, TupleSet value, Position pos = {}) {
    require_open();
    if (bindings_.count(name))
      fail(ErrorKind::Rebind, "'" + name + "' is already bound in this transaction", pos);
    if (catalog_.contains(name) || scalar_type_from_name(name) || builtin_signature(name))
      fail(ErrorKind::NameCollision, "'" + name + "' names a relation or type", pos);
    bindings_.emplace(name, std::move(value));
  }

  /// Runs one DML command; returns the affected tuples. A failing command
  /// leaves the transaction as it was before the command.
  TupleSet execute(const syntax::Command& cmd, Position pos = {}) {
    require_open();
    Store saved = shadow_;
    auto saved_obligations = obligations_;
    auto saved_counts = counts_;
    auto saved_removed = removed_by_;
    ++statement_;
    try {
      switch (cmd.verb) {
        case syntax::Verb::Add: return add(cmd, pos);
        case syntax::Verb::Remove: return remove(cmd, false, pos);
        case syntax::Verb::Abolish: return remove(cmd, true, pos);
        case syntax::Verb::Update: return update(cmd, pos);
      }
    } catch (Error& e) {
      shadow_ = std::move(saved);
      obligations_ = std::move(saved_obligations);
      counts_ = std::move(saved_counts);
      removed_by_ = std::move(saved_removed);
      e.at(pos);
      throw;
    }
    return {};
  }

  /// Validates the plan and, when every obligation holds, publishes the
  /// shadow into `db`. On failure `db` is untouched.
  CommitReport commit(Database& db) {
    require_open();
    CommitReport report;
    std::optional<std::pair<std::size_t, Error>> first;
    auto violate = [&](std::size_t stmt, Error e) {
      if (!first || stmt < first->first) first.emplace(stmt, std::move(e));
    };

    // Pending adds may depend on each other; retry until nothing changes.
    std::vector<Obligation> adds;
    for (const auto& o : obligations_)
      if (o.kind != Obligation::Rekey) adds.push_back(o);
    bool progress = true;
    while (progress && !adds.empty()) {
      progress = false;
      for (auto it = adds.begin(); it != adds.end();) {
        if (try_add(*it)) {
          it = adds.erase(it);
          progress = true;
        } else {
          ++it;
        }
      }
    }
    for (const auto& o : adds)
      violate(o.statement, Error(ErrorKind::IntegrityError,
                                 "add to '" + o.relation + "' references a tuple that does not exist",
                                 o.pos));

    for (const auto& o : obligations_) {
      if (o.kind != Obligation::Rekey || !shadow_.row(o.relation, o.row)) continue;
      try {
        shadow_.rekey(o.relation, o.row, o.tuple);
      } catch (const Error& e) {
        violate(o.statement, Error(ErrorKind::IntegrityError, e.what(), o.pos));
      }
    }

    for (const auto& d : shadow_.dangling()) {
      const Tuple& t = shadow_.tuple(d.relation, d.row);
      for (const auto& v : t) {
        if (!v.is_ref() || shadow_.row(v.as_ref().relation, v.as_ref().row)) continue;
        auto why = removed_by_.find({v.as_ref().relation, v.as_ref().row});
        std::size_t stmt = why == removed_by_.end() ? 0 : why->second.first;
        Position p = why == removed_by_.end() ? Position{} : why->second.second;
        violate(stmt, Error(ErrorKind::IntegrityError,
                            "removed row of '" + v.as_ref().relation +
                                "' is still referenced by '" + d.relation + "'",
                            p));
      }
    }

    if (first) {
      status_ = Status::Aborted;
      report.error = std::move(first->second);
      return report;
    }
    for (auto& [rel, c] : counts_)
      if (c.added || c.removed || c.updated) report.counts[rel] = c;
    db.store = shadow_;
    status_ = Status::Committed;
    return report;
  }

  void rollback() {
    require_open();
    status_ = Status::Aborted;
  }

 private:
  struct Obligation {
    enum Kind { AddExpr, AddTuple, Rekey } kind;
    std::size_t statement = 0;
    Position pos;
    std::string relation;
    std::optional<syntax::Expr> expr;  // AddExpr
    Tuple tuple;                       // AddTuple: flat values; Rekey: new tuple
    RowId row = 0;                     // Rekey
  };

  void require_open() const {
    if (status_ != Status::Open) fail(ErrorKind::NoTransaction, "the transaction has ended");
  }

  const RelationDef& alterable(const std::string& relation, Position pos) const {
    const RelationDef* def = catalog_.find(relation);
    if (!def) fail(ErrorKind::UnknownRelation, "unknown relation '" + relation + "'", pos);
    if (!def->is_simple())
      fail(ErrorKind::NotAlterable,
           "'" + relation + "' is a " + std::string(syntax::class_keyword(def->cls)) +
               "; its tuples cannot be changed",
           pos);
    return *def;
  }

  // -- add ---------------------------------------------------------------

  /// Flat tuples of an add argument. A product with an empty member
  /// produces nothing now; it is kept as an obligation instead, because
  /// the missing member may still be added before commit.
  std::vector<Tuple> add_values(const syntax::Expr& e, const RelationDef& def, bool record,
                                bool& deferred) {
    Evaluator ev = evaluator();
    if (const auto* u = e.as<syntax::Union>()) {
      if (u->members.size() == def.arity() && def.arity() > 1) {
        // `('Homer' '800 BC')` reads as a union of two texts; when that
        // cannot fill the relation, the members are the tuple's values.
        try {
          std::vector<Tuple> out;
          for (auto& t : ev.eval_set(e).tuples()) {
            ev.conform(def, t);
            out.push_back(std::move(t));
          }
          return out;
        } catch (const Error& err) {
          if (err.kind() != ErrorKind::SchemaMismatch && err.kind() != ErrorKind::ArityMismatch &&
              err.kind() != ErrorKind::DomainTypeMismatch)
            throw;
        }
        return add_values(syntax::Expr{syntax::Product{u->members}, e.pos}, def, record, deferred);
      }
      std::vector<Tuple> out;
      for (const auto& m : u->members) {
        auto part = add_values(m, def, record, deferred);
        out.insert(out.end(), part.begin(), part.end());
      }
      return out;
    }
    if (const auto* p = e.as<syntax::Product>()) {
      for (const auto& m : p->members) {
        if (ev.eval_set(m).empty()) {
          deferred = true;
          if (record)
            obligations_.push_back({Obligation::AddExpr, statement_, e.pos, def.name, e, {}, 0});
          return {};
        }
      }
    }
    return ev.eval_set(e).tuples();
  }

  /// Inserts flat tuples; unresolvable ones become obligations when
  /// `record` is set. Returns the freshly inserted tuples.
  TupleSet insert_all(const RelationDef& def, const std::vector<Tuple>& flats, Position pos,
                      bool record, bool& deferred) {
    TupleSet fresh(columns_of(def), def.name);
    for (const auto& flat : flats) {
      auto t = evaluator().conform(def, flat);
      if (!t) {
        deferred = true;
        if (record)
          obligations_.push_back({Obligation::AddTuple, statement_, pos, def.name, std::nullopt, flat, 0});
        continue;
      }
      auto [id, inserted] = shadow_.insert(def.name, *t);
      if (inserted) {
        ++counts_[def.name].added;
        fresh.insert(std::move(*t));
      }
    }
    return fresh;
  }

  TupleSet add(const syntax::Command& cmd, Position pos) {
    const RelationDef& def = alterable(cmd.relation, pos);
    bool deferred = false;
    auto flats = add_values(cmd.set, def, true, deferred);
    return insert_all(def, flats, cmd.set.pos, true, deferred);
  }

  bool try_add(const Obligation& o) {
    const RelationDef& def = catalog_.lookup(o.relation);
    bool deferred = false;
    try {
      std::vector<Tuple> flats =
          o.kind == Obligation::AddExpr ? add_values(*o.expr, def, false, deferred)
                                        : std::vector<Tuple>{o.tuple};
      if (deferred) return false;
      Store saved = shadow_;
      insert_all(def, flats, o.pos, false, deferred);
      if (deferred) {
        shadow_ = std::move(saved);
        return false;
      }
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  // -- remove / update -----------------------------------------------------

  /// Rows of `def` designated by a set: its own tuples, or rows connected
  /// to the tuples of another relation.
  std::vector<RowId> resolve(const RelationDef& def, const TupleSet& s, Position pos) const {
    std::vector<RowId> out;
    if (s.empty()) return out;
    Evaluator ev = evaluator();
    if (s.origin() && *s.origin() != def.name) {
      const RelationDef* src = catalog_.find(*s.origin());
      if (src && src->is_simple()) {
        std::set<RowId> rows;
        for (const auto& t : ev.connect(def.name, s, pos).tuples()) rows.insert(t[0].as_ref().row);
        return {rows.begin(), rows.end()};
      }
    }
    for (const auto& t : s.tuples()) {
      auto conformed = s.origin() == def.name ? std::optional<Tuple>(t) : ev.conform(def, t);
      if (!conformed) continue;
      if (auto id = shadow_.find(def.name, *conformed)) out.push_back(*id);
    }
    return out;
  }

  TupleSet remove(const syntax::Command& cmd, bool cascade, Position pos) {
    const RelationDef& def = alterable(cmd.relation, pos);
    std::vector<RowId> rows = resolve(def, evaluator().eval_set(cmd.set), cmd.set.pos);
    TupleSet out(columns_of(def), def.name);
    for (RowId id : rows) {
      const Tuple* t = shadow_.row(def.name, id);
      if (!t) continue;
      out.insert(*t);
      if (cascade) {
        for (const auto& r : shadow_.erase(def.name, id, true)) {
          ++counts_[r.relation].removed;
          removed_by_.emplace(r, std::make_pair(statement_, pos));
        }
      } else {
        shadow_.erase_unchecked(def.name, id);
        ++counts_[def.name].removed;
        removed_by_.emplace(RowRef{def.name, id}, std::make_pair(statement_, pos));
      }
    }
    return out;
  }

  TupleSet update(const syntax::Command& cmd, Position pos) {
    const RelationDef& def = alterable(cmd.relation, pos);
    std::vector<std::pair<std::size_t, const syntax::Expr*>> assigns;
    for (const auto& a : cmd.assignments) {
      auto idx = def.attr_index(a.attr);
      if (!idx) fail(ErrorKind::UnknownAttr, "'" + def.name + "' has no attribute '" + a.attr + "'", a.value.pos);
      const DomainType& type = def.attrs[*idx].type;
      if (type.is_scalar()) {
        ExprType t = catalog_.infer(a.value, def.attrs);
        if (!detail::castable(t, expr_type(type.scalar_type())))
          fail(ErrorKind::TypeError,
               "cannot assign " + std::string(expr_type_name(t)) + " to '" + a.attr + "' (" +
                   type.name() + ")",
               a.value.pos);
      }
      assigns.emplace_back(*idx, &a.value);
    }

    Evaluator ev = evaluator();
    std::vector<RowId> rows = resolve(def, ev.eval_set(cmd.set), cmd.set.pos);
    const std::vector<Column> cols = columns_of(def);
    std::vector<std::pair<RowId, Tuple>> planned;
    for (RowId id : rows) {
      const Tuple& old = shadow_.tuple(def.name, id);
      Scope scope{&cols, &old};
      Tuple next = old;
      for (const auto& [idx, expr] : assigns) next[idx] = assigned(ev, def, idx, *expr, scope);
      planned.emplace_back(id, std::move(next));
    }

    TupleSet out(cols, def.name);
    for (auto& [id, t] : planned) {
      try {
        shadow_.rekey(def.name, id, t);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DuplicateTuple) throw;
        obligations_.push_back({Obligation::Rekey, statement_, pos, def.name, std::nullopt, t, id});
      }
      ++counts_[def.name].updated;
      out.insert(std::move(t));
    }
    return out;
  }

  Value assigned(const Evaluator& ev, const RelationDef& def, std::size_t idx,
                 const syntax::Expr& expr, const Scope& scope) const {
    const Attribute& attr = def.attrs[idx];
    if (attr.type.is_scalar()) {
      Value v = ev.eval_scalar(expr, &scope);
      auto c = conform_scalar(v, attr.type.scalar_type());
      if (!c) c = v.is_text() ? std::nullopt : cast_scalar(v, attr.type.scalar_type());
      if (!c)
        fail(ErrorKind::TypeError,
             "cannot assign " + detail::describe_value(v) + " to '" + attr.name + "'", expr.pos);
      return *c;
    }
    TupleSet s = ev.eval_set(expr, &scope);
    if (s.size() != 1)
      fail(ErrorKind::TypeError,
           "'" + attr.name + "' needs exactly one tuple, got " + std::to_string(s.size()),
           expr.pos);
    Tuple wrapper = s.tuples().front();
    RelationDef one{def.name, RelationClass::Simple, {attr}, std::nullopt, std::nullopt};
    auto t = ev.conform(one, wrapper);
    if (!t)
      fail(ErrorKind::TypeError, "'" + attr.name + "' value does not identify a tuple of '" +
                                     attr.type.name() + "'",
           expr.pos);
    return (*t)[0];
  }

  Catalog catalog_;
  Store shadow_;
  Bindings bindings_;
  std::vector<Obligation> obligations_;
  std::map<RowRef, std::pair<std::size_t, Position>> removed_by_;
  std::map<std::string, RelationCounts> counts_;
  std::size_t statement_ = 0;
  Status status_ = Status::Open;
};

}  // namespace relang
