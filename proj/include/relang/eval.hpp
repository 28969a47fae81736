#pragma once

// Query evaluation. Evaluation is read-only: an Evaluator reads a catalog, a
// store and variable bindings, and produces values or tuple sets.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "relang/catalog.hpp"
#include "relang/error.hpp"
#include "relang/key.hpp"
#include "relang/store.hpp"
#include "relang/syntax.hpp"
#include "relang/tuple_set.hpp"
#include "relang/value.hpp"

namespace relang {

using Bindings = std::map<std::string, TupleSet, std::less<>>;

/// Attribute values visible to an expression: the current tuple of a
/// filter, or the arguments of a function body.
struct Scope {
  const std::vector<Column>* columns = nullptr;
  const Tuple* tuple = nullptr;

  const Value* lookup(std::string_view name) const {
    if (!columns) return nullptr;
    for (std::size_t i = 0; i < columns->size(); ++i)
      if ((*columns)[i].name == name) return &(*tuple)[i];
    return nullptr;
  }
};

using EvalValue = std::variant<Value, bool, TupleSet>;

// ---------------------------------------------------------------------------
// Schema paths

/// One edge of a schema path, traversed from `from` to `to`.
struct PathStep {
  SchemaEdge edge;
  std::string from;
  std::string to;

  friend bool operator==(const PathStep&, const PathStep&) = default;
};

using SchemaPath = std::vector<PathStep>;

inline std::string describe_path(std::string_view start, const SchemaPath& path) {
  std::string out(start);
  for (const auto& s : path) out += " -" + s.edge.owner + "." + s.edge.attr + "- " + s.to;
  return out;
}

/// Every shortest path between two simple relations, following
/// relation-valued positions in either direction. At most `limit` paths
/// are returned; an empty vector means no path exists. A relation reaches
/// itself by the empty path.
inline std::vector<SchemaPath> shortest_paths(const Catalog& catalog, std::string_view from,
                                              std::string_view to, std::size_t limit = 16) {
  const SchemaGraph g = catalog.schema_graph();
  auto simple = [&](const std::string& n) { return catalog.lookup(n).is_simple(); };

  std::map<std::string, std::size_t, std::less<>> dist{{std::string(from), 0}};
  std::vector<std::string> queue{std::string(from)};
  for (std::size_t i = 0; i < queue.size(); ++i) {
    const std::string u = queue[i];
    for (std::size_t e : g.incident(u)) {
      const auto& edge = g.edges[e];
      const std::string& v = edge.owner == u ? edge.target : edge.owner;
      if (!simple(v) || dist.count(v)) continue;
      dist[v] = dist[u] + 1;
      queue.push_back(v);
    }
  }
  std::vector<SchemaPath> out;
  if (!dist.count(to)) return out;

  // Walk back from `to` along edges that decrease the distance by one.
  SchemaPath rev;
  std::function<void(const std::string&)> walk = [&](const std::string& v) {
    if (out.size() >= limit) return;
    if (v == from) {
      out.emplace_back(rev.rbegin(), rev.rend());
      return;
    }
    for (std::size_t e : g.incident(v)) {
      const auto& edge = g.edges[e];
      const std::string& u = edge.owner == v ? edge.target : edge.owner;
      auto du = dist.find(u);
      if (du == dist.end() || du->second + 1 != dist.at(v)) continue;
      rev.push_back({edge, u, v});
      walk(u);
      rev.pop_back();
    }
  };
  walk(std::string(to));
  return out;
}

/// The unique shortest path from `from` to `to`.
inline SchemaPath find_path(const Catalog& catalog, std::string_view from, std::string_view to,
                            Position pos = {}) {
  auto paths = shortest_paths(catalog, from, to);
  if (paths.empty())
    fail(ErrorKind::NoConnection,
         "no connection between '" + std::string(to) + "' and '" + std::string(from) + "'", pos);
  if (paths.size() > 1) {
    std::string msg = "more than one shortest connection between '" + std::string(to) +
                      "' and '" + std::string(from) + "':";
    for (const auto& p : paths) msg += "\n  " + describe_path(from, p);
    fail(ErrorKind::AmbiguousPath, msg, pos);
  }
  return paths.front();
}

// ---------------------------------------------------------------------------
// Builtins

namespace detail {

inline std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

/// Number of UTF-8 code points.
inline std::int64_t utf8_length(std::string_view s) {
  std::int64_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

inline Value call_builtin(std::string_view name, const Tuple& args) {
  if (name == "capitalize") return Value(capitalize(args[0].as_text()));
  return Value(utf8_length(args[0].as_text()));
}

template <class F>
void for_each_combination(const std::vector<std::vector<Value>>& dims, F&& f) {
  for (const auto& d : dims)
    if (d.empty()) return;
  std::vector<std::size_t> at(dims.size(), 0);
  Tuple cur(dims.size());
  while (true) {
    for (std::size_t i = 0; i < dims.size(); ++i) cur[i] = dims[i][at[i]];
    f(cur);
    std::size_t i = dims.size();
    while (i > 0) {
      --i;
      if (++at[i] < dims[i].size()) break;
      at[i] = 0;
      if (i == 0) return;
    }
    if (dims.empty()) return;
  }
}

inline std::string describe_value(const Value& v) {
  if (v.is_scalar()) return std::string(scalar_type_name(*v.scalar_type())) + " " + scalar_literal(v);
  if (v.is_ref()) return "a row of '" + v.as_ref().relation + "'";
  return "a '" + v.as_composite().domain + "' value";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Evaluator

class Evaluator {
 public:
  Evaluator(const Catalog& catalog, const Store& store, const Bindings* bindings = nullptr)
      : catalog_(catalog), store_(store), bindings_(bindings) {}

  const Catalog& catalog() const { return catalog_; }
  const Store& store() const { return store_; }

  EvalValue eval(const syntax::Expr& e, const Scope* scope = nullptr) const {
    using namespace syntax;
    return std::visit(
        [&](const auto& n) -> EvalValue {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Const>) {
            return n.value;
          } else if constexpr (std::is_same_v<T, Name>) {
            if (scope)
              if (const Value* v = scope->lookup(n.id)) return *v;
            std::string hint;
            if (bindings_ && bindings_->count(n.id)) hint = " (select a variable as (" + n.id + "))";
            fail(ErrorKind::UnknownName, "unknown name '" + n.id + "'" + hint, e.pos);
          } else if constexpr (std::is_same_v<T, Wildcard>) {
            fail(ErrorKind::TypeError, "a wildcard only stands for a selection argument", e.pos);
          } else if constexpr (std::is_same_v<T, OpApply>) {
            return eval_op(n, scope, e.pos);
          } else if constexpr (std::is_same_v<T, Typecast>) {
            Value v = eval_scalar(*n.operand, scope);
            auto c = cast_scalar(v, n.type);
            if (!c)
              fail(ErrorKind::BadCast,
                   "cannot cast " + relang::detail::describe_value(v) + " to " +
                       std::string(scalar_type_name(n.type)),
                   e.pos);
            return *c;
          } else if constexpr (std::is_same_v<T, Selection>) {
            return select(n, scope, e.pos);
          } else if constexpr (std::is_same_v<T, Product>) {
            return product(n.members, scope);
          } else if constexpr (std::is_same_v<T, Union>) {
            return unite(n.members, scope, e.pos);
          } else if constexpr (std::is_same_v<T, Projection>) {
            return project(eval_set(*n.source, scope), n.paths, e.pos);
          } else {
            return connection(n, scope, e.pos);
          }
        },
        e.node);
  }

  /// Evaluates to a tuple set; a scalar becomes a singleton.
  TupleSet eval_set(const syntax::Expr& e, const Scope* scope = nullptr) const {
    EvalValue v = eval(e, scope);
    if (auto* s = std::get_if<TupleSet>(&v)) return std::move(*s);
    if (auto* x = std::get_if<Value>(&v)) return TupleSet::singleton(*x);
    fail(ErrorKind::TypeError, "a condition is not a set: " + syntax::render(e), e.pos);
  }

  /// Evaluates to one value; a singleton set of width one unwraps.
  Value eval_scalar(const syntax::Expr& e, const Scope* scope = nullptr) const {
    return to_scalar(eval(e, scope), e);
  }

  bool eval_bool(const syntax::Expr& e, const Scope* scope = nullptr) const {
    EvalValue v = eval(e, scope);
    if (auto* b = std::get_if<bool>(&v)) return *b;
    fail(ErrorKind::TypeError, "expected a condition, got " + describe(v), e.pos);
  }

  /// Applies a function relation to argument sets, mapping the body over
  /// their Cartesian product.
  TupleSet apply_function(const RelationDef& fn, const std::vector<TupleSet>& args,
                          Position pos = {}) const {
    if (fn.cls != RelationClass::Function)
      fail(ErrorKind::TypeError, "'" + fn.name + "' is not a function", pos);
    std::vector<ScalarType> params;
    for (const auto& a : fn.attrs) params.push_back(a.type.scalar_type());
    const std::vector<Column> cols = columns_of(fn);
    return map_over(fn.name, params, *fn.result, args, pos, [&](const Tuple& t) {
      Scope sc{&cols, &t};
      Value r = eval_scalar(*fn.body, &sc);
      auto c = cast_scalar(r, *fn.result);
      if (!c) fail(ErrorKind::TypeError, "function '" + fn.name + "' produced " + detail::describe_value(r), pos);
      return *c;
    });
  }

  /// Pairs (target row, source row) for every source tuple connected to a
  /// target row along the unique shortest schema path.
  TupleSet connect(std::string_view target, const TupleSet& source, Position pos = {}) const {
    const RelationDef& t = catalog_.lookup(target);
    if (!source.origin())
      fail(ErrorKind::TypeError, "the source of a connection must be a selection from a relation",
           pos);
    const RelationDef& s = catalog_.lookup(*source.origin());
    for (const RelationDef* d : {&t, &s})
      if (!d->is_simple())
        fail(ErrorKind::NotEnumerable,
             "cannot connect through " + std::string(syntax::class_keyword(d->cls)) + " '" +
                 d->name + "'",
             pos);
    SchemaPath path = find_path(catalog_, s.name, t.name, pos);
    TupleSet out({{t.name, DomainType::relation(t.name)}, {s.name, DomainType::relation(s.name)}});
    for (const auto& [k, tuple] : source.entries()) {
      auto id = store_.index(s.name).forward().find(k);
      if (id == store_.index(s.name).forward().end()) continue;
      std::set<RowId> frontier{id->second};
      for (const auto& step : path) {
        std::set<RowId> next;
        for (RowId row : frontier) {
          if (step.edge.owner == step.from) {
            const Tuple* r = store_.row(step.from, row);
            if (!r) continue;
            const Value& v = (*r)[step.edge.position];
            if (v.is_ref() && store_.row(step.to, v.as_ref().row)) next.insert(v.as_ref().row);
          } else {
            const auto& rev = store_.index(step.to).reverse(step.edge.position);
            if (auto it = rev.find(row); it != rev.end()) next.insert(it->second.begin(), it->second.end());
          }
        }
        frontier = std::move(next);
      }
      for (RowId row : frontier) out.insert({Ref{t.name, row}, Ref{s.name, id->second}});
    }
    return out;
  }

  /// Regroups a flat tuple into the positions of `def`. Relation-valued
  /// positions consume either a Ref/composite directly or the flattened
  /// values of the referenced relation, which are then looked up. Returns
  /// nullopt when a referenced tuple does not exist.
  std::optional<Tuple> conform(const RelationDef& def, const Tuple& flat) const {
    std::size_t at = 0;
    Tuple out;
    bool resolved = true;
    for (const auto& a : def.attrs) {
      auto v = regroup(flat, at, a.type, def.name + "." + a.name);
      if (v) out.push_back(std::move(*v));
      else resolved = false;
    }
    if (at != flat.size())
      fail(ErrorKind::ArityMismatch, "'" + def.name + "' takes " + std::to_string(at) +
                                         " value(s), got " + std::to_string(flat.size()));
    if (!resolved) return std::nullopt;
    return out;
  }

  /// Tuple behind a Ref, or the components of a composite.
  const Tuple* components(const Value& v) const {
    if (v.is_ref()) return store_.row(v.as_ref().relation, v.as_ref().row);
    if (v.is_composite()) return &v.as_composite().values;
    return nullptr;
  }

 private:
  // -- selections ----------------------------------------------------------

  struct Constraint {
    bool free = true;
    std::vector<Value> values;
    std::set<std::string> keys;
    std::optional<Error> deferred;  // raised only if some tuple is examined

    void add(Value v) {
      if (keys.insert(key::encode_one(v)).second) values.push_back(std::move(v));
    }
    bool admits(const Value& v) const { return free || keys.count(key::encode_one(v)) > 0; }
  };

  static std::optional<ScalarType> free_type(const syntax::Expr& e) {
    if (const auto* s = e.as<syntax::Selection>())
      if (s->args.empty() && !s->filter) return scalar_type_from_name(s->target);
    return std::nullopt;
  }

  Constraint constraint(const syntax::Expr& arg, const DomainType& type, const Scope* scope) const {
    Constraint c;
    if (arg.is<syntax::Wildcard>()) return c;
    if (auto st = free_type(arg)) {
      if (!type.is_scalar() || type.scalar_type() != *st)
        fail(ErrorKind::TypeError, "'(" + std::string(scalar_type_name(*st)) + ")' stands for a " +
                                       std::string(scalar_type_name(*st)) + " position, not " +
                                       type.name(), arg.pos);
      return c;
    }
    c.free = false;
    EvalValue ev = eval(arg, scope);
    if (std::holds_alternative<bool>(ev))
      fail(ErrorKind::TypeError, "a condition cannot select a position: " + syntax::render(arg),
           arg.pos);
    if (auto* v = std::get_if<Value>(&ev)) {
      try {
        if (auto x = coerce_position(*v, type)) c.add(std::move(*x));
      } catch (const Error& err) {
        c.deferred = Error(err.kind(), err.what(), arg.pos);
      }
      return c;
    }
    for (const auto& t : std::get<TupleSet>(ev).tuples()) {
      if (type.is_scalar()) {
        std::optional<Value> x;
        if (t.size() == 1) x = cast_scalar(t[0], type.scalar_type());
        if (!x)
          fail(ErrorKind::TypeError, "set member does not fit a " + type.name() + " position",
               arg.pos);
        c.add(std::move(*x));
        continue;
      }
      std::size_t at = 0;
      auto x = regroup(t, at, type, type.name());
      if (at != t.size())
        fail(ErrorKind::TypeError, "set member does not fit a '" + type.name() + "' position",
             arg.pos);
      if (x) c.add(std::move(*x));
    }
    return c;
  }

  std::optional<Value> coerce_position(const Value& v, const DomainType& type) const {
    if (type.is_scalar()) {
      auto x = cast_scalar(v, type.scalar_type());
      if (!x)
        fail(ErrorKind::TypeError,
             "cannot compare " + detail::describe_value(v) + " with a " + type.name() + " position");
      return x;
    }
    if ((v.is_ref() && v.as_ref().relation == type.relation_name()) ||
        (v.is_composite() && v.as_composite().domain == type.relation_name()))
      return v;
    Tuple flat{v};
    std::size_t at = 0;
    auto x = regroup(flat, at, type, type.name());
    if (at != 1)
      fail(ErrorKind::TypeError, detail::describe_value(v) + " does not fit a '" + type.name() + "' position");
    return x;
  }

  std::vector<Constraint> constraints(const syntax::Selection& sel,
                                      const std::vector<Column>& cols, const Scope* scope,
                                      Position pos) const {
    if (sel.args.size() > cols.size())
      fail(ErrorKind::ArityMismatch, "'" + sel.target + "' has " + std::to_string(cols.size()) +
                                         " domain(s), selected with " +
                                         std::to_string(sel.args.size()),
           pos);
    std::vector<Constraint> out;
    for (std::size_t i = 0; i < sel.args.size(); ++i)
      out.push_back(constraint(sel.args[i], cols[i].type, scope));
    return out;
  }

  bool admits(const std::vector<Constraint>& cs, const Tuple& t) const {
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (cs[i].deferred) throw *cs[i].deferred;
      if (!cs[i].admits(t[i])) return false;
    }
    return true;
  }

  bool passes(const syntax::Selection& sel, const std::vector<Column>& cols, const Tuple& t) const {
    if (!sel.filter) return true;
    Scope sc{&cols, &t};
    return eval_bool(**sel.filter, &sc);
  }

  TupleSet select(const syntax::Selection& sel, const Scope* scope, Position pos) const {
    if (bindings_)
      if (auto it = bindings_->find(sel.target); it != bindings_->end())
        return select_from(it->second, sel, scope, pos);
    if (const RelationDef* def = catalog_.find(sel.target)) {
      switch (def->cls) {
        case RelationClass::Simple: return select_relation(*def, sel, scope, pos);
        case RelationClass::Domain: return select_domain(*def, sel, scope, pos);
        case RelationClass::Function: {
          std::vector<TupleSet> args = function_args(sel, scope, pos);
          if (args.size() != def->arity())
            fail(ErrorKind::ArityMismatch, "'" + def->name + "' takes " +
                                               std::to_string(def->arity()) + " argument(s)",
                 pos);
          return filtered(apply_function(*def, args, pos), sel);
        }
      }
    }
    if (auto sig = builtin_signature(sel.target)) {
      std::vector<TupleSet> args = function_args(sel, scope, pos);
      if (args.size() != sig->params.size())
        fail(ErrorKind::ArityMismatch, "'" + sel.target + "' takes " +
                                           std::to_string(sig->params.size()) + " argument(s)",
             pos);
      TupleSet r = map_over(sel.target, sig->params, sig->result, args, pos,
                            [&](const Tuple& t) { return detail::call_builtin(sel.target, t); });
      return filtered(std::move(r), sel);
    }
    if (scalar_type_from_name(sel.target))
      fail(ErrorKind::NotEnumerable,
           "'" + sel.target + "' is a type; it only stands for a free selection position", pos);
    fail(ErrorKind::UnknownRelation, "unknown relation '" + sel.target + "'", pos);
  }

  TupleSet select_relation(const RelationDef& def, const syntax::Selection& sel,
                           const Scope* scope, Position pos) const {
    const std::vector<Column> cols = columns_of(def);
    std::vector<Constraint> cs = constraints(sel, cols, scope, pos);
    TupleSet out(cols, def.name);
    std::string prefix;
    for (const auto& c : cs) {
      if (c.free || c.deferred || c.values.size() != 1) break;
      prefix += *c.keys.begin();
    }
    for (const auto& c : cs)
      if (!c.free && !c.deferred && c.values.empty()) return out;
    const auto& idx = store_.index(def.name);
    const auto& fwd = idx.forward();
    for (auto it = fwd.lower_bound(prefix);
         it != fwd.end() && std::string_view(it->first).substr(0, prefix.size()) == prefix; ++it) {
      const Tuple& t = idx.rows().at(it->second);
      if (admits(cs, t) && passes(sel, cols, t)) out.insert(t);
    }
    return out;
  }

  TupleSet select_domain(const RelationDef& def, const syntax::Selection& sel,
                         const Scope* scope, Position pos) const {
    const std::vector<Column> cols = columns_of(def);
    std::vector<Constraint> cs = constraints(sel, cols, scope, pos);
    bool bound = cs.size() == def.arity();
    for (const auto& c : cs) bound = bound && !c.free;
    if (!bound)
      fail(ErrorKind::NotEnumerable,
           "domain '" + def.name + "' can only be selected with every position bound", pos);
    std::vector<std::vector<Value>> dims;
    for (const auto& c : cs) {
      if (c.deferred) throw *c.deferred;
      dims.push_back(c.values);
    }
    TupleSet out(cols, def.name);
    detail::for_each_combination(dims, [&](const Tuple& t) {
      if (passes(sel, cols, t)) out.insert(t);
    });
    return out;
  }

  TupleSet select_from(const TupleSet& set, const syntax::Selection& sel, const Scope* scope,
                       Position pos) const {
    std::vector<Constraint> cs = constraints(sel, set.schema(), scope, pos);
    TupleSet out(set.schema(), set.origin());
    for (const auto& [k, t] : set.entries())
      if (admits(cs, t) && passes(sel, set.schema(), t)) out.insert(t);
    return out;
  }

  std::vector<TupleSet> function_args(const syntax::Selection& sel, const Scope* scope,
                                      Position pos) const {
    std::vector<TupleSet> args;
    for (const auto& a : sel.args) {
      if (a.is<syntax::Wildcard>() || free_type(a))
        fail(ErrorKind::NotEnumerable,
             "function '" + sel.target + "' needs every argument bound", pos);
      args.push_back(eval_set(a, scope));
    }
    return args;
  }

  TupleSet filtered(TupleSet s, const syntax::Selection& sel) const {
    if (!sel.filter) return s;
    TupleSet out(s.schema(), s.origin());
    for (const auto& [k, t] : s.entries())
      if (passes(sel, s.schema(), t)) out.insert(t);
    return out;
  }

  template <class F>
  TupleSet map_over(const std::string& name, const std::vector<ScalarType>& params,
                    ScalarType result, const std::vector<TupleSet>& args, Position pos,
                    F&& body) const {
    if (args.size() != params.size())
      fail(ErrorKind::ArityMismatch,
           "'" + name + "' takes " + std::to_string(params.size()) + " argument(s)", pos);
    std::vector<std::vector<Value>> dims;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i].width() > 1)
        fail(ErrorKind::TypeError,
             "argument " + std::to_string(i + 1) + " of '" + name + "' is a set of tuples", pos);
      std::vector<Value> vals;
      for (const auto& [k, t] : args[i].entries()) {
        // lossless conversions, plus numeric casts; text is never parsed as a number here
        auto c = conform_scalar(t[0], params[i]);
        if (!c && !t[0].is_text()) c = cast_scalar(t[0], params[i]);
        if (!c)
          fail(ErrorKind::TypeError,
               "argument " + std::to_string(i + 1) + " of '" + name + "' expects " +
                   std::string(scalar_type_name(params[i])) + ", got " +
                   detail::describe_value(t[0]),
               pos);
        vals.push_back(std::move(*c));
      }
      dims.push_back(std::move(vals));
    }
    TupleSet out({{name, DomainType::scalar(result)}});
    detail::for_each_combination(dims, [&](const Tuple& t) { out.insert({body(t)}); });
    return out;
  }

  // -- constructors ----------------------------------------------------------

  TupleSet product(const std::vector<syntax::Expr>& members, const Scope* scope) const {
    std::vector<TupleSet> sets;
    std::vector<Column> cols;
    for (const auto& m : members) {
      sets.push_back(eval_set(m, scope));
      for (const auto& c : sets.back().schema()) cols.push_back(c);
    }
    TupleSet out(std::move(cols));
    std::vector<std::vector<Tuple>> lists;
    for (const auto& s : sets) {
      if (s.empty()) return out;
      lists.push_back(s.tuples());
    }
    std::vector<std::size_t> at(lists.size(), 0);
    while (true) {
      Tuple t;
      for (std::size_t i = 0; i < lists.size(); ++i)
        t.insert(t.end(), lists[i][at[i]].begin(), lists[i][at[i]].end());
      out.insert(std::move(t));
      std::size_t i = lists.size();
      bool more = false;
      while (i > 0) {
        --i;
        if (++at[i] < lists[i].size()) {
          more = true;
          break;
        }
        at[i] = 0;
      }
      if (!more) break;
    }
    return out;
  }

  TupleSet unite(const std::vector<syntax::Expr>& members, const Scope* scope,
                 Position pos) const {
    std::vector<TupleSet> sets;
    for (const auto& m : members) sets.push_back(eval_set(m, scope));
    const TupleSet* shape = nullptr;
    for (const auto& s : sets)
      if (s.width() > 0) {
        shape = &s;
        break;
      }
    if (!shape) return TupleSet();
    std::optional<std::string> origin = shape->origin();
    TupleSet out(shape->schema());
    for (const auto& s : sets) {
      if (s.width() == 0) continue;
      if (s.types() != shape->types())
        fail(ErrorKind::SchemaMismatch,
             "union of sets with different schemas: " + schema_text(*shape) + " and " +
                 schema_text(s),
             pos);
      if (s.origin() != origin) origin.reset();
      for (const auto& [k, t] : s.entries()) out.insert(t);
    }
    out.set_origin(origin);
    return out;
  }

  static std::string schema_text(const TupleSet& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.width(); ++i) {
      if (i) out += " ";
      out += s.schema()[i].type.name();
    }
    return out + ")";
  }

  // -- projection ------------------------------------------------------------

  struct Leaf {
    std::vector<std::size_t> positions;
    Column column;
  };

  void leaves(const std::vector<Column>& cols, const std::vector<syntax::PathItem>& paths,
              std::vector<std::size_t>& prefix, std::vector<Leaf>& out, Position pos) const {
    for (const auto& item : paths) {
      std::optional<std::size_t> idx;
      for (std::size_t i = 0; i < cols.size(); ++i)
        if (cols[i].name == item.attr) {
          idx = i;
          break;
        }
      if (!idx) fail(ErrorKind::UnknownAttr, "no attribute '" + item.attr + "'", pos);
      prefix.push_back(*idx);
      if (item.sub.empty()) {
        out.push_back({prefix, cols[*idx]});
      } else {
        const DomainType& type = cols[*idx].type;
        if (type.is_scalar())
          fail(ErrorKind::NotARelation,
               "'" + item.attr + "' is a " + type.name() + ", not a relation", pos);
        leaves(columns_of(catalog_.lookup(type.relation_name())), item.sub, prefix, out, pos);
      }
      prefix.pop_back();
    }
  }

  TupleSet project(const TupleSet& src, const std::vector<syntax::PathItem>& paths,
                   Position pos) const {
    std::vector<Leaf> ls;
    std::vector<std::size_t> prefix;
    leaves(src.schema(), paths, prefix, ls, pos);
    std::vector<Column> cols;
    for (const auto& l : ls) cols.push_back(l.column);
    TupleSet out(std::move(cols));
    for (const auto& [k, t] : src.entries()) {
      Tuple r;
      bool ok = true;
      for (const auto& l : ls) {
        const Tuple* cur = &t;
        for (std::size_t h = 0; ok && h + 1 < l.positions.size(); ++h) {
          cur = components((*cur)[l.positions[h]]);
          ok = cur != nullptr;
        }
        if (!ok) break;
        r.push_back((*cur)[l.positions.back()]);
      }
      if (ok) out.insert(std::move(r));
    }
    return out;
  }

  // -- connection ------------------------------------------------------------

  TupleSet connection(const syntax::Connection& c, const Scope* scope, Position pos) const {
    if (!catalog_.contains(c.target) && scope && scope->lookup(c.target)) {
      // `{attr (sel)}` inside a filter is an ordinary product
      std::vector<syntax::Expr> members{syntax::Expr{syntax::Name{c.target}, pos}, *c.source};
      return product(members, scope);
    }
    if (!catalog_.contains(c.target))
      fail(ErrorKind::UnknownRelation, "unknown relation '" + c.target + "'", pos);
    return connect(c.target, eval_set(*c.source, scope), pos);
  }

  // -- operators -------------------------------------------------------------

  Value to_scalar(EvalValue v, const syntax::Expr& e) const {
    if (auto* x = std::get_if<Value>(&v)) return std::move(*x);
    if (auto* s = std::get_if<TupleSet>(&v)) {
      if (s->width() == 1 && s->size() == 1) return s->entries().begin()->second[0];
      fail(ErrorKind::TypeError,
           "expected a single value, got a set of " + std::to_string(s->size()) + " tuple(s): " +
               syntax::render(e),
           e.pos);
    }
    fail(ErrorKind::TypeError, "expected a value, got a condition: " + syntax::render(e), e.pos);
  }

  static std::string describe(const EvalValue& v) {
    if (auto* x = std::get_if<Value>(&v)) return detail::describe_value(*x);
    if (std::holds_alternative<bool>(v)) return "a condition";
    return "a set";
  }

  EvalValue eval_op(const syntax::OpApply& op, const Scope* scope, Position pos) const {
    using syntax::Op;
    const auto& xs = op.operands;
    auto arity = [&](std::size_t n) {
      if (xs.size() != n)
        fail(ErrorKind::TypeError,
             "'" + std::string(syntax::op_symbol(op.op)) + "' takes " + std::to_string(n) +
                 " operand(s)",
             pos);
    };
    switch (op.op) {
      case Op::And:
        for (const auto& x : xs)
          if (!eval_bool(x, scope)) return false;
        return true;
      case Op::Or:
        for (const auto& x : xs)
          if (eval_bool(x, scope)) return true;
        return false;
      case Op::Not:
        arity(1);
        return !eval_bool(xs[0], scope);
      case Op::Eq:
      case Op::Ne:
      case Op::Lt:
      case Op::Gt:
      case Op::Le:
      case Op::Ge:
      case Op::Match: {
        arity(2);
        EvalValue a = eval(xs[0], scope);
        EvalValue b = eval(xs[1], scope);
        if (auto* ab = std::get_if<bool>(&a)) {
          auto* bb = std::get_if<bool>(&b);
          if (!bb || (op.op != Op::Eq && op.op != Op::Ne))
            fail(ErrorKind::TypeError, "conditions can only be tested for (in)equality", pos);
          return op.op == Op::Eq ? *ab == *bb : *ab != *bb;
        }
        return compare(op.op, to_scalar(std::move(a), xs[0]), to_scalar(std::move(b), xs[1]), pos);
      }
      default: break;
    }
    std::vector<Value> vs;
    for (const auto& x : xs) vs.push_back(eval_scalar(x, scope));
    return arithmetic(op.op, vs, pos);
  }

  bool compare(syntax::Op op, const Value& a, const Value& b, Position pos) const {
    using syntax::Op;
    if (!a.is_scalar()) {
      bool same = (b.is_ref() && a.is_ref() && a.as_ref().relation == b.as_ref().relation) ||
                  (b.is_composite() && a.is_composite() &&
                   a.as_composite().domain == b.as_composite().domain);
      if (!same || (op != Op::Eq && op != Op::Ne))
        fail(ErrorKind::TypeError,
             "cannot compare " + detail::describe_value(a) + " with " + detail::describe_value(b),
             pos);
      return (op == Op::Eq) == (a == b);
    }
    auto cb = cast_scalar(b, *a.scalar_type());
    if (!cb)
      fail(ErrorKind::TypeError,
           "cannot compare " + detail::describe_value(a) + " with " + detail::describe_value(b),
           pos);
    if (op == Op::Match) {
      if (!a.is_text()) fail(ErrorKind::TypeError, "'~' needs a text first operand", pos);
      return std::regex_match(a.as_text(), regex(cb->as_text(), pos));
    }
    const std::string ka = key::encode_one(a);
    const std::string kb = key::encode_one(*cb);
    const int c = ka < kb ? -1 : (ka == kb ? 0 : 1);
    switch (op) {
      case Op::Eq: return c == 0;
      case Op::Ne: return c != 0;
      case Op::Lt: return c < 0;
      case Op::Gt: return c > 0;
      case Op::Le: return c <= 0;
      default: return c >= 0;
    }
  }

  const std::regex& regex(const std::string& pattern, Position pos) const {
    auto it = regex_cache_.find(pattern);
    if (it != regex_cache_.end()) return it->second;
    try {
      return regex_cache_.emplace(pattern, std::regex(pattern, std::regex::ECMAScript)).first->second;
    } catch (const std::regex_error& e) {
      fail(ErrorKind::BadRegex, "bad regular expression '" + pattern + "': " + e.what(), pos);
    }
  }

  static Value arithmetic(syntax::Op op, std::vector<Value> vs, Position pos) {
    using syntax::Op;
    const std::string sym(syntax::op_symbol(op));
    if (!vs[0].is_scalar())
      fail(ErrorKind::TypeError, "'" + sym + "' on " + detail::describe_value(vs[0]), pos);
    const ScalarType t = *vs[0].scalar_type();
    for (std::size_t i = 1; i < vs.size(); ++i) {
      auto c = cast_scalar(vs[i], t);
      if (!c)
        fail(ErrorKind::TypeError,
             "operand " + std::to_string(i + 1) + " of '" + sym + "' is " +
                 detail::describe_value(vs[i]) + ", expected " +
                 std::string(scalar_type_name(t)),
             pos);
      vs[i] = std::move(*c);
    }
    auto overflow = [&]() -> Value {
      fail(ErrorKind::ArithmeticError, "integer overflow in '" + sym + "'", pos);
    };
    auto finite = [&](double d) {
      if (!std::isfinite(d)) fail(ErrorKind::ArithmeticError, "'" + sym + "' is not finite", pos);
      return Value(d);
    };

    if (t == ScalarType::Text && op == Op::Add) {
      std::string s;
      for (const auto& v : vs) s += v.as_text();
      return s;
    }
    if (t != ScalarType::Int && t != ScalarType::Real)
      fail(ErrorKind::TypeError, "'" + sym + "' on " + std::string(scalar_type_name(t)), pos);

    if (op == Op::Div) {
      auto real = [](const Value& v) { return v.is_int() ? static_cast<double>(v.as_int()) : v.as_real(); };
      double acc = real(vs[0]);
      if (vs.size() == 1) {
        if (acc == 0) fail(ErrorKind::ArithmeticError, "division by zero", pos);
        return finite(1.0 / acc);
      }
      for (std::size_t i = 1; i < vs.size(); ++i) {
        double d = real(vs[i]);
        if (d == 0) fail(ErrorKind::ArithmeticError, "division by zero", pos);
        acc /= d;
      }
      return finite(acc);
    }

    if (t == ScalarType::Int) {
      std::int64_t acc = vs[0].as_int();
      if (vs.size() == 1 && op == Op::Sub) {
        if (acc == std::numeric_limits<std::int64_t>::min()) return overflow();
        return Value(-acc);
      }
      for (std::size_t i = 1; i < vs.size(); ++i) {
        std::int64_t x = vs[i].as_int();
        bool bad = op == Op::Add   ? __builtin_add_overflow(acc, x, &acc)
                   : op == Op::Sub ? __builtin_sub_overflow(acc, x, &acc)
                                   : __builtin_mul_overflow(acc, x, &acc);
        if (bad) return overflow();
      }
      return Value(acc);
    }
    double acc = vs[0].as_real();
    if (vs.size() == 1 && op == Op::Sub) return Value(-acc);
    for (std::size_t i = 1; i < vs.size(); ++i) {
      double x = vs[i].as_real();
      acc = op == Op::Add ? acc + x : op == Op::Sub ? acc - x : acc * x;
    }
    return finite(acc);
  }

  // -- regrouping ------------------------------------------------------------

  std::optional<Value> regroup(const Tuple& flat, std::size_t& at, const DomainType& type,
                               const std::string& where) const {
    if (at >= flat.size())
      fail(ErrorKind::ArityMismatch, "too few values for " + where);
    if (type.is_scalar()) {
      const Value& v = flat[at++];
      auto c = conform_scalar(v, type.scalar_type());
      if (!c)
        fail(ErrorKind::DomainTypeMismatch,
             where + " expects " + type.name() + ", got " + detail::describe_value(v));
      return c;
    }
    const RelationDef& target = catalog_.lookup(type.relation_name());
    const Value& head = flat[at];
    if ((head.is_ref() && head.as_ref().relation == target.name) ||
        (head.is_composite() && head.as_composite().domain == target.name)) {
      ++at;
      return head;
    }
    Tuple parts;
    bool resolved = true;
    for (const auto& a : target.attrs) {
      auto v = regroup(flat, at, a.type, target.name + "." + a.name);
      if (v) parts.push_back(std::move(*v));
      else resolved = false;
    }
    if (!resolved) return std::nullopt;
    if (!target.is_simple()) return Value(Composite{target.name, std::move(parts)});
    if (auto id = store_.find(target.name, parts)) return Value(Ref{target.name, *id});
    return std::nullopt;
  }

  const Catalog& catalog_;
  const Store& store_;
  const Bindings* bindings_;
  mutable std::unordered_map<std::string, std::regex> regex_cache_;
};

}  // namespace relang
