#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "relang/error.hpp"
#include "relang/syntax.hpp"
#include "relang/value.hpp"

namespace relang {

using syntax::RelationClass;

/// Type of one relation position: a scalar, or another relation.
struct DomainType {
  std::variant<ScalarType, std::string> t;

  static DomainType scalar(ScalarType s) { return {s}; }
  static DomainType relation(std::string name) { return {std::move(name)}; }

  bool is_scalar() const { return std::holds_alternative<ScalarType>(t); }
  ScalarType scalar_type() const { return std::get<ScalarType>(t); }
  const std::string& relation_name() const { return std::get<std::string>(t); }

  std::string name() const {
    return is_scalar() ? std::string(scalar_type_name(scalar_type())) : relation_name();
  }

  friend bool operator==(const DomainType&, const DomainType&) = default;
};

struct Attribute {
  std::string name;
  DomainType type;
  bool named = false;  // false: the name was defaulted from the type

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

struct RelationDef {
  std::string name;
  RelationClass cls = RelationClass::Simple;
  std::vector<Attribute> attrs;
  std::optional<syntax::Expr> body;     // functions only
  std::optional<ScalarType> result;     // functions only

  std::size_t arity() const { return attrs.size(); }

  std::optional<std::size_t> attr_index(std::string_view attr) const {
    for (std::size_t i = 0; i < attrs.size(); ++i)
      if (attrs[i].name == attr) return i;
    return std::nullopt;
  }

  bool is_simple() const { return cls == RelationClass::Simple; }

  syntax::Definition to_definition() const {
    syntax::Definition d{cls, name, {}, body};
    for (const auto& a : attrs)
      d.domains.push_back({a.named ? std::optional<std::string>(a.name) : std::nullopt,
                           a.type.name()});
    return d;
  }

  friend bool operator==(const RelationDef&, const RelationDef&) = default;
};

/// Built-in pure text functions.
struct BuiltinSignature {
  std::vector<ScalarType> params;
  ScalarType result;
};

inline std::optional<BuiltinSignature> builtin_signature(std::string_view name) {
  if (name == "capitalize") return BuiltinSignature{{ScalarType::Text}, ScalarType::Text};
  if (name == "length") return BuiltinSignature{{ScalarType::Text}, ScalarType::Int};
  return std::nullopt;
}

/// Static type of an expression; Bool exists only here and in evaluation.
enum class ExprType { Int, Real, Text, Timestamp, Bool };

inline ExprType expr_type(ScalarType s) {
  switch (s) {
    case ScalarType::Int: return ExprType::Int;
    case ScalarType::Real: return ExprType::Real;
    case ScalarType::Text: return ExprType::Text;
    case ScalarType::Timestamp: return ExprType::Timestamp;
  }
  return ExprType::Int;
}

inline std::string_view expr_type_name(ExprType t) {
  switch (t) {
    case ExprType::Int: return "int";
    case ExprType::Real: return "real";
    case ExprType::Text: return "text";
    case ExprType::Timestamp: return "timestamp";
    case ExprType::Bool: return "bool";
  }
  return "?";
}

/// Labeled undirected edge: `owner` has a position `attr` of type `target`.
struct SchemaEdge {
  std::string owner;
  std::size_t position = 0;
  std::string attr;
  std::string target;

  friend bool operator==(const SchemaEdge&, const SchemaEdge&) = default;
};

struct SchemaGraph {
  std::vector<std::string> nodes;
  std::vector<SchemaEdge> edges;

  /// Indices into `edges` touching `node`.
  std::vector<std::size_t> incident(std::string_view node) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edges[i].owner == node || edges[i].target == node) out.push_back(i);
    return out;
  }
};

class Catalog {
 public:
  Catalog() = default;

  /// Returns the catalog extended by `def`; `*this` is unchanged.
  Catalog define(const syntax::Definition& def) const {
    Catalog next = *this;
    next.add(check(def));
    return next;
  }

  const RelationDef* find(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    return it == by_name_.end() ? nullptr : defs_[it->second].get();
  }

  const RelationDef& lookup(std::string_view name) const {
    if (const auto* def = find(name)) return *def;
    fail(ErrorKind::UnknownRelation, "unknown relation '" + std::string(name) + "'");
  }

  bool contains(std::string_view name) const { return find(name) != nullptr; }

  /// Definitions in definition order, which is also dependency order.
  std::vector<std::shared_ptr<const RelationDef>> const& definitions() const { return defs_; }

  std::size_t size() const { return defs_.size(); }

  SchemaGraph schema_graph() const {
    SchemaGraph g;
    for (const auto& def : defs_) {
      g.nodes.push_back(def->name);
      for (std::size_t p = 0; p < def->attrs.size(); ++p) {
        const auto& a = def->attrs[p];
        if (!a.type.is_scalar()) g.edges.push_back({def->name, p, a.name, a.type.relation_name()});
      }
    }
    return g;
  }

  /// Infers the static type of a function-style expression whose free names
  /// are `scope` attributes. `self` names a function being defined, which
  /// may not call itself.
  ExprType infer(const syntax::Expr& e, const std::vector<Attribute>& scope,
                 std::string_view self = {}) const;

  friend bool operator==(const Catalog& a, const Catalog& b) {
    if (a.defs_.size() != b.defs_.size()) return false;
    for (std::size_t i = 0; i < a.defs_.size(); ++i)
      if (!(*a.defs_[i] == *b.defs_[i])) return false;
    return true;
  }

 private:
  void add(RelationDef def) {
    by_name_[def.name] = defs_.size();
    defs_.push_back(std::make_shared<const RelationDef>(std::move(def)));
  }

  RelationDef check(const syntax::Definition& d) const;

  std::vector<std::shared_ptr<const RelationDef>> defs_;
  std::map<std::string, std::size_t> by_name_;
};

namespace detail {

inline bool castable(ExprType from, ExprType to) {
  if (from == ExprType::Bool || to == ExprType::Bool) return from == to;
  if (from == to) return true;
  switch (to) {
    case ExprType::Int:
    case ExprType::Real: return from != ExprType::Timestamp;
    case ExprType::Text: return true;
    case ExprType::Timestamp: return from == ExprType::Text || from == ExprType::Int;
    default: return false;
  }
}

}  // namespace detail

inline ExprType Catalog::infer(const syntax::Expr& e, const std::vector<Attribute>& scope,
                               std::string_view self) const {
  using namespace syntax;
  auto type_error = [&](const std::string& msg) -> ExprType {
    fail(ErrorKind::TypeError, msg + " in " + render(e), e.pos);
  };

  if (const auto* c = e.as<Const>()) return expr_type(*c->value.scalar_type());
  if (const auto* n = e.as<Name>()) {
    for (const auto& a : scope)
      if (a.name == n->id) {
        if (!a.type.is_scalar()) return type_error("relation-valued attribute '" + a.name + "'");
        return expr_type(a.type.scalar_type());
      }
    fail(ErrorKind::UnknownName, "unknown name '" + n->id + "'", e.pos);
  }
  if (const auto* cast = e.as<Typecast>()) {
    ExprType from = infer(*cast->operand, scope, self);
    if (!relang::detail::castable(from, expr_type(cast->type))) return type_error("impossible cast");
    return expr_type(cast->type);
  }
  if (const auto* op = e.as<OpApply>()) {
    std::vector<ExprType> types;
    for (const auto& x : op->operands) types.push_back(infer(x, scope, self));
    const ExprType first = types.front();
    auto rest_castable = [&] {
      for (std::size_t i = 1; i < types.size(); ++i)
        if (!relang::detail::castable(types[i], first)) return false;
      return true;
    };
    switch (op->op) {
      case Op::Add:
        if (first != ExprType::Int && first != ExprType::Real && first != ExprType::Text)
          return type_error("'+' on " + std::string(expr_type_name(first)));
        if (!rest_castable()) return type_error("operand type mismatch");
        return first;
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
        if (first != ExprType::Int && first != ExprType::Real)
          return type_error("arithmetic on " + std::string(expr_type_name(first)));
        if (!rest_castable()) return type_error("operand type mismatch");
        return op->op == Op::Div ? ExprType::Real : first;
      case Op::Eq:
      case Op::Ne:
      case Op::Lt:
      case Op::Gt:
      case Op::Le:
      case Op::Ge:
        if (types.size() != 2) return type_error("comparison takes two operands");
        if (first == ExprType::Bool && op->op != Op::Eq && op->op != Op::Ne)
          return type_error("ordering of bool");
        if (!rest_castable()) return type_error("operand type mismatch");
        return ExprType::Bool;
      case Op::Match:
        if (types.size() != 2 || first != ExprType::Text || !rest_castable())
          return type_error("'~' needs text operands");
        return ExprType::Bool;
      case Op::And:
      case Op::Or:
        for (auto t : types)
          if (t != ExprType::Bool) return type_error("logic on non-bool");
        return ExprType::Bool;
      case Op::Not:
        if (types.size() != 1 || first != ExprType::Bool) return type_error("'!' takes one bool");
        return ExprType::Bool;
    }
  }
  if (const auto* sel = e.as<Selection>()) {
    if (!self.empty() && sel->target == self)
      fail(ErrorKind::SelfReference, "function '" + sel->target + "' calls itself", e.pos);
    std::vector<ScalarType> params;
    ScalarType result{};
    if (auto b = builtin_signature(sel->target)) {
      params = b->params;
      result = b->result;
    } else if (const auto* fn = find(sel->target); fn && fn->cls == RelationClass::Function) {
      for (const auto& a : fn->attrs) params.push_back(a.type.scalar_type());
      result = *fn->result;
    } else if (find(sel->target) || scalar_type_from_name(sel->target)) {
      return type_error("selection from '" + sel->target + "' is not a scalar expression");
    } else {
      fail(ErrorKind::UnknownRelation, "unknown function '" + sel->target + "'", e.pos);
    }
    if (sel->filter || sel->args.size() != params.size())
      fail(ErrorKind::ArityMismatch,
           "'" + sel->target + "' takes " + std::to_string(params.size()) + " argument(s)", e.pos);
    for (std::size_t i = 0; i < params.size(); ++i)
      if (!relang::detail::castable(infer(sel->args[i], scope, self), expr_type(params[i])))
        return type_error("argument " + std::to_string(i + 1) + " of '" + sel->target + "'");
    return expr_type(result);
  }
  return type_error("not a scalar expression");
}

inline RelationDef Catalog::check(const syntax::Definition& d) const {
  if (contains(d.name))
    fail(ErrorKind::DuplicateName, "'" + d.name + "' is already defined");
  if (scalar_type_from_name(d.name) || builtin_signature(d.name))
    fail(ErrorKind::DuplicateName, "'" + d.name + "' is a reserved name");

  RelationDef def{d.name, d.cls, {}, std::nullopt, std::nullopt};
  std::set<std::string> seen;
  for (const auto& dom : d.domains) {
    Attribute attr{dom.attr.value_or(dom.type), DomainType::scalar(ScalarType::Int),
                   dom.attr.has_value()};
    if (auto s = scalar_type_from_name(dom.type)) {
      attr.type = DomainType::scalar(*s);
    } else if (dom.type == d.name) {
      fail(ErrorKind::SelfReference, "'" + d.name + "' cannot be its own domain");
    } else if (const auto* ref = find(dom.type)) {
      if (ref->cls == RelationClass::Function)
        fail(ErrorKind::TypeError, "function '" + ref->name + "' cannot be a domain");
      if (d.cls == RelationClass::Function)
        fail(ErrorKind::TypeError, "function arguments must be scalar, got '" + dom.type + "'");
      if (d.cls == RelationClass::Domain && ref->cls != RelationClass::Domain)
        fail(ErrorKind::TypeError,
             "domain '" + d.name + "' may only be built from scalars and other domains");
      attr.type = DomainType::relation(ref->name);
    } else {
      fail(ErrorKind::UnknownType, "unknown type '" + dom.type + "'");
    }
    if (!seen.insert(attr.name).second)
      fail(ErrorKind::DuplicateName,
           "attribute '" + attr.name + "' appears twice in '" + d.name + "'");
    def.attrs.push_back(std::move(attr));
  }

  if (d.cls == RelationClass::Function) {
    if (!d.body) fail(ErrorKind::SyntaxError, "function '" + d.name + "' has no body");
    ExprType t = infer(*d.body, def.attrs, d.name);
    if (t == ExprType::Bool)
      fail(ErrorKind::TypeError, "function '" + d.name + "' would produce bool values");
    def.body = d.body;
    def.result = t == ExprType::Int    ? ScalarType::Int
                 : t == ExprType::Real ? ScalarType::Real
                 : t == ExprType::Text ? ScalarType::Text
                                       : ScalarType::Timestamp;
  } else if (d.body) {
    fail(ErrorKind::SyntaxError, "only functions have a body");
  }
  return def;
}

}  // namespace relang
