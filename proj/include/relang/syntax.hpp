#pragma once

// Lexer, syntax tree, parser and canonical printer for the relang language.
//
// The grammar is s-expression shaped and needs no separators besides
// whitespace:
//
//   relation (book author (title text) timestamp)
//   function (avg2 (a real) (b real)) (/ (+ a b) 2)
//   Homer = add author {'Homer' '800 BC'}
//   (book (author :(name ~ "A.*")) . .)
//   {genre (author 'Dawkins' ?)}
//   [(book_genre . (genre 'sci-fi')) [book [author name] title]]
//   update author (author) (name (capitalize name))
//   output csv order name (author)
//   commit

#include <algorithm>
#include <array>
#include <charconv>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "relang/error.hpp"
#include "relang/value.hpp"

namespace relang::syntax {

// ---------------------------------------------------------------------------
// Tokens

enum class TokenKind {
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Colon,
  Dot,
  Question,
  Name,
  Operator,
  IntLiteral,
  RealLiteral,
  TextLiteral,
  Keyword,
};

struct Token {
  TokenKind kind;
  std::string lexeme;  // decoded content for text literals
  Position pos;

  friend bool operator==(const Token& a, const Token& b) {
    return a.kind == b.kind && a.lexeme == b.lexeme;
  }
};

inline constexpr std::array<std::string_view, 10> kKeywords = {
    "relation", "domain", "function", "add",    "remove",
    "update",   "abolish", "output",  "commit", "rollback"};

inline constexpr std::array<std::string_view, 14> kOperators = {
    "+", "-", "*", "/", "=", "!=", "<", ">", "<=", ">=", "&", "|", "!", "~"};

inline bool is_keyword(std::string_view s) {
  return std::find(kKeywords.begin(), kKeywords.end(), s) != kKeywords.end();
}

namespace detail {

inline bool ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}
inline bool ident_char(unsigned char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
inline bool digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace detail

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  std::uint32_t line = 1;
  std::size_t line_start = 0;
  auto here = [&] { return Position{line, static_cast<std::uint32_t>(i - line_start + 1)}; };
  auto at = [&](std::size_t k) { return k < src.size() ? src[k] : '\0'; };

  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      ++i;
      ++line;
      line_start = i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '/' && at(i + 1) == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }

    Position pos = here();
    auto single = [&](TokenKind kind) {
      out.push_back({kind, std::string(1, c), pos});
      ++i;
    };
    switch (c) {
      case '(': single(TokenKind::LParen); continue;
      case ')': single(TokenKind::RParen); continue;
      case '{': single(TokenKind::LBrace); continue;
      case '}': single(TokenKind::RBrace); continue;
      case '[': single(TokenKind::LBracket); continue;
      case ']': single(TokenKind::RBracket); continue;
      case ':': single(TokenKind::Colon); continue;
      case '.': single(TokenKind::Dot); continue;
      case '?': single(TokenKind::Question); continue;
      default: break;
    }

    if (c == '"' || c == '\'') {
      const char quote = c;
      std::string text;
      std::size_t j = i + 1;
      bool closed = false;
      while (j < src.size()) {
        char d = src[j];
        if (d == quote) {
          closed = true;
          break;
        }
        if (d == '\\' && j + 1 < src.size()) {
          char e = src[j + 1];
          text += e == 'n' ? '\n' : e == 't' ? '\t' : e;
          j += 2;
          continue;
        }
        if (d == '\n') {
          ++line;
          line_start = j + 1;
        }
        text += d;
        ++j;
      }
      if (!closed) fail(ErrorKind::UnterminatedString, "string literal is never closed", pos);
      out.push_back({TokenKind::TextLiteral, std::move(text), pos});
      i = j + 1;
      continue;
    }

    if (detail::digit(c) || (c == '-' && detail::digit(at(i + 1)))) {
      std::size_t j = i + 1;
      while (detail::digit(at(j))) ++j;
      bool real = false;
      if (at(j) == '.' && detail::digit(at(j + 1))) {
        real = true;
        j += 2;
        while (detail::digit(at(j))) ++j;
      }
      if ((at(j) == 'e' || at(j) == 'E') &&
          (detail::digit(at(j + 1)) ||
           ((at(j + 1) == '+' || at(j + 1) == '-') && detail::digit(at(j + 2))))) {
        real = true;
        j += 2;
        while (detail::digit(at(j))) ++j;
      }
      std::string lexeme(src.substr(i, j - i));
      if (real) {
        double d = 0;
        auto [p, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), d);
        if (ec != std::errc() || !std::isfinite(d))
          fail(ErrorKind::SyntaxError, "real literal out of range: " + lexeme, pos);
      } else {
        std::int64_t n = 0;
        auto [p, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), n);
        if (ec != std::errc())
          fail(ErrorKind::SyntaxError, "integer literal out of range: " + lexeme, pos);
      }
      out.push_back({real ? TokenKind::RealLiteral : TokenKind::IntLiteral, lexeme, pos});
      i = j;
      continue;
    }

    if (detail::ident_start(static_cast<unsigned char>(c))) {
      std::size_t j = i + 1;
      while (j < src.size() && detail::ident_char(static_cast<unsigned char>(src[j]))) ++j;
      std::string word(src.substr(i, j - i));
      out.push_back({is_keyword(word) ? TokenKind::Keyword : TokenKind::Name, word, pos});
      i = j;
      continue;
    }

    std::string_view two = src.substr(i, 2);
    if (two == "!=" || two == "<=" || two == ">=") {
      out.push_back({TokenKind::Operator, std::string(two), pos});
      i += 2;
      continue;
    }
    if (std::string_view("+-*/=<>&|!~").find(c) != std::string_view::npos) {
      single(TokenKind::Operator);
      continue;
    }

    fail(ErrorKind::IllegalCharacter, std::string("illegal character '") + c + "'", pos);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Syntax tree

/// Owning pointer with value semantics, for recursive nodes.
template <class T>
class Box {
 public:
  Box(T value) : p_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& o) : p_(o.p_ ? std::make_unique<T>(*o.p_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& o) {
    if (this != &o) p_ = o.p_ ? std::make_unique<T>(*o.p_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  ~Box() = default;

  const T& operator*() const { return *p_; }
  const T* operator->() const { return p_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a.p_ == *b.p_; }

 private:
  std::unique_ptr<T> p_;
};

enum class Op { Add, Sub, Mul, Div, Eq, Ne, Lt, Gt, Le, Ge, And, Or, Not, Match };

inline std::string_view op_symbol(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Eq: return "=";
    case Op::Ne: return "!=";
    case Op::Lt: return "<";
    case Op::Gt: return ">";
    case Op::Le: return "<=";
    case Op::Ge: return ">=";
    case Op::And: return "&";
    case Op::Or: return "|";
    case Op::Not: return "!";
    case Op::Match: return "~";
  }
  return "?";
}

inline Op op_from_symbol(std::string_view s) {
  static constexpr std::pair<std::string_view, Op> kTable[] = {
      {"+", Op::Add}, {"-", Op::Sub}, {"*", Op::Mul},  {"/", Op::Div},  {"=", Op::Eq},
      {"!=", Op::Ne}, {"<", Op::Lt},  {">", Op::Gt},   {"<=", Op::Le},  {">=", Op::Ge},
      {"&", Op::And}, {"|", Op::Or},  {"!", Op::Not},  {"~", Op::Match}};
  for (auto [sym, op] : kTable)
    if (sym == s) return op;
  fail(ErrorKind::SyntaxError, "unknown operator " + std::string(s));
}

struct Expr;

struct Const {
  Value value;  // int, real or text
  bool operator==(const Const&) const = default;
};
struct Name {
  std::string id;
  bool operator==(const Name&) const = default;
};
/// `.` or `?`: a position left free in a selection.
struct Wildcard {
  bool operator==(const Wildcard&) const = default;
};
struct OpApply {
  Op op;
  std::vector<Expr> operands;
  bool operator==(const OpApply&) const = default;
};
struct Typecast {
  ScalarType type;
  Box<Expr> operand;
  bool operator==(const Typecast&) const = default;
};
/// `(target args... : filter)`. The target may name a relation, a
/// variable, a function, or a scalar type (a free position).
struct Selection {
  std::string target;
  std::vector<Expr> args;
  std::optional<Box<Expr>> filter;
  bool operator==(const Selection&) const = default;
};
struct Product {
  std::vector<Expr> members;
  bool operator==(const Product&) const = default;
};
struct Union {
  std::vector<Expr> members;
  bool operator==(const Union&) const = default;
};
struct PathItem {
  std::string attr;
  std::vector<PathItem> sub;
  bool operator==(const PathItem&) const = default;
};
struct Projection {
  Box<Expr> source;
  std::vector<PathItem> paths;
  bool operator==(const Projection&) const = default;
};
struct Connection {
  std::string target;
  Box<Expr> source;
  bool operator==(const Connection&) const = default;
};

struct Expr {
  using Node = std::variant<Const, Name, Wildcard, OpApply, Typecast, Selection, Product,
                            Union, Projection, Connection>;
  Node node;
  Position pos;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }

  // structural: positions are ignored
  friend bool operator==(const Expr& a, const Expr& b) { return a.node == b.node; }
};

enum class RelationClass { Simple, Domain, Function };

inline std::string_view class_keyword(RelationClass c) {
  switch (c) {
    case RelationClass::Simple: return "relation";
    case RelationClass::Domain: return "domain";
    case RelationClass::Function: return "function";
  }
  return "?";
}

struct DomainSpec {
  std::optional<std::string> attr;  // absent: defaults to the type name
  std::string type;                 // scalar type or relation name
  bool operator==(const DomainSpec&) const = default;
};

struct Definition {
  RelationClass cls;
  std::string name;
  std::vector<DomainSpec> domains;
  std::optional<Expr> body;  // functions only
  bool operator==(const Definition&) const = default;
};

enum class Verb { Add, Remove, Update, Abolish };

inline std::string_view verb_keyword(Verb v) {
  switch (v) {
    case Verb::Add: return "add";
    case Verb::Remove: return "remove";
    case Verb::Update: return "update";
    case Verb::Abolish: return "abolish";
  }
  return "?";
}

struct Assign {
  std::string attr;
  Expr value;
  bool operator==(const Assign&) const = default;
};

struct Command {
  Verb verb;
  std::string relation;
  Expr set;
  std::vector<Assign> assignments;  // update only
  bool operator==(const Command&) const = default;
};

struct Assignment {
  std::string name;
  std::variant<Command, Expr> rhs;
  bool operator==(const Assignment&) const = default;
};

enum class FormatKind { Tabular, Csv, Sexpr };

inline std::optional<FormatKind> format_from_name(std::string_view s) {
  if (s == "tabular") return FormatKind::Tabular;
  if (s == "csv") return FormatKind::Csv;
  if (s == "sexpr") return FormatKind::Sexpr;
  return std::nullopt;
}

inline std::string_view format_name(FormatKind f) {
  switch (f) {
    case FormatKind::Tabular: return "tabular";
    case FormatKind::Csv: return "csv";
    case FormatKind::Sexpr: return "sexpr";
  }
  return "?";
}

struct Output {
  Expr query;
  std::optional<FormatKind> format;
  std::vector<std::string> order;
  bool operator==(const Output&) const = default;
};

struct Commit {
  bool operator==(const Commit&) const = default;
};
struct Rollback {
  bool operator==(const Rollback&) const = default;
};
struct BareQuery {
  Expr query;
  bool operator==(const BareQuery&) const = default;
};

struct Statement {
  using Node = std::variant<Definition, Assignment, Command, Output, Commit, Rollback, BareQuery>;
  Node node;
  Position pos;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }

  friend bool operator==(const Statement& a, const Statement& b) { return a.node == b.node; }
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  bool done() const { return i_ >= toks_.size(); }

  Statement statement() {
    const Token& t = peek("statement");
    Position pos = t.pos;
    if (t.kind == TokenKind::Keyword) {
      if (t.lexeme == "relation") return {definition(RelationClass::Simple), pos};
      if (t.lexeme == "domain") return {definition(RelationClass::Domain), pos};
      if (t.lexeme == "function") return {definition(RelationClass::Function), pos};
      if (t.lexeme == "commit") {
        ++i_;
        return {Commit{}, pos};
      }
      if (t.lexeme == "rollback") {
        ++i_;
        return {Rollback{}, pos};
      }
      if (t.lexeme == "output") return {output(), pos};
      return {command(), pos};
    }
    if (t.kind == TokenKind::Name && i_ + 1 < toks_.size() &&
        toks_[i_ + 1].kind == TokenKind::Operator && toks_[i_ + 1].lexeme == "=") {
      std::string name = t.lexeme;
      i_ += 2;
      const Token& r = peek("command or selection");
      if (r.kind == TokenKind::Keyword && is_dml(r.lexeme))
        return {Assignment{std::move(name), command()}, pos};
      return {Assignment{std::move(name), set_expr()}, pos};
    }
    if (t.kind == TokenKind::LParen || t.kind == TokenKind::LBrace ||
        t.kind == TokenKind::LBracket)
      return {BareQuery{member(false)}, pos};
    unexpected("a statement");
  }

  Expr member(bool allow_wildcard) {
    const Token& t = peek("a member");
    Position pos = t.pos;
    switch (t.kind) {
      case TokenKind::IntLiteral: {
        std::int64_t n = 0;
        std::from_chars(t.lexeme.data(), t.lexeme.data() + t.lexeme.size(), n);
        ++i_;
        return {Const{Value(n)}, pos};
      }
      case TokenKind::RealLiteral: {
        double d = 0;
        std::from_chars(t.lexeme.data(), t.lexeme.data() + t.lexeme.size(), d);
        ++i_;
        return {Const{Value(d)}, pos};
      }
      case TokenKind::TextLiteral:
        ++i_;
        return {Const{Value(t.lexeme)}, pos};
      case TokenKind::Name:
        ++i_;
        return {Name{t.lexeme}, pos};
      case TokenKind::Dot:
      case TokenKind::Question:
        if (!allow_wildcard) unexpected("a member (wildcards are only allowed as selection arguments)");
        ++i_;
        return {Wildcard{}, pos};
      case TokenKind::LParen: return paren();
      case TokenKind::LBrace: return brace();
      case TokenKind::LBracket: return bracket();
      default: unexpected("a member");
    }
  }

 private:
  static bool is_dml(std::string_view w) {
    return w == "add" || w == "remove" || w == "update" || w == "abolish";
  }

  const Token& peek(std::string_view expected) const {
    if (done()) {
      Position end = toks_.empty() ? Position{1, 1} : toks_.back().pos;
      fail(ErrorKind::SyntaxError, "unexpected end of input, expected " + std::string(expected),
           end);
    }
    return toks_[i_];
  }

  bool at(TokenKind kind) const { return !done() && toks_[i_].kind == kind; }

  bool at_operator() const { return at(TokenKind::Operator); }

  [[noreturn]] void unexpected(std::string_view expected) const {
    const Token& t = peek(expected);
    fail(ErrorKind::SyntaxError,
         "expected " + std::string(expected) + ", found '" + t.lexeme + "'", t.pos);
  }

  const Token& expect(TokenKind kind, std::string_view what) {
    const Token& t = peek(what);
    if (t.kind != kind) unexpected(what);
    ++i_;
    return t;
  }

  std::string expect_name(std::string_view what) { return expect(TokenKind::Name, what).lexeme; }

  Definition definition(RelationClass cls) {
    ++i_;
    expect(TokenKind::LParen, "'('");
    Definition def{cls, expect_name("a relation name"), {}, std::nullopt};
    while (!at(TokenKind::RParen)) {
      if (at(TokenKind::LParen)) {
        ++i_;
        std::string attr = expect_name("an attribute name");
        std::string type = expect_name("a type name");
        expect(TokenKind::RParen, "')'");
        def.domains.push_back({std::move(attr), std::move(type)});
      } else {
        def.domains.push_back({std::nullopt, expect_name("a domain")});
      }
    }
    ++i_;
    if (def.domains.empty())
      fail(ErrorKind::SyntaxError, "relation '" + def.name + "' needs at least one domain",
           toks_[i_ - 1].pos);
    if (cls == RelationClass::Function) def.body = member(false);
    return def;
  }

  Expr set_expr() {
    const Token& t = peek("a set");
    if (t.kind != TokenKind::LParen && t.kind != TokenKind::LBrace &&
        t.kind != TokenKind::LBracket)
      unexpected("a set (product, union or selection)");
    return member(false);
  }

  Command command() {
    const Token& t = peek("a command");
    Verb verb = t.lexeme == "add"      ? Verb::Add
                : t.lexeme == "remove" ? Verb::Remove
                : t.lexeme == "update" ? Verb::Update
                : t.lexeme == "abolish" ? Verb::Abolish
                                        : (unexpected("a command"), Verb::Add);
    ++i_;
    Command cmd{verb, expect_name("a relation name"), set_expr(), {}};
    if (verb == Verb::Update) {
      expect(TokenKind::LParen, "'(' opening the assignment list");
      while (!at(TokenKind::RParen)) {
        std::string attr = expect_name("an attribute name");
        cmd.assignments.push_back({std::move(attr), member(false)});
      }
      ++i_;
      if (cmd.assignments.empty())
        fail(ErrorKind::SyntaxError, "update needs at least one assignment", toks_[i_ - 1].pos);
    }
    return cmd;
  }

  Output output() {
    ++i_;
    Output out{Expr{Wildcard{}, {}}, std::nullopt, {}};
    if (at(TokenKind::Name)) {
      if (auto f = format_from_name(toks_[i_].lexeme)) {
        out.format = f;
        ++i_;
      }
    }
    if (at(TokenKind::Name) && toks_[i_].lexeme == "order") {
      ++i_;
      while (at(TokenKind::Name)) out.order.push_back(toks_[i_++].lexeme);
      if (out.order.empty()) unexpected("an attribute name after 'order'");
    }
    out.query = set_expr();
    return out;
  }

  std::vector<Expr> members_until(TokenKind close, bool allow_wildcard) {
    std::vector<Expr> out;
    while (!at(close)) {
      if (at(TokenKind::Colon) || at_operator()) break;
      out.push_back(member(allow_wildcard));
    }
    return out;
  }

  Expr infix(Expr first, Position pos) {
    Op op = op_from_symbol(toks_[i_].lexeme);
    ++i_;
    std::vector<Expr> operands;
    operands.push_back(std::move(first));
    for (auto& e : members_until(TokenKind::RParen, false)) operands.push_back(std::move(e));
    expect(TokenKind::RParen, "')'");
    if (operands.size() < 2 && op != Op::Not) unexpected("an operand");
    return {OpApply{op, std::move(operands)}, pos};
  }

  Expr paren() {
    Position pos = toks_[i_].pos;
    ++i_;
    const Token& t = peek("')'");

    if (t.kind == TokenKind::RParen) {
      ++i_;
      return {Union{}, pos};
    }

    if (t.kind == TokenKind::Operator) {
      Op op = op_from_symbol(t.lexeme);
      ++i_;
      auto operands = members_until(TokenKind::RParen, false);
      expect(TokenKind::RParen, "')'");
      if (operands.empty()) unexpected("an operand");
      return {OpApply{op, std::move(operands)}, pos};
    }

    if (t.kind == TokenKind::Name) {
      std::string name = t.lexeme;
      Position name_pos = t.pos;
      ++i_;
      if (at_operator()) return infix(Expr{Name{name}, name_pos}, pos);

      if (auto type = scalar_type_from_name(name)) {
        if (at(TokenKind::RParen)) {
          ++i_;
          return {Selection{name, {}, std::nullopt}, pos};
        }
        Expr operand = member(false);
        expect(TokenKind::RParen, "')' closing the typecast");
        return {Typecast{*type, std::move(operand)}, pos};
      }

      Selection sel{name, members_until(TokenKind::RParen, true), std::nullopt};
      if (at(TokenKind::Colon)) {
        ++i_;
        sel.filter = Box<Expr>(member(false));
      }
      expect(TokenKind::RParen, "')' closing the selection");
      return {std::move(sel), pos};
    }

    Expr first = member(false);
    if (at_operator()) return infix(std::move(first), pos);
    std::vector<Expr> members;
    members.push_back(std::move(first));
    for (auto& e : members_until(TokenKind::RParen, false)) members.push_back(std::move(e));
    expect(TokenKind::RParen, "')'");
    if (members.size() == 1) return std::move(members.front());
    return {Union{std::move(members)}, pos};
  }

  Expr brace() {
    Position pos = toks_[i_].pos;
    ++i_;
    auto members = members_until(TokenKind::RBrace, false);
    expect(TokenKind::RBrace, "'}'");
    if (members.empty())
      fail(ErrorKind::SyntaxError, "a product needs at least one member", pos);
    if (members.size() == 2 && members[0].is<Name>() && members[1].is<Selection>()) {
      std::string target = members[0].as<Name>()->id;
      return {Connection{std::move(target), std::move(members[1])}, pos};
    }
    return {Product{std::move(members)}, pos};
  }

  PathItem path_item() {
    if (at(TokenKind::LBracket)) {
      ++i_;
      PathItem item{expect_name("an attribute name"), {}};
      while (!at(TokenKind::RBracket)) item.sub.push_back(path_item());
      ++i_;
      if (item.sub.empty()) unexpected("a nested attribute");
      return item;
    }
    return {expect_name("an attribute name or '['"), {}};
  }

  Expr bracket() {
    Position pos = toks_[i_].pos;
    ++i_;
    Expr source = set_expr();
    std::vector<PathItem> paths;
    while (!at(TokenKind::RBracket)) {
      peek("']'");
      paths.push_back(path_item());
    }
    ++i_;
    if (paths.empty()) fail(ErrorKind::SyntaxError, "a projection needs at least one attribute", pos);
    return {Projection{std::move(source), std::move(paths)}, pos};
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

inline std::vector<Statement> parse_script(std::string_view source) {
  Parser p(tokenize(source));
  std::vector<Statement> out;
  while (!p.done()) out.push_back(p.statement());
  return out;
}

/// Parses exactly one expression (used for literals and tests).
inline Expr parse_expr(std::string_view source) {
  Parser p(tokenize(source));
  Expr e = p.member(false);
  if (!p.done()) fail(ErrorKind::SyntaxError, "trailing input after expression");
  return e;
}

// ---------------------------------------------------------------------------
// Canonical printer

inline std::string render(const Expr& e);

namespace detail {

inline void render_list(std::string& out, const std::vector<Expr>& items) {
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k) out += ' ';
    out += render(items[k]);
  }
}

inline void render_path(std::string& out, const PathItem& item) {
  if (item.sub.empty()) {
    out += item.attr;
    return;
  }
  out += '[';
  out += item.attr;
  for (const auto& s : item.sub) {
    out += ' ';
    render_path(out, s);
  }
  out += ']';
}

}  // namespace detail

inline std::string render(const Expr& e) {
  std::string out;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Const>) {
          out = scalar_literal(n.value);
        } else if constexpr (std::is_same_v<T, Name>) {
          out = n.id;
        } else if constexpr (std::is_same_v<T, Wildcard>) {
          out = ".";
        } else if constexpr (std::is_same_v<T, OpApply>) {
          out = "(";
          out += op_symbol(n.op);
          out += ' ';
          detail::render_list(out, n.operands);
          out += ')';
        } else if constexpr (std::is_same_v<T, Typecast>) {
          out = "(";
          out += scalar_type_name(n.type);
          out += ' ' + render(*n.operand) + ')';
        } else if constexpr (std::is_same_v<T, Selection>) {
          out = "(" + n.target;
          if (!n.args.empty()) {
            out += ' ';
            detail::render_list(out, n.args);
          }
          if (n.filter) out += " : " + render(**n.filter);
          out += ')';
        } else if constexpr (std::is_same_v<T, Product>) {
          out = "{";
          detail::render_list(out, n.members);
          out += '}';
        } else if constexpr (std::is_same_v<T, Union>) {
          out = "(";
          detail::render_list(out, n.members);
          out += ')';
        } else if constexpr (std::is_same_v<T, Projection>) {
          out = "[" + render(*n.source);
          for (const auto& p : n.paths) {
            out += ' ';
            detail::render_path(out, p);
          }
          out += ']';
        } else if constexpr (std::is_same_v<T, Connection>) {
          out = "{" + n.target + ' ' + render(*n.source) + '}';
        }
      },
      e.node);
  return out;
}

inline std::string render(const Definition& d) {
  std::string out(class_keyword(d.cls));
  out += " (" + d.name;
  for (const auto& dom : d.domains) {
    out += ' ';
    out += dom.attr ? "(" + *dom.attr + ' ' + dom.type + ')' : dom.type;
  }
  out += ')';
  if (d.body) out += ' ' + render(*d.body);
  return out;
}

inline std::string render(const Command& c) {
  std::string out(verb_keyword(c.verb));
  out += ' ' + c.relation + ' ' + render(c.set);
  if (c.verb == Verb::Update) {
    out += " (";
    for (std::size_t k = 0; k < c.assignments.size(); ++k) {
      if (k) out += ' ';
      out += c.assignments[k].attr + ' ' + render(c.assignments[k].value);
    }
    out += ')';
  }
  return out;
}

inline std::string render(const Statement& s) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Definition> || std::is_same_v<T, Command>) {
          return render(n);
        } else if constexpr (std::is_same_v<T, Assignment>) {
          return n.name + " = " +
                 std::visit([](const auto& r) { return render(r); }, n.rhs);
        } else if constexpr (std::is_same_v<T, Output>) {
          std::string out = "output";
          if (n.format) out += ' ' + std::string(format_name(*n.format));
          if (!n.order.empty()) {
            out += " order";
            for (const auto& a : n.order) out += ' ' + a;
          }
          return out + ' ' + render(n.query);
        } else if constexpr (std::is_same_v<T, Commit>) {
          return "commit";
        } else if constexpr (std::is_same_v<T, Rollback>) {
          return "rollback";
        } else {
          return render(n.query);
        }
      },
      s.node);
}

}  // namespace relang::syntax
