#pragma once

// Statement execution and the command-line front end.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "relang/error.hpp"
#include "relang/eval.hpp"
#include "relang/format.hpp"
#include "relang/snapshot.hpp"
#include "relang/syntax.hpp"
#include "relang/txn.hpp"

namespace relang {

/// Executes statements against a database. A transaction begins with the
/// first statement that reads or changes data and lasts until `commit`,
/// `rollback`, or `finish`. Definitions take effect immediately.
class Session {
 public:
  explicit Session(Database db = {}, FormatKind format = FormatKind::Sexpr)
      : db_(std::move(db)), format_(format) {}

  const Database& database() const { return db_; }
  bool in_transaction() const { return txn_.has_value(); }
  const Transaction* transaction() const { return txn_ ? &*txn_ : nullptr; }
  const std::optional<CommitReport>& last_commit() const { return last_commit_; }

  void execute(const syntax::Statement& st, std::ostream& out) {
    std::visit([&](const auto& n) { run(n, st.pos, out); }, st.node);
  }

  /// Parses the whole script first, then executes it statement by
  /// statement; stops at the first error.
  void run_script(std::string_view source, std::ostream& out) {
    for (const auto& st : syntax::parse_script(source)) execute(st, out);
  }

  /// Ends the session: an open transaction is committed.
  void finish() {
    if (txn_) commit();
  }

 private:
  Transaction& txn() {
    if (!txn_) txn_.emplace(db_);
    return *txn_;
  }

  void commit() {
    Transaction& t = txn();
    CommitReport report = t.commit(db_);
    txn_.reset();
    last_commit_ = report;
    if (report.error) throw *report.error;
  }

  void print(const EvalValue& v, std::optional<FormatKind> fmt,
             const std::vector<std::string>& order, std::ostream& out) {
    Formatter f(txn().shadow());
    FormatKind kind = fmt.value_or(format_);
    if (const auto* s = std::get_if<TupleSet>(&v)) out << f.format(*s, kind, order);
    else if (const auto* x = std::get_if<Value>(&v)) out << f.format(*x, kind);
    else out << (std::get<bool>(v) ? "true" : "false") << "\n";
  }

  void run(const syntax::Definition& d, Position pos, std::ostream&) {
    try {
      db_.define(d);
    } catch (Error& e) {
      e.at(pos);
      throw;
    }
    if (txn_) txn_->adopt(db_);
  }

  void run(const syntax::Assignment& a, Position pos, std::ostream&) {
    Transaction& t = txn();
    TupleSet value;
    if (const auto* cmd = std::get_if<syntax::Command>(&a.rhs)) {
      value = t.execute(*cmd, pos);
    } else {
      try {
        value = t.query(std::get<syntax::Expr>(a.rhs));
      } catch (Error& e) {
        e.at(pos);
        throw;
      }
    }
    t.bind(a.name, std::move(value), pos);
  }

  void run(const syntax::Command& c, Position pos, std::ostream&) { txn().execute(c, pos); }

  void run(const syntax::Output& o, Position pos, std::ostream& out) {
    Transaction& t = txn();
    try {
      print(t.query(o.query), o.format, o.order, out);
    } catch (Error& e) {
      e.at(pos);
      throw;
    }
  }

  void run(const syntax::BareQuery& q, Position pos, std::ostream& out) {
    Transaction& t = txn();
    try {
      print(t.evaluator().eval(q.query), std::nullopt, {}, out);
    } catch (Error& e) {
      e.at(pos);
      throw;
    }
  }

  void run(const syntax::Commit&, Position pos, std::ostream&) {
    try {
      commit();
    } catch (Error& e) {
      e.at(pos);
      throw;
    }
  }

  void run(const syntax::Rollback&, Position, std::ostream&) {
    if (txn_) txn_->rollback();
    txn_.reset();
  }

  Database db_;
  FormatKind format_;
  std::optional<Transaction> txn_;
  std::optional<CommitReport> last_commit_;
};

inline std::string error_line(std::string_view source, const Error& e) {
  std::string out(source);
  if (e.position().line) {
    out += ":" + std::to_string(e.position().line);
    if (e.position().column) out += ":" + std::to_string(e.position().column);
  }
  return out + ": " + std::string(e.name()) + ": " + e.what();
}

namespace detail {

/// Net count of unclosed brackets outside of text literals and comments.
inline int open_brackets(std::string_view s) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || c == '\'') quote = c;
    else if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (c == '(' || c == '{' || c == '[') ++depth;
    else if (c == ')' || c == '}' || c == ']') --depth;
  }
  return depth;
}

inline std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Interactive loop: one statement per line, continued while brackets are
/// open. Errors are reported and the loop goes on.
inline void repl(Session& session, std::istream& in, std::ostream& out, std::ostream& err) {
  std::string buffer;
  std::string line;
  std::size_t first_line = 1;
  std::size_t line_no = 0;
  out << "relang> " << std::flush;
  while (std::getline(in, line)) {
    ++line_no;
    if (buffer.empty()) first_line = line_no;
    buffer += line + "\n";
    if (detail::open_brackets(buffer) > 0) {
      out << "   ...> " << std::flush;
      continue;
    }
    try {
      session.run_script(buffer, out);
    } catch (const Error& e) {
      std::string where = "<repl>";
      if (e.position().line) where += ":" + std::to_string(first_line + e.position().line - 1);
      err << where << ": " << e.name() << ": " << e.what() << "\n";
    }
    buffer.clear();
    out << "relang> " << std::flush;
  }
  out << "\n";
  try {
    session.finish();
  } catch (const Error& e) {
    err << error_line("<repl>", e) << "\n";
  }
}

/// Command-line entry point. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::istream& in, std::ostream& out,
               std::ostream& err, bool stdin_tty, bool stdout_tty) {
  CLI::App app{"Interpreter for a relational data language"};
  app.name("relang");
  std::vector<std::string> files;
  std::vector<std::string> statements;
  std::string db_path;
  std::string save_path;
  std::string format_name;
  bool dump = false;
  app.add_option("files", files, "Script files, run in order");
  app.add_option("-e", statements, "Statement to run after the files (repeatable)")
      ->allow_extra_args(false);
  app.add_option("--db", db_path, "Snapshot to load before running");
  app.add_option("--save", save_path, "Write a snapshot here after success");
  app.add_option("--format", format_name, "Default output format")
      ->check(CLI::IsMember({"tabular", "csv", "sexpr"}));
  app.add_flag("--dump", dump, "Print the final snapshot");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  FormatKind format = stdout_tty ? FormatKind::Tabular : FormatKind::Sexpr;
  if (!format_name.empty()) format = *syntax::format_from_name(format_name);

  Database db;
  if (!db_path.empty()) {
    auto text = detail::read_file(db_path);
    if (!text) {
      err << db_path << ": IoError: cannot read file\n";
      return 1;
    }
    try {
      db = snapshot::load(*text);
    } catch (const Error& e) {
      err << db_path << ": " << e.name() << ": " << e.what() << "\n";
      return 1;
    }
  }

  Session session(std::move(db), format);
  std::string source = "<stdin>";
  try {
    for (const auto& f : files) {
      source = f;
      auto text = detail::read_file(f);
      if (!text) fail(ErrorKind::IoError, "cannot read file");
      session.run_script(*text, out);
    }
    for (std::size_t i = 0; i < statements.size(); ++i) {
      source = "-e#" + std::to_string(i + 1);
      session.run_script(statements[i], out);
    }
    if (files.empty() && statements.empty()) {
      if (stdin_tty) {
        source = "<repl>";
        repl(session, in, out, err);
      } else {
        source = "<stdin>";
        std::ostringstream ss;
        ss << in.rdbuf();
        session.run_script(ss.str(), out);
      }
    }
    source = "<commit>";
    session.finish();
  } catch (const Error& e) {
    err << error_line(source, e) << "\n";
    return 1;
  }

  std::string snap;
  if (!save_path.empty() || dump) snap = snapshot::save(session.database());
  if (!save_path.empty()) {
    std::ofstream o(save_path, std::ios::binary);
    o << snap;
    if (!o) {
      err << save_path << ": IoError: cannot write file\n";
      return 1;
    }
  }
  if (dump) out << snap;
  return 0;
}

}  // namespace relang
