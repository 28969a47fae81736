#include <gtest/gtest.h>

#include <random>

#include "relang/eval.hpp"
#include "support.hpp"

using namespace relang;
using testing_support::library;
using testing_support::query;

namespace {

const Database& fixture() {
  static const Database db = library();
  return db;
}

EvalValue eval(const Database& db, const std::string& src, const Bindings* b = nullptr) {
  Evaluator ev(db.catalog, db.store, b);
  return ev.eval(syntax::parse_expr(src));
}

EvalValue eval(const std::string& src) { return eval(fixture(), src); }

/// Tuples as deep literals, "v1 v2 ..." each.
std::set<std::string> rows(const Database& db, const TupleSet& s) {
  Formatter f(db.store);
  std::set<std::string> out;
  for (const auto& t : s.tuples()) {
    std::string line;
    for (const auto& v : t) line += (line.empty() ? "" : " ") + f.literal(v);
    out.insert(line);
  }
  return out;
}

std::set<std::string> rows(const std::string& src) { return rows(fixture(), query(fixture(), src)); }

ErrorKind error_of(const Database& db, const std::string& src) {
  try {
    eval(db, src);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error: " << src;
  return ErrorKind::IoError;
}

ErrorKind error_of(const std::string& src) { return error_of(fixture(), src); }

Database with(const std::string& script) {
  return testing_support::run_script(script, fixture());
}

using Rows = std::set<std::string>;

}  // namespace

TEST(Expr, Arithmetic) {
  EXPECT_EQ(std::get<Value>(eval("(+ 1 2 3 4 5)")), Value(1 + 2 + 3 + 4 + 5));
  EXPECT_EQ(std::get<Value>(eval("(+ (int \"123\") 4)")), Value(123 + 4));
  EXPECT_EQ(std::get<Value>(eval("(- 10 3 2)")), Value(10 - 3 - 2));
  EXPECT_EQ(std::get<Value>(eval("(/ 7 2)")), Value(3.5));
  EXPECT_EQ(std::get<Value>(eval("(* 2.5 2)")), Value(5.0));
  EXPECT_EQ(std::get<Value>(eval("(+ \"ab\" \"cd\")")), Value("abcd"));
  EXPECT_EQ(std::get<Value>(eval("(- 5)")), Value(-5));
  EXPECT_EQ(std::get<Value>(eval("(+ 1 \"2\")")), Value(3));
}

TEST(Expr, LogicAgainstDirectEvaluation) {
  const bool expected = (-17 > 1 * 2 * 3 * -5) && (std::string("xcf") < std::string("fgh"));
  EXPECT_EQ(std::get<bool>(eval("(& (> (-17) (* 1 2 3 (-5))) (\"xcf\" < \"fgh\"))")), expected);
  EXPECT_EQ(std::get<bool>(eval("(| (= 1 2) (!= 1 2))")), true);
  EXPECT_EQ(std::get<bool>(eval("(! (< 1 2))")), false);
  EXPECT_EQ(std::get<bool>(eval("(<= 2 2.0)")), true);
  EXPECT_EQ(std::get<bool>(eval("(\"Austen\" ~ \"A.*\")")), true);
  EXPECT_EQ(std::get<bool>(eval("(\"xAusten\" ~ \"A.*\")")), false);
  EXPECT_EQ(std::get<bool>(eval("(\"1941-03-26\" < \"1941-04\")")), true);
}

TEST(Expr, Errors) {
  EXPECT_EQ(error_of("(+ 1 \"a\")"), ErrorKind::TypeError);
  EXPECT_EQ(error_of("(& 1 2)"), ErrorKind::TypeError);
  EXPECT_EQ(error_of("(int \"abc\")"), ErrorKind::BadCast);
  EXPECT_EQ(error_of("(timestamp \"1941-02-30\")"), ErrorKind::BadCast);
  EXPECT_EQ(error_of("(\"a\" ~ \"(\")"), ErrorKind::BadRegex);
  EXPECT_EQ(error_of("(/ 1 0)"), ErrorKind::ArithmeticError);
  EXPECT_EQ(error_of("(+ 9223372036854775807 1)"), ErrorKind::ArithmeticError);
  EXPECT_EQ(error_of("(* 1e300 1e300)"), ErrorKind::ArithmeticError);
  EXPECT_EQ(error_of("nobody"), ErrorKind::UnknownName);
  EXPECT_EQ(error_of("(author : (birthdate > \"notadate\"))"), ErrorKind::TypeError);
}

TEST(Selection, Examples) {
  EXPECT_EQ(rows("(author :(name ~ \"A.*\"))"), (Rows{"\"Austen\" \"1775-12-16\""}));
  EXPECT_EQ(rows("(book (author :(name ~ \"A.*\")) . .)"),
            (Rows{"{\"Austen\" \"1775-12-16\"} \"Emma\" \"1815\""}));
  EXPECT_EQ(rows("(book (author :(name ~ \"A.*\")) (text) (timestamp))"),
            rows("(book (author :(name ~ \"A.*\")) . .)"));
  EXPECT_EQ(rows("(author \"Dawkins\" \"1941\")"), Rows{});
  EXPECT_EQ(rows("(author \"Dawkins\" \"1941-03-26\")"), (Rows{"\"Dawkins\" \"1941-03-26\""}));
  EXPECT_EQ(query(fixture(), "(author)").size(), 3u);
  EXPECT_EQ(query(fixture(), "(book)").size(), 3u);
}

TEST(Selection, EmptyRelation) {
  Database db = with("relation (empty_r int)");
  EXPECT_TRUE(query(db, "(empty_r)").empty());
  EXPECT_TRUE(query(db, "(empty_r 5)").empty());
}

TEST(Selection, Errors) {
  EXPECT_EQ(error_of("(publisher)"), ErrorKind::UnknownRelation);
  EXPECT_EQ(error_of("(genre \"a\" \"b\")"), ErrorKind::ArityMismatch);
  EXPECT_EQ(error_of("(genre : (+ text 1))"), ErrorKind::TypeError);
  Database db = with("domain (point (x real) (y real))");
  EXPECT_EQ(error_of(db, "(point)"), ErrorKind::NotEnumerable);
  EXPECT_EQ(error_of(db, "(point 1.0 .)"), ErrorKind::NotEnumerable);
  EXPECT_EQ(query(db, "(point (1.0 2.0) 3.0)").size(), 2u);
}

TEST(Selection, VariableTarget) {
  Bindings b;
  b.emplace("A", query(fixture(), "(author)"));
  auto c = std::get<TupleSet>(eval(fixture(), "(A . \"1941-03-26\")", &b));
  EXPECT_EQ(rows(fixture(), c), (Rows{"\"Dawkins\" \"1941-03-26\""}));
  auto d = std::get<TupleSet>(eval(fixture(), "(A : (name = \"Homer\"))", &b));
  EXPECT_EQ(rows(fixture(), d), (Rows{"\"Homer\" \"-0799\""}));
}

TEST(SelectionProperty, PositionalEqualsFilter) {
  struct Case {
    const char* rel;
    const char* attr;
    int position;
    int arity;
  };
  const Case cases[] = {{"author", "name", 0, 2}, {"author", "birthdate", 1, 2},
                        {"genre", "text", 0, 1},  {"department", "text", 0, 1},
                        {"book", "title", 1, 3},  {"book", "timestamp", 2, 3}};
  const char* constants[] = {"\"Dawkins\"", "\"Homer\"", "\"epic\"", "\"main\"",
                             "\"Emma\"",    "\"1815\"",  "\"1941-03-26\"", "\"none\"",
                             "\"800 BC\""};
  for (const auto& c : cases) {
    for (const char* k : constants) {
      std::string positional = std::string("(") + c.rel;
      for (int i = 0; i < c.arity; ++i) positional += i == c.position ? std::string(" ") + k : " .";
      positional += ")";
      std::string filtered = std::string("(") + c.rel + " : (" + c.attr + " = " + k + "))";
      bool pos_failed = false;
      bool filter_failed = false;
      TupleSet a, b;
      try {
        a = query(fixture(), positional);
      } catch (const Error&) {
        pos_failed = true;
      }
      try {
        b = query(fixture(), filtered);
      } catch (const Error&) {
        filter_failed = true;
      }
      EXPECT_EQ(pos_failed, filter_failed) << positional << " vs " << filtered;
      if (!pos_failed && !filter_failed) {
        EXPECT_EQ(a, b) << positional << " vs " << filtered;
      }
    }
  }
}

TEST(SelectionProperty, FilterPurity) {
  Database db = fixture();
  const Store before = db.store;
  for (const char* q : {"(author :(name ~ \"A.*\"))", "(book (author :(name ~ \"A.*\")) . .)",
                        "{genre (author 'Dawkins' ?)}", "[(book) author title]",
                        "(avg2 (1 2 3) 3)", "(book : (timestamp < \"1900\"))"}) {
    query(db, q);
    EXPECT_EQ(db.store, before) << q;
  }
}

TEST(Product, Examples) {
  auto t = query(fixture(), "{1 2 \"txt\"}");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.tuples()[0], (Tuple{Value(1), Value(2), Value("txt")}));
  EXPECT_EQ(rows("{(1 2) 3}"), (Rows{"1 3", "2 3"}));
  EXPECT_EQ(rows("{(author) \"he is author\"}"),
            (Rows{"\"Austen\" \"1775-12-16\" \"he is author\"",
                  "\"Dawkins\" \"1941-03-26\" \"he is author\"", "\"Homer\" \"-0799\" \"he is author\""}));
  EXPECT_TRUE(query(fixture(), "{() 3}").empty());
}

TEST(Union, Examples) {
  EXPECT_EQ(rows("(1 2 3)"), (Rows{"1", "2", "3"}));
  EXPECT_EQ(rows("({1 2} {3 4})"), (Rows{"1 2", "3 4"}));
  EXPECT_EQ(query(fixture(), "(1 1 1)").size(), 1u);
  EXPECT_EQ(rows("((genre) \"bore\")"), (Rows{"\"bore\"", "\"epic\"", "\"sci-fi\""}));
  EXPECT_EQ(rows("((genre) \"noir\")"), (Rows{"\"bore\"", "\"epic\"", "\"noir\"", "\"sci-fi\""}));
  EXPECT_EQ(error_of("(1 \"a\")"), ErrorKind::SchemaMismatch);
  EXPECT_EQ(error_of("({1 2} 3)"), ErrorKind::SchemaMismatch);
}

namespace {

std::string random_member(std::mt19937& rng) {
  std::string s = "(";
  int n = static_cast<int>(rng() % 3);
  for (int i = 0; i < n; ++i) s += " " + std::to_string(rng() % 4);
  if (n == 0) s += std::to_string(rng() % 4);
  return s + ")";
}

std::string random_pairs(std::mt19937& rng) {
  std::string s = "(";
  int n = 1 + static_cast<int>(rng() % 3);
  for (int i = 0; i < n; ++i) s += " {" + std::to_string(rng() % 3) + " " + std::to_string(rng() % 3) + "}";
  return s + ")";
}

}  // namespace

TEST(AlgebraProperty, ProductAssociative) {
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    std::string a = random_member(rng), b = random_member(rng), c = random_member(rng);
    auto flat = query(fixture(), "{" + a + " " + b + " " + c + "}");
    EXPECT_EQ(flat, query(fixture(), "{{" + a + " " + b + "} " + c + "}"));
    EXPECT_EQ(flat, query(fixture(), "{" + a + " {" + b + " " + c + "}}"));
  }
}

TEST(AlgebraProperty, UnionLaws) {
  std::mt19937 rng(6);
  for (int i = 0; i < 200; ++i) {
    std::string a = random_pairs(rng), b = random_pairs(rng), c = random_pairs(rng);
    auto ab = query(fixture(), "(" + a + " " + b + ")");
    EXPECT_EQ(ab, query(fixture(), "(" + b + " " + a + ")"));
    EXPECT_EQ(query(fixture(), "(" + a + " " + a + ")"), query(fixture(), a));
    EXPECT_EQ(query(fixture(), "((" + a + " " + b + ") " + c + ")"),
              query(fixture(), "(" + a + " (" + b + " " + c + "))"));
  }
}

TEST(Function, Mapping) {
  EXPECT_EQ(rows("(avg2 (1 2 3) 3)"), (Rows{"2.0", "2.5", "3.0"}));
  EXPECT_EQ(rows("(avg2 4 6)"), (Rows{"5.0"}));
  EXPECT_TRUE(query(fixture(), "(avg2 () 3)").empty());
  EXPECT_EQ(rows("(capitalize (\"homer\" \"austen\"))"), (Rows{"\"Austen\"", "\"Homer\""}));
  EXPECT_EQ(rows("(length \"\xC3\xA9t\xC3\xA9\")"), (Rows{"3"}));
  EXPECT_EQ(error_of("(avg2 \"x\" 1)"), ErrorKind::TypeError);
}

TEST(FunctionProperty, MappingCoherence) {
  const Database& db = fixture();
  Evaluator ev(db.catalog, db.store);
  const RelationDef& avg2 = db.catalog.lookup("avg2");
  auto int_set = [](const std::vector<int>& xs) {
    TupleSet s({{"int", DomainType::scalar(ScalarType::Int)}});
    for (int x : xs) s.insert({Value(x)});
    return s;
  };
  std::mt19937 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a, b;
    for (std::size_t i = 0, n = rng() % 5; i < n; ++i) a.push_back(static_cast<int>(rng() % 10));
    for (std::size_t i = 0, n = rng() % 5; i < n; ++i) b.push_back(static_cast<int>(rng() % 10));
    TupleSet whole = ev.apply_function(avg2, {int_set(a), int_set(b)});
    std::set<double> expected;
    for (int x : a)
      for (int y : b) {
        TupleSet one = ev.apply_function(avg2, {int_set({x}), int_set({y})});
        ASSERT_EQ(one.size(), 1u);
        expected.insert(one.tuples()[0][0].as_real());
      }
    std::set<double> actual;
    for (const auto& t : whole.tuples()) actual.insert(t[0].as_real());
    EXPECT_EQ(actual, expected);
  }
}

TEST(Projection, Examples) {
  EXPECT_EQ(rows("[(book) author title]"),
            (Rows{"{\"Austen\" \"1775-12-16\"} \"Emma\"", "{\"Dawkins\" \"1941-03-26\"} \"The Selfish Gene\"",
                  "{\"Homer\" \"-0799\"} \"Ulysses\""}));
  EXPECT_EQ(rows("[(book_genre . (genre \"sci-fi\")) [book [author name] title]]"),
            (Rows{"\"Dawkins\" \"The Selfish Gene\""}));
  EXPECT_EQ(query(fixture(), "[(book) author title timestamp]"), query(fixture(), "(book)"));
  EXPECT_EQ(rows("[(book) [author name]]"), (Rows{"\"Austen\"", "\"Dawkins\"", "\"Homer\""}));
  EXPECT_EQ(query(fixture(), "[(author) birthdate]").size(), 3u);
}

TEST(Projection, Errors) {
  EXPECT_EQ(error_of("[(book) nope]"), ErrorKind::UnknownAttr);
  EXPECT_EQ(error_of("[(book) [author nope]]"), ErrorKind::UnknownAttr);
  EXPECT_EQ(error_of("[(book) [title x]]"), ErrorKind::NotARelation);
}

TEST(Connection, Examples) {
  EXPECT_EQ(rows("{genre (author \"Dawkins\" ?)}"),
            (Rows{"{\"sci-fi\"} {\"Dawkins\" \"1941-03-26\"}"}));
  auto self = query(fixture(), "{author (author)}");
  EXPECT_EQ(self.size(), 3u);
  for (const auto& t : self.tuples()) EXPECT_EQ(t[0].as_ref().row, t[1].as_ref().row);
  EXPECT_TRUE(query(fixture(), "{department (genre \"nonexistent\")}").empty());
  EXPECT_EQ(rows("{department (genre \"epic\")}"), (Rows{"{\"main\"} {\"epic\"}"}));
  EXPECT_EQ(rows("{genre (department)}"),
            (Rows{"{\"bore\"} {\"annex\"}", "{\"epic\"} {\"main\"}"}));
}

TEST(Connection, NoConnection) {
  Database db = with("relation (island int)");
  EXPECT_EQ(error_of(db, "{island (genre)}"), ErrorKind::NoConnection);
}

TEST(Connection, AmbiguousPathListsPaths) {
  Database db = testing_support::run_script(
      "relation (person (name text))\n"
      "relation (loan (lender person) (borrower person))\n"
      "add person (\"ann\" \"bob\")\n");
  try {
    eval(db, "{loan (person \"ann\")}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AmbiguousPath);
    std::string msg = e.what();
    EXPECT_NE(msg.find("loan.lender"), std::string::npos) << msg;
    EXPECT_NE(msg.find("loan.borrower"), std::string::npos) << msg;
  }
}

TEST(ConnectionProperty, MatchesBruteForce) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    auto s = testing_support::random_schema(rng);
    int target = static_cast<int>(rng() % s.relations);
    int source = static_cast<int>(rng() % s.relations);
    std::string src_sel = "(" + testing_support::RandomSchema::name(source) + ")";
    std::int64_t c = static_cast<std::int64_t>(rng() % 6);
    bool filtered = rng() % 2;
    if (filtered)
      src_sel = "(" + testing_support::RandomSchema::name(source) + " : (v = " + std::to_string(c) + "))";
    std::set<RowId> source_rows;
    for (const auto& [id, t] : s.db.store.index(testing_support::RandomSchema::name(source)).rows())
      if (!filtered || t[0].as_int() == c) source_rows.insert(id);

    auto result = query(s.db, "{" + testing_support::RandomSchema::name(target) + " " + src_sel + "}");
    std::set<std::pair<RowId, RowId>> actual;
    for (const auto& t : result.tuples()) actual.emplace(t[0].as_ref().row, t[1].as_ref().row);
    EXPECT_EQ(actual, testing_support::oracle_connection(s, target, source, source_rows))
        << "trial " << trial;
  }
}

TEST(Results, DuplicateFree) {
  for (const char* q : {"(1 1 2)", "{(1 1) (2 2)}", "[(book) [author name]]",
                        "{genre (book)}", "(avg2 (1 3) (3 1))"}) {
    auto s = query(fixture(), q);
    std::set<std::string> keys;
    for (const auto& t : s.tuples()) keys.insert(key::encode(t));
    EXPECT_EQ(keys.size(), s.size()) << q;
  }
}
