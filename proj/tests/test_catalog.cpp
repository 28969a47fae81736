#include <gtest/gtest.h>

#include "relang/catalog.hpp"
#include "support.hpp"

using namespace relang;

namespace {

syntax::Definition def(const std::string& src) {
  auto st = syntax::parse_script(src);
  return *st.at(0).as<syntax::Definition>();
}

Catalog build(std::initializer_list<const char*> defs) {
  Catalog c;
  for (const char* d : defs) c = c.define(def(d));
  return c;
}

ErrorKind define_error(const Catalog& c, const std::string& src) {
  try {
    c.define(def(src));
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted: " << src;
  return ErrorKind::IoError;
}

const char* kLibrary[] = {
    "relation (author (name text) (birthdate timestamp))",
    "relation (book author (title text) timestamp)",
    "relation (genre text)",
    "relation (book_genre book genre)",
};

Catalog library() {
  Catalog c;
  for (const char* d : kLibrary) c = c.define(def(d));
  return c;
}

}  // namespace

TEST(Catalog, DefaultAttributeNames) {
  auto c = library();
  const auto& book = c.lookup("book");
  ASSERT_EQ(book.arity(), 3u);
  EXPECT_EQ(book.attrs[0].name, "author");
  EXPECT_FALSE(book.attrs[0].named);
  EXPECT_EQ(book.attrs[0].type, DomainType::relation("author"));
  EXPECT_EQ(book.attrs[1].name, "title");
  EXPECT_TRUE(book.attrs[1].named);
  EXPECT_EQ(book.attrs[2].name, "timestamp");
  EXPECT_EQ(book.attrs[2].type, DomainType::scalar(ScalarType::Timestamp));
  EXPECT_EQ(book.attr_index("title"), 1u);
  EXPECT_FALSE(book.attr_index("nope"));
}

TEST(Catalog, DefineIsPersistent) {
  Catalog a = build({"relation (genre text)"});
  Catalog b = a.define(def("relation (department text)"));
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ(b.size(), 2u);
  EXPECT_FALSE(a.contains("department"));
}

TEST(Catalog, DefinitionRoundTrip) {
  auto c = library();
  for (std::size_t i = 0; i < std::size(kLibrary); ++i)
    EXPECT_EQ(syntax::render(syntax::Statement{c.definitions()[i]->to_definition(), {}}),
              kLibrary[i]);
}

TEST(Catalog, Errors) {
  auto c = library();
  EXPECT_EQ(define_error(c, "relation (genre text)"), ErrorKind::DuplicateName);
  EXPECT_EQ(define_error(c, "relation (text int)"), ErrorKind::DuplicateName);
  EXPECT_EQ(define_error(c, "relation (capitalize int)"), ErrorKind::DuplicateName);
  EXPECT_EQ(define_error(c, "relation (x text text)"), ErrorKind::DuplicateName);
  EXPECT_EQ(define_error(c, "relation (x (a int) (a text))"), ErrorKind::DuplicateName);
  EXPECT_EQ(define_error(c, "relation (x publisher)"), ErrorKind::UnknownType);
  EXPECT_EQ(define_error(c, "relation (node node)"), ErrorKind::SelfReference);
  EXPECT_EQ(define_error(c, "function (f (n int)) (f n)"), ErrorKind::SelfReference);
}

TEST(Catalog, DomainAndFunctionRestrictions) {
  auto c = library().define(def("domain (point (x real) (y real))"));
  EXPECT_NO_THROW(c.define(def("domain (seg (a point) (b point))")));
  EXPECT_NO_THROW(c.define(def("relation (place (name text) point)")));
  EXPECT_EQ(define_error(c, "domain (bad author)"), ErrorKind::TypeError);
  EXPECT_EQ(define_error(c, "function (f (p point)) 1"), ErrorKind::TypeError);
  auto f = c.define(def("function (avg2 (a real) (b real)) (/ (+ a b) 2)"));
  EXPECT_EQ(define_error(f, "relation (x avg2)"), ErrorKind::TypeError);
  EXPECT_EQ(define_error(f, "function (g (a int)) (< a 1)"), ErrorKind::TypeError);
}

TEST(Catalog, FunctionResultType) {
  auto c = build({"function (avg2 (a real) (b real)) (/ (+ a b) 2)",
                  "function (twice (n int)) (* n 2)",
                  "function (shout (s text)) (capitalize s)",
                  "function (len (s text)) (length s)",
                  "function (quad (n int)) (twice (twice n))"});
  EXPECT_EQ(c.lookup("avg2").result, ScalarType::Real);
  EXPECT_EQ(c.lookup("twice").result, ScalarType::Int);
  EXPECT_EQ(c.lookup("shout").result, ScalarType::Text);
  EXPECT_EQ(c.lookup("len").result, ScalarType::Int);
  EXPECT_EQ(c.lookup("quad").result, ScalarType::Int);
  EXPECT_EQ(c.lookup("quad").cls, RelationClass::Function);
}

TEST(Catalog, FunctionBodyErrors) {
  Catalog c;
  EXPECT_EQ(define_error(c, "function (f (a int)) (+ a b)"), ErrorKind::UnknownName);
  EXPECT_EQ(define_error(c, "function (f (a text)) (* a \"x\" )"), ErrorKind::TypeError);
  EXPECT_EQ(define_error(c, "function (f (a int)) (nosuch a)"), ErrorKind::UnknownRelation);
  EXPECT_EQ(define_error(c, "function (f (a text)) (capitalize a a)"), ErrorKind::ArityMismatch);
}

TEST(Catalog, UnknownRelationLookup) {
  try {
    library().lookup("publisher");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownRelation);
  }
}

TEST(Catalog, SchemaGraph) {
  auto g = library().schema_graph();
  EXPECT_EQ(g.nodes, (std::vector<std::string>{"author", "book", "genre", "book_genre"}));
  ASSERT_EQ(g.edges.size(), 3u);
  EXPECT_EQ(g.edges[0], (SchemaEdge{"book", 0, "author", "author"}));
  EXPECT_EQ(g.edges[1], (SchemaEdge{"book_genre", 0, "book", "book"}));
  EXPECT_EQ(g.edges[2], (SchemaEdge{"book_genre", 1, "genre", "genre"}));
  EXPECT_EQ(g.incident("book").size(), 2u);
  EXPECT_EQ(g.incident("genre").size(), 1u);
}

TEST(Catalog, MultiEdges) {
  auto c = build({"relation (person (name text))",
                  "relation (loan (lender person) (borrower person))"});
  auto g = c.schema_graph();
  ASSERT_EQ(g.edges.size(), 2u);
  EXPECT_EQ(g.edges[0].attr, "lender");
  EXPECT_EQ(g.edges[1].attr, "borrower");
  EXPECT_EQ(g.incident("person").size(), 2u);
}

TEST(Catalog, Infer) {
  auto c = library();
  std::vector<Attribute> scope{{"n", DomainType::scalar(ScalarType::Int), true},
                               {"s", DomainType::scalar(ScalarType::Text), true}};
  auto t = [&](const char* src) { return c.infer(syntax::parse_expr(src), scope); };
  EXPECT_EQ(t("(+ n 1)"), ExprType::Int);
  EXPECT_EQ(t("(/ n 2)"), ExprType::Real);
  EXPECT_EQ(t("(< n 2)"), ExprType::Bool);
  EXPECT_EQ(t("(& (< n 2) (~ s \"a.*\"))"), ExprType::Bool);
  EXPECT_EQ(t("(real n)"), ExprType::Real);
  EXPECT_EQ(t("(length s)"), ExprType::Int);
  EXPECT_EQ(t("\"x\""), ExprType::Text);
}

TEST(Catalog, EqualityIgnoresSharing) {
  EXPECT_EQ(library(), library());
  EXPECT_FALSE(library() == build({"relation (genre text)"}));
}
