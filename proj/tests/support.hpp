#pragma once

// Shared fixtures, oracles and generators for the test programs.

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "relang/relang.hpp"

namespace testing_support {

using namespace relang;

inline const char* kLibrarySchema = R"(
relation (author (name text) (birthdate timestamp))
relation (book author (title text) timestamp)
relation (genre text)
relation (book_genre book genre)
relation (department text)
relation (available book department)
function (avg2 (a real) (b real)) (/ (+ a b) 2)
)";

inline const char* kLibraryData = R"(
add author {"Dawkins" "1941-03-26"}
Homer = add author ('Homer' '800 BC')
add author {"Austen" "1775-12-16"}
add book {(author "Dawkins" .) "The Selfish Gene" "1976"}
add book {(Homer) 'Ulysses' '750 BC'}
add book {(author "Austen" .) "Emma" "1815"}
add genre ("sci-fi" "epic" "bore")
add book_genre {(book . "The Selfish Gene" .) (genre "sci-fi")}
add book_genre {(book . "Ulysses" .) (genre "epic")}
add book_genre {(book . "Emma" .) (genre "bore")}
add department ("main" "annex" "archive")
add available {(book . "Ulysses" .) (department "main")}
add available {(book . "Emma" .) (department "annex")}
commit
)";

/// Runs a script in a fresh session over `db`, committing at the end.
inline Database run_script(const std::string& script, Database db = {}) {
  Session s(std::move(db));
  std::ostringstream out;
  s.run_script(script, out);
  s.finish();
  return s.database();
}

inline Database library() { return run_script(std::string(kLibrarySchema) + kLibraryData); }

/// Evaluates one expression against a published database.
inline TupleSet query(const Database& db, const std::string& expr) {
  Evaluator ev(db.catalog, db.store);
  return ev.eval_set(syntax::parse_expr(expr));
}

/// Content of every relation with references replaced by the referenced
/// tuples, recursively: two databases with equal content are equal up to
/// row ids.
inline std::map<std::string, std::vector<std::string>> deep_content(const Database& db) {
  Formatter f(db.store);
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& def : db.catalog.definitions()) {
    if (!def->is_simple()) continue;
    auto& rows = out[def->name];
    for (const auto& [id, t] : db.store.index(def->name).rows()) {
      std::string s;
      for (const auto& v : t) s += f.literal(v) + " ";
      rows.push_back(std::move(s));
    }
    std::sort(rows.begin(), rows.end());
  }
  return out;
}

inline bool deep_equal(const Database& a, const Database& b) {
  return a.catalog == b.catalog && deep_content(a) == deep_content(b) && a.store.consistent() &&
         b.store.consistent() && a.store.dangling().empty() && b.store.dangling().empty();
}

/// Every tuple as a deep literal, for comparing results across databases.
inline std::set<std::string> deep_tuples(const Store& store, const TupleSet& s) {
  Formatter f(store);
  std::set<std::string> out;
  for (const auto& t : s.tuples()) {
    std::string x;
    for (const auto& v : t) x += f.literal(v) + " ";
    out.insert(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random tree-shaped schemas and the brute-force connection oracle

struct RandomSchema {
  struct Link {
    int owner;   // relation holding the reference
    int target;  // referenced relation
    std::size_t position;
  };
  int relations = 0;
  std::vector<Link> links;
  Database db;

  static std::string name(int i) { return "r" + std::to_string(i); }

  /// Relations adjacent to `i`, with the link used.
  std::vector<std::pair<int, const Link*>> neighbours(int i) const {
    std::vector<std::pair<int, const Link*>> out;
    for (const auto& l : links) {
      if (l.owner == i) out.emplace_back(l.target, &l);
      if (l.target == i) out.emplace_back(l.owner, &l);
    }
    return out;
  }

  /// The path from `from` to `to` as relation indices and the links
  /// between consecutive ones, found by depth-first search.
  bool path(int from, int to, std::vector<int>& nodes, std::vector<const Link*>& via) const {
    std::function<bool(int, int)> dfs = [&](int at, int parent) {
      nodes.push_back(at);
      if (at == to) return true;
      for (auto [next, link] : neighbours(at)) {
        if (next == parent) continue;
        via.push_back(link);
        if (dfs(next, at)) return true;
        via.pop_back();
      }
      nodes.pop_back();
      return false;
    };
    return dfs(from, -1);
  }
};

/// A random tree of 2..max_relations relations, each with one int
/// attribute plus its references, filled with up to max_rows rows.
inline RandomSchema random_schema(std::mt19937& rng, int max_relations = 4,
                                  int max_rows = 20) {
  RandomSchema s;
  s.relations = std::uniform_int_distribution<int>(2, max_relations)(rng);
  // tree edges: each node i > 0 attaches to a random earlier node
  std::vector<std::pair<int, int>> edges;  // (owner, target)
  for (int i = 1; i < s.relations; ++i) {
    int j = std::uniform_int_distribution<int>(0, i - 1)(rng);
    if (rng() % 2) edges.emplace_back(i, j);
    else edges.emplace_back(j, i);
  }
  // definition order: a relation comes after everything it references
  std::vector<int> order;
  std::vector<bool> done(s.relations, false);
  while (static_cast<int>(order.size()) < s.relations) {
    for (int i = 0; i < s.relations; ++i) {
      if (done[i]) continue;
      bool ready = true;
      for (auto [o, t] : edges)
        if (o == i && !done[t]) ready = false;
      if (ready) {
        done[i] = true;
        order.push_back(i);
      }
    }
  }
  for (int i : order) {
    syntax::Definition d{RelationClass::Simple, RandomSchema::name(i), {{"v", "int"}}, std::nullopt};
    std::size_t pos = 1;
    for (auto [o, t] : edges) {
      if (o != i) continue;
      d.domains.push_back({"to_" + RandomSchema::name(t), RandomSchema::name(t)});
      s.links.push_back({o, t, pos++});
    }
    s.db.define(d);
  }
  for (int i : order) {
    const std::string rel = RandomSchema::name(i);
    const RelationDef& def = s.db.catalog.lookup(rel);
    int rows = std::uniform_int_distribution<int>(0, max_rows)(rng);
    for (int r = 0; r < rows; ++r) {
      Tuple t{Value(static_cast<std::int64_t>(rng() % 6))};
      bool ok = true;
      for (std::size_t p = 1; p < def.arity(); ++p) {
        const auto& target = def.attrs[p].type.relation_name();
        const auto& rowmap = s.db.store.index(target).rows();
        if (rowmap.empty()) {
          ok = false;
          break;
        }
        auto it = rowmap.begin();
        std::advance(it, rng() % rowmap.size());
        t.push_back(Ref{target, it->first});
      }
      if (ok) s.db.store.insert(rel, t);
    }
  }
  return s;
}

/// Brute force: enumerate the full Cartesian product of every relation on
/// the path, keep combinations whose consecutive rows are linked, and
/// project to (target row, source row) for source rows in `source`.
inline std::set<std::pair<RowId, RowId>> oracle_connection(const RandomSchema& s, int target,
                                                           int source,
                                                           const std::set<RowId>& source_rows) {
  std::vector<int> nodes;
  std::vector<const RandomSchema::Link*> via;
  std::set<std::pair<RowId, RowId>> out;
  if (!s.path(target, source, nodes, via)) return out;
  std::vector<std::vector<std::pair<RowId, const Tuple*>>> tables;
  for (int n : nodes) {
    tables.emplace_back();
    for (const auto& [id, t] : s.db.store.index(RandomSchema::name(n)).rows())
      tables.back().emplace_back(id, &t);
  }
  std::vector<std::size_t> at(nodes.size(), 0);
  for (const auto& t : tables)
    if (t.empty()) return out;
  while (true) {
    bool linked = true;
    for (std::size_t k = 0; k + 1 < nodes.size() && linked; ++k) {
      const auto* link = via[k];
      const auto& a = tables[k][at[k]];
      const auto& b = tables[k + 1][at[k + 1]];
      if (link->owner == nodes[k]) linked = (*a.second)[link->position].as_ref().row == b.first;
      else linked = (*b.second)[link->position].as_ref().row == a.first;
    }
    if (linked) {
      RowId t = tables.front()[at.front()].first;
      RowId src = tables.back()[at.back()].first;
      if (source_rows.count(src)) out.emplace(t, src);
    }
    std::size_t i = nodes.size();
    bool more = false;
    while (i > 0) {
      --i;
      if (++at[i] < tables[i].size()) {
        more = true;
        break;
      }
      at[i] = 0;
    }
    if (!more) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random databases for snapshot round trips

inline Value random_scalar(std::mt19937& rng, ScalarType t) {
  static const char* kWords[] = {"a", "b", "Zed", "with space", "quo\"te", "back\\slash",
                                 "line\nbreak", "tab\tbed", "", "\xC3\xA9t\xC3\xA9"};
  switch (t) {
    case ScalarType::Int: return Value(static_cast<std::int64_t>(rng() % 2001) - 1000);
    case ScalarType::Real: {
      static const double kReals[] = {0.0, -0.5, 1.25, 3.0, 1e-7, -2.5e12, 0.1};
      return Value(kReals[rng() % 7]);
    }
    case ScalarType::Text: return Value(kWords[rng() % 10]);
    case ScalarType::Timestamp: {
      std::int64_t year = static_cast<std::int64_t>(rng() % 4000) - 1500;
      int month = static_cast<int>(rng() % 13);
      int day = month ? static_cast<int>(rng() % 29) : 0;
      return Value(Timestamp{year, month, day});
    }
  }
  return Value(0);
}

/// Up to five relations over random scalar types, an optional domain, and
/// references to earlier relations; up to 30 rows each.
inline Database random_database(std::mt19937& rng) {
  Database db;
  static const char* kTypes[] = {"int", "real", "text", "timestamp"};
  bool with_domain = rng() % 2;
  if (with_domain)
    db.define({RelationClass::Domain, "pt", {{"x", "real"}, {"y", "int"}}, std::nullopt});
  int n = std::uniform_int_distribution<int>(1, 5)(rng);
  std::vector<std::string> simple;
  for (int i = 0; i < n; ++i) {
    syntax::Definition d{RelationClass::Simple, "t" + std::to_string(i), {}, std::nullopt};
    int width = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int k = 0; k < width; ++k) {
      std::string attr = "a" + std::to_string(k);
      int pick = static_cast<int>(rng() % 7);
      if (pick < 4) d.domains.push_back({attr, kTypes[pick]});
      else if (pick == 4 && with_domain) d.domains.push_back({attr, "pt"});
      else if (!simple.empty()) d.domains.push_back({attr, simple[rng() % simple.size()]});
      else d.domains.push_back({attr, "int"});
    }
    db.define(d);
    simple.push_back(d.name);
    const RelationDef& def = db.catalog.lookup(d.name);
    int rows = static_cast<int>(rng() % 31);
    for (int r = 0; r < rows; ++r) {
      Tuple t;
      bool ok = true;
      for (const auto& a : def.attrs) {
        if (a.type.is_scalar()) {
          t.push_back(random_scalar(rng, a.type.scalar_type()));
        } else if (a.type.relation_name() == "pt") {
          t.push_back(Composite{"pt", {random_scalar(rng, ScalarType::Real),
                                       random_scalar(rng, ScalarType::Int)}});
        } else {
          const auto& target = db.store.index(a.type.relation_name()).rows();
          if (target.empty()) {
            ok = false;
            break;
          }
          auto it = target.begin();
          std::advance(it, rng() % target.size());
          t.push_back(Ref{a.type.relation_name(), it->first});
        }
      }
      if (ok) db.store.insert(d.name, t);
    }
  }
  return db;
}

// ---------------------------------------------------------------------------
// Example corpus: every code snippet of the language examples, grouped as
// scripts. The update example is normalized to the update grammar.

inline const std::vector<std::string>& example_corpus() {
  static const std::vector<std::string> corpus = {
      R"(relation (author (name text) (birthdate timestamp))
relation (book author (title text) timestamp)
relation (genre text)
relation (book_genre book genre)
relation (department text)
relation (available book department))",
      R"(domain (point2d real real)
domain (circle (radius real) (center point2d))
relation (my_circle circle))",
      R"((+ 1 2 3 4 5)
(& (> (-17) (* 1 2 3 (-5))) ("xcf" < "fgh"))
function (avg2 (a real) (b real)) (/ (+ a b) 2)
(+ (int "123") 4)
// operator type is defined by the type of the first operand)",
      R"((author)
(book))",
      R"((author "Dawkins" "1941")
(author :(name ~ "A.*"))
(book (author :(name ~ "A.*")) (text) (timestamp))
(book (author :(name ~ "A.*")) . .))",
      R"({1 2 "txt"} // a triple of two integers and one text
(1 2 3) // a set of integers
({1 2} {3 4}) // a set of two pairs of integers
{(1 2) 3} // also a set of two pairs)",
      R"({(author) "he is author"} // we extend each selected tuple
((genre) "bore") // we extend a selected set
(avg2 (1 2 3) 3))",
      R"({genre (author 'Dawkins' ?)})",
      R"([(book) author title]
[(book_genre . (genre 'sci-fi')) [book author]]
[(book_genre . (genre 'sci-fi')) [book [author name] title]])",
      R"(add genre {"bore"}
add author ({"Dawkins" "1941"} {"Homer" "800 BC"})
remove book (book . "War And Piece" .)
remove book (genre "bore")
update author (author) (name (capitalize name))
update author (book:(title ~ "A.*"))
  (
    name      (capitalize name)
    birthdate "1910"
  ))",
      R"(add book ((author "Homer") "Ulysses" "750 BC"))",
      R"(add author {"Homer" "800 BC"}
add book {(author "Homer") "Ulysses" "750 BC"}
commit)",
      R"(Homer = add author ('Homer' '800 BC')
add book {(Homer) 'Ulysses' '750 BC'}
commit)",
      R"(Dawkins = ('Dawkins' '1941-03-26')
His_Books = (book (Dawkins) . .)
(book_genre (His_Books) .))",
      R"(A = (author:(name ~ "A.*"))
B = (A:(birthdate > "1940"))
C = (A . "1940"))",
      R"(output (author)
output tabular (author)
output csv order name (author))",
  };
  return corpus;
}

}  // namespace testing_support
