#include <doctest.h>

#include <string>

#include "liftrc/errors.hpp"
#include "liftrc/parser.hpp"
#include "liftrc/query.hpp"
#include "support.hpp"

using namespace liftrc;
namespace ts = testing_support;

namespace {

Prv ground_atom(const std::string& f, std::initializer_list<std::pair<const char*, const char*>> args) {
  Prv p{f, {}};
  for (const auto& [name, type] : args) p.args.push_back(Term::constant(name, type));
  return p;
}

QueryOptions both() {
  QueryOptions o;
  o.engine = EngineKind::kBoth;
  return o;
}

}  // namespace

TEST_CASE("an unconditioned single-variable query normalizes the table") {
  const Model m = parse_model_or_throw(
      "population person 1\nprv x(person)\nparfactor [p:person] on x(p) { true -> 3/10 false -> 7/10 }");
  const auto a = answer_query(m, {ground_atom("x", {{"person1", "person"}}), {}}, both());
  REQUIRE(a.values.size() == 2);
  CHECK(a.values[0] == "true");
  CHECK(a.distribution[0] == Number(Rational(3, 10)));
  CHECK(a.distribution[1] == Number(Rational(7, 10)));
  REQUIRE(a.runs.size() == 2);
  CHECK(a.runs[0].engine == "lifted");
  CHECK(a.runs[1].engine == "ground");
}

TEST_CASE("observed query: lifted and ground agree exactly") {
  const Model m = ts::load("fig1_observed.lpm");
  for (const Prv& target : m.queries) {
    QueryOptions lifted, ground;
    ground.engine = EngineKind::kGround;
    const auto l = answer_query(m, {target, m.observations}, lifted);
    const auto g = answer_query(m, {target, m.observations}, ground);
    REQUIRE(l.distribution.size() == g.distribution.size());
    for (std::size_t i = 0; i < l.distribution.size(); ++i) CHECK(l.distribution[i] == g.distribution[i]);
    CHECK(l.runs[0].stats.calls > 0);
  }
}

TEST_CASE("every corpus query normalizes and the engines agree") {
  for (const auto& file : ts::corpus_files()) {
    const Model m = ts::load(file);
    for (const Prv& target : m.queries) {
      const auto a = answer_query(m, {target, m.observations}, both());
      Number total = Number::zero({});
      for (const auto& p : a.distribution) total += p;
      CHECK_MESSAGE(total == Number(Rational(1)), file);

      QueryOptions log = both();
      log.numeric.mode = NumericMode::kLogspace;
      const auto l = answer_query(m, {target, m.observations}, log);
      for (std::size_t i = 0; i < a.distribution.size(); ++i) {
        CHECK(l.distribution[i].to_double() == doctest::Approx(a.distribution[i].to_double()).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("observing the target gives a point mass") {
  const Model m = ts::load("smokers.lpm");
  const Prv target = m.queries[0];
  auto obs = m.observations;
  obs.push_back({target, "false"});
  const auto a = answer_query(m, {target, obs}, both());
  CHECK(a.distribution[0].is_zero());
  CHECK(a.distribution[1] == Number(Rational(1)));
}

TEST_CASE("renaming observed individuals together with the target") {
  const Model m = ts::load("smokers.lpm");
  const auto reference = answer_query(m, {m.queries[0], m.observations});
  // Swap person1 and person3 everywhere.
  const auto swap = [](Prv p) {
    for (Term& t : p.args) {
      if (t.name == "person1") t.name = "person3";
      else if (t.name == "person3") t.name = "person1";
    }
    return p;
  };
  std::vector<Observation> obs;
  for (const auto& o : m.observations) obs.push_back({swap(o.atom), o.value});
  const auto renamed = answer_query(m, {swap(m.queries[0]), obs});
  for (std::size_t i = 0; i < reference.distribution.size(); ++i) {
    CHECK(renamed.distribution[i] == reference.distribution[i]);
  }
}

TEST_CASE("query errors") {
  SUBCASE("zero-probability evidence") {
    const Model m = parse_model_or_throw(R"(
population person 3
prv f(person)
parfactor [x:person] on f(x) { true -> 0 false -> 1 }
)");
    const Prv f1 = ground_atom("f", {{"person1", "person"}});
    const Prv f2 = ground_atom("f", {{"person2", "person"}});
    try {
      answer_query(m, {f2, {{f1, "true"}}}, both());
      FAIL("expected ZeroEvidenceError");
    } catch (const ZeroEvidenceError& e) {
      CHECK(std::string(e.what()).find("zero-probability evidence") != std::string::npos);
    }
  }
  SUBCASE("not liftable") {
    // With three individuals the two named by the target leave one free one
    // and everything grounds out; five leave room for the hard pattern.
    const Model m = parse_model_or_throw(R"(
population person 5
prv r(person, person)
parfactor [x:person, y:person, z:person] on r(x,y), r(y,z) { true true -> 1/2 true false -> 1/3 false true -> 1/4 false false -> 1/5 }
)");
    const Prv target = ground_atom("r", {{"person1", "person"}, {"person2", "person"}});
    CHECK_THROWS_AS(answer_query(m, {target, {}}), NotLiftableError);
    // The ground engine has no such limit, only exponential cost.
    QueryOptions ground;
    ground.engine = EngineKind::kGround;
    const auto small = ts::resized(m, {{"person", 4}});
    CHECK_NOTHROW(answer_query(*small, {target, {}}, ground));
  }
  SUBCASE("oracle infeasible") {
    const Model m = parse_model_or_throw(R"(
population person 2000
prv q(person)
prv r(person, person)
parfactor [x:person, y:person] on q(x), r(x,y) { true true -> 1/2 true false -> 1/3 false true -> 1/4 false false -> 1/5 }
)");
    const Prv target = ground_atom("q", {{"person1", "person"}});
    QueryOptions ground;
    ground.engine = EngineKind::kGround;
    CHECK_THROWS_AS(answer_query(m, {target, {}}, ground), OracleInfeasibleError);
    // Exact lifted powers this large trip the size guard; logspace does not.
    CHECK_THROWS_AS(answer_query(m, {target, {}}), NumericGuardError);
    QueryOptions log;
    log.numeric.mode = NumericMode::kLogspace;
    const auto a = answer_query(m, {target, {}}, log);
    // 1 / (1 + (27/50)^2000)
    CHECK(a.distribution[0].to_double() == doctest::Approx(1.0));
  }
  SUBCASE("malformed targets and observations") {
    const Model m = ts::load("pairwise.lpm");
    CHECK_THROWS_AS(answer_query(m, {ground_atom("f", {{"person9", "person"}}), {}}), InvalidArgumentError);
    CHECK_THROWS_AS(answer_query(m, {Prv{"f", {Term::param("x", "person")}}, {}}), InvalidArgumentError);
    CHECK_THROWS_AS(answer_query(m, {ground_atom("f", {}), {}}), InvalidArgumentError);
    const Prv f1 = ground_atom("f", {{"person1", "person"}});
    CHECK_THROWS_AS(answer_query(m, {f1, {{f1, "maybe"}}}), InvalidArgumentError);
  }
}

TEST_CASE("partition function") {
  const Model m = ts::load("fghex.lpm");
  RunStats stats;
  const Number z = partition_function(m, {}, both(), &stats);
  CHECK_FALSE(z.is_zero());
  CHECK(stats.calls > 0);
  QueryOptions no_cache;
  no_cache.use_cache = false;
  no_cache.use_forgetting = false;
  CHECK(partition_function(m, {}, no_cache) == z);
}
