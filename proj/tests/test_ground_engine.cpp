#include <doctest.h>

#include <memory>
#include <numeric>
#include <vector>

#include "liftrc/errors.hpp"
#include "liftrc/ground_engine.hpp"
#include "liftrc/parser.hpp"
#include "support.hpp"

using namespace liftrc;
namespace ts = testing_support;

namespace {

std::shared_ptr<const GroundModel> ground(const Model& m) {
  return std::make_shared<const GroundModel>(ground_model(m.parfactors, m.populations));
}

std::shared_ptr<const GroundModel> ground(const std::string& text) { return ground(parse_model_or_throw(text)); }

const char* kFig1 = R"(
population person 2
prv q(person)
prv r(person, person)
prv s(person, person)
parfactor [x:person, y:person] on q(x), r(x,y), s(x,y) {
  true true true -> 1/2
  true true false -> 2/3
  true false true -> 3/4
  true false false -> 4/5
  false true true -> 5/6
  false true false -> 6/7
  false false true -> 7/8
  false false false -> 8/9
}
)";

}  // namespace

TEST_CASE("empty factor set has value one") {
  GroundEngine engine(ground("population person 1\nprv f(person)\nparfactor [x:person] on f(x) { true -> 1 false -> 1 }"));
  CHECK(engine.rc({}, std::span<const int>{}) == Number(Rational(1)));
}

TEST_CASE("a normalized single factor sums to one") {
  GroundEngine engine(ground("population person 1\nprv x(person)\nparfactor on x(person1) { true -> 3/10 false -> 7/10 }"));
  CHECK(engine.rc({}) == Number(Rational(1)));
}

TEST_CASE("a directed model's joint sums to one") {
  GroundEngine engine(ground(R"(
population person 3
prv f(person)
prv g(person)
parfactor [x:person] on f(x) { true -> 1/3 false -> 2/3 }
parfactor [x:person] on f(x), g(x) { true true -> 1/4 true false -> 3/4 false true -> 5/9 false false -> 4/9 }
)"));
  CHECK(engine.rc({}) == Number(Rational(1)));
}

TEST_CASE("recursive conditioning matches enumeration") {
  const auto g = ground(kFig1);
  CHECK(g->atoms.size() == 10);
  GroundEngine engine(g);
  CHECK(engine.rc({}).exact() == ts::enumerate(*g));

  const int r12 = g->find_atom(Prv{"r", {Term::constant("person1", "person"), Term::constant("person2", "person")}});
  REQUIRE(r12 >= 0);
  CHECK(engine.rc({{r12, 0}}).exact() == ts::enumerate(*g, {{r12, 0}}));
  CHECK(engine.rc({{r12, 1}}).exact() == ts::enumerate(*g, {{r12, 1}}));
}

TEST_CASE("branching order and caching do not change the value") {
  for (const auto& file : ts::corpus_files()) {
    const auto m = ts::resized(ts::load(file), {{"person", 3}, {"movie", 2}});
    if (!m) continue;
    const auto g = ground(*m);
    const Number reference = GroundEngine(g).rc({});
    GroundConfig no_cache;
    no_cache.use_cache = false;
    CHECK_MESSAGE(GroundEngine(g, no_cache).rc({}) == reference, file);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      GroundConfig random;
      random.heuristic = BranchHeuristic::kRandom;
      random.seed = seed;
      CHECK_MESSAGE(GroundEngine(g, random).rc({}) == reference, file);
    }
    if (g->atoms.size() <= 16) CHECK_MESSAGE(reference.exact() == ts::enumerate(*g), file);
  }
}

TEST_CASE("factor evaluation") {
  const auto g = ground(R"(
population person 1
prv x(person)
prv e
parfactor on x(person1), e { true true -> 1/7 true false -> 2/7 false true -> 3/7 false false -> 4/7 }
)");
  GroundEngine engine(g);
  const int x = g->find_atom(Prv{"x", {Term::constant("person1", "person")}});
  const int e = g->find_atom(Prv{"e", {}});
  CHECK(engine.eval_factor(0, {{x, 1}, {e, 0}}) == Number(Rational(3, 7)));
  CHECK(engine.eval_factor(0, {{x, 0}, {e, 1}}) == Number(Rational(2, 7)));
  CHECK_THROWS_AS(engine.eval_factor(0, {{x, 0}}), InvalidArgumentError);
  CHECK_THROWS_AS(engine.eval_factor(5, {{x, 0}, {e, 0}}), InvalidArgumentError);
}

TEST_CASE("connected components") {
  const auto g = ground(kFig1);
  GroundEngine engine(g);
  std::vector<int> all(g->factors.size());
  std::iota(all.begin(), all.end(), 0);
  // q(x) ties the factors of one x together; nothing ties different x.
  CHECK(engine.connected_components({}, all).size() == 2);

  GroundContext con;
  for (std::size_t a = 0; a < g->atoms.size(); ++a) {
    if (g->atoms[a].functor != "s") con[static_cast<int>(a)] = 0;
  }
  const auto parts = engine.connected_components(con, all);
  CHECK(parts.size() == g->factors.size());

  const auto disjoint = ground(R"(
population person 1
prv a
prv b
parfactor on a { true -> 1 false -> 2 }
parfactor on b { true -> 3 false -> 4 }
)");
  GroundEngine two(disjoint);
  const std::vector<int> both{0, 1};
  CHECK(two.connected_components({}, both).size() == 2);
}

TEST_CASE("stats and cache behaviour") {
  GroundEngine engine(ground(kFig1));
  const Number first = engine.rc({});
  const auto calls = engine.stats().calls;
  CHECK(calls > 0);
  CHECK(engine.stats().branches > 0);
  CHECK(engine.stats().cache_lookups == engine.stats().cache_hits + engine.stats().cache_misses);
  CHECK(engine.rc({}) == first);
  CHECK(engine.stats().cache_hits > 0);
  engine.clear_cache();
  engine.reset_stats();
  CHECK(engine.rc({}) == first);
  CHECK(engine.stats().calls == calls);
}

TEST_CASE("invalid contexts are rejected") {
  GroundEngine engine(ground(kFig1));
  CHECK_THROWS_AS(engine.rc({{999, 0}}), InvalidArgumentError);
  CHECK_THROWS_AS(engine.rc({{0, 7}}), InvalidArgumentError);
}
