// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "liftrc/liftrc.h"

namespace {

std::string corpus(const char* name) { return std::string(LIFTRC_CORPUS_DIR) + "/" + name; }
std::string bad(const char* name) { return std::string(LIFTRC_CORPUS_DIR) + "/../bad/" + name; }

liftrc_model* load(const std::string& path) {
  liftrc_model* m = nullptr;
  REQUIRE(liftrc_model_load_file(path.c_str(), &m) == LIFTRC_OK);
  REQUIRE(m != nullptr);
  return m;
}

}  // namespace

TEST_CASE("option defaults") {
  liftrc_options o;
  liftrc_options_init(&o);
  CHECK(o.engine == LIFTRC_ENGINE_LIFTED);
  CHECK(o.numeric == LIFTRC_NUMERIC_EXACT);
  CHECK(o.precision_digits == 50);
  CHECK(o.use_cache == 1);
  CHECK(o.use_forgetting == 1);
  CHECK(o.has_seed == 0);
  liftrc_options_init(nullptr);
}

TEST_CASE("answering a query with both engines") {
  liftrc_model* m = load(corpus("fig1_observed.lpm"));
  REQUIRE(liftrc_model_query_count(m) == 2);
  char* name = liftrc_model_query_name(m, 0);
  CHECK(std::string(name) == "q(person1)");
  liftrc_string_free(name);
  CHECK(liftrc_model_query_name(m, 2) == nullptr);

  liftrc_options o;
  liftrc_options_init(&o);
  o.engine = LIFTRC_ENGINE_BOTH;
  liftrc_result* r = nullptr;
  REQUIRE(liftrc_answer_query(m, 0, &o, &r) == LIFTRC_OK);
  REQUIRE(liftrc_result_value_count(r) == 2);
  CHECK(std::string(liftrc_result_value_name(r, 0)) == "true");
  const std::string p = liftrc_result_probability(r, 0);
  CHECK(p.find('/') != std::string::npos);
  CHECK(std::string(liftrc_result_decimal(r, 0)).rfind("0.", 0) == 0);
  CHECK(liftrc_result_value_name(r, 5) == nullptr);

  REQUIRE(liftrc_result_run_count(r) == 2);
  liftrc_run_stats s;
  REQUIRE(liftrc_result_run_stats(r, 0, &s) == LIFTRC_OK);
  CHECK(std::string(s.engine) == "lifted");
  CHECK(s.calls > 0);
  REQUIRE(liftrc_result_run_stats(r, 1, &s) == LIFTRC_OK);
  CHECK(std::string(s.engine) == "ground");
  CHECK(liftrc_result_run_stats(r, 2, &s) == LIFTRC_ERR_INVALID_ARGUMENT);
  liftrc_result_free(r);

  // Logspace agrees to the printed digits.
  o.engine = LIFTRC_ENGINE_LIFTED;
  o.numeric = LIFTRC_NUMERIC_LOGSPACE;
  liftrc_result* lr = nullptr;
  REQUIRE(liftrc_answer_query(m, 0, &o, &lr) == LIFTRC_OK);
  CHECK(std::stod(liftrc_result_probability(lr, 0)) == doctest::Approx(std::stod(p.substr(0, p.find('/'))) /
                                                                         std::stod(p.substr(p.find('/') + 1))));
  liftrc_result_free(lr);

  CHECK(liftrc_answer_query(m, 9, &o, &lr) == LIFTRC_ERR_INVALID_ARGUMENT);
  liftrc_model_free(m);
}

TEST_CASE("partition function and printing") {
  liftrc_model* m = load(corpus("fghex.lpm"));
  char* z = nullptr;
  REQUIRE(liftrc_partition_function(m, nullptr, &z) == LIFTRC_OK);
  const std::string lifted = z;
  liftrc_string_free(z);
  liftrc_options o;
  liftrc_options_init(&o);
  o.engine = LIFTRC_ENGINE_GROUND;
  REQUIRE(liftrc_partition_function(m, &o, &z) == LIFTRC_OK);
  CHECK(lifted == z);
  liftrc_string_free(z);

  char* text = liftrc_model_print(m);
  liftrc_model* again = nullptr;
  CHECK(liftrc_model_parse(text, &again) == LIFTRC_OK);
  char* text2 = liftrc_model_print(again);
  CHECK(std::string(text) == text2);
  liftrc_string_free(text);
  liftrc_string_free(text2);
  liftrc_model_free(again);
  liftrc_model_free(m);
}

TEST_CASE("status codes") {
  liftrc_model* m = nullptr;
  CHECK(liftrc_model_parse("population p 2\nprv f(p)\nparfactor [x:p] on f(x) { true -> 1 }", &m) ==
        LIFTRC_ERR_PARSE);
  CHECK(m == nullptr);
  CHECK(std::string(liftrc_last_error()).find("expected 2 rows") != std::string::npos);

  CHECK(liftrc_model_load_file(bad("short_table.lpm").c_str(), &m) == LIFTRC_ERR_PARSE);
  CHECK(liftrc_model_load_file(bad("nope.lpm").c_str(), &m) == LIFTRC_ERR_INVALID_ARGUMENT);

  liftrc_result* r = nullptr;
  m = load(bad("zero_evidence.lpm"));
  CHECK(liftrc_answer_query(m, 0, nullptr, &r) == LIFTRC_ERR_ZERO_EVIDENCE);
  CHECK(r == nullptr);
  liftrc_model_free(m);

  m = load(bad("transitive.lpm"));
  char* z = nullptr;
  CHECK(liftrc_partition_function(m, nullptr, &z) == LIFTRC_ERR_NOT_LIFTABLE);
  CHECK(std::string(liftrc_last_error()).find("r(") != std::string::npos);
  liftrc_model_free(m);

  m = load(bad("huge.lpm"));
  liftrc_options o;
  liftrc_options_init(&o);
  o.engine = LIFTRC_ENGINE_GROUND;
  CHECK(liftrc_answer_query(m, 0, &o, &r) == LIFTRC_ERR_ORACLE_INFEASIBLE);
  // Rows sum to one per value of q, so exact powers stay at 1.
  o.engine = LIFTRC_ENGINE_LIFTED;
  REQUIRE(liftrc_answer_query(m, 0, &o, &r) == LIFTRC_OK);
  CHECK(std::string(liftrc_result_probability(r, 0)) == "1/2");
  liftrc_result_free(r);
  liftrc_model_free(m);

  REQUIRE(liftrc_model_parse("population p 2000\nprv q(p)\nprv r(p, p)\n"
                             "parfactor [x:p, y:p] on q(x), r(x,y) { true true -> 1/2 true false -> 1/3 "
                             "false true -> 1/4 false false -> 1/5 }\nquery q(p1)",
                             &m) == LIFTRC_OK);
  CHECK(liftrc_answer_query(m, 0, &o, &r) == LIFTRC_ERR_NUMERIC_GUARD);
  CHECK(std::string(liftrc_last_error()).find("logspace") != std::string::npos);
  o.numeric = LIFTRC_NUMERIC_LOGSPACE;
  REQUIRE(liftrc_answer_query(m, 0, &o, &r) == LIFTRC_OK);
  CHECK(std::string(liftrc_last_error()).empty());
  liftrc_result_free(r);

  o.engine = static_cast<liftrc_engine>(42);
  CHECK(liftrc_answer_query(m, 0, &o, &r) == LIFTRC_ERR_INVALID_ARGUMENT);
  liftrc_options_init(&o);
  o.precision_digits = 0;
  CHECK(liftrc_answer_query(m, 0, &o, &r) == LIFTRC_ERR_INVALID_ARGUMENT);
  liftrc_model_free(m);

  CHECK(liftrc_model_parse(nullptr, &m) == LIFTRC_ERR_INVALID_ARGUMENT);
  CHECK(liftrc_answer_query(nullptr, 0, nullptr, &r) == LIFTRC_ERR_INVALID_ARGUMENT);
  CHECK(liftrc_partition_function(nullptr, nullptr, &z) == LIFTRC_ERR_INVALID_ARGUMENT);
  CHECK(liftrc_model_query_count(nullptr) == 0);
  liftrc_model_free(nullptr);
  liftrc_result_free(nullptr);
  liftrc_string_free(nullptr);
}
