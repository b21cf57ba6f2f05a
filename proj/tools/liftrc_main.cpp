// Command-line front end; talks to the library only through liftrc.h.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "liftrc/liftrc.h"

namespace {

int exit_code(liftrc_status status) {
  switch (status) {
    case LIFTRC_OK:
      return 0;
    case LIFTRC_ERR_NOT_LIFTABLE:
      return 2;
    case LIFTRC_ERR_ZERO_EVIDENCE:
      return 3;
    case LIFTRC_ERR_DISAGREEMENT:
      return 4;
    case LIFTRC_ERR_ORACLE_INFEASIBLE:
    case LIFTRC_ERR_NUMERIC_GUARD:
      return 5;
    default:
      return 1;
  }
}

int fail(liftrc_status status) {
  std::cerr << "error: " << liftrc_last_error() << "\n";
  return exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact inference in parametrized factor models"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "answer the queries of a model file");

  std::string file;
  std::string engine = "lifted";
  std::string numeric = "exact";
  int precision = 50;
  std::string stats_path;
  std::int64_t seed = 0;
  std::uint64_t ground_cap = 1000000;
  bool debug_check = false;
  run->add_option("file", file, "model file (.lpm)")->required();
  run->add_option("--engine", engine, "ground, lifted or both")
      ->check(CLI::IsMember({"ground", "lifted", "both"}));
  run->add_option("--numeric", numeric, "exact or logspace")->check(CLI::IsMember({"exact", "logspace"}));
  run->add_option("--precision", precision, "decimal digits in logspace")->check(CLI::PositiveNumber);
  run->add_option("--stats", stats_path, "write run statistics as JSON");
  auto* seed_opt = run->add_option("--seed", seed, "random tie-breaking for branching");
  run->add_option("--ground-cap", ground_cap, "most ground factors the ground engine may build");
  run->add_flag("--debug-check-disconnection", debug_check, "re-check every disconnection by grounding");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  liftrc_options options;
  liftrc_options_init(&options);
  options.engine = engine == "ground" ? LIFTRC_ENGINE_GROUND
                   : engine == "both" ? LIFTRC_ENGINE_BOTH
                                      : LIFTRC_ENGINE_LIFTED;
  options.numeric = numeric == "logspace" ? LIFTRC_NUMERIC_LOGSPACE : LIFTRC_NUMERIC_EXACT;
  options.precision_digits = precision;
  options.ground_cap = ground_cap;
  options.has_seed = seed_opt->count() > 0;
  options.seed = static_cast<std::uint64_t>(seed);
  options.debug_check_disconnection = debug_check;

  liftrc_model* model = nullptr;
  if (liftrc_status s = liftrc_model_load_file(file.c_str(), &model); s != LIFTRC_OK) return fail(s);

  nlohmann::json records = nlohmann::json::array();
  int status = 0;
  const std::size_t queries = liftrc_model_query_count(model);
  if (queries == 0) {
    char* z = nullptr;
    if (liftrc_status s = liftrc_partition_function(model, &options, &z); s != LIFTRC_OK) {
      status = fail(s);
    } else {
      std::cout << "evidence weight " << z << "\n";
      liftrc_string_free(z);
    }
  }
  for (std::size_t q = 0; q < queries && status == 0; ++q) {
    char* name = liftrc_model_query_name(model, q);
    liftrc_result* result = nullptr;
    if (liftrc_status s = liftrc_answer_query(model, q, &options, &result); s != LIFTRC_OK) {
      std::cerr << "query " << name << "\n";
      liftrc_string_free(name);
      status = fail(s);
      break;
    }
    std::cout << "query " << name << "\n";
    for (std::size_t i = 0; i < liftrc_result_value_count(result); ++i) {
      std::cout << "  " << liftrc_result_value_name(result, i) << "  " << liftrc_result_probability(result, i);
      if (options.numeric == LIFTRC_NUMERIC_EXACT) std::cout << "  ~" << liftrc_result_decimal(result, i);
      std::cout << "\n";
    }
    if (liftrc_result_run_count(result) == 2) std::cout << "  lifted and ground engines agree\n";
    for (std::size_t r = 0; r < liftrc_result_run_count(result); ++r) {
      liftrc_run_stats st;
      liftrc_result_run_stats(result, r, &st);
      records.push_back({{"query", name},
                         {"engine", st.engine},
                         {"value", st.evidence_weight},
                         {"calls", st.calls},
                         {"branches", st.branches},
                         {"cacheLookups", st.cache_lookups},
                         {"cacheHits", st.cache_hits},
                         {"cacheMisses", st.cache_misses},
                         {"case3Events", st.case3_events},
                         {"wallMs", st.wall_ms}});
    }
    liftrc_result_free(result);
    liftrc_string_free(name);
  }
  liftrc_model_free(model);

  if (!stats_path.empty()) {
    std::ofstream out(stats_path);
    if (!out) {
      std::cerr << "error: cannot write " << stats_path << "\n";
      return status ? status : 1;
    }
    out << records.dump(2) << "\n";
  }
  return status;
}
