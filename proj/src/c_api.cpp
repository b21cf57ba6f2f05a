#include "liftrc/liftrc.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "liftrc/parser.hpp"
#include "liftrc/query.hpp"

struct liftrc_model {
  liftrc::Model model;
};

struct liftrc_result {
  struct Run {
    std::string engine;
    std::string evidence;
    liftrc::RunStats stats;
  };
  std::vector<std::string> values;
  std::vector<std::string> probabilities;
  std::vector<std::string> decimals;
  std::vector<Run> runs;
};

namespace {

thread_local std::string last_error;

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename F>
liftrc_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return LIFTRC_OK;
  } catch (const liftrc::Error& e) {
    last_error = e.what();
    return static_cast<liftrc_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  }
  return LIFTRC_ERR_INTERNAL;
}

liftrc::QueryOptions to_query_options(const liftrc_options* options) {
  liftrc_options defaults;
  liftrc_options_init(&defaults);
  const liftrc_options& o = options ? *options : defaults;
  liftrc::QueryOptions q;
  switch (o.engine) {
    case LIFTRC_ENGINE_LIFTED:
      q.engine = liftrc::EngineKind::kLifted;
      break;
    case LIFTRC_ENGINE_GROUND:
      q.engine = liftrc::EngineKind::kGround;
      break;
    case LIFTRC_ENGINE_BOTH:
      q.engine = liftrc::EngineKind::kBoth;
      break;
    default:
      throw liftrc::InvalidArgumentError("unknown engine");
  }
  if (o.numeric != LIFTRC_NUMERIC_EXACT && o.numeric != LIFTRC_NUMERIC_LOGSPACE) {
    throw liftrc::InvalidArgumentError("unknown numeric mode");
  }
  q.numeric.mode = o.numeric == LIFTRC_NUMERIC_EXACT ? liftrc::NumericMode::kExact : liftrc::NumericMode::kLogspace;
  if (o.precision_digits < 1) throw liftrc::InvalidArgumentError("precision must be at least one digit");
  q.numeric.precision_digits = o.precision_digits;
  q.ground_cap = o.ground_cap;
  if (o.has_seed) q.seed = o.seed;
  q.use_cache = o.use_cache != 0;
  q.use_forgetting = o.use_forgetting != 0;
  q.debug_check_disconnection = o.debug_check_disconnection != 0;
  return q;
}

liftrc_status null_argument(const char* what) {
  last_error = std::string(what) + " is null";
  return LIFTRC_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

void liftrc_options_init(liftrc_options* options) {
  if (!options) return;
  options->engine = LIFTRC_ENGINE_LIFTED;
  options->numeric = LIFTRC_NUMERIC_EXACT;
  options->precision_digits = 50;
  options->ground_cap = 1000000;
  options->has_seed = 0;
  options->seed = 0;
  options->use_cache = 1;
  options->use_forgetting = 1;
  options->debug_check_disconnection = 0;
}

liftrc_status liftrc_model_parse(const char* text, liftrc_model** out) {
  if (!text) return null_argument("text");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new liftrc_model{liftrc::parse_model_or_throw(text)}; });
}

liftrc_status liftrc_model_load_file(const char* path, liftrc_model** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new liftrc_model{liftrc::load_model_file(path)}; });
}

void liftrc_model_free(liftrc_model* model) { delete model; }

size_t liftrc_model_query_count(const liftrc_model* model) { return model ? model->model.queries.size() : 0; }

char* liftrc_model_query_name(const liftrc_model* model, size_t index) {
  if (!model || index >= model->model.queries.size()) return nullptr;
  return dup(model->model.queries[index].to_string());
}

char* liftrc_model_print(const liftrc_model* model) {
  if (!model) return nullptr;
  return dup(liftrc::print_model(model->model));
}

liftrc_status liftrc_answer_query(const liftrc_model* model, size_t index, const liftrc_options* options,
                                  liftrc_result** out) {
  if (!model) return null_argument("model");
  if (!out) return null_argument("out");
  *out = nullptr;
  if (index >= model->model.queries.size()) {
    last_error = "query index " + std::to_string(index) + " out of range";
    return LIFTRC_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const auto q = to_query_options(options);
    const auto answer =
        liftrc::answer_query(model->model, {model->model.queries[index], model->model.observations}, q);
    auto result = std::make_unique<liftrc_result>();
    result->values = answer.values;
    for (const auto& p : answer.distribution) {
      result->probabilities.push_back(p.to_string());
      result->decimals.push_back(p.to_decimal());
    }
    for (const auto& run : answer.runs) result->runs.push_back({run.engine, run.evidence.to_decimal(), run.stats});
    *out = result.release();
  });
}

size_t liftrc_result_value_count(const liftrc_result* result) { return result ? result->values.size() : 0; }

const char* liftrc_result_value_name(const liftrc_result* result, size_t i) {
  return result && i < result->values.size() ? result->values[i].c_str() : nullptr;
}

const char* liftrc_result_probability(const liftrc_result* result, size_t i) {
  return result && i < result->probabilities.size() ? result->probabilities[i].c_str() : nullptr;
}

const char* liftrc_result_decimal(const liftrc_result* result, size_t i) {
  return result && i < result->decimals.size() ? result->decimals[i].c_str() : nullptr;
}

size_t liftrc_result_run_count(const liftrc_result* result) { return result ? result->runs.size() : 0; }

liftrc_status liftrc_result_run_stats(const liftrc_result* result, size_t run, liftrc_run_stats* out) {
  if (!result) return null_argument("result");
  if (!out) return null_argument("out");
  if (run >= result->runs.size()) {
    last_error = "run index out of range";
    return LIFTRC_ERR_INVALID_ARGUMENT;
  }
  const auto& r = result->runs[run];
  out->engine = r.engine.c_str();
  out->evidence_weight = r.evidence.c_str();
  out->calls = r.stats.calls;
  out->branches = r.stats.branches;
  out->cache_lookups = r.stats.cache_lookups;
  out->cache_hits = r.stats.cache_hits;
  out->cache_misses = r.stats.cache_misses;
  out->case3_events = r.stats.case3_events;
  out->wall_ms = r.stats.wall_ms;
  return LIFTRC_OK;
}

void liftrc_result_free(liftrc_result* result) { delete result; }

liftrc_status liftrc_partition_function(const liftrc_model* model, const liftrc_options* options, char** out) {
  if (!model) return null_argument("model");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    const auto z = liftrc::partition_function(model->model, model->model.observations, to_query_options(options));
    *out = dup(z.to_string());
  });
}

const char* liftrc_last_error(void) { return last_error.c_str(); }

void liftrc_string_free(char* s) { std::free(s); }

}  // extern "C"
