#ifndef LIFTRC_LIFTRC_H
#define LIFTRC_LIFTRC_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct liftrc_model liftrc_model;
typedef struct liftrc_result liftrc_result;

typedef enum {
  LIFTRC_OK = 0,
  LIFTRC_ERR_PARSE = 1,
  LIFTRC_ERR_NOT_LIFTABLE = 2,
  LIFTRC_ERR_ZERO_EVIDENCE = 3,
  LIFTRC_ERR_DISAGREEMENT = 4,
  LIFTRC_ERR_ORACLE_INFEASIBLE = 5,
  LIFTRC_ERR_NUMERIC_GUARD = 6,
  LIFTRC_ERR_INVALID_ARGUMENT = 7,
  LIFTRC_ERR_INTERNAL = 8
} liftrc_status;

typedef enum {
  LIFTRC_ENGINE_LIFTED = 0,
  LIFTRC_ENGINE_GROUND = 1,
  LIFTRC_ENGINE_BOTH = 2
} liftrc_engine;

typedef enum {
  LIFTRC_NUMERIC_EXACT = 0,
  LIFTRC_NUMERIC_LOGSPACE = 1
} liftrc_numeric;

typedef struct {
  liftrc_engine engine;
  liftrc_numeric numeric;
  int precision_digits;  /* logspace only */
  uint64_t ground_cap;   /* most ground factors the ground engine may build */
  int has_seed;
  uint64_t seed;         /* random branching tie-breaks when has_seed != 0 */
  int use_cache;
  int use_forgetting;
  int debug_check_disconnection;
} liftrc_options;

/* Counters of one engine over all values of one query. */
typedef struct {
  const char* engine;           /* "lifted" or "ground"; owned by the result */
  const char* evidence_weight;  /* sum of unnormalized weights, decimal; owned by the result */
  uint64_t calls;
  uint64_t branches;
  uint64_t cache_lookups;
  uint64_t cache_hits;
  uint64_t cache_misses;
  uint64_t case3_events;
  double wall_ms;
} liftrc_run_stats;

void liftrc_options_init(liftrc_options* options);

liftrc_status liftrc_model_parse(const char* text, liftrc_model** out);
liftrc_status liftrc_model_load_file(const char* path, liftrc_model** out);
void liftrc_model_free(liftrc_model* model);

size_t liftrc_model_query_count(const liftrc_model* model);
/* Free the returned strings with liftrc_string_free. */
char* liftrc_model_query_name(const liftrc_model* model, size_t index);
char* liftrc_model_print(const liftrc_model* model);

/* Answers query `index` of the model given the model's observations. */
liftrc_status liftrc_answer_query(const liftrc_model* model, size_t index, const liftrc_options* options,
                                  liftrc_result** out);
size_t liftrc_result_value_count(const liftrc_result* result);
const char* liftrc_result_value_name(const liftrc_result* result, size_t i);
/* "p/q" in exact mode, a decimal in logspace. */
const char* liftrc_result_probability(const liftrc_result* result, size_t i);
const char* liftrc_result_decimal(const liftrc_result* result, size_t i);
size_t liftrc_result_run_count(const liftrc_result* result);
liftrc_status liftrc_result_run_stats(const liftrc_result* result, size_t run, liftrc_run_stats* out);
void liftrc_result_free(liftrc_result* result);

/* Weight of the model's observations; *out is freed with liftrc_string_free. */
liftrc_status liftrc_partition_function(const liftrc_model* model, const liftrc_options* options, char** out);

/* Message of the last failure on this thread; empty when none. */
const char* liftrc_last_error(void);
void liftrc_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
