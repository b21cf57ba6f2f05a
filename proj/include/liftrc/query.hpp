#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "liftrc/model.hpp"
#include "liftrc/numerics.hpp"
#include "liftrc/stats.hpp"

namespace liftrc {

enum class EngineKind { kGround, kLifted, kBoth };

struct QueryOptions {
  EngineKind engine = EngineKind::kLifted;
  NumericConfig numeric;
  std::uint64_t ground_cap = 1'000'000;
  std::optional<std::uint64_t> seed;
  bool use_cache = true;
  bool use_forgetting = true;
  bool debug_check_disconnection = false;
  // Relative tolerance when comparing engines in logspace.
  double tolerance = 1e-9;
};

struct Query {
  Prv target;
  std::vector<Observation> observations;
};

struct EngineRun {
  std::string engine;  // "ground" or "lifted"
  std::vector<Number> weights;  // unnormalized, one per target value
  Number evidence;  // sum of weights
  RunStats stats;
};

struct QueryAnswer {
  Prv target;
  std::vector<std::string> values;
  std::vector<Number> distribution;
  std::vector<EngineRun> runs;
};

// P(target | observations). Observing the target itself is allowed and
// gives a point mass when consistent.
QueryAnswer answer_query(const Model& model, const Query& query, const QueryOptions& options = {});

// Weight of `observations`: the sum over all unobserved atoms of the product
// of every ground factor. With EngineKind::kBoth the engines must agree.
Number partition_function(const Model& model, const std::vector<Observation>& observations,
                          const QueryOptions& options = {}, RunStats* stats = nullptr);

}  // namespace liftrc
