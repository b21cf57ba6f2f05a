#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "liftrc/model.hpp"
#include "liftrc/numerics.hpp"
#include "liftrc/stats.hpp"

namespace liftrc {

// Ground variable (atom index) -> value index.
using GroundContext = std::map<int, std::size_t>;

enum class BranchHeuristic {
  kMostFactors,  // unassigned variable occurring in the most factors
  kRandom,       // uniformly random unassigned variable (needs a seed)
};

struct GroundConfig {
  NumericConfig numeric;
  bool use_cache = true;
  BranchHeuristic heuristic = BranchHeuristic::kMostFactors;
  std::uint64_t seed = 0;
};

// Recursive conditioning over a fully ground factor graph. One instance per
// evaluation thread: the cache, stats and working assignment are mutable.
class GroundEngine {
 public:
  GroundEngine(std::shared_ptr<const GroundModel> model, GroundConfig config = {});

  // Sum over unassigned variables of the product of `factors` given `con`.
  Number rc(const GroundContext& con, std::span<const int> factors);
  // Same, over every factor of the model.
  Number rc(const GroundContext& con);

  // Table entry of factor `f` selected by `con`; every scope variable must be assigned.
  Number eval_factor(int f, const GroundContext& con) const;

  // Partition of `factors`: two factors share a block iff chained by shared
  // variables that `con` leaves unassigned.
  std::vector<std::vector<int>> connected_components(const GroundContext& con,
                                                     std::span<const int> factors) const;

  const GroundModel& model() const { return *model_; }
  const RunStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }
  void clear_cache();

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<int>& key) const noexcept;
  };

  Number rc_assigned(std::vector<int> factors);
  Number eval_assigned(int f) const;
  std::vector<std::vector<int>> components_assigned(std::span<const int> factors) const;
  int select_variable(std::span<const int> factors);
  void load_context(const GroundContext& con);

  std::shared_ptr<const GroundModel> model_;
  GroundConfig config_;
  std::vector<std::shared_ptr<const std::vector<Number>>> tables_;  // per factor
  std::vector<int> assignment_;  // -1 when unassigned
  std::unordered_map<std::vector<int>, Number, KeyHash> cache_;
  std::mt19937_64 rng_;
  RunStats stats_;
};

}  // namespace liftrc
