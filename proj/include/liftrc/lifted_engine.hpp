#pragma once

#include <compare>
#include <cstdint>
#include <functional>
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

// Interned names of a model. Reserved constants ("$type$i") stand for
// individuals picked out by disconnection; they are added on demand.
class Signature {
 public:
  explicit Signature(const Model& model);

  int type_id(const std::string& name) const;
  int functor_id(const std::string& name) const;
  // Individuals are interned on first use so huge populations cost nothing.
  int constant_id(const std::string& name);
  int reserved_constant(int type, int index);

  std::size_t type_count() const { return type_names_.size(); }
  const std::string& type_name(int type) const { return type_names_[type]; }
  const BigInt& type_size(int type) const { return type_sizes_[type]; }
  const std::string& functor_name(int functor) const { return functors_[functor].name; }
  int arg_type(int functor, std::size_t position) const { return functors_[functor].arg_types[position]; }
  std::size_t arity(int functor) const { return functors_[functor].arg_types.size(); }
  std::size_t range_size(int functor) const { return functors_[functor].range.size(); }
  const std::vector<std::string>& range_values(int functor) const { return functors_[functor].range; }
  const std::string& constant_name(int constant) const { return constants_[constant].name; }
  int constant_type(int constant) const { return constants_[constant].type; }

 private:
  struct FunctorInfo {
    std::string name;
    std::vector<int> arg_types;
    std::vector<std::string> range;
  };
  struct ConstantInfo {
    std::string name;
    int type;
  };
  std::vector<std::string> type_names_;
  std::vector<BigInt> type_sizes_;
  const Model* model_;
  std::vector<FunctorInfo> functors_;
  std::vector<ConstantInfo> constants_;
  std::map<std::string, int> type_ids_;
  std::map<std::string, int> functor_ids_;
  std::map<std::string, int> constant_ids_;
};

struct Arg {
  bool is_param = false;
  int id = 0;  // parameter index within its parfactor, or a constant id
  auto operator<=>(const Arg&) const = default;
};

struct Atom {
  int functor = 0;
  std::vector<Arg> args;

  bool ground() const;
  // Distinct parameter ids in order of first occurrence.
  std::vector<int> params() const;
  auto operator<=>(const Atom&) const = default;
};

// Parameters renumbered by first occurrence. Two PRVs of a shattered model
// share ground instances iff their shapes are equal.
Atom shape_of(const Atom& atom);

struct PotentialTable {
  std::vector<std::size_t> dims;
  std::vector<Number> values;
  std::vector<std::string> keys;  // values[i].key(), precomputed
};

// A parfactor of a fully shattered model. Parameters of one type are
// pairwise distinct and distinct from every constant of that type, so no
// explicit constraint set is kept.
struct LiftedParfactor {
  std::vector<int> param_types;  // indexed by parameter id
  std::vector<Atom> prvs;
  std::shared_ptr<const PotentialTable> table;
};

// Histogram of the values taken by a set of unary PRV shapes over the free
// individuals of one type. Rows with a zero count are absent.
struct CountingContext {
  std::vector<Atom> prvs;
  std::map<std::vector<int>, BigInt> counts;

  BigInt total() const;
  bool operator==(const CountingContext&) const = default;
};

struct CurrentContext {
  std::map<Atom, int> zero_arg;  // ground atom -> value index
  std::map<int, CountingContext> per_type;
  bool operator==(const CurrentContext&) const = default;
};

// Individuals of each type not named by any constant, and how many reserved
// constants have been handed out.
struct Universe {
  std::vector<BigInt> free;
  std::vector<int> reserved;
};

struct CountingSplit {
  std::string prv;
  BigInt cell_count;
  std::size_t range_size = 0;
  BigInt multiplier_sum;  // must equal range_size^cell_count
};

struct LiftedConfig {
  NumericConfig numeric;
  bool use_cache = true;
  bool use_forgetting = true;
  // Grounds each disconnection at a small surrogate size and checks the block
  // structure; failures raise InternalError.
  bool debug_check_disconnection = false;
  // Random tie-breaking among equally good branch candidates when set.
  std::optional<std::uint64_t> seed;
  std::function<void(const CountingSplit&)> on_counting_split;
};

class LiftedEngine {
 public:
  // `model` must outlive the engine.
  explicit LiftedEngine(const Model& model, LiftedConfig config = {});

  struct Prepared {
    CurrentContext con;
    Universe universe;
    std::vector<LiftedParfactor> parfactors;
    bool contradictory = false;  // evidence assigns one atom two values
  };

  // Shatters the model's parfactors against its constants and the evidence
  // constants, and loads the evidence as ground assignments.
  Prepared prepare(const std::vector<Observation>& evidence);

  // Weight of the evidence: the sum over every unobserved atom of the product
  // of all ground factors.
  Number evaluate(const std::vector<Observation>& evidence);

  Number lrc(const CurrentContext& con, const Universe& universe, std::vector<LiftedParfactor> fs);

  // Case 4b in isolation: counting branch on the unary shape `prv`.
  Number branch(const CurrentContext& con, const Universe& universe, const std::vector<LiftedParfactor>& fs,
                const Atom& prv);

  // Powers to which each table row is raised when every PRV of pf is assigned.
  std::map<std::vector<std::size_t>, BigInt> parfactor_powers(const LiftedParfactor& pf,
                                                              const CurrentContext& con) const;
  Number eval_parfactor(const LiftedParfactor& pf, const CurrentContext& con) const;

  // connected[i][x] for parameter x of fs[i].
  std::vector<std::vector<bool>> connected(const CurrentContext& con, std::span<const LiftedParfactor> fs) const;

  // Sums out `prv` (a ground atom or a unary shape) from the context.
  CurrentContext forget(const CurrentContext& con, const Atom& prv) const;

  bool assigned(const Atom& atom, const LiftedParfactor& owner, const CurrentContext& con) const;
  // Number of ground instances of pf.
  BigInt groundings(const LiftedParfactor& pf, const Universe& universe) const;

  // Equal for problems equal up to renaming parameters within a parfactor
  // and reordering parfactors or scope PRVs.
  std::string canonical_key(const CurrentContext& con, const Universe& universe,
                            std::span<const LiftedParfactor> fs) const;

  LiftedParfactor convert(const Parfactor& pf);
  Atom convert(const Prv& prv);

  std::string to_string(const Atom& atom) const;
  std::string to_string(const LiftedParfactor& pf) const;

  Signature& signature() { return signature_; }
  const LiftedConfig& config() const { return config_; }
  const RunStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }
  void clear_cache() { cache_.clear(); }

 private:
  struct Piece;
  struct Block;

  CurrentContext forget_unused(const CurrentContext& con, std::span<const LiftedParfactor> fs) const;
  std::vector<std::vector<std::size_t>> components(const CurrentContext& con,
                                                   std::span<const LiftedParfactor> fs) const;
  std::optional<Number> try_disconnect(const CurrentContext& con, const Universe& universe,
                                       const std::vector<LiftedParfactor>& fs);
  std::optional<Block> build_block(const CurrentContext& con, const Universe& universe,
                                   const std::vector<LiftedParfactor>& fs, std::size_t origin, int type,
                                   const std::vector<int>& chosen);
  Number exponentiate(const CurrentContext& con, const Universe& universe, const Block& block);
  void check_block_by_grounding(const CurrentContext& con, const Universe& universe,
                                const std::vector<LiftedParfactor>& fs, const Block& block) const;
  Number branch_ground(const CurrentContext& con, const Universe& universe, const std::vector<LiftedParfactor>& fs,
                       const Atom& atom);
  std::optional<Atom> choose_branch(const CurrentContext& con, std::span<const LiftedParfactor> fs,
                                    bool ground_only);
  int shape_type(const Atom& shape) const;
  std::string canonical_piece(const LiftedParfactor& pf) const;
  std::string atom_key(const Atom& atom, const std::vector<int>& renaming) const;

  const Model& model_;
  Signature signature_;
  LiftedConfig config_;
  std::unordered_map<std::string, Number> cache_;
  std::mt19937_64 rng_;
  RunStats stats_;
};

}  // namespace liftrc
