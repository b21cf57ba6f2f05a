#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "liftrc/numerics.hpp"

namespace liftrc {

struct Population {
  std::string name;
  std::vector<std::string> individuals;
  // True when individuals are the generated names <name>1..<name>n.
  bool auto_named = true;

  std::size_t size() const { return individuals.size(); }
  bool operator==(const Population&) const = default;
};

Population make_population(const std::string& name, std::size_t size);

struct Term {
  enum class Kind { kParameter, kConstant };
  Kind kind = Kind::kParameter;
  std::string name;
  std::string type;

  static Term param(std::string name, std::string type) {
    return Term{Kind::kParameter, std::move(name), std::move(type)};
  }
  static Term constant(std::string name, std::string type) {
    return Term{Kind::kConstant, std::move(name), std::move(type)};
  }
  bool is_param() const { return kind == Kind::kParameter; }
  bool is_constant() const { return kind == Kind::kConstant; }
  auto operator<=>(const Term&) const = default;
};

struct Prv {
  std::string functor;
  std::vector<Term> args;

  bool is_ground() const;
  // Distinct parameters in order of first occurrence.
  std::vector<Term> parameters() const;
  std::string to_string() const;
  auto operator<=>(const Prv&) const = default;
};

// Ordered list of bindings x_i / t_i. Order matters for split residuals.
class Substitution {
 public:
  Substitution() = default;
  Substitution(std::initializer_list<std::pair<Term, Term>> bindings);

  // Throws InvalidArgumentError on a type mismatch, a non-parameter key,
  // or a parameter bound twice.
  void bind(const Term& param, const Term& value);
  const Term* find(const Term& param) const;
  Term apply(const Term& term) const;
  bool empty() const { return bindings_.empty(); }
  const std::vector<std::pair<Term, Term>>& bindings() const { return bindings_; }

 private:
  std::vector<std::pair<Term, Term>> bindings_;
};

// Set of unordered inequalities t1 != t2 between same-typed terms.
class ConstraintSet {
 public:
  ConstraintSet() = default;

  // Returns false when the pair is t != t (an unsatisfiable constraint).
  // Constant-constant pairs between distinct constants are dropped.
  bool add(const Term& a, const Term& b);
  bool contains(const Term& a, const Term& b) const;
  // nullopt when the substituted set contains t != t.
  std::optional<ConstraintSet> substituted(const Substitution& theta) const;
  const std::set<std::pair<Term, Term>>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool operator==(const ConstraintSet&) const = default;

 private:
  std::set<std::pair<Term, Term>> pairs_;
};

// Dense row-major table; dims[i] is the range size of the i-th scope PRV.
struct FactorTable {
  std::vector<std::size_t> dims;
  std::vector<Rational> entries;

  std::size_t row_count() const;
  std::size_t index(std::span<const std::size_t> values) const;
  const Rational& at(std::span<const std::size_t> values) const { return entries[index(values)]; }
  bool operator==(const FactorTable&) const = default;
};

struct Parfactor {
  ConstraintSet constraints;
  std::vector<Prv> prvs;
  FactorTable table;

  std::vector<Term> parameters() const;
  std::string to_string() const;
  bool operator==(const Parfactor&) const = default;
};

struct RangeDecl {
  std::string name;
  std::vector<std::string> values;
  bool operator==(const RangeDecl&) const = default;
};

struct FunctorDecl {
  std::string name;
  std::vector<std::string> arg_types;
  std::string range;
  bool operator==(const FunctorDecl&) const = default;
};

struct Observation {
  Prv atom;
  std::string value;
  bool operator==(const Observation&) const = default;
};

struct Model {
  std::vector<Population> populations;
  std::vector<RangeDecl> ranges;
  std::vector<FunctorDecl> functors;
  std::vector<Parfactor> parfactors;
  std::vector<Observation> observations;
  std::vector<Prv> queries;

  const Population& population(const std::string& name) const;
  const FunctorDecl& functor(const std::string& name) const;
  const RangeDecl& range(const std::string& name) const;
  const RangeDecl& range_of(const std::string& functor_name) const;
  std::size_t value_index(const std::string& functor_name, const std::string& value) const;
  const Population* find_population(const std::string& name) const;
  const FunctorDecl* find_functor(const std::string& name) const;
  const RangeDecl* find_range(const std::string& name) const;

  // Throws InvalidArgumentError describing the first violated invariant.
  void validate() const;
  bool operator==(const Model&) const = default;
};

// "bool" with values {true, false}; every model starts with it.
RangeDecl bool_range();

// ---- Operations -------------------------------------------------------------

Prv apply_substitution(const Prv& prv, const Substitution& theta);

// The parfactor with theta applied to constraints and scope. Scope PRVs that
// become identical are merged and the table is restricted to its diagonal.
// nullopt when the constraints become contradictory.
std::optional<Parfactor> apply_substitution(const Parfactor& pf, const Substitution& theta);

// Direct application followed by residuals, one per binding in order.
std::vector<Parfactor> split_parfactor(const Parfactor& pf, const Substitution& theta);

// Constants of each type mentioned by parfactors, observations or queries.
std::map<std::string, std::set<std::string>> mentioned_constants(const Model& model);

// Splits every parfactor so that same-typed parameters are pairwise unequal
// and unequal to every mentioned constant of their type.
std::vector<Parfactor> preemptive_shatter(std::span<const Parfactor> pfs,
                                          const std::map<std::string, std::set<std::string>>& mentioned);
std::vector<Parfactor> preemptive_shatter(std::span<const Parfactor> pfs, const Model& model);

// True when pf satisfies both shattering clauses against `mentioned`.
bool is_preemptively_shattered(const Parfactor& pf,
                               const std::map<std::string, std::set<std::string>>& mentioned);

// Renames parameters to x1, x2, ... by first occurrence in the scope.
Parfactor canonicalize_parameters(const Parfactor& pf);

// Number of grounding substitutions of `params` satisfying `constraints`.
// Works on equality patterns; never enumerates individuals.
BigInt count_csp_solutions(std::span<const Term> params, const ConstraintSet& constraints,
                           std::span<const Population> populations);

struct GroundFactor {
  std::vector<int> scope;  // atom indices; may repeat when PRVs coincide
  std::shared_ptr<const FactorTable> table;
  std::size_t source = 0;  // index of the originating parfactor
};

struct GroundModel {
  std::vector<Prv> atoms;
  std::vector<std::size_t> atom_range_size;
  std::map<Prv, int> atom_index;
  std::vector<GroundFactor> factors;

  int find_atom(const Prv& atom) const;
};

// One factor per constraint-respecting grounding substitution. Throws
// OracleInfeasibleError when more than `factor_cap` factors would be built.
GroundModel ground_model(std::span<const Parfactor> pfs, std::span<const Population> populations,
                         std::uint64_t factor_cap = 1'000'000);

}  // namespace liftrc
