#include "liftrc/query.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "liftrc/errors.hpp"
#include "liftrc/ground_engine.hpp"
#include "liftrc/lifted_engine.hpp"

namespace liftrc {

namespace {

void check_ground_atom(const Model& model, const Prv& atom) {
  const FunctorDecl& f = model.functor(atom.functor);
  if (f.arg_types.size() != atom.args.size()) {
    throw InvalidArgumentError(atom.to_string() + ": " + f.name + " takes " + std::to_string(f.arg_types.size()) +
                               " arguments");
  }
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    const Term& t = atom.args[i];
    if (!t.is_constant()) throw InvalidArgumentError(atom.to_string() + " must be ground");
    if (t.type != f.arg_types[i]) throw InvalidArgumentError(atom.to_string() + ": " + t.name + " has the wrong type");
    const auto& inds = model.population(t.type).individuals;
    if (std::find(inds.begin(), inds.end(), t.name) == inds.end()) {
      throw InvalidArgumentError("unknown constant '" + t.name + "' of type " + t.type);
    }
  }
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

class Runner {
 public:
  Runner(const Model& model, const QueryOptions& options) : model_(model), options_(options) {}

  Number ground(const std::vector<Observation>& obs, RunStats& stats) {
    if (!ground_) {
      ground_ = std::make_shared<const GroundModel>(
          ground_model(model_.parfactors, model_.populations, options_.ground_cap));
    }
    GroundContext con;
    for (const Observation& o : obs) {
      const int idx = ground_->find_atom(o.atom);
      const std::size_t value = model_.value_index(o.atom.functor, o.value);
      if (idx < 0) continue;  // the atom occurs in no factor
      auto [it, inserted] = con.emplace(idx, value);
      if (!inserted && it->second != value) return Number::zero(options_.numeric);
    }
    GroundConfig cfg;
    cfg.numeric = options_.numeric;
    cfg.use_cache = options_.use_cache;
    if (options_.seed) {
      cfg.heuristic = BranchHeuristic::kRandom;
      cfg.seed = *options_.seed;
    }
    const auto start = std::chrono::steady_clock::now();
    GroundEngine engine(ground_, cfg);
    Number out = engine.rc(con);
    stats += engine.stats();
    stats.wall_ms += elapsed_ms(start);
    return out;
  }

  Number lifted(const std::vector<Observation>& obs, RunStats& stats) {
    LiftedConfig cfg;
    cfg.numeric = options_.numeric;
    cfg.use_cache = options_.use_cache;
    cfg.use_forgetting = options_.use_forgetting;
    cfg.debug_check_disconnection = options_.debug_check_disconnection;
    cfg.seed = options_.seed;
    LiftedEngine engine(model_, cfg);
    Number out = engine.evaluate(obs);
    stats += engine.stats();
    return out;
  }

  Number run(bool use_ground, const std::vector<Observation>& obs, RunStats& stats) {
    return use_ground ? ground(obs, stats) : lifted(obs, stats);
  }

 private:
  const Model& model_;
  const QueryOptions& options_;
  std::shared_ptr<const GroundModel> ground_;
};

bool agree(const Number& a, const Number& b, const QueryOptions& options) {
  if (options.numeric.mode == NumericMode::kExact) return a == b;
  if (a.is_zero() || b.is_zero()) return a.is_zero() == b.is_zero();
  const double diff = (a.log_magnitude() - b.log_magnitude()).to_double();
  return std::fabs(diff) <= options.tolerance;
}

std::vector<bool> engines(EngineKind kind) {
  switch (kind) {
    case EngineKind::kGround:
      return {true};
    case EngineKind::kLifted:
      return {false};
    case EngineKind::kBoth:
      break;
  }
  return {false, true};
}

}  // namespace

QueryAnswer answer_query(const Model& model, const Query& query, const QueryOptions& options) {
  check_ground_atom(model, query.target);
  for (const Observation& o : query.observations) {
    check_ground_atom(model, o.atom);
    model.value_index(o.atom.functor, o.value);
  }
  QueryAnswer answer;
  answer.target = query.target;
  answer.values = model.range_of(query.target.functor).values;
  Runner runner(model, options);
  for (bool use_ground : engines(options.engine)) {
    EngineRun run{use_ground ? "ground" : "lifted", {}, Number::zero(options.numeric), {}};
    for (const std::string& value : answer.values) {
      std::vector<Observation> obs = query.observations;
      obs.push_back({query.target, value});
      run.weights.push_back(runner.run(use_ground, obs, run.stats));
      run.evidence += run.weights.back();
    }
    answer.runs.push_back(std::move(run));
  }

  const EngineRun& primary = answer.runs.front();
  if (primary.evidence.is_zero()) {
    throw ZeroEvidenceError("zero-probability evidence: every value of " + query.target.to_string() +
                            " has weight 0");
  }
  for (const Number& w : primary.weights) answer.distribution.push_back(w / primary.evidence);

  if (answer.runs.size() == 2) {
    const EngineRun& other = answer.runs.back();
    if (other.evidence.is_zero()) throw DisagreementError("engines disagree: ground evidence weight is 0");
    for (std::size_t i = 0; i < answer.values.size(); ++i) {
      const Number p = other.weights[i] / other.evidence;
      if (!agree(answer.distribution[i], p, options) || !agree(primary.weights[i], other.weights[i], options)) {
        throw DisagreementError("engines disagree on " + query.target.to_string() + "=" + answer.values[i] +
                                ": lifted " + answer.distribution[i].to_string() + ", ground " + p.to_string());
      }
    }
  }
  return answer;
}

Number partition_function(const Model& model, const std::vector<Observation>& observations,
                          const QueryOptions& options, RunStats* stats) {
  for (const Observation& o : observations) {
    check_ground_atom(model, o.atom);
    model.value_index(o.atom.functor, o.value);
  }
  Runner runner(model, options);
  RunStats local;
  RunStats& sink = stats ? *stats : local;
  std::optional<Number> first;
  for (bool use_ground : engines(options.engine)) {
    Number z = runner.run(use_ground, observations, sink);
    if (!first) {
      first = z;
    } else if (!agree(*first, z, options)) {
      throw DisagreementError("engines disagree on the evidence weight: lifted " + first->to_string() + ", ground " +
                              z.to_string());
    }
  }
  return *first;
}

}  // namespace liftrc
