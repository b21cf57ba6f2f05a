#include "liftrc/ground_engine.hpp"

#include <algorithm>
#include <numeric>

#include "liftrc/errors.hpp"

namespace liftrc {

RunStats& RunStats::operator+=(const RunStats& other) {
  calls += other.calls;
  branches += other.branches;
  cache_lookups += other.cache_lookups;
  cache_hits += other.cache_hits;
  cache_misses += other.cache_misses;
  component_splits += other.component_splits;
  case3_events += other.case3_events;
  counting_splits += other.counting_splits;
  conservation_violations += other.conservation_violations;
  wall_ms += other.wall_ms;
  certificates.insert(certificates.end(), other.certificates.begin(), other.certificates.end());
  return *this;
}

std::size_t GroundEngine::KeyHash::operator()(const std::vector<int>& key) const noexcept {
  std::size_t h = 0x9e3779b97f4a7c15ULL;
  for (int v : key) h ^= std::hash<int>()(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

GroundEngine::GroundEngine(std::shared_ptr<const GroundModel> model, GroundConfig config)
    : model_(std::move(model)), config_(config), rng_(config.seed) {
  if (!model_) throw InvalidArgumentError("ground engine needs a model");
  std::map<const FactorTable*, std::shared_ptr<const std::vector<Number>>> converted;
  for (const GroundFactor& f : model_->factors) {
    auto& slot = converted[f.table.get()];
    if (!slot) {
      auto values = std::make_shared<std::vector<Number>>();
      values->reserve(f.table->entries.size());
      for (const Rational& r : f.table->entries) values->push_back(Number::from_rational(r, config_.numeric));
      slot = values;
    }
    tables_.push_back(slot);
  }
  assignment_.assign(model_->atoms.size(), -1);
  clear_cache();
}

void GroundEngine::clear_cache() {
  cache_.clear();
  // the empty problem under the empty context
  cache_.emplace(std::vector<int>{-1}, Number::one(config_.numeric));
}

void GroundEngine::load_context(const GroundContext& con) {
  std::fill(assignment_.begin(), assignment_.end(), -1);
  for (const auto& [var, value] : con) {
    if (var < 0 || static_cast<std::size_t>(var) >= assignment_.size()) {
      throw InvalidArgumentError("context assigns unknown variable " + std::to_string(var));
    }
    if (value >= model_->atom_range_size[var]) {
      throw InvalidArgumentError("value " + std::to_string(value) + " out of range for " +
                                 model_->atoms[var].to_string());
    }
    assignment_[var] = static_cast<int>(value);
  }
}

Number GroundEngine::rc(const GroundContext& con, std::span<const int> factors) {
  for (int f : factors) {
    if (f < 0 || static_cast<std::size_t>(f) >= model_->factors.size()) {
      throw InvalidArgumentError("unknown factor " + std::to_string(f));
    }
  }
  load_context(con);
  std::vector<int> fs(factors.begin(), factors.end());
  std::sort(fs.begin(), fs.end());
  fs.erase(std::unique(fs.begin(), fs.end()), fs.end());
  return rc_assigned(std::move(fs));
}

Number GroundEngine::rc(const GroundContext& con) {
  std::vector<int> all(model_->factors.size());
  std::iota(all.begin(), all.end(), 0);
  return rc(con, all);
}

Number GroundEngine::eval_assigned(int f) const {
  const GroundFactor& factor = model_->factors[f];
  std::size_t idx = 0;
  for (std::size_t i = 0; i < factor.scope.size(); ++i) {
    const int value = assignment_[factor.scope[i]];
    if (value < 0) throw InvalidArgumentError("factor " + std::to_string(f) + " is not fully assigned");
    idx = idx * factor.table->dims[i] + static_cast<std::size_t>(value);
  }
  return (*tables_[f])[idx];
}

Number GroundEngine::eval_factor(int f, const GroundContext& con) const {
  if (f < 0 || static_cast<std::size_t>(f) >= model_->factors.size()) {
    throw InvalidArgumentError("unknown factor " + std::to_string(f));
  }
  const GroundFactor& factor = model_->factors[f];
  std::size_t idx = 0;
  for (std::size_t i = 0; i < factor.scope.size(); ++i) {
    auto it = con.find(factor.scope[i]);
    if (it == con.end()) throw InvalidArgumentError("factor " + std::to_string(f) + " is not fully assigned");
    idx = idx * factor.table->dims[i] + it->second;
  }
  return (*tables_[f])[idx];
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<std::vector<int>> GroundEngine::components_assigned(std::span<const int> factors) const {
  UnionFind uf(factors.size());
  std::unordered_map<int, int> owner;  // variable -> first factor slot
  for (std::size_t i = 0; i < factors.size(); ++i) {
    for (int var : model_->factors[factors[i]].scope) {
      if (assignment_[var] >= 0) continue;
      auto [it, inserted] = owner.emplace(var, static_cast<int>(i));
      if (!inserted) uf.unite(static_cast<int>(i), it->second);
    }
  }
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < factors.size(); ++i) groups[uf.find(static_cast<int>(i))].push_back(factors[i]);
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<int>> GroundEngine::connected_components(const GroundContext& con,
                                                                 std::span<const int> factors) const {
  auto& self = const_cast<GroundEngine&>(*this);
  const auto saved = assignment_;
  self.load_context(con);
  auto out = components_assigned(factors);
  self.assignment_ = saved;
  return out;
}

int GroundEngine::select_variable(std::span<const int> factors) {
  std::map<int, int> occurrences;
  for (int f : factors) {
    std::vector<int> scope = model_->factors[f].scope;
    std::sort(scope.begin(), scope.end());
    scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
    for (int var : scope) {
      if (assignment_[var] < 0) ++occurrences[var];
    }
  }
  if (occurrences.empty()) throw InternalError("no unassigned variable to branch on");
  if (config_.heuristic == BranchHeuristic::kRandom) {
    std::uniform_int_distribution<std::size_t> pick(0, occurrences.size() - 1);
    return std::next(occurrences.begin(), static_cast<long>(pick(rng_)))->first;
  }
  int best = occurrences.begin()->first;
  for (const auto& [var, count] : occurrences) {
    if (count > occurrences[best]) best = var;
  }
  return best;
}

Number GroundEngine::rc_assigned(std::vector<int> fs) {
  ++stats_.calls;
  std::vector<int> key;
  if (config_.use_cache) {
    std::vector<int> vars;
    for (int f : fs) {
      for (int var : model_->factors[f].scope) vars.push_back(var);
    }
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    key = fs;
    key.push_back(-1);
    for (int var : vars) {
      if (assignment_[var] >= 0) {
        key.push_back(var);
        key.push_back(assignment_[var]);
      }
    }
    ++stats_.cache_lookups;
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++stats_.cache_hits;
      return it->second;
    }
    ++stats_.cache_misses;
  }
  if (fs.empty()) return Number::one(config_.numeric);

  auto store = [&](Number value) {
    if (config_.use_cache) cache_.insert_or_assign(key, value);
    return value;
  };

  std::vector<int> ready;
  std::vector<int> rest;
  for (int f : fs) {
    const auto& scope = model_->factors[f].scope;
    const bool all = std::all_of(scope.begin(), scope.end(), [&](int v) { return assignment_[v] >= 0; });
    (all ? ready : rest).push_back(f);
  }
  if (!ready.empty()) {
    Number product = Number::one(config_.numeric);
    for (int f : ready) product *= eval_assigned(f);
    return store(product * rc_assigned(std::move(rest)));
  }

  auto components = components_assigned(fs);
  if (components.size() > 1) {
    ++stats_.component_splits;
    Number product = Number::one(config_.numeric);
    for (auto& component : components) product *= rc_assigned(std::move(component));
    return store(product);
  }

  const int var = select_variable(fs);
  Number total = Number::zero(config_.numeric);
  for (std::size_t v = 0; v < model_->atom_range_size[var]; ++v) {
    ++stats_.branches;
    assignment_[var] = static_cast<int>(v);
    total += rc_assigned(fs);
  }
  assignment_[var] = -1;
  return store(total);
}

}  // namespace liftrc
