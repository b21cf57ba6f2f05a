#include "liftrc/model.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "liftrc/errors.hpp"

namespace liftrc {

Population make_population(const std::string& name, std::size_t size) {
  Population pop;
  pop.name = name;
  pop.auto_named = true;
  pop.individuals.reserve(size);
  for (std::size_t i = 1; i <= size; ++i) pop.individuals.push_back(name + std::to_string(i));
  return pop;
}

RangeDecl bool_range() { return RangeDecl{"bool", {"true", "false"}}; }

// ---- Prv --------------------------------------------------------------------

bool Prv::is_ground() const {
  return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_param(); });
}

std::vector<Term> Prv::parameters() const {
  std::vector<Term> out;
  for (const Term& t : args) {
    if (t.is_param() && std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  }
  return out;
}

std::string Prv::to_string() const {
  std::string out = functor;
  if (args.empty()) return out;
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ',';
    out += args[i].name;
  }
  out += ')';
  return out;
}

// ---- Substitution -----------------------------------------------------------

Substitution::Substitution(std::initializer_list<std::pair<Term, Term>> bindings) {
  for (const auto& [param, value] : bindings) bind(param, value);
}

void Substitution::bind(const Term& param, const Term& value) {
  if (!param.is_param()) throw InvalidArgumentError("substitution key '" + param.name + "' is not a parameter");
  if (param.type != value.type) {
    throw InvalidArgumentError("substitution " + param.name + "/" + value.name + " mixes types " + param.type +
                               " and " + value.type);
  }
  if (find(param) != nullptr) throw InvalidArgumentError("parameter " + param.name + " bound twice");
  bindings_.emplace_back(param, value);
}

const Term* Substitution::find(const Term& param) const {
  for (const auto& [key, value] : bindings_) {
    if (key == param) return &value;
  }
  return nullptr;
}

Term Substitution::apply(const Term& term) const {
  if (!term.is_param()) return term;
  const Term* bound = find(term);
  return bound ? *bound : term;
}

// ---- ConstraintSet ----------------------------------------------------------

bool ConstraintSet::add(const Term& a, const Term& b) {
  if (a.type != b.type) {
    throw InvalidArgumentError("inequality between " + a.name + ":" + a.type + " and " + b.name + ":" + b.type);
  }
  if (a == b) return false;
  if (a.is_constant() && b.is_constant()) return true;
  pairs_.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
  return true;
}

bool ConstraintSet::contains(const Term& a, const Term& b) const {
  return pairs_.count(a < b ? std::make_pair(a, b) : std::make_pair(b, a)) != 0;
}

std::optional<ConstraintSet> ConstraintSet::substituted(const Substitution& theta) const {
  ConstraintSet out;
  for (const auto& [a, b] : pairs_) {
    if (!out.add(theta.apply(a), theta.apply(b))) return std::nullopt;
  }
  return out;
}

// ---- FactorTable ------------------------------------------------------------

std::size_t FactorTable::row_count() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t FactorTable::index(std::span<const std::size_t> values) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) idx = idx * dims[i] + values[i];
  return idx;
}

// ---- Parfactor --------------------------------------------------------------

std::vector<Term> Parfactor::parameters() const {
  std::vector<Term> out;
  for (const Prv& p : prvs) {
    for (const Term& t : p.parameters()) {
      if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
  }
  return out;
}

std::string Parfactor::to_string() const {
  std::ostringstream os;
  os << "<{";
  bool first = true;
  for (const auto& [a, b] : constraints.pairs()) {
    os << (first ? "" : ", ") << a.name << "!=" << b.name;
    first = false;
  }
  os << "}, {";
  for (std::size_t i = 0; i < prvs.size(); ++i) os << (i ? ", " : "") << prvs[i].to_string();
  os << "}>";
  return os.str();
}

// ---- Model ------------------------------------------------------------------

const Population* Model::find_population(const std::string& name) const {
  for (const auto& p : populations) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const FunctorDecl* Model::find_functor(const std::string& name) const {
  for (const auto& f : functors) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const RangeDecl* Model::find_range(const std::string& name) const {
  for (const auto& r : ranges) {
    if (r.name == name) return &r;
  }
  if (name == "bool") {
    static const RangeDecl kBool = bool_range();
    return &kBool;
  }
  return nullptr;
}

const Population& Model::population(const std::string& name) const {
  if (const auto* p = find_population(name)) return *p;
  throw InvalidArgumentError("unknown population '" + name + "'");
}

const FunctorDecl& Model::functor(const std::string& name) const {
  if (const auto* f = find_functor(name)) return *f;
  throw InvalidArgumentError("unknown functor '" + name + "'");
}

const RangeDecl& Model::range(const std::string& name) const {
  if (const auto* r = find_range(name)) return *r;
  throw InvalidArgumentError("unknown range '" + name + "'");
}

const RangeDecl& Model::range_of(const std::string& functor_name) const {
  return range(functor(functor_name).range);
}

std::size_t Model::value_index(const std::string& functor_name, const std::string& value) const {
  const auto& values = range_of(functor_name).values;
  auto it = std::find(values.begin(), values.end(), value);
  if (it == values.end()) {
    throw InvalidArgumentError("value '" + value + "' is not in the range of " + functor_name);
  }
  return static_cast<std::size_t>(it - values.begin());
}

namespace {

void validate_prv(const Model& m, const Prv& prv, bool require_ground) {
  const FunctorDecl& f = m.functor(prv.functor);
  if (f.arg_types.size() != prv.args.size()) {
    throw InvalidArgumentError(prv.to_string() + ": " + f.name + " takes " + std::to_string(f.arg_types.size()) +
                               " arguments");
  }
  for (std::size_t i = 0; i < prv.args.size(); ++i) {
    const Term& t = prv.args[i];
    if (t.type != f.arg_types[i]) {
      throw InvalidArgumentError(prv.to_string() + ": argument " + t.name + " has type " + t.type + ", expected " +
                                 f.arg_types[i]);
    }
    if (t.is_constant()) {
      const auto& inds = m.population(t.type).individuals;
      if (std::find(inds.begin(), inds.end(), t.name) == inds.end()) {
        throw InvalidArgumentError("unknown constant '" + t.name + "' of type " + t.type);
      }
    } else if (require_ground) {
      throw InvalidArgumentError(prv.to_string() + " must be ground");
    }
  }
}

}  // namespace

void Model::validate() const {
  std::set<std::string> seen;
  std::set<std::string> individuals;
  for (const auto& p : populations) {
    if (!seen.insert(p.name).second) throw InvalidArgumentError("duplicate population '" + p.name + "'");
    for (const auto& ind : p.individuals) {
      if (!individuals.insert(ind).second) throw InvalidArgumentError("duplicate individual '" + ind + "'");
    }
  }
  seen.clear();
  for (const auto& r : ranges) {
    if (!seen.insert(r.name).second) throw InvalidArgumentError("duplicate range '" + r.name + "'");
    if (r.values.empty()) throw InvalidArgumentError("range '" + r.name + "' is empty");
    std::set<std::string> vals(r.values.begin(), r.values.end());
    if (vals.size() != r.values.size()) throw InvalidArgumentError("range '" + r.name + "' repeats a value");
  }
  seen.clear();
  for (const auto& f : functors) {
    if (!seen.insert(f.name).second) throw InvalidArgumentError("duplicate functor '" + f.name + "'");
    for (const auto& t : f.arg_types) population(t);
    range(f.range);
  }
  for (const auto& pf : parfactors) {
    for (const auto& prv : pf.prvs) validate_prv(*this, prv, false);
    if (pf.table.dims.size() != pf.prvs.size()) throw InvalidArgumentError(pf.to_string() + ": table scope mismatch");
    for (std::size_t i = 0; i < pf.prvs.size(); ++i) {
      if (pf.table.dims[i] != range_of(pf.prvs[i].functor).values.size()) {
        throw InvalidArgumentError(pf.to_string() + ": table dimension mismatch");
      }
    }
    if (pf.table.entries.size() != pf.table.row_count()) {
      throw InvalidArgumentError(pf.to_string() + ": expected " + std::to_string(pf.table.row_count()) + " rows");
    }
    for (const auto& e : pf.table.entries) {
      if (sgn(e) < 0) throw InvalidArgumentError(pf.to_string() + ": negative potential");
    }
    const auto params = pf.parameters();
    for (const auto& [a, b] : pf.constraints.pairs()) {
      for (const Term& t : {a, b}) {
        if (t.is_param() && std::find(params.begin(), params.end(), t) == params.end()) {
          throw InvalidArgumentError(pf.to_string() + ": constrained parameter " + t.name + " is not in the scope");
        }
        if (t.is_constant()) {
          const auto& inds = population(t.type).individuals;
          if (std::find(inds.begin(), inds.end(), t.name) == inds.end()) {
            throw InvalidArgumentError("unknown constant '" + t.name + "' of type " + t.type);
          }
        }
      }
    }
  }
  for (const auto& obs : observations) {
    validate_prv(*this, obs.atom, true);
    value_index(obs.atom.functor, obs.value);
  }
  for (const auto& q : queries) validate_prv(*this, q, true);
}

// ---- Operations -------------------------------------------------------------

Prv apply_substitution(const Prv& prv, const Substitution& theta) {
  Prv out;
  out.functor = prv.functor;
  out.args.reserve(prv.args.size());
  for (const Term& t : prv.args) out.args.push_back(theta.apply(t));
  return out;
}

std::optional<Parfactor> apply_substitution(const Parfactor& pf, const Substitution& theta) {
  auto constraints = pf.constraints.substituted(theta);
  if (!constraints) return std::nullopt;
  Parfactor out;
  out.constraints = std::move(*constraints);
  std::vector<std::size_t> position;  // original scope slot -> merged slot
  for (const Prv& prv : pf.prvs) {
    Prv applied = apply_substitution(prv, theta);
    auto it = std::find(out.prvs.begin(), out.prvs.end(), applied);
    if (it == out.prvs.end()) {
      position.push_back(out.prvs.size());
      out.prvs.push_back(std::move(applied));
    } else {
      position.push_back(static_cast<std::size_t>(it - out.prvs.begin()));
    }
  }
  if (out.prvs.size() == pf.prvs.size()) {
    out.table = pf.table;
    return out;
  }
  // Merged PRVs: keep the diagonal rows of the original table.
  out.table.dims.resize(out.prvs.size());
  for (std::size_t i = 0; i < pf.prvs.size(); ++i) out.table.dims[position[i]] = pf.table.dims[i];
  out.table.entries.resize(out.table.row_count());
  std::vector<std::size_t> merged(out.prvs.size(), 0);
  std::vector<std::size_t> original(pf.prvs.size(), 0);
  for (std::size_t row = 0; row < out.table.entries.size(); ++row) {
    std::size_t rest = row;
    for (std::size_t i = merged.size(); i-- > 0;) {
      merged[i] = rest % out.table.dims[i];
      rest /= out.table.dims[i];
    }
    for (std::size_t i = 0; i < original.size(); ++i) original[i] = merged[position[i]];
    out.table.entries[row] = pf.table.at(original);
  }
  return out;
}

std::vector<Parfactor> split_parfactor(const Parfactor& pf, const Substitution& theta) {
  std::vector<Parfactor> out;
  if (auto direct = apply_substitution(pf, theta)) out.push_back(std::move(*direct));
  Substitution prefix;
  for (const auto& [param, value] : theta.bindings()) {
    if (auto applied = apply_substitution(pf, prefix)) {
      if (applied->constraints.add(param, prefix.apply(value))) out.push_back(std::move(*applied));
    }
    prefix.bind(param, value);
  }
  return out;
}

std::map<std::string, std::set<std::string>> mentioned_constants(const Model& model) {
  std::map<std::string, std::set<std::string>> out;
  auto note = [&](const Term& t) {
    if (t.is_constant()) out[t.type].insert(t.name);
  };
  for (const auto& pf : model.parfactors) {
    for (const auto& prv : pf.prvs) std::for_each(prv.args.begin(), prv.args.end(), note);
    for (const auto& [a, b] : pf.constraints.pairs()) {
      note(a);
      note(b);
    }
  }
  for (const auto& obs : model.observations) std::for_each(obs.atom.args.begin(), obs.atom.args.end(), note);
  for (const auto& q : model.queries) std::for_each(q.args.begin(), q.args.end(), note);
  return out;
}

Parfactor canonicalize_parameters(const Parfactor& pf) {
  Substitution rename;
  std::size_t next = 1;
  for (const Term& p : pf.parameters()) {
    Term fresh = Term::param("x" + std::to_string(next++), p.type);
    if (fresh != p) rename.bind(p, fresh);
  }
  if (rename.empty()) return pf;
  // simultaneous substitution: swaps such as {x2/x1, x1/x2} are safe
  auto out = apply_substitution(pf, rename);
  if (!out) throw InternalError("parameter renaming produced a contradiction");
  return *out;
}

bool is_preemptively_shattered(const Parfactor& pf,
                               const std::map<std::string, std::set<std::string>>& mentioned) {
  const auto params = pf.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = i + 1; j < params.size(); ++j) {
      if (params[i].type == params[j].type && !pf.constraints.contains(params[i], params[j])) return false;
    }
    auto it = mentioned.find(params[i].type);
    if (it == mentioned.end()) continue;
    for (const auto& c : it->second) {
      if (!pf.constraints.contains(params[i], Term::constant(c, params[i].type))) return false;
    }
  }
  return true;
}

std::vector<Parfactor> preemptive_shatter(std::span<const Parfactor> pfs,
                                          const std::map<std::string, std::set<std::string>>& mentioned) {
  std::vector<Parfactor> out;
  for (const Parfactor& pf : pfs) {
    const auto params = pf.parameters();
    // Each parameter is mapped to a mentioned constant, an earlier class
    // representative, or itself (a new class).
    std::vector<Term> target(params.size());
    std::function<void(std::size_t)> visit = [&](std::size_t i) {
      if (i == params.size()) {
        Substitution theta;
        for (std::size_t j = 0; j < params.size(); ++j) {
          if (target[j] != params[j]) theta.bind(params[j], target[j]);
        }
        auto piece = apply_substitution(pf, theta);
        if (!piece) return;
        std::vector<Term> rest;
        for (std::size_t j = 0; j < params.size(); ++j) {
          if (target[j] == params[j]) rest.push_back(params[j]);
        }
        for (std::size_t a = 0; a < rest.size(); ++a) {
          for (std::size_t b = a + 1; b < rest.size(); ++b) {
            if (rest[a].type == rest[b].type) piece->constraints.add(rest[a], rest[b]);
          }
          auto it = mentioned.find(rest[a].type);
          if (it == mentioned.end()) continue;
          for (const auto& c : it->second) piece->constraints.add(rest[a], Term::constant(c, rest[a].type));
        }
        out.push_back(canonicalize_parameters(*piece));
        return;
      }
      const Term& x = params[i];
      target[i] = x;
      visit(i + 1);
      for (std::size_t j = 0; j < i; ++j) {
        if (target[j] == params[j] && params[j].type == x.type && !pf.constraints.contains(x, params[j])) {
          target[i] = params[j];
          visit(i + 1);
        }
      }
      auto it = mentioned.find(x.type);
      if (it != mentioned.end()) {
        for (const auto& c : it->second) {
          Term constant = Term::constant(c, x.type);
          if (pf.constraints.contains(x, constant)) continue;
          target[i] = constant;
          visit(i + 1);
        }
      }
      target[i] = x;
    };
    visit(0);
  }
  return out;
}

std::vector<Parfactor> preemptive_shatter(std::span<const Parfactor> pfs, const Model& model) {
  return preemptive_shatter(pfs, mentioned_constants(model));
}

namespace {

const Population& population_of(std::span<const Population> pops, const std::string& type) {
  for (const auto& p : pops) {
    if (p.name == type) return p;
  }
  throw InvalidArgumentError("unknown population '" + type + "'");
}

BigInt falling_or_zero(const BigInt& n, std::size_t k) {
  if (n < 0 || BigInt(static_cast<unsigned long>(k)) > n) return 0;
  return falling_factorial(n, BigInt(static_cast<unsigned long>(k)));
}

// Solutions for the parameters of a single type.
BigInt count_one_type(const std::vector<Term>& params, const ConstraintSet& constraints, const Population& pop) {
  std::vector<Term> constants;
  for (const auto& [a, b] : constraints.pairs()) {
    for (const Term& t : {a, b}) {
      if (t.is_constant() && t.type == pop.name && std::find(constants.begin(), constants.end(), t) == constants.end()) {
        if (std::find(pop.individuals.begin(), pop.individuals.end(), t.name) == pop.individuals.end()) {
          throw InvalidArgumentError("constant '" + t.name + "' is not an individual of " + pop.name);
        }
        constants.push_back(t);
      }
    }
  }
  const BigInt anonymous = BigInt(static_cast<unsigned long>(pop.size())) - BigInt(static_cast<unsigned long>(constants.size()));

  // Enumerate equality patterns (set partitions with no inequality inside a
  // block), then injective block placements onto constants or anonymous
  // individuals.
  BigInt total = 0;
  std::vector<std::vector<std::size_t>> blocks;
  std::function<void(std::size_t)> partition = [&](std::size_t i) {
    if (i == params.size()) {
      std::vector<bool> used(constants.size(), false);
      std::function<void(std::size_t, std::size_t)> place = [&](std::size_t b, std::size_t anon) {
        if (b == blocks.size()) {
          total += falling_or_zero(anonymous, anon);
          return;
        }
        place(b + 1, anon + 1);
        for (std::size_t c = 0; c < constants.size(); ++c) {
          if (used[c]) continue;
          bool allowed = true;
          for (std::size_t member : blocks[b]) {
            if (constraints.contains(params[member], constants[c])) {
              allowed = false;
              break;
            }
          }
          if (!allowed) continue;
          used[c] = true;
          place(b + 1, anon);
          used[c] = false;
        }
      };
      place(0, 0);
      return;
    }
    // Indices, not references: the recursion appends to blocks.
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      bool ok = true;
      for (std::size_t member : blocks[b]) {
        if (constraints.contains(params[i], params[member])) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      blocks[b].push_back(i);
      partition(i + 1);
      blocks[b].pop_back();
    }
    blocks.push_back({i});
    partition(i + 1);
    blocks.pop_back();
  };
  partition(0);
  return total;
}

}  // namespace

BigInt count_csp_solutions(std::span<const Term> params, const ConstraintSet& constraints,
                           std::span<const Population> populations) {
  for (const auto& [a, b] : constraints.pairs()) {
    for (const Term& t : {a, b}) {
      if (t.is_param() && std::find(params.begin(), params.end(), t) == params.end()) {
        throw InvalidArgumentError("constraint mentions parameter " + t.name + " outside the parameter list");
      }
    }
  }
  std::map<std::string, std::vector<Term>> by_type;
  for (const Term& p : params) {
    if (!p.is_param()) throw InvalidArgumentError("count_csp_solutions expects parameters");
    auto& list = by_type[p.type];
    if (std::find(list.begin(), list.end(), p) == list.end()) list.push_back(p);
  }
  BigInt out = 1;
  for (const auto& [type, list] : by_type) {
    out *= count_one_type(list, constraints, population_of(populations, type));
    if (out == 0) break;
  }
  return out;
}

int GroundModel::find_atom(const Prv& atom) const {
  auto it = atom_index.find(atom);
  return it == atom_index.end() ? -1 : it->second;
}

GroundModel ground_model(std::span<const Parfactor> pfs, std::span<const Population> populations,
                         std::uint64_t factor_cap) {
  BigInt total = 0;
  for (const auto& pf : pfs) {
    const auto params = pf.parameters();
    total += count_csp_solutions(params, pf.constraints, populations);
  }
  if (total > BigInt(std::to_string(factor_cap))) {
    throw OracleInfeasibleError("oracle infeasible: grounding has " + total.get_str() + " factors, cap is " +
                                std::to_string(factor_cap));
  }
  GroundModel gm;
  auto intern = [&](const Prv& atom, std::size_t range_size) {
    auto [it, inserted] = gm.atom_index.emplace(atom, static_cast<int>(gm.atoms.size()));
    if (inserted) {
      gm.atoms.push_back(atom);
      gm.atom_range_size.push_back(range_size);
    }
    return it->second;
  };
  for (std::size_t src = 0; src < pfs.size(); ++src) {
    const Parfactor& pf = pfs[src];
    auto table = std::make_shared<const FactorTable>(pf.table);
    const auto params = pf.parameters();
    std::vector<const Population*> pops;
    for (const Term& p : params) pops.push_back(&population_of(populations, p.type));
    std::vector<Term> chosen(params.size());
    std::function<void(std::size_t)> assign = [&](std::size_t i) {
      if (i == params.size()) {
        Substitution full;
        for (std::size_t j = 0; j < params.size(); ++j) full.bind(params[j], chosen[j]);
        if (!pf.constraints.substituted(full)) return;
        GroundFactor f;
        f.table = table;
        f.source = src;
        for (std::size_t k = 0; k < pf.prvs.size(); ++k) {
          f.scope.push_back(intern(apply_substitution(pf.prvs[k], full), pf.table.dims[k]));
        }
        gm.factors.push_back(std::move(f));
        return;
      }
      for (const auto& ind : pops[i]->individuals) {
        chosen[i] = Term::constant(ind, params[i].type);
        // prune on constraints against already chosen terms
        bool ok = true;
        for (std::size_t j = 0; j <= i && ok; ++j) {
          if (j < i && chosen[j] == chosen[i] && pf.constraints.contains(params[i], params[j])) ok = false;
        }
        if (ok && pf.constraints.contains(params[i], chosen[i])) ok = false;
        if (ok) assign(i + 1);
      }
    };
    assign(0);
  }
  return gm;
}

}  // namespace liftrc
