#include "liftrc/lifted_engine.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>
#include <sstream>

#include "liftrc/errors.hpp"

namespace liftrc {

// ---- Signature ----------------------------------------------------------------

Signature::Signature(const Model& model) : model_(&model) {
  for (const Population& pop : model.populations) {
    type_ids_.emplace(pop.name, static_cast<int>(type_names_.size()));
    type_names_.push_back(pop.name);
    type_sizes_.emplace_back(static_cast<unsigned long>(pop.size()));
  }
  for (const FunctorDecl& f : model.functors) {
    FunctorInfo info{f.name, {}, model.range(f.range).values};
    for (const std::string& t : f.arg_types) info.arg_types.push_back(type_id(t));
    functor_ids_.emplace(f.name, static_cast<int>(functors_.size()));
    functors_.push_back(std::move(info));
  }
}

int Signature::type_id(const std::string& name) const {
  auto it = type_ids_.find(name);
  if (it == type_ids_.end()) throw InvalidArgumentError("unknown population '" + name + "'");
  return it->second;
}

int Signature::functor_id(const std::string& name) const {
  auto it = functor_ids_.find(name);
  if (it == functor_ids_.end()) throw InvalidArgumentError("unknown functor '" + name + "'");
  return it->second;
}

int Signature::constant_id(const std::string& name) {
  if (auto it = constant_ids_.find(name); it != constant_ids_.end()) return it->second;
  for (const Population& pop : model_->populations) {
    if (std::find(pop.individuals.begin(), pop.individuals.end(), name) == pop.individuals.end()) continue;
    const int id = static_cast<int>(constants_.size());
    constant_ids_.emplace(name, id);
    constants_.push_back({name, type_id(pop.name)});
    return id;
  }
  throw InvalidArgumentError("unknown constant '" + name + "'");
}

int Signature::reserved_constant(int type, int index) {
  const std::string name = "$" + type_names_[type] + "$" + std::to_string(index);
  auto [it, inserted] = constant_ids_.emplace(name, static_cast<int>(constants_.size()));
  if (inserted) constants_.push_back({name, type});
  return it->second;
}

// ---- Atoms and contexts -------------------------------------------------------

bool Atom::ground() const {
  return std::none_of(args.begin(), args.end(), [](const Arg& a) { return a.is_param; });
}

std::vector<int> Atom::params() const {
  std::vector<int> out;
  for (const Arg& a : args) {
    if (a.is_param && std::find(out.begin(), out.end(), a.id) == out.end()) out.push_back(a.id);
  }
  return out;
}

Atom shape_of(const Atom& atom) {
  Atom out = atom;
  std::vector<int> seen;
  for (Arg& a : out.args) {
    if (!a.is_param) continue;
    auto it = std::find(seen.begin(), seen.end(), a.id);
    if (it == seen.end()) {
      seen.push_back(a.id);
      a.id = static_cast<int>(seen.size() - 1);
    } else {
      a.id = static_cast<int>(it - seen.begin());
    }
  }
  return out;
}

BigInt CountingContext::total() const {
  BigInt out = 0;
  for (const auto& [row, count] : counts) out += count;
  return out;
}

namespace {

Atom substitute(const Atom& atom, const std::vector<Arg>& mapping) {
  Atom out = atom;
  for (Arg& a : out.args) {
    if (a.is_param) a = mapping[a.id];
  }
  return out;
}

BigInt falling_or_zero(const BigInt& n, const BigInt& k) {
  if (k > n) return 0;
  return falling_factorial(n, k);
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

// Calls visit(tuple) for every tuple in [0, radix)^length, lexicographically.
template <typename Visit>
void for_each_tuple(std::size_t radix, std::size_t length, Visit&& visit) {
  std::vector<std::size_t> tuple(length, 0);
  if (length > 0 && radix == 0) return;
  while (true) {
    visit(tuple);
    std::size_t i = length;
    while (i > 0) {
      --i;
      if (++tuple[i] < radix) break;
      tuple[i] = 0;
      if (i == 0) return;
    }
    if (length == 0) return;
  }
}

// Calls visit(parts) for every composition of `total` into `size` parts,
// with parts[0] ascending first.
template <typename Visit>
void for_each_composition(const BigInt& total, std::size_t size, Visit&& visit) {
  std::vector<BigInt> parts(size, 0);
  std::function<void(std::size_t, BigInt)> rec = [&](std::size_t i, BigInt left) {
    if (i + 1 == size) {
      parts[i] = left;
      visit(parts);
      return;
    }
    for (BigInt j = 0; j <= left; ++j) {
      parts[i] = j;
      rec(i + 1, left - j);
    }
  };
  if (size == 0) return;
  rec(0, total);
}

}  // namespace

// ---- Pieces of a disconnection --------------------------------------------------

struct LiftedEngine::Piece {
  LiftedParfactor pf;
  std::size_t origin = 0;
  std::vector<Arg> origin_args;  // per origin parameter: reserved constant or new parameter
};

struct LiftedEngine::Block {
  int type = 0;
  std::vector<int> reserved;  // C_1..C_k
  std::vector<Piece> pieces;
  std::vector<std::vector<std::size_t>> stabilizer;
  BigInt copies;
  BigInt exponent;
};

// ---- Engine -------------------------------------------------------------------

LiftedEngine::LiftedEngine(const Model& model, LiftedConfig config)
    : model_(model), signature_(model), config_(std::move(config)), rng_(config_.seed.value_or(0)) {}

Atom LiftedEngine::convert(const Prv& prv) {
  Atom out;
  out.functor = signature_.functor_id(prv.functor);
  if (signature_.arity(out.functor) != prv.args.size()) {
    throw InvalidArgumentError(prv.to_string() + ": wrong number of arguments");
  }
  for (std::size_t i = 0; i < prv.args.size(); ++i) {
    const Term& t = prv.args[i];
    if (t.is_param()) throw InvalidArgumentError(prv.to_string() + " must be ground");
    const int id = signature_.constant_id(t.name);
    if (signature_.constant_type(id) != signature_.arg_type(out.functor, i)) {
      throw InvalidArgumentError(prv.to_string() + ": " + t.name + " has the wrong type");
    }
    out.args.push_back(Arg{false, id});
  }
  return out;
}

LiftedParfactor LiftedEngine::convert(const Parfactor& pf) {
  LiftedParfactor out;
  std::vector<Term> params;
  for (const Prv& prv : pf.prvs) {
    Atom atom;
    atom.functor = signature_.functor_id(prv.functor);
    for (const Term& t : prv.args) {
      if (t.is_constant()) {
        atom.args.push_back(Arg{false, signature_.constant_id(t.name)});
        continue;
      }
      auto it = std::find(params.begin(), params.end(), t);
      if (it == params.end()) {
        params.push_back(t);
        out.param_types.push_back(signature_.type_id(t.type));
        it = params.end() - 1;
      }
      atom.args.push_back(Arg{true, static_cast<int>(it - params.begin())});
    }
    out.prvs.push_back(std::move(atom));
  }
  auto table = std::make_shared<PotentialTable>();
  table->dims = pf.table.dims;
  for (const Rational& r : pf.table.entries) {
    table->values.push_back(Number::from_rational(r, config_.numeric));
    table->keys.push_back(table->values.back().key());
  }
  out.table = std::move(table);
  return out;
}

std::string LiftedEngine::to_string(const Atom& atom) const {
  std::string out = signature_.functor_name(atom.functor);
  if (atom.args.empty()) return out;
  out += '(';
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    if (i) out += ',';
    const Arg& a = atom.args[i];
    out += a.is_param ? "x" + std::to_string(a.id + 1) : signature_.constant_name(a.id);
  }
  return out + ")";
}

std::string LiftedEngine::to_string(const LiftedParfactor& pf) const {
  std::string out = "{";
  for (std::size_t i = 0; i < pf.prvs.size(); ++i) out += (i ? ", " : "") + to_string(pf.prvs[i]);
  return out + "}";
}

LiftedEngine::Prepared LiftedEngine::prepare(const std::vector<Observation>& evidence) {
  Prepared out;
  auto mentioned = mentioned_constants(model_);
  for (const Observation& obs : evidence) {
    for (const Term& t : obs.atom.args) {
      if (t.is_constant()) mentioned[t.type].insert(t.name);
    }
  }
  out.universe.free.resize(signature_.type_count());
  out.universe.reserved.assign(signature_.type_count(), 0);
  for (std::size_t t = 0; t < signature_.type_count(); ++t) {
    const auto it = mentioned.find(signature_.type_name(static_cast<int>(t)));
    const unsigned long named = it == mentioned.end() ? 0 : it->second.size();
    out.universe.free[t] = signature_.type_size(static_cast<int>(t)) - named;
  }
  for (const Parfactor& pf : preemptive_shatter(model_.parfactors, mentioned)) {
    LiftedParfactor lp = convert(pf);
    if (groundings(lp, out.universe) > 0) out.parfactors.push_back(std::move(lp));
  }
  for (const Observation& obs : evidence) {
    Atom atom = convert(obs.atom);
    const int value = static_cast<int>(model_.value_index(obs.atom.functor, obs.value));
    auto [it, inserted] = out.con.zero_arg.emplace(atom, value);
    if (!inserted && it->second != value) out.contradictory = true;
  }
  return out;
}

Number LiftedEngine::evaluate(const std::vector<Observation>& evidence) {
  const auto start = std::chrono::steady_clock::now();
  Prepared p = prepare(evidence);
  Number out = p.contradictory ? Number::zero(config_.numeric) : lrc(p.con, p.universe, std::move(p.parfactors));
  stats_.wall_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

BigInt LiftedEngine::groundings(const LiftedParfactor& pf, const Universe& universe) const {
  std::map<int, unsigned long> per_type;
  for (int t : pf.param_types) ++per_type[t];
  BigInt out = 1;
  for (const auto& [t, r] : per_type) out *= falling_or_zero(universe.free[t], BigInt(r));
  return out;
}

int LiftedEngine::shape_type(const Atom& shape) const {
  for (std::size_t i = 0; i < shape.args.size(); ++i) {
    if (shape.args[i].is_param) return signature_.arg_type(shape.functor, i);
  }
  throw InternalError("shape has no parameter");
}

bool LiftedEngine::assigned(const Atom& atom, const LiftedParfactor& owner, const CurrentContext& con) const {
  const auto params = atom.params();
  if (params.empty()) return con.zero_arg.count(atom) != 0;
  if (params.size() > 1) return false;
  auto it = con.per_type.find(owner.param_types[params[0]]);
  if (it == con.per_type.end()) return false;
  const Atom shape = shape_of(atom);
  return std::find(it->second.prvs.begin(), it->second.prvs.end(), shape) != it->second.prvs.end();
}

CurrentContext LiftedEngine::forget(const CurrentContext& con, const Atom& prv) const {
  CurrentContext out = con;
  if (prv.ground()) {
    out.zero_arg.erase(prv);
    return out;
  }
  const Atom shape = shape_of(prv);
  auto it = out.per_type.find(shape_type(shape));
  if (it == out.per_type.end()) return out;
  CountingContext& ctx = it->second;
  auto pos = std::find(ctx.prvs.begin(), ctx.prvs.end(), shape);
  if (pos == ctx.prvs.end()) return out;
  const std::size_t column = static_cast<std::size_t>(pos - ctx.prvs.begin());
  ctx.prvs.erase(pos);
  if (ctx.prvs.empty()) {
    out.per_type.erase(it);
    return out;
  }
  std::map<std::vector<int>, BigInt> merged;
  for (const auto& [row, count] : ctx.counts) {
    std::vector<int> reduced = row;
    reduced.erase(reduced.begin() + static_cast<long>(column));
    merged[reduced] += count;
  }
  ctx.counts = std::move(merged);
  return out;
}

CurrentContext LiftedEngine::forget_unused(const CurrentContext& con, std::span<const LiftedParfactor> fs) const {
  std::set<Atom> ground;
  std::set<Atom> shapes;
  for (const LiftedParfactor& pf : fs) {
    for (const Atom& a : pf.prvs) {
      const auto params = a.params();
      if (params.empty()) {
        ground.insert(a);
      } else if (params.size() == 1) {
        shapes.insert(shape_of(a));
      }
    }
  }
  CurrentContext out = con;
  std::erase_if(out.zero_arg, [&](const auto& entry) { return ground.count(entry.first) == 0; });
  for (const auto& [type, ctx] : con.per_type) {
    for (const Atom& v : ctx.prvs) {
      if (shapes.count(v) == 0) out = forget(out, v);
    }
  }
  return out;
}

// ---- Canonical keys -------------------------------------------------------------

std::string LiftedEngine::atom_key(const Atom& atom, const std::vector<int>& renaming) const {
  std::string out = std::to_string(atom.functor) + "(";
  for (const Arg& a : atom.args) {
    out += a.is_param ? "p" + std::to_string(renaming[a.id]) : "c" + std::to_string(a.id);
    out += ',';
  }
  return out + ")";
}

std::string LiftedEngine::canonical_piece(const LiftedParfactor& pf) const {
  const std::size_t n = pf.param_types.size();
  // parameters grouped by type; a renaming permutes ids within each group
  std::map<int, std::vector<int>> groups;
  for (std::size_t p = 0; p < n; ++p) groups[pf.param_types[p]].push_back(static_cast<int>(p));
  std::vector<std::vector<int>> perms;
  for (const auto& [t, ids] : groups) perms.push_back(ids);

  std::string best;
  bool have = false;
  std::vector<int> renaming(n);
  std::function<void(std::size_t)> rec = [&](std::size_t g) {
    if (g < perms.size()) {
      std::vector<int> order = perms[g];
      std::sort(order.begin(), order.end());
      do {
        for (std::size_t i = 0; i < order.size(); ++i) renaming[perms[g][i]] = order[i];
        rec(g + 1);
      } while (std::next_permutation(order.begin(), order.end()));
      return;
    }
    std::vector<std::pair<std::string, std::size_t>> keyed;
    for (std::size_t i = 0; i < pf.prvs.size(); ++i) keyed.emplace_back(atom_key(pf.prvs[i], renaming), i);
    std::sort(keyed.begin(), keyed.end());
    std::string s;
    for (const auto& [k, i] : keyed) s += k + ";";
    s += "|";
    const auto& dims = pf.table->dims;
    std::vector<std::size_t> new_dims;
    for (const auto& [k, i] : keyed) new_dims.push_back(dims[i]);
    // rows in the new scope order
    std::vector<std::size_t> strides(dims.size(), 1);
    for (std::size_t i = dims.size(); i-- > 1;) strides[i - 1] = strides[i] * dims[i];
    std::vector<std::size_t> row(new_dims.size(), 0);
    while (true) {
      std::size_t idx = 0;
      for (std::size_t j = 0; j < row.size(); ++j) idx += row[j] * strides[keyed[j].second];
      s += pf.table->keys[idx];
      s += ' ';
      std::size_t j = row.size();
      bool done = true;
      while (j > 0) {
        --j;
        if (++row[j] < new_dims[j]) {
          done = false;
          break;
        }
        row[j] = 0;
      }
      if (done) break;
    }
    if (!have || s < best) {
      best = std::move(s);
      have = true;
    }
  };
  rec(0);
  return best;
}

std::string LiftedEngine::canonical_key(const CurrentContext& con, const Universe& universe,
                                        std::span<const LiftedParfactor> fs) const {
  std::vector<std::string> pieces;
  pieces.reserve(fs.size());
  for (const LiftedParfactor& pf : fs) pieces.push_back(canonical_piece(pf));
  std::sort(pieces.begin(), pieces.end());
  std::string out;
  for (const auto& p : pieces) out += p + "\n";
  out += "#";
  const std::vector<int> none;
  for (const auto& [atom, value] : con.zero_arg) out += atom_key(atom, none) + "=" + std::to_string(value) + ";";
  out += "#";
  const std::vector<int> zero{0};
  for (const auto& [type, ctx] : con.per_type) {
    std::vector<std::pair<std::string, std::size_t>> keyed;
    for (std::size_t i = 0; i < ctx.prvs.size(); ++i) keyed.emplace_back(atom_key(ctx.prvs[i], zero), i);
    std::sort(keyed.begin(), keyed.end());
    out += std::to_string(type) + "[";
    for (const auto& [k, i] : keyed) out += k + ";";
    out += "]";
    std::vector<std::pair<std::vector<int>, std::string>> rows;
    for (const auto& [row, count] : ctx.counts) {
      std::vector<int> permuted;
      for (const auto& [k, i] : keyed) permuted.push_back(row[i]);
      rows.emplace_back(std::move(permuted), count.get_str());
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& [row, count] : rows) {
      for (int v : row) out += std::to_string(v) + ",";
      out += ":" + count + ";";
    }
  }
  out += "#";
  for (const BigInt& n : universe.free) out += n.get_str() + ",";
  return out;
}

// ---- Evaluating fully assigned parfactors ------------------------------------------

std::map<std::vector<std::size_t>, BigInt> LiftedEngine::parfactor_powers(const LiftedParfactor& pf,
                                                                          const CurrentContext& con) const {
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> base(pf.prvs.size(), kUnset);
  // type -> parameter -> list of (scope position, context column)
  std::map<int, std::map<int, std::vector<std::pair<std::size_t, std::size_t>>>> uses;
  for (std::size_t s = 0; s < pf.prvs.size(); ++s) {
    const Atom& atom = pf.prvs[s];
    const auto params = atom.params();
    if (params.empty()) {
      auto it = con.zero_arg.find(atom);
      if (it == con.zero_arg.end()) throw InternalError(to_string(atom) + " is not assigned");
      base[s] = static_cast<std::size_t>(it->second);
      continue;
    }
    if (params.size() > 1) throw InternalError(to_string(atom) + " is not assigned");
    const int type = pf.param_types[params[0]];
    auto ctx = con.per_type.find(type);
    if (ctx == con.per_type.end()) throw InternalError(to_string(atom) + " is not assigned");
    const Atom shape = shape_of(atom);
    auto col = std::find(ctx->second.prvs.begin(), ctx->second.prvs.end(), shape);
    if (col == ctx->second.prvs.end()) throw InternalError(to_string(atom) + " is not assigned");
    uses[type][params[0]].emplace_back(s, static_cast<std::size_t>(col - ctx->second.prvs.begin()));
  }

  std::map<std::vector<std::size_t>, BigInt> acc{{base, BigInt(1)}};
  for (const auto& [type, by_param] : uses) {
    const CountingContext& ctx = con.per_type.at(type);
    std::vector<std::pair<const std::vector<int>*, const BigInt*>> cells;
    for (const auto& [row, count] : ctx.counts) cells.emplace_back(&row, &count);
    std::vector<const std::vector<std::pair<std::size_t, std::size_t>>*> params;
    for (const auto& [p, list] : by_param) params.push_back(&list);

    // partial rows for this type's positions, with their multiplicities
    std::map<std::vector<std::size_t>, BigInt> partial;
    for_each_tuple(cells.size(), params.size(), [&](const std::vector<std::size_t>& kappa) {
      std::map<std::size_t, unsigned long> multiplicity;
      for (std::size_t c : kappa) ++multiplicity[c];
      BigInt weight = 1;
      for (const auto& [c, m] : multiplicity) {
        weight *= falling_or_zero(*cells[c].second, BigInt(m));
        if (weight == 0) return;
      }
      std::vector<std::size_t> row(pf.prvs.size(), kUnset);
      for (std::size_t i = 0; i < params.size(); ++i) {
        for (const auto& [s, col] : *params[i]) row[s] = static_cast<std::size_t>((*cells[kappa[i]].first)[col]);
      }
      partial[row] += weight;
    });

    std::map<std::vector<std::size_t>, BigInt> next;
    for (const auto& [row, count] : acc) {
      for (const auto& [part, weight] : partial) {
        std::vector<std::size_t> merged = row;
        for (std::size_t s = 0; s < part.size(); ++s) {
          if (part[s] != kUnset) merged[s] = part[s];
        }
        next[merged] += count * weight;
      }
    }
    acc = std::move(next);
  }
  return acc;
}

Number LiftedEngine::eval_parfactor(const LiftedParfactor& pf, const CurrentContext& con) const {
  Number out = Number::one(config_.numeric);
  for (const auto& [row, power] : parfactor_powers(pf, con)) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < row.size(); ++i) idx = idx * pf.table->dims[i] + row[i];
    out *= pow_big(pf.table->values[idx], power, config_.numeric);
  }
  return out;
}

// ---- Structure ----------------------------------------------------------------------

std::vector<std::vector<std::size_t>> LiftedEngine::components(const CurrentContext& con,
                                                               std::span<const LiftedParfactor> fs) const {
  UnionFind uf(fs.size());
  std::map<Atom, std::size_t> owner;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    for (const Atom& a : fs[i].prvs) {
      if (assigned(a, fs[i], con)) continue;
      auto [it, inserted] = owner.emplace(shape_of(a), i);
      if (!inserted) uf.unite(i, it->second);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < fs.size(); ++i) groups[uf.find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

std::vector<std::vector<bool>> LiftedEngine::connected(const CurrentContext& con,
                                                       std::span<const LiftedParfactor> fs) const {
  std::vector<std::vector<bool>> conn(fs.size());
  std::map<Atom, std::vector<std::pair<std::size_t, std::size_t>>> by_shape;
  std::vector<std::vector<bool>> open(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    conn[i].assign(fs[i].param_types.size(), false);
    for (std::size_t j = 0; j < fs[i].prvs.size(); ++j) {
      const bool un = !assigned(fs[i].prvs[j], fs[i], con);
      open[i].push_back(un);
      if (un) by_shape[shape_of(fs[i].prvs[j])].emplace_back(i, j);
    }
    for (std::size_t p = 0; p < conn[i].size(); ++p) {
      bool inside = false;
      bool outside = false;
      for (std::size_t j = 0; j < fs[i].prvs.size(); ++j) {
        if (!open[i][j]) continue;
        const auto& args = fs[i].prvs[j].args;
        const bool has = std::any_of(args.begin(), args.end(),
                                     [&](const Arg& a) { return a.is_param && a.id == static_cast<int>(p); });
        (has ? inside : outside) = true;
      }
      conn[i][p] = inside && outside;
    }
  }
  // x in F is also connected when an unassigned PRV of F has the shape of a
  // PRV of some F' whose parameter in the same position is connected.
  struct Edge {
    std::size_t piece, param, from_piece, from_param;
  };
  std::vector<Edge> edges;
  for (const auto& [shape, sites] : by_shape) {
    for (const auto& [i, j] : sites) {
      for (const auto& [i2, j2] : sites) {
        const auto& a = fs[i].prvs[j].args;
        const auto& b = fs[i2].prvs[j2].args;
        for (std::size_t pos = 0; pos < a.size(); ++pos) {
          if (a[pos].is_param) {
            edges.push_back({i, static_cast<std::size_t>(a[pos].id), i2, static_cast<std::size_t>(b[pos].id)});
          }
        }
      }
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Edge& e : edges) {
      if (!conn[e.piece][e.param] && conn[e.from_piece][e.from_param]) {
        conn[e.piece][e.param] = true;
        changed = true;
      }
    }
  }
  return conn;
}

// ---- Disconnection ------------------------------------------------------------------

std::optional<LiftedEngine::Block> LiftedEngine::build_block(const CurrentContext& con, const Universe& universe,
                                                             const std::vector<LiftedParfactor>& fs,
                                                             std::size_t origin, int type,
                                                             const std::vector<int>& chosen) {
  const std::size_t k = chosen.size();
  Block block;
  block.type = type;
  for (std::size_t i = 0; i < k; ++i) {
    block.reserved.push_back(signature_.reserved_constant(type, universe.reserved[type] + static_cast<int>(i) + 1));
  }
  Universe inner = universe;
  inner.free[type] -= static_cast<unsigned long>(k);
  inner.reserved[type] += static_cast<int>(k);

  // Make `mapping` (origin parameter -> reserved index or -1) into a piece.
  auto make_piece = [&](std::size_t idx, const std::vector<int>& mapping) {
    const LiftedParfactor& src = fs[idx];
    Piece piece;
    piece.origin = idx;
    piece.pf.table = src.table;
    for (std::size_t p = 0; p < src.param_types.size(); ++p) {
      if (mapping[p] >= 0) {
        piece.origin_args.push_back(Arg{false, block.reserved[mapping[p]]});
      } else {
        piece.origin_args.push_back(Arg{true, static_cast<int>(piece.pf.param_types.size())});
        piece.pf.param_types.push_back(src.param_types[p]);
      }
    }
    for (const Atom& a : src.prvs) piece.pf.prvs.push_back(substitute(a, piece.origin_args));
    return piece;
  };

  // Shatter every parfactor against the reserved constants.
  std::vector<Piece> pieces;
  std::optional<std::size_t> start;
  for (std::size_t idx = 0; idx < fs.size(); ++idx) {
    const auto& types = fs[idx].param_types;
    std::vector<int> mapping(types.size(), -1);
    std::vector<bool> used(k, false);
    std::function<void(std::size_t)> rec = [&](std::size_t p) {
      if (p == types.size()) {
        Piece piece = make_piece(idx, mapping);
        if (groundings(piece.pf, inner) == 0) return;
        bool is_start = idx == origin;
        for (std::size_t q = 0; q < types.size() && is_start; ++q) {
          auto it = std::find(chosen.begin(), chosen.end(), static_cast<int>(q));
          const int want = it == chosen.end() ? -1 : static_cast<int>(it - chosen.begin());
          if (mapping[q] != want) is_start = false;
        }
        if (is_start) start = pieces.size();
        pieces.push_back(std::move(piece));
        return;
      }
      rec(p + 1);
      if (types[p] != type) return;
      for (std::size_t c = 0; c < k; ++c) {
        if (used[c]) continue;
        used[c] = true;
        mapping[p] = static_cast<int>(c);
        rec(p + 1);
        mapping[p] = -1;
        used[c] = false;
      }
    };
    rec(0);
  }
  if (!start) return std::nullopt;

  // Ground instances V[x/C_i] of the counting context become assigned.
  std::set<Atom> fixed;
  if (auto ctx = con.per_type.find(type); ctx != con.per_type.end()) {
    for (const Atom& v : ctx->second.prvs) {
      for (int c : block.reserved) fixed.insert(substitute(v, {Arg{false, c}}));
    }
  }
  auto open = [&](const Atom& a, const LiftedParfactor& owner) {
    if (a.ground() && fixed.count(a)) return false;
    return !assigned(a, owner, con);
  };

  // Closure over shared unassigned shapes, starting from the chosen piece.
  std::map<Atom, std::vector<std::size_t>> by_shape;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    for (const Atom& a : pieces[i].pf.prvs) {
      if (open(a, pieces[i].pf)) by_shape[shape_of(a)].push_back(i);
    }
  }
  std::vector<bool> in_block(pieces.size(), false);
  std::vector<std::size_t> queue{*start};
  in_block[*start] = true;
  while (!queue.empty()) {
    const std::size_t i = queue.back();
    queue.pop_back();
    for (const Atom& a : pieces[i].pf.prvs) {
      if (!open(a, pieces[i].pf)) continue;
      for (std::size_t j : by_shape[shape_of(a)]) {
        if (!in_block[j]) {
          in_block[j] = true;
          queue.push_back(j);
        }
      }
    }
  }
  std::set<Atom> shapes;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (!in_block[i]) continue;
    for (const Atom& a : pieces[i].pf.prvs) {
      if (open(a, pieces[i].pf)) shapes.insert(shape_of(a));
    }
    block.pieces.push_back(pieces[i]);
  }

  // Two blocks may share an unassigned atom only if one is the other with
  // the reserved constants permuted. Collect the permutations required.
  auto reserved_index = [&](const Arg& a) -> int {
    if (a.is_param) return -1;
    auto it = std::find(block.reserved.begin(), block.reserved.end(), a.id);
    return it == block.reserved.end() ? -1 : static_cast<int>(it - block.reserved.begin());
  };
  std::set<std::vector<std::size_t>> required;
  for (const Atom& p : shapes) {
    for (const Atom& q : shapes) {
      if (p.functor != q.functor) continue;
      // nodes: a_i = i, b_i = k + i, p params 2k + id, q params 2k + np + id
      const std::size_t np = p.params().size();
      const std::size_t nq = q.params().size();
      UnionFind uf(2 * k + np + nq);
      bool unifiable = true;
      auto node = [&](const Arg& a, bool left) -> std::optional<std::size_t> {
        if (a.is_param) return 2 * k + (left ? 0 : np) + static_cast<std::size_t>(a.id);
        const int r = reserved_index(a);
        if (r >= 0) return (left ? 0 : k) + static_cast<std::size_t>(r);
        return std::nullopt;
      };
      for (std::size_t pos = 0; pos < p.args.size() && unifiable; ++pos) {
        auto x = node(p.args[pos], true);
        auto y = node(q.args[pos], false);
        if (!x && !y) {
          unifiable = p.args[pos].id == q.args[pos].id;
        } else if (!x || !y) {
          unifiable = false;
        } else {
          uf.unite(*x, *y);
        }
      }
      if (!unifiable) continue;
      // each class holds at most one term per side
      std::map<std::size_t, std::pair<int, int>> sides;
      for (std::size_t v = 0; v < uf.parent.size(); ++v) {
        const bool left = v < k || (v >= 2 * k && v < 2 * k + np);
        auto& s = sides[uf.find(v)];
        (left ? s.first : s.second)++;
      }
      if (std::any_of(sides.begin(), sides.end(), [](const auto& e) { return e.second.first > 1 || e.second.second > 1; })) {
        continue;
      }
      std::vector<std::size_t> perm(k);
      for (std::size_t i = 0; i < k; ++i) {
        bool found = false;
        for (std::size_t j = 0; j < k; ++j) {
          if (uf.find(i) == uf.find(k + j)) {
            perm[i] = j;
            found = true;
          }
        }
        if (!found) return std::nullopt;  // an instance of a_i overlaps a free individual of another block
      }
      required.insert(perm);
    }
  }

  // Stabilizer: permutations of the reserved constants that map the block to itself.
  std::multiset<std::string> keys;
  for (const Piece& piece : block.pieces) keys.insert(canonical_piece(piece.pf));
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    std::multiset<std::string> moved;
    for (const Piece& piece : block.pieces) {
      LiftedParfactor pf = piece.pf;
      for (Atom& a : pf.prvs) {
        for (Arg& arg : a.args) {
          const int r = reserved_index(arg);
          if (r >= 0) arg.id = block.reserved[perm[r]];
        }
      }
      moved.insert(canonical_piece(pf));
    }
    if (moved == keys) block.stabilizer.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (const auto& p : required) {
    if (std::find(block.stabilizer.begin(), block.stabilizer.end(), p) == block.stabilizer.end()) return std::nullopt;
  }

  block.copies = static_cast<unsigned long>(block.stabilizer.size());
  const BigInt tuples = falling_or_zero(universe.free[type], BigInt(static_cast<unsigned long>(k)));
  if (tuples % block.copies != 0) return std::nullopt;
  block.exponent = tuples / block.copies;

  // The blocks must cover every ground factor exactly once.
  BigInt total = 0;
  for (const LiftedParfactor& pf : fs) total += groundings(pf, universe);
  BigInt per_block = 0;
  for (const Piece& piece : block.pieces) per_block += groundings(piece.pf, inner);
  if (total != block.exponent * per_block) return std::nullopt;
  return block;
}

Number LiftedEngine::exponentiate(const CurrentContext& con, const Universe& universe, const Block& block) {
  const int type = block.type;
  const std::size_t k = block.reserved.size();
  const CountingContext* ctx = nullptr;
  if (auto it = con.per_type.find(type); it != con.per_type.end()) ctx = &it->second;

  std::vector<std::pair<std::vector<int>, BigInt>> cells;
  if (ctx) {
    for (const auto& [row, count] : ctx->counts) cells.emplace_back(row, count);
  } else {
    cells.emplace_back(std::vector<int>{}, universe.free[type]);
  }

  // Orbits of cell vectors under the stabilizer, weighted by the number of
  // ordered k-tuples of individuals realising them.
  std::map<std::vector<std::size_t>, BigInt> orbits;
  for_each_tuple(cells.size(), k, [&](const std::vector<std::size_t>& kappa) {
    std::map<std::size_t, unsigned long> multiplicity;
    for (std::size_t c : kappa) ++multiplicity[c];
    BigInt weight = 1;
    for (const auto& [c, m] : multiplicity) {
      weight *= falling_or_zero(cells[c].second, BigInt(m));
      if (weight == 0) return;
    }
    std::vector<std::size_t> rep = kappa;
    for (const auto& perm : block.stabilizer) {
      std::vector<std::size_t> moved(k);
      for (std::size_t i = 0; i < k; ++i) moved[i] = kappa[perm[i]];
      rep = std::min(rep, moved);
    }
    orbits[rep] += weight;
  });

  Universe inner = universe;
  inner.free[type] -= static_cast<unsigned long>(k);
  inner.reserved[type] += static_cast<int>(k);
  std::vector<LiftedParfactor> pieces;
  for (const Piece& piece : block.pieces) pieces.push_back(piece.pf);

  Number out = Number::one(config_.numeric);
  BigInt exponent_total = 0;
  for (const auto& [rep, weight] : orbits) {
    if (weight % block.copies != 0) throw InternalError("disconnection orbit weight not divisible by copies");
    const BigInt exponent = weight / block.copies;
    exponent_total += exponent;
    CurrentContext sub = con;
    if (ctx) {
      CountingContext& rest = sub.per_type[type];
      for (std::size_t i = 0; i < k; ++i) {
        const auto& [row, count] = cells[rep[i]];
        auto it = rest.counts.find(row);
        if (--it->second == 0) rest.counts.erase(it);
        for (std::size_t col = 0; col < ctx->prvs.size(); ++col) {
          sub.zero_arg[substitute(ctx->prvs[col], {Arg{false, block.reserved[i]}})] = row[col];
        }
      }
    }
    out *= pow_big(lrc(sub, inner, pieces), exponent, config_.numeric);
  }
  if (exponent_total != block.exponent) throw InternalError("disconnection exponents do not add up");
  return out;
}

std::optional<Number> LiftedEngine::try_disconnect(const CurrentContext& con, const Universe& universe,
                                                   const std::vector<LiftedParfactor>& fs) {
  const auto conn = connected(con, fs);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    std::vector<bool> open_param(fs[i].param_types.size(), false);
    for (const Atom& a : fs[i].prvs) {
      if (assigned(a, fs[i], con)) continue;
      for (int p : a.params()) open_param[p] = true;
    }
    std::set<int> types(fs[i].param_types.begin(), fs[i].param_types.end());
    for (int type : types) {
      std::vector<int> chosen;
      for (std::size_t p = 0; p < fs[i].param_types.size(); ++p) {
        if (fs[i].param_types[p] == type && open_param[p] && !conn[i][p]) chosen.push_back(static_cast<int>(p));
      }
      if (chosen.empty()) continue;
      auto block = build_block(con, universe, fs, i, type, chosen);
      if (!block) continue;
      if (config_.debug_check_disconnection) check_block_by_grounding(con, universe, fs, *block);
      ++stats_.case3_events;
      DisconnectionCertificate cert;
      cert.type = signature_.type_name(type);
      cert.population = universe.free[type];
      cert.k = static_cast<unsigned>(chosen.size());
      cert.copies = block->copies;
      cert.exponent = block->exponent;
      for (const Piece& piece : block->pieces) cert.component.push_back(to_string(piece.pf));
      stats_.certificates.push_back(std::move(cert));
      return exponentiate(con, universe, *block);
    }
  }
  return std::nullopt;
}

void LiftedEngine::check_block_by_grounding(const CurrentContext& con, const Universe& universe,
                                            const std::vector<LiftedParfactor>& fs, const Block& block) const {
  const std::size_t k = block.reserved.size();
  // Surrogate individuals: a small number per type, encoded as negative ids.
  std::vector<std::vector<int>> individuals(signature_.type_count());
  for (std::size_t t = 0; t < individuals.size(); ++t) {
    BigInt size = static_cast<int>(t) == block.type ? BigInt(static_cast<unsigned long>(k + 2)) : BigInt(2);
    if (universe.free[t] < size) size = universe.free[t];
    for (unsigned long i = 0; i < size.get_ui(); ++i) individuals[t].push_back(-1 - static_cast<int>(t * 1000 + i));
  }
  using Factor = std::pair<std::size_t, std::vector<int>>;  // origin, grounding of its parameters
  auto enumerate = [&](const std::vector<int>& types, const std::set<int>& excluded, auto&& emit) {
    std::vector<int> chosen(types.size());
    std::function<void(std::size_t)> rec = [&](std::size_t p) {
      if (p == types.size()) {
        emit(chosen);
        return;
      }
      for (int ind : individuals[types[p]]) {
        if (excluded.count(ind) || std::find(chosen.begin(), chosen.begin() + static_cast<long>(p), ind) !=
                                       chosen.begin() + static_cast<long>(p)) {
          continue;
        }
        chosen[p] = ind;
        rec(p + 1);
      }
    };
    rec(0);
  };
  std::set<Factor> all;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    enumerate(fs[i].param_types, {}, [&](const std::vector<int>& g) { all.insert({i, g}); });
  }
  std::map<std::set<Factor>, std::size_t> blocks;
  std::vector<int> tuple;
  std::function<void()> over_tuples = [&]() {
    if (tuple.size() == k) {
      std::set<Factor> members;
      const std::set<int> excluded(tuple.begin(), tuple.end());
      for (const Piece& piece : block.pieces) {
        enumerate(piece.pf.param_types, excluded, [&](const std::vector<int>& g) {
          std::vector<int> full;
          for (const Arg& a : piece.origin_args) {
            if (a.is_param) {
              full.push_back(g[a.id]);
            } else {
              auto it = std::find(block.reserved.begin(), block.reserved.end(), a.id);
              full.push_back(tuple[static_cast<std::size_t>(it - block.reserved.begin())]);
            }
          }
          members.insert({piece.origin, full});
        });
      }
      ++blocks[members];
      return;
    }
    for (int ind : individuals[block.type]) {
      if (std::find(tuple.begin(), tuple.end(), ind) != tuple.end()) continue;
      tuple.push_back(ind);
      over_tuples();
      tuple.pop_back();
    }
  };
  over_tuples();

  auto fail = [](const std::string& why) { throw InternalError("disconnection check failed: " + why); };
  std::set<Factor> covered;
  std::map<Atom, std::size_t> atom_block;
  std::size_t index = 0;
  for (const auto& [members, count] : blocks) {
    if (count != block.stabilizer.size()) fail("a block occurs " + std::to_string(count) + " times");
    for (const Factor& f : members) {
      if (!covered.insert(f).second) fail("blocks overlap");
      const LiftedParfactor& pf = fs[f.first];
      std::vector<Arg> mapping;
      for (int ind : f.second) mapping.push_back(Arg{false, ind});
      for (const Atom& a : pf.prvs) {
        if (assigned(a, pf, con)) continue;
        auto [it, inserted] = atom_block.emplace(substitute(a, mapping), index);
        if (!inserted && it->second != index) fail("blocks share an unassigned atom");
      }
    }
    ++index;
  }
  if (covered != all) fail("blocks do not cover the grounding");
}

// ---- Branching ------------------------------------------------------------------------

std::optional<Atom> LiftedEngine::choose_branch(const CurrentContext& con, std::span<const LiftedParfactor> fs,
                                                bool ground_only) {
  std::map<Atom, std::size_t> candidates;  // shape -> number of parfactors containing it
  for (const LiftedParfactor& pf : fs) {
    std::set<Atom> here;
    for (const Atom& a : pf.prvs) {
      if (assigned(a, pf, con)) continue;
      const std::size_t n = a.params().size();
      if ((ground_only && n == 0) || (!ground_only && n == 1)) here.insert(shape_of(a));
    }
    for (const Atom& a : here) ++candidates[a];
  }
  if (candidates.empty()) return std::nullopt;
  std::size_t best = 0;
  for (const auto& [a, n] : candidates) best = std::max(best, n);
  std::vector<Atom> top;
  for (const auto& [a, n] : candidates) {
    if (n == best) top.push_back(a);
  }
  if (config_.seed && top.size() > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, top.size() - 1);
    return top[pick(rng_)];
  }
  return top.front();
}

Number LiftedEngine::branch_ground(const CurrentContext& con, const Universe& universe,
                                   const std::vector<LiftedParfactor>& fs, const Atom& atom) {
  Number total = Number::zero(config_.numeric);
  for (std::size_t v = 0; v < signature_.range_size(atom.functor); ++v) {
    ++stats_.branches;
    CurrentContext sub = con;
    sub.zero_arg[atom] = static_cast<int>(v);
    total += lrc(sub, universe, fs);
  }
  return total;
}

Number LiftedEngine::branch(const CurrentContext& con, const Universe& universe,
                            const std::vector<LiftedParfactor>& fs, const Atom& prv) {
  const Atom shape = shape_of(prv);
  if (shape.params().size() != 1) throw InvalidArgumentError(to_string(prv) + " is not a unary PRV");
  const int type = shape_type(shape);
  CountingContext base;
  CurrentContext rest = con;
  if (auto it = rest.per_type.find(type); it != rest.per_type.end()) {
    base = std::move(it->second);
    rest.per_type.erase(it);
    if (std::find(base.prvs.begin(), base.prvs.end(), shape) != base.prvs.end()) {
      throw InvalidArgumentError(to_string(prv) + " is already assigned");
    }
  } else if (universe.free[type] > 0) {
    base.counts.emplace(std::vector<int>{}, universe.free[type]);
  }
  std::vector<std::pair<std::vector<int>, BigInt>> cells(base.counts.begin(), base.counts.end());
  const std::size_t m = signature_.range_size(shape.functor);
  ++stats_.counting_splits;

  CountingContext next;
  next.prvs = base.prvs;
  next.prvs.push_back(shape);
  Number total = Number::zero(config_.numeric);
  std::function<void(std::size_t, const BigInt&)> rec = [&](std::size_t c, const BigInt& multiplier) {
    if (c == cells.size()) {
      ++stats_.branches;
      CurrentContext sub = rest;
      sub.per_type[type] = next;
      total += Number::from_integer(multiplier, config_.numeric) * lrc(sub, universe, fs);
      return;
    }
    const auto& [row, count] = cells[c];
    BigInt sum = 0;
    for_each_composition(count, m, [&](const std::vector<BigInt>& parts) {
      const BigInt weight = multinomial(parts);
      sum += weight;
      std::vector<std::vector<int>> added;
      for (std::size_t v = 0; v < m; ++v) {
        if (parts[v] == 0) continue;
        std::vector<int> extended = row;
        extended.push_back(static_cast<int>(v));
        next.counts.emplace(extended, parts[v]);
        added.push_back(std::move(extended));
      }
      rec(c + 1, multiplier * weight);
      for (const auto& key : added) next.counts.erase(key);
    });
    CountingSplit split{to_string(shape), count, m, sum};
    if (sum != ipow(BigInt(static_cast<unsigned long>(m)), count.get_ui())) ++stats_.conservation_violations;
    if (config_.on_counting_split) config_.on_counting_split(split);
  };
  rec(0, BigInt(1));
  return total;
}

// ---- Recursive conditioning ---------------------------------------------------------

Number LiftedEngine::lrc(const CurrentContext& con_in, const Universe& universe, std::vector<LiftedParfactor> fs) {
  ++stats_.calls;
  const CurrentContext con = config_.use_forgetting ? forget_unused(con_in, fs) : con_in;
  if (fs.empty()) return Number::one(config_.numeric);

  std::string key;
  if (config_.use_cache) {
    key = canonical_key(con, universe, fs);
    ++stats_.cache_lookups;
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++stats_.cache_hits;
      return it->second;
    }
    ++stats_.cache_misses;
  }
  auto store = [&](Number value) {
    if (config_.use_cache) cache_.insert_or_assign(key, value);
    return value;
  };

  std::vector<LiftedParfactor> rest;
  Number product = Number::one(config_.numeric);
  bool evaluated = false;
  for (LiftedParfactor& pf : fs) {
    const bool all = std::all_of(pf.prvs.begin(), pf.prvs.end(), [&](const Atom& a) { return assigned(a, pf, con); });
    if (all) {
      product *= eval_parfactor(pf, con);
      evaluated = true;
    } else {
      rest.push_back(std::move(pf));
    }
  }
  if (evaluated) return store(product * lrc(con, universe, std::move(rest)));
  fs = std::move(rest);

  const auto parts = components(con, fs);
  if (parts.size() > 1) {
    ++stats_.component_splits;
    for (const auto& part : parts) {
      std::vector<LiftedParfactor> sub;
      for (std::size_t i : part) sub.push_back(fs[i]);
      product *= lrc(con, universe, std::move(sub));
    }
    return store(product);
  }

  if (auto value = try_disconnect(con, universe, fs)) return store(*value);

  if (auto atom = choose_branch(con, fs, true)) return store(branch_ground(con, universe, fs, *atom));
  if (auto shape = choose_branch(con, fs, false)) return store(branch(con, universe, fs, *shape));

  for (const LiftedParfactor& pf : fs) {
    for (const Atom& a : pf.prvs) {
      if (!assigned(a, pf, con)) {
        throw NotLiftableError(to_string(shape_of(a)),
                               "not liftable: " + to_string(shape_of(a)) +
                                   " has several parameters and cannot be disconnected or counted");
      }
    }
  }
  throw InternalError("no case applies");
}

}  // namespace liftrc
