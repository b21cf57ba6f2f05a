#pragma once
// Helpers shared by the unit and acceptance tests.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "liftrc/model.hpp"
#include "liftrc/numerics.hpp"
#include "liftrc/parser.hpp"

namespace testing_support {

inline std::string corpus_path(const std::string& name) { return std::string(LIFTRC_CORPUS_DIR) + "/" + name; }

inline std::vector<std::string> corpus_files() {
  std::vector<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(LIFTRC_CORPUS_DIR)) {
    if (entry.path().extension() == ".lpm") out.push_back(entry.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline liftrc::Model load(const std::string& name) { return liftrc::load_model_file(corpus_path(name)); }

// The model with population sizes replaced. Constants named anywhere in the
// model are kept; nullopt when a size is too small to hold them.
inline std::optional<liftrc::Model> resized(const liftrc::Model& model, const std::map<std::string, std::size_t>& sizes) {
  const auto mentioned = liftrc::mentioned_constants(model);
  liftrc::Model out = model;
  for (liftrc::Population& pop : out.populations) {
    const auto want = sizes.find(pop.name);
    if (want == sizes.end()) continue;
    const std::set<std::string> named = mentioned.count(pop.name) ? mentioned.at(pop.name) : std::set<std::string>{};
    if (pop.auto_named) {
      pop = liftrc::make_population(pop.name, want->second);
    } else {
      std::vector<std::string> inds;
      for (const auto& i : pop.individuals)
        if (named.count(i)) inds.push_back(i);
      for (const auto& i : pop.individuals)
        if (!named.count(i) && inds.size() < want->second) inds.push_back(i);
      for (std::size_t k = 1; inds.size() < want->second; ++k) inds.push_back(pop.name + "_extra" + std::to_string(k));
      if (inds.size() != want->second) return std::nullopt;
      pop.individuals = std::move(inds);
    }
    for (const auto& c : named) {
      if (std::find(pop.individuals.begin(), pop.individuals.end(), c) == pop.individuals.end()) return std::nullopt;
    }
  }
  return out;
}

// Every assignment of sizes in [lo, hi] to the model's populations.
inline std::vector<std::map<std::string, std::size_t>> size_grid(const liftrc::Model& model, std::size_t lo,
                                                                 std::size_t hi) {
  std::vector<std::map<std::string, std::size_t>> out{{}};
  for (const auto& pop : model.populations) {
    std::vector<std::map<std::string, std::size_t>> next;
    for (const auto& partial : out) {
      for (std::size_t n = lo; n <= hi; ++n) {
        auto m = partial;
        m[pop.name] = n;
        next.push_back(std::move(m));
      }
    }
    out = std::move(next);
  }
  return out;
}

// Sum over all joint assignments of the product of all ground factors,
// restricted to `fixed` (atom index -> value). Exponential; tiny models only.
inline liftrc::Rational enumerate(const liftrc::GroundModel& g, const std::map<int, std::size_t>& fixed = {}) {
  const std::size_t n = g.atoms.size();
  std::vector<std::size_t> value(n, 0);
  for (const auto& [a, v] : fixed) value[a] = v;
  liftrc::Rational total = 0;
  while (true) {
    liftrc::Rational product = 1;
    for (const auto& f : g.factors) {
      std::vector<std::size_t> row;
      for (int a : f.scope) row.push_back(value[a]);
      product *= f.table->at(row);
      if (product == 0) break;
    }
    total += product;
    std::size_t i = 0;
    for (; i < n; ++i) {
      if (fixed.count(static_cast<int>(i))) continue;
      if (++value[i] < g.atom_range_size[i]) break;
      value[i] = 0;
    }
    if (i == n) break;
  }
  return total;
}

}  // namespace testing_support
