#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "liftrc/numerics.hpp"

namespace liftrc {

// Evidence for one disconnected-grounding exponentiation: the grounding splits
// into `exponent` isomorphic blocks, each holding `copies` of the k-tuples.
struct DisconnectionCertificate {
  std::string type;
  BigInt population;  // individuals of `type` not named by constants
  unsigned k = 0;
  BigInt copies;  // c
  BigInt exponent;  // e = population!/((population-k)! * c)
  std::vector<std::string> component;  // the generic block, printed
};

struct RunStats {
  std::uint64_t calls = 0;
  std::uint64_t branches = 0;
  std::uint64_t cache_lookups = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t component_splits = 0;
  std::uint64_t case3_events = 0;  // exponentiations of disconnected groundings
  std::uint64_t counting_splits = 0;
  std::uint64_t conservation_violations = 0;
  double wall_ms = 0.0;
  std::vector<DisconnectionCertificate> certificates;

  RunStats& operator+=(const RunStats& other);
};

}  // namespace liftrc
