#pragma once

#include <cstdint>

#include "cis/model.hpp"

namespace cis {

inline constexpr std::uint64_t kDefaultStrategyCap = 10'000'000;
inline constexpr std::uint64_t kDefaultBranchCap = 100'000'000;

struct EnumerationReport {
  // Basic strategies examined, or prescription evaluations for the
  // coordinator search.
  std::uint64_t count = 0;
  double minimum = 0.0;
  ControlStrategy argmin;
  double seconds = 0.0;  // not serialized
};

// Expected total cost of a strategy, summing over every trajectory branch of
// positive probability. Finite mode only.
double exact_cost_of_strategy(const ProblemSpec& spec, const ControlStrategy& g,
                              std::uint64_t branch_cap = kDefaultBranchCap);

// Number of basic strategies enumerate_basic_strategies would examine, or a
// value above `cap` if that number exceeds it.
std::uint64_t count_basic_strategies(const ProblemSpec& spec, std::uint64_t cap = kDefaultStrategyCap);

// Exhaustive search over per-controller action assignments at every
// realizable (controller, stage, local data, common-information node).
EnumerationReport enumerate_basic_strategies(const ProblemSpec& spec, std::uint64_t cap = kDefaultStrategyCap);

// Exhaustive search over coordination strategies, minimized separately at
// each node of the realizable common-history tree (prescriptions and messages
// so far). `count` is the total number of prescription evaluations.
EnumerationReport enumerate_coordinator_strategies(const ProblemSpec& spec,
                                                   std::uint64_t cap = kDefaultStrategyCap);

}  // namespace cis
