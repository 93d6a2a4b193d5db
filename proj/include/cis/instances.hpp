#pragma once

#include <cstdint>

#include "cis/model.hpp"

// Seeded benchmark problems used by the tests, the acceptance run and the
// fixture generator.
namespace cis::instances {

// Two controllers, binary state/observations/actions, two stages, every
// (y, u) shared after one step.
ProblemSpec two_controller_sharing(std::uint64_t seed);

// Two controllers, binary spaces, four stages, everything shared every
// second step.
ProblemSpec periodic_two_controller(std::uint64_t seed);

// One controller, three states, binary observations/actions, three stages,
// full sharing: a centralized POMDP.
ProblemSpec centralized_pomdp(std::uint64_t seed);

// One-shot team of two controllers. The state is (X, Y*, Y^0, Y^1), all
// binary, drawn from a seeded joint law; controller i sees Y^i, both see Y*
// as the initial common observation.
ProblemSpec static_team(std::uint64_t seed);

// Random problem with the requested shape and protocol preset, for filter
// and protocol sweeps. `kind` is one of delayed, periodic, control, none.
ProblemSpec random_with_protocol(const RandomProblemShape& shape, const char* kind, int param, std::uint64_t seed);

// Discounted single-controller problem on two states whose next state
// depends on the action only, with noisy observations and a seeded cost.
// Its reachable beliefs form a finite set.
ProblemSpec reset_chain(double discount, std::uint64_t seed);

// The reset chain with every cost entry equal to `cost`.
ProblemSpec constant_cost_chain(double discount, double cost);

// Finite-horizon problem with every cost entry equal to `cost`.
ProblemSpec constant_cost_finite(int horizon, double cost, std::uint64_t seed);

}  // namespace cis::instances
