#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cis/dp.hpp"
#include "cis/model.hpp"

namespace cis {

// Kinds of primitive draws. Each draw is a pure function of
// (seed, episode, stage, kind, index), so two executions that share a seed
// see exactly the same primitive randomness.
enum class DrawKind : std::uint32_t { initial_state = 1, common_obs = 2, observation = 3, transition = 4 };

double uniform_draw(std::uint64_t seed, std::uint64_t episode, int t, DrawKind kind, int index = 0);

// Inverse-CDF sample of a probability row from a uniform in [0, 1).
int sample_index(const Eigen::Ref<const Eigen::RowVectorXd>& probabilities, double uniform);

struct TrajectoryStep {
  int x = 0;
  std::vector<int> y;
  std::vector<int> m;
  std::vector<int> u;
  std::int64_t z = 0;
  double cost = 0.0;

  friend bool operator==(const TrajectoryStep&, const TrajectoryStep&) = default;
};

struct Trajectory {
  int common_obs = 0;
  std::vector<TrajectoryStep> steps;
  double total_cost = 0.0;  // discounted in discounted mode
};

struct SimReport {
  std::uint64_t episodes = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::uint64_t audit_violations = 0;
  std::uint64_t seed = 0;
};

struct SimOptions {
  int threads = 1;
  // When set, receives every trajectory in episode order.
  std::vector<Trajectory>* trajectories = nullptr;
};

// Executes the coordinator's policy tree: prescriptions come from the node
// tracked through the emitted messages, and every realized message is checked
// to have positive probability under the node's belief.
SimReport rollout(const ProblemSpec& spec, const PolicyTree& tree, std::uint64_t seed, std::uint64_t episodes,
                  const SimOptions& options = {});
// Executes per-controller control laws.
SimReport rollout(const ProblemSpec& spec, const ControlStrategy& g, std::uint64_t seed, std::uint64_t episodes,
                  const SimOptions& options = {});
// Executes a stationary policy for policy.iterations steps, accumulating
// discounted cost.
SimReport rollout(const ProblemSpec& spec, const StationaryPolicy& policy, std::uint64_t seed,
                  std::uint64_t episodes, const SimOptions& options = {});

struct Divergence {
  std::uint64_t episode = 0;
  int t = 0;
  std::string field;
};

struct PairedReport {
  std::uint64_t episodes = 0;
  std::uint64_t divergent_episodes = 0;
  // Earliest divergence over all episodes (smallest stage, then episode).
  bool diverged = false;
  Divergence first;

  bool identical() const { return divergent_episodes == 0; }
};

// Runs the policy tree and the control laws on identical primitive draws and
// compares the trajectories step by step.
PairedReport paired_rollout(const ProblemSpec& spec, const PolicyTree& tree, const ControlStrategy& g,
                            std::uint64_t seed, std::uint64_t episodes);

// Mean and standard error of the mean from per-episode totals.
SimReport summarize(const std::vector<double>& totals, std::uint64_t seed);

}  // namespace cis
