#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cis/protocol.hpp"

namespace cis {

// Tolerance for probability vectors read from problem descriptions.
inline constexpr double kProbabilityTolerance = 1e-9;

struct FiniteSpace {
  int cardinality = 1;
  std::vector<std::string> labels;

  friend bool operator==(const FiniteSpace&, const FiniteSpace&) = default;
};

struct NoiseModel {
  FiniteSpace space;
  Eigen::VectorXd dist;
};

enum class Mode { finite, discounted };

// A finite decentralized control problem with partial history sharing.
//
// Stages are zero-based: t = 0 .. horizon - 1. Joint actions are flattened
// with controller 0 most significant:
//   u_flat = sum_i u^i * prod_{j > i} |U^j|.
// In discounted mode the per-stage tables must be time-homogeneous; any stage
// past the stored tables reuses the last one.
struct ProblemSpec {
  int n = 1;
  int horizon = 1;
  Mode mode = Mode::finite;
  double discount = 0.0;

  FiniteSpace state;
  std::vector<FiniteSpace> obs;
  std::vector<FiniteSpace> actions;

  Eigen::VectorXd initial_dist;
  // transition[t](x * |U| + u_flat, x')
  std::vector<Eigen::MatrixXd> transition;
  // obs_kernel[i][t](x, y)
  std::vector<std::vector<Eigen::MatrixXd>> obs_kernel;
  // cost[t](x, u_flat)
  std::vector<Eigen::MatrixXd> cost;
  // Optional observation shared by every controller at the first stage only,
  // P(c | x_0) with rows x. Empty means no such observation.
  Eigen::MatrixXd initial_common_obs;

  SharingProtocol protocol;

  int num_states() const { return state.cardinality; }
  int num_obs(int i) const { return obs[i].cardinality; }
  int num_actions(int i) const { return actions[i].cardinality; }
  int joint_actions() const;
  int num_common_obs() const {
    return initial_common_obs.size() == 0 ? 1 : static_cast<int>(initial_common_obs.cols());
  }
  std::vector<int> obs_sizes() const;
  std::vector<int> action_sizes() const;

  const Eigen::MatrixXd& transition_at(int t) const { return transition[table_index(t, transition.size())]; }
  const Eigen::MatrixXd& obs_at(int i, int t) const { return obs_kernel[i][table_index(t, obs_kernel[i].size())]; }
  const Eigen::MatrixXd& cost_at(int t) const { return cost[table_index(t, cost.size())]; }

  // Flattens per-controller actions; inverse of split_actions.
  int flatten_actions(const int* u) const;
  void split_actions(int u_flat, int* u) const;

 private:
  int table_index(int t, std::size_t size) const;
};

// One entry per violated invariant; empty iff the problem is valid.
std::vector<std::string> validate_problem(const ProblemSpec& spec);

// f_table[x][u][w] = x'. Builds kernel rows P(x' | x, u) = sum_w 1[f = x'] Q(w).
Eigen::MatrixXd build_kernel_from_functional(const std::vector<std::vector<std::vector<int>>>& f_table,
                                             const NoiseModel& noise, int num_next_states);

// Observation kernels for a product state X = X^0 x ... x X^{n-1} (component 0
// most significant) where controller i observes its own component exactly.
// Used with delayed sharing to obtain delayed state sharing.
std::vector<Eigen::MatrixXd> component_observation_kernels(const std::vector<int>& component_sizes);

// Per-controller control laws keyed by common-information node.
//
// A node stands for one realized common history (initial common observation
// plus message path). Each node carries the prescription tables
// tables[i][y * |M^i_t| + m] = u and the successor node for every message
// that can follow it.
struct LawNode {
  std::vector<std::vector<int>> tables;
  std::map<std::int64_t, int> children;
};

struct ControlStrategy {
  // stages[t][node]
  std::vector<std::vector<LawNode>> stages;
  // initial common observation value -> node at stage 0
  std::map<int, int> roots;

  int action(int i, int t, int node, int y, int m, int mem_size) const {
    return stages[t][node].tables[i][y * mem_size + m];
  }
};

// Seeded random problem with kernels sampled uniformly then row-normalized
// and costs uniform in [0, 1]. The protocol is left empty for the caller.
struct RandomProblemShape {
  int n = 2;
  int horizon = 2;
  int num_states = 2;
  int num_obs = 2;
  int num_actions = 2;
};
ProblemSpec random_problem(const RandomProblemShape& shape, std::uint64_t seed);

}  // namespace cis
