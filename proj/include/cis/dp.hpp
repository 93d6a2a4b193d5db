#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

#include "cis/coordinator.hpp"
#include "cis/model.hpp"

namespace cis {

// Relative margin below which two candidate values count as tied; ties go to
// the smallest joint prescription index.
inline constexpr double kTieTolerance = 1e-12;

struct SolveOptions {
  std::uint64_t prescription_cap = kDefaultPrescriptionCap;
  // Upper bound on distinct beliefs kept per stage (or in the discounted memo).
  std::size_t node_cap = 2'000'000;
  int threads = 1;
};

struct PolicyNode {
  // Full belief, or the reduced (x, m) marginal when the tree is reduced.
  Eigen::VectorXd belief;
  std::uint64_t prescription = 0;
  double value = 0.0;
  // (message, node id at t + 1), ordered by message. Only messages with
  // positive probability under the chosen prescription appear.
  std::vector<std::pair<std::int64_t, int>> children;
};

struct PolicyRoot {
  int common_obs = 0;
  double probability = 1.0;
  int node = 0;
};

// Optimal coordination strategy restricted to the common-information nodes
// it can reach. stages[t] lists the nodes of stage t.
struct PolicyTree {
  bool reduced = false;
  std::vector<std::vector<PolicyNode>> stages;
  std::vector<PolicyRoot> roots;

  int find_child(int t, int node, std::int64_t message) const;
};

struct ValueReport {
  double optimal_value = 0.0;
  // Distinct beliefs reached by the forward expansion, per stage.
  std::vector<std::size_t> explored_nodes;
  std::vector<std::size_t> policy_nodes;
  std::vector<std::uint64_t> prescription_space_sizes;
  // Wall-clock time; reported on the log, never serialized.
  double seconds = 0.0;
};

struct FiniteSolution {
  ValueReport report;
  PolicyTree tree;
};

// Exact DP over the reachable beliefs of the coordinator.
FiniteSolution solve_finite(const ProblemSpec& spec, const SolveOptions& options = {});
// Same recursion with beliefs stored as their (x, m) marginals.
FiniteSolution solve_finite_reduced(const ProblemSpec& spec, const SolveOptions& options = {});
// Optimal cost-to-go V_t(belief) of the tail problem starting at belief.t.
double value_from(const ProblemSpec& spec, const Belief& belief, const SolveOptions& options = {});

// Per-controller control laws g^i_t(y, m, node) = γ^i_node(y, m).
ControlStrategy extract_control_strategy(const ProblemSpec& spec, const PolicyTree& tree);

// min over joint prescriptions of the expected immediate cost under the
// belief loaded into `expander`'s model. Returns (value, prescription index),
// ties broken towards the smallest index.
std::pair<double, std::uint64_t> min_immediate_cost(const StageModel& model, const Eigen::VectorXd& belief,
                                                    const PrescriptionSpace& space);

struct StationaryEntry {
  Eigen::VectorXd belief;
  std::uint64_t prescription = 0;
  double value = 0.0;
  // Remaining depth at which the entry was evaluated (largest seen).
  int depth = 0;
};

struct StationaryPolicy {
  std::vector<StationaryEntry> entries;
  std::vector<PolicyRoot> roots;  // node = entry index
  double discount = 0.0;
  double epsilon = 0.0;
  int iterations = 0;  // truncation depth K
  double residual = 0.0;  // |V_K - V_{K-1}| at the initial beliefs
  double truncation_bound = 0.0;

  int find(const Eigen::VectorXd& belief) const;
};

struct DiscountedSolution {
  ValueReport report;
  StationaryPolicy policy;
};

// Truncation depth K such that beta^K max|l| / (1 - beta) <= epsilon.
int truncation_depth(double discount, double max_abs_cost, double epsilon);

// Depth-limited expectimax over reachable beliefs approximating the
// discounted fixed point to within epsilon.
DiscountedSolution solve_discounted(const ProblemSpec& spec, double epsilon, const SolveOptions& options = {});

}  // namespace cis
