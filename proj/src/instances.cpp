#include "cis/instances.hpp"

#include <random>
#include <string>

#include "cis/errors.hpp"

namespace cis::instances {

namespace {

std::vector<int> repeat(int n, int value) { return std::vector<int>(n, value); }

}  // namespace

ProblemSpec two_controller_sharing(std::uint64_t seed) {
  return random_with_protocol({2, 2, 2, 2, 2}, "delayed", 1, seed);
}

ProblemSpec periodic_two_controller(std::uint64_t seed) {
  return random_with_protocol({2, 4, 2, 2, 2}, "periodic", 2, seed);
}

ProblemSpec centralized_pomdp(std::uint64_t seed) {
  return random_with_protocol({1, 3, 3, 2, 2}, "delayed", 1, seed);
}

ProblemSpec random_with_protocol(const RandomProblemShape& shape, const char* kind, int param, std::uint64_t seed) {
  ProblemSpec spec = random_problem(shape, seed);
  const auto obs = repeat(shape.n, shape.num_obs);
  const auto act = repeat(shape.n, shape.num_actions);
  const std::string k = kind;
  if (k == "delayed")
    spec.protocol = delayed_sharing_protocol(repeat(shape.n, param), shape.horizon, obs, act);
  else if (k == "periodic")
    spec.protocol = periodic_sharing_protocol(param, shape.horizon, obs, act);
  else if (k == "control")
    spec.protocol = control_sharing_protocol(shape.horizon, obs, act);
  else if (k == "none")
    spec.protocol = no_sharing_protocol(param, shape.horizon, obs, act);
  else
    throw InvalidParameter("unknown protocol kind '" + k + "'");
  return spec;
}

ProblemSpec static_team(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ProblemSpec spec;
  spec.n = 2;
  spec.horizon = 1;
  // Index bits, most significant first: X, Y*, Y^0, Y^1.
  spec.state.cardinality = 16;
  spec.obs.assign(2, FiniteSpace{2, {}});
  spec.actions.assign(2, FiniteSpace{2, {}});
  spec.initial_dist.resize(16);
  for (int x = 0; x < 16; ++x) spec.initial_dist[x] = unit(rng);
  spec.initial_dist /= spec.initial_dist.sum();

  Eigen::MatrixXd nature_cost(2, 4);
  for (Eigen::Index k = 0; k < nature_cost.size(); ++k) nature_cost.data()[k] = unit(rng);
  Eigen::MatrixXd cost(16, 4);
  for (int x = 0; x < 16; ++x) cost.row(x) = nature_cost.row(x >> 3);
  spec.cost = {cost};
  spec.transition = {Eigen::MatrixXd::Zero(16 * 4, 16)};
  for (int x = 0; x < 16; ++x)
    for (int u = 0; u < 4; ++u) spec.transition[0](x * 4 + u, x) = 1.0;

  spec.obs_kernel.resize(2);
  for (int i = 0; i < 2; ++i) {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(16, 2);
    for (int x = 0; x < 16; ++x) k(x, (x >> (1 - i)) & 1) = 1.0;
    spec.obs_kernel[i] = {k};
  }
  spec.initial_common_obs = Eigen::MatrixXd::Zero(16, 2);
  for (int x = 0; x < 16; ++x) spec.initial_common_obs(x, (x >> 2) & 1) = 1.0;
  spec.protocol = no_sharing_protocol(0, 1, {2, 2}, {2, 2});
  return spec;
}

ProblemSpec reset_chain(double discount, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ProblemSpec spec;
  spec.n = 1;
  spec.horizon = 1;
  spec.mode = Mode::discounted;
  spec.discount = discount;
  spec.state.cardinality = 2;
  spec.obs = {FiniteSpace{2, {}}};
  spec.actions = {FiniteSpace{2, {}}};
  spec.initial_dist = Eigen::Vector2d(0.5, 0.5);

  Eigen::MatrixXd transition(4, 2);
  for (int u = 0; u < 2; ++u) {
    const double p = 0.1 + 0.8 * unit(rng);
    for (int x = 0; x < 2; ++x) transition.row(x * 2 + u) << p, 1.0 - p;
  }
  spec.transition = {transition};
  const double accuracy = 0.6 + 0.3 * unit(rng);
  Eigen::MatrixXd obs(2, 2);
  obs << accuracy, 1.0 - accuracy, 1.0 - accuracy, accuracy;
  spec.obs_kernel = {{obs}};
  Eigen::MatrixXd cost(2, 2);
  for (Eigen::Index k = 0; k < cost.size(); ++k) cost.data()[k] = unit(rng);
  spec.cost = {cost};
  spec.protocol = delayed_sharing_protocol({1}, 1, {2}, {2}, true);
  return spec;
}

ProblemSpec constant_cost_chain(double discount, double cost) {
  ProblemSpec spec = reset_chain(discount, 1);
  spec.cost[0].setConstant(cost);
  return spec;
}

ProblemSpec constant_cost_finite(int horizon, double cost, std::uint64_t seed) {
  ProblemSpec spec = random_with_protocol({2, horizon, 2, 2, 2}, "delayed", 1, seed);
  for (auto& c : spec.cost) c.setConstant(cost);
  return spec;
}

}  // namespace cis::instances
