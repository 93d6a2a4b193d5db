#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cis/coordinator.hpp"
#include "cis/errors.hpp"
#include "cis/instances.hpp"
#include "reference.hpp"

namespace cis {
namespace {

// Two-state single-controller problem used for hand-computed checks.
ProblemSpec hand_problem() {
  ProblemSpec spec;
  spec.n = 1;
  spec.horizon = 2;
  spec.state.cardinality = 2;
  spec.obs = {FiniteSpace{2, {}}};
  spec.actions = {FiniteSpace{2, {}}};
  spec.initial_dist = Eigen::Vector2d(0.6, 0.4);
  Eigen::MatrixXd obs(2, 2);
  obs << 0.9, 0.1, 0.2, 0.8;
  spec.obs_kernel = {{obs, obs}};
  Eigen::MatrixXd tr(4, 2);
  tr << 1.0, 0.0, 0.5, 0.5, 0.0, 1.0, 0.5, 0.5;
  spec.transition = {tr, tr};
  Eigen::MatrixXd cost(2, 2);
  cost << 0.0, 1.0, 1.0, 0.0;
  spec.cost = {cost, cost};
  spec.protocol = delayed_sharing_protocol({1}, 2, {2}, {2});
  return spec;
}

TEST(Layout, SizesAndOrder) {
  const auto spec = instances::two_controller_sharing(1);
  EXPECT_EQ(StateLayout(spec, 0).size(), 8);
  const auto single = hand_problem();
  EXPECT_EQ(StateLayout(single, 0).size(), 4);
  const auto delayed = instances::random_with_protocol({2, 3, 2, 2, 2}, "delayed", 2, 1);
  EXPECT_EQ(StateLayout(delayed, 1).size(), 2 * 4 * 16);

  const StateLayout layout(delayed, 1);
  const auto states = enumerate_states(delayed, 1);
  ASSERT_EQ(static_cast<Index>(states.size()), layout.size());
  EXPECT_EQ(states[0], (CoordState{0, {0, 0}, {0, 0}}));
  EXPECT_EQ(states[1], (CoordState{0, {0, 0}, {0, 1}}));
  EXPECT_EQ(states[4], (CoordState{0, {0, 0}, {1, 0}}));
  EXPECT_EQ(states[16], (CoordState{0, {0, 1}, {0, 0}}));
  EXPECT_EQ(states[64], (CoordState{1, {0, 0}, {0, 0}}));
  for (Index s = 0; s < layout.size(); ++s) EXPECT_EQ(layout.index(states[s]), s);
}

TEST(Belief, InitialBeliefWeighsObservations) {
  const auto b = initial_belief(hand_problem());
  ASSERT_EQ(b.weights.size(), 4);
  EXPECT_NEAR(b.weights[0], 0.54, 1e-15);
  EXPECT_NEAR(b.weights[1], 0.06, 1e-15);
  EXPECT_NEAR(b.weights[2], 0.08, 1e-15);
  EXPECT_NEAR(b.weights[3], 0.32, 1e-15);
}

TEST(Belief, InitialCommonObservationSplitsRoots) {
  const auto spec = instances::static_team(1);
  const auto roots = initial_beliefs(spec);
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_NEAR(roots[0].probability + roots[1].probability, 1.0, 1e-12);
  for (const auto& r : roots) EXPECT_NEAR(r.belief.weights.sum(), 1.0, 1e-12);
}

TEST(Belief, CanonicalKeyIgnoresRoundoff) {
  Eigen::VectorXd a(3), b(3);
  a << 0.25, 0.75, 0.0;
  b << 0.25 + 1e-15, 0.75 - 1e-15, 1e-17;
  EXPECT_EQ(canonical_key(1, a), canonical_key(1, b));
  EXPECT_FALSE(canonical_key(1, a) == canonical_key(2, a));
}

TEST(Belief, IndexMergesBeliefsStraddlingARoundingBoundary) {
  Eigen::VectorXd a(2), b(2), c(2);
  a << 0.3 + 0.5e-12 + 1e-17, 0.7 - 0.5e-12 - 1e-17;
  b << 0.3 + 0.5e-12 - 1e-16, 0.7 - 0.5e-12 + 1e-16;
  c << 0.3 + 2e-12, 0.7 - 2e-12;
  ASSERT_FALSE(canonical_key(0, a) == canonical_key(0, b));
  BeliefIndex index;
  bool fresh = false;
  EXPECT_EQ(index.insert(canonical_key(0, a), a, 0, fresh), 0);
  EXPECT_TRUE(fresh);
  EXPECT_EQ(index.find(canonical_key(0, b), b), 0);
  EXPECT_EQ(index.insert(canonical_key(0, b), b, 1, fresh), 0);
  EXPECT_FALSE(fresh);
  EXPECT_EQ(index.find(canonical_key(0, c), c), -1);
}

TEST(Prescriptions, Sizes) {
  EXPECT_EQ(PrescriptionSpace(instances::two_controller_sharing(1), 0).size(), 16u);
  ProblemSpec three = random_problem({1, 1, 2, 1, 3}, 1);
  three.protocol = no_sharing_protocol(0, 1, {1}, {3});
  EXPECT_EQ(PrescriptionSpace(three, 0).size(), 3u);
  EXPECT_EQ(PrescriptionSpace(instances::static_team(1), 0).size(), 16u);
  const auto delayed = instances::random_with_protocol({2, 3, 2, 2, 2}, "delayed", 2, 1);
  EXPECT_EQ(prescription_count(delayed, 1), 1ull << 16);
  EXPECT_THROW(PrescriptionSpace(delayed, 1, 1000), SizeOverflow);
}

TEST(Prescriptions, EnumerationOrderAndRoundTrip) {
  const PrescriptionSpace space(instances::two_controller_sharing(1), 0);
  const auto first = space.at(0);
  EXPECT_EQ(first.tables, (std::vector<std::vector<int>>{{0, 0}, {0, 0}}));
  EXPECT_EQ(space.at(1).tables, (std::vector<std::vector<int>>{{0, 0}, {0, 1}}));
  EXPECT_EQ(space.at(4).tables, (std::vector<std::vector<int>>{{0, 1}, {0, 0}}));
  JointPrescription g = space.at(0);
  std::uint64_t count = 1;
  while (space.next(g)) {
    EXPECT_EQ(g.index, count);
    EXPECT_EQ(space.index_of(g.tables), count);
    ++count;
  }
  EXPECT_EQ(count, 16u);
}

TEST(Dynamics, EmitMessage) {
  const auto spec = instances::two_controller_sharing(1);
  const PrescriptionSpace space(spec, 0);
  const auto gamma = space.at(space.index_of({{1, 0}, {0, 1}}));
  // Controller 0 sees y=0 and plays 1; controller 1 sees y=1 and plays 1.
  const CoordState s{1, {0, 1}, {0, 0}};
  const int msg0 = 1 + 0 * 2 + 1;
  const int msg1 = 1 + 1 * 2 + 1;
  EXPECT_EQ(emit_message(spec, s, gamma, 0), msg0 * 5 + msg1);

  const auto none = instances::random_with_protocol({2, 2, 2, 2, 2}, "none", 0, 1);
  EXPECT_EQ(emit_message(none, s, PrescriptionSpace(none, 0).at(5), 0), 0);
}

TEST(Dynamics, TransitionMatchesNoiseEnumeration) {
  std::mt19937 rng(11);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto spec = instances::random_with_protocol({2, 3, 3, 2, 2}, "delayed", 2, seed);
    const int t = 1;
    const StateLayout now(spec, t);
    const StateLayout next(spec, t + 1);
    const PrescriptionSpace space(spec, t);
    for (int trial = 0; trial < 20; ++trial) {
      const auto s = now.state(rng() % now.size());
      const auto gamma = space.at(rng() % space.size());
      const auto dist = transition(spec, s, gamma, t);
      Eigen::VectorXd expected = Eigen::VectorXd::Zero(next.size());
      std::vector<int> u(2), m(2);
      for (int i = 0; i < 2; ++i) {
        u[i] = gamma.tables[i][s.y[i] * now.mem_size(i) + s.m[i]];
        const auto& step = spec.protocol.step(i, t);
        m[i] = step.mem_update[(s.m[i] * 2 + s.y[i]) * 2 + u[i]];
      }
      const int flat = u[0] * 2 + u[1];
      for (int x = 0; x < 3; ++x)
        for (int y0 = 0; y0 < 2; ++y0)
          for (int y1 = 0; y1 < 2; ++y1)
            expected[next.index(CoordState{x, {y0, y1}, m})] += spec.transition_at(t)(s.x * 4 + flat, x) *
                                                                   spec.obs_at(0, t + 1)(x, y0) *
                                                                   spec.obs_at(1, t + 1)(x, y1);
      EXPECT_LE((dist - expected).cwiseAbs().maxCoeff(), 1e-15);
      EXPECT_NEAR(dist.sum(), 1.0, 1e-12);
    }
  }
}

TEST(Dynamics, ObservationProbabilities) {
  const auto spec = hand_problem();
  const auto b = initial_belief(spec);
  const PrescriptionSpace space(spec, 0);
  // Play 0 after y=0 and 1 after y=1: messages (y, u) = (0,0) and (1,1).
  const auto gamma = space.at(space.index_of({{0, 1}}));
  const double p00 = observation_probability(spec, b, gamma, 1 + 0);
  const double p11 = observation_probability(spec, b, gamma, 1 + 3);
  EXPECT_NEAR(p00, 0.62, 1e-15);
  EXPECT_NEAR(p11, 0.38, 1e-15);
  EXPECT_EQ(observation_probability(spec, b, gamma, 1 + 1), 0.0);

  const auto post = eta_update(spec, b, gamma, 1);
  // After (y=0, u=0): P(x0=0 | y=0) = 0.54 / 0.62 and action 0 keeps the state.
  const double px0 = 0.54 / 0.62;
  EXPECT_NEAR(post.weights[0], px0 * 0.9, 1e-15);
  EXPECT_NEAR(post.weights[1], px0 * 0.1, 1e-15);
  EXPECT_NEAR(post.weights.sum(), 1.0, 1e-15);
  EXPECT_THROW(eta_update(spec, b, gamma, 2), ZeroProbabilityObservation);
}

TEST(Dynamics, ExpectedCostMatchesHandComputation) {
  const auto spec = hand_problem();
  const auto b = initial_belief(spec);
  const PrescriptionSpace space(spec, 0);
  EXPECT_NEAR(expected_cost(spec, b, space.at(space.index_of({{0, 1}}))), 0.06 + 0.08, 1e-15);
  EXPECT_NEAR(expected_cost(spec, b, space.at(space.index_of({{0, 0}}))), 0.4, 1e-15);
}

TEST(Reduced, ChiAndZetaAreInverseOnReachableBeliefs) {
  std::mt19937 rng(5);
  for (const char* kind : {"delayed", "periodic", "control"}) {
    const auto spec = instances::random_with_protocol({2, 3, 2, 2, 2}, kind, 2, 3);
    Belief b = initial_belief(spec);
    for (int t = 0; t + 1 < spec.horizon; ++t) {
      EXPECT_LE((zeta(spec, chi(spec, b)).weights - b.weights).cwiseAbs().maxCoeff(), 1e-14) << kind << t;
      const PrescriptionSpace space(spec, t);
      const auto gamma = space.at(rng() % space.size());
      std::int64_t z = 0;
      for (; z < spec.protocol.joint_msg_size(t); ++z)
        if (observation_probability(spec, b, gamma, z) > kZeroProbability) break;
      b = eta_update(spec, b, gamma, z);
    }
    EXPECT_LE((zeta(spec, chi(spec, b)).weights - b.weights).cwiseAbs().maxCoeff(), 1e-14) << kind;
  }
}

TEST(Filter, MatchesTrajectoryEnumeration) {
  std::uint64_t seed = 100;
  for (const auto& c : reference::filter_cases()) {
    const auto spec = instances::random_with_protocol(c.shape, c.kind, c.param, ++seed);
    const auto check = reference::check_filter(spec, seed);
    EXPECT_LE(check.max_states, 200) << c.kind;
    EXPECT_GE(check.nodes, spec.horizon) << c.kind;
    EXPECT_LE(check.max_total_variation, 1e-9) << c.kind;
    EXPECT_LE(check.max_mass_error, 1e-9) << c.kind;
    EXPECT_LE(check.max_message_error, 1e-9) << c.kind;
  }
}

TEST(Dynamics, OneStepCostMatchesMonteCarlo) {
  const auto spec = instances::random_with_protocol({2, 2, 3, 2, 2}, "delayed", 1, 8);
  const auto b = initial_belief(spec);
  const PrescriptionSpace space(spec, 0);
  const auto gamma = space.at(11);
  const double exact = expected_cost(spec, b, gamma);

  std::mt19937_64 rng(42);
  std::discrete_distribution<int> pick_x(spec.initial_dist.data(), spec.initial_dist.data() + 3);
  const int samples = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < samples; ++k) {
    const int x = pick_x(rng);
    int u[2];
    for (int i = 0; i < 2; ++i) {
      std::bernoulli_distribution y_one(spec.obs_at(i, 0)(x, 1));
      u[i] = gamma.tables[i][y_one(rng) ? 1 : 0];
    }
    const double c = spec.cost_at(0)(x, spec.flatten_actions(u));
    sum += c;
    sum_sq += c * c;
  }
  const double mean = sum / samples;
  const double se = std::sqrt((sum_sq / samples - mean * mean) / samples);
  EXPECT_LE(std::abs(mean - exact), 4.0 * se);
}

}  // namespace
}  // namespace cis
