#include <gtest/gtest.h>

#include <random>

#include "cis/errors.hpp"
#include "cis/instances.hpp"
#include "cis/model.hpp"

namespace cis {
namespace {

const std::vector<int> kBinary2 = {2, 2};

NoiseModel noise(std::vector<double> q) {
  NoiseModel m;
  m.space.cardinality = static_cast<int>(q.size());
  m.dist = Eigen::Map<Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
  return m;
}

TEST(Kernel, IdentityDynamicsGiveIdentityRows) {
  std::vector<std::vector<std::vector<int>>> f(3, std::vector<std::vector<int>>(2));
  for (int x = 0; x < 3; ++x)
    for (int u = 0; u < 2; ++u) f[x][u] = {x, x, x};
  const auto k = build_kernel_from_functional(f, noise({0.2, 0.5, 0.3}), 3);
  for (int x = 0; x < 3; ++x)
    for (int u = 0; u < 2; ++u)
      for (int y = 0; y < 3; ++y) EXPECT_DOUBLE_EQ(k(x * 2 + u, y), x == y ? 1.0 : 0.0);
}

TEST(Kernel, DegenerateNoiseGivesZeroOneRows) {
  std::vector<std::vector<std::vector<int>>> f = {{{1}, {0}}, {{1}, {1}}};
  const auto k = build_kernel_from_functional(f, noise({1.0}), 2);
  EXPECT_EQ(k.row(0), Eigen::RowVector2d(0, 1));
  EXPECT_EQ(k.row(1), Eigen::RowVector2d(1, 0));
  EXPECT_EQ(k.row(2), Eigen::RowVector2d(0, 1));
}

TEST(Kernel, XorNoise) {
  std::vector<std::vector<std::vector<int>>> f(2, std::vector<std::vector<int>>(2));
  for (int x = 0; x < 2; ++x)
    for (int u = 0; u < 2; ++u) f[x][u] = {x ^ 0, x ^ 1};
  const auto k = build_kernel_from_functional(f, noise({0.7, 0.3}), 2);
  EXPECT_NEAR(k(0, 0), 0.7, 1e-15);
  EXPECT_NEAR(k(0, 1), 0.3, 1e-15);
  EXPECT_NEAR(k(2, 0), 0.3, 1e-15);
  EXPECT_NEAR(k(2, 1), 0.7, 1e-15);
}

TEST(Kernel, RandomTablesGiveStochasticRows) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int nx = 1 + static_cast<int>(rng() % 5);
    const int nu = 1 + static_cast<int>(rng() % 3);
    const int nw = 1 + static_cast<int>(rng() % 4);
    std::vector<double> q(nw);
    for (auto& v : q) v = 1.0 + rng() % 100;
    double s = 0.0;
    for (double v : q) s += v;
    for (auto& v : q) v /= s;
    std::vector<std::vector<std::vector<int>>> f(nx, std::vector<std::vector<int>>(nu, std::vector<int>(nw)));
    for (auto& a : f)
      for (auto& b : a)
        for (auto& c : b) c = static_cast<int>(rng() % nx);
    const auto k = build_kernel_from_functional(f, noise(q), nx);
    EXPECT_TRUE((k.array() >= 0.0).all());
    for (Eigen::Index r = 0; r < k.rows(); ++r) EXPECT_NEAR(k.row(r).sum(), 1.0, 1e-12);
  }
}

TEST(Kernel, Errors) {
  std::vector<std::vector<std::vector<int>>> f = {{{0, 1}}, {{1}}};
  EXPECT_THROW(build_kernel_from_functional(f, noise({0.5, 0.5}), 2), MissingEntry);
  f = {{{0, 1}}, {{1, 0}}};
  EXPECT_THROW(build_kernel_from_functional(f, noise({0.5, 0.6}), 2), InvalidDistribution);
  EXPECT_THROW(build_kernel_from_functional(f, noise({1.2, -0.2}), 2), InvalidDistribution);
}

TEST(Validate, ValidProblemHasNoIssues) {
  EXPECT_TRUE(validate_problem(instances::two_controller_sharing(4)).empty());
  EXPECT_TRUE(validate_problem(instances::static_team(4)).empty());
  EXPECT_TRUE(validate_problem(instances::reset_chain(0.9, 4)).empty());
}

TEST(Validate, BadRowIsNamed) {
  ProblemSpec spec = instances::two_controller_sharing(1);
  spec.transition[1].row(0 * 4 + 3) *= 0.9;
  const auto issues = validate_problem(spec);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_NE(issues[0].find("t=1, x=0, u=3"), std::string::npos) << issues[0];
  EXPECT_NE(issues[0].find("0.9"), std::string::npos) << issues[0];
}

TEST(Validate, OverlapBetweenMemoryAndMessageIsFlagged) {
  ProblemSpec spec = instances::random_with_protocol({1, 2, 2, 2, 2}, "delayed", 1, 1);
  // Full sharing, but the controller also keeps the shared pair.
  const SlotList shared = {{SlotKind::observation, 0}, {SlotKind::action, 0}};
  const SlotList kept = {{SlotKind::observation, 1}, {SlotKind::action, 1}};
  std::vector<std::vector<StepSlots>> slots = {{{{}, shared, kept}, {kept, shared, {}}}};
  spec.protocol = protocol_from_slots("explicit", slots, {2}, {2});
  const auto issues = validate_problem(spec);
  ASSERT_FALSE(issues.empty());
  bool cited = false;
  for (const auto& s : issues) cited = cited || s.find("no-overlap") != std::string::npos;
  EXPECT_TRUE(cited);
}

TEST(Validate, MessageMustComeFromAvailableData) {
  const SlotList future = {{SlotKind::observation, 2}};
  std::vector<std::vector<StepSlots>> slots = {{{{}, {}, {}}, {{}, future, {}}}};
  EXPECT_THROW(protocol_from_slots("explicit", slots, {2}, {2}), MissingEntry);
}

TEST(Validate, TableDisagreeingWithWitnessIsFlagged) {
  ProblemSpec spec = instances::two_controller_sharing(2);
  spec.protocol.steps[0][0].message[3] = 1;
  EXPECT_FALSE(validate_problem(spec).empty());
}

TEST(Validate, DiscountedRequiresHomogeneity) {
  ProblemSpec spec = instances::reset_chain(0.5, 1);
  spec.transition.push_back(spec.transition[0]);
  spec.transition[1](0, 0) = 0.5;
  spec.transition[1](0, 1) = 0.5;
  EXPECT_FALSE(validate_problem(spec).empty());
  spec = instances::reset_chain(1.0, 1);
  EXPECT_FALSE(validate_problem(spec).empty());
}

TEST(Validate, ControlSharingRejectedWhenDiscounted) {
  ProblemSpec spec = instances::reset_chain(0.5, 1);
  spec.protocol = control_sharing_protocol(2, {2}, {2});
  const auto issues = validate_problem(spec);
  ASSERT_FALSE(issues.empty());
  EXPECT_NE(issues[0].find("control sharing"), std::string::npos);
}

TEST(Protocols, DelayOneSharesEverythingAtOnce) {
  const auto p = delayed_sharing_protocol({1, 1}, 3, kBinary2, kBinary2);
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t <= 3; ++t) EXPECT_EQ(p.mem_size(i, t), 1);
  const auto& step = p.step(0, 1);
  EXPECT_EQ(step.msg_size, 5);
  for (int y = 0; y < 2; ++y)
    for (int u = 0; u < 2; ++u) EXPECT_EQ(step.message[y * 2 + u], 1 + y * 2 + u);
}

TEST(Protocols, DelayTwoKeepsOnePair) {
  const auto p = delayed_sharing_protocol({2, 2}, 3, kBinary2, kBinary2);
  EXPECT_EQ(p.mem_size(0, 0), 1);
  EXPECT_EQ(p.mem_size(0, 1), 4);
  EXPECT_EQ(p.mem_size(0, 2), 4);
  EXPECT_EQ(p.msg_size(0, 0), 1);
  EXPECT_EQ(p.msg_size(0, 1), 5);
  // At stage 1 the message is the pair held in memory; the update stores
  // the current pair.
  const auto& step = p.step(1, 1);
  for (int m = 0; m < 4; ++m)
    for (int y = 0; y < 2; ++y)
      for (int u = 0; u < 2; ++u) {
        EXPECT_EQ(step.message[(m * 2 + y) * 2 + u], 1 + m);
        EXPECT_EQ(step.mem_update[(m * 2 + y) * 2 + u], y * 2 + u);
      }
}

TEST(Protocols, AsymmetricDelays) {
  const auto p = delayed_sharing_protocol({1, 3}, 4, kBinary2, kBinary2);
  EXPECT_EQ(p.mem_size(0, 3), 1);
  EXPECT_EQ(p.mem_size(1, 1), 4);
  EXPECT_EQ(p.mem_size(1, 2), 16);
  EXPECT_EQ(p.mem_size(1, 3), 16);
  EXPECT_TRUE(check_protocol(p, kBinary2, kBinary2).empty());
}

TEST(Protocols, PeriodicAccumulatesThenClears) {
  const auto p = periodic_sharing_protocol(2, 4, kBinary2, kBinary2);
  const std::vector<int> expected = {1, 4, 1, 4, 1};
  for (int t = 0; t <= 4; ++t) EXPECT_EQ(p.mem_size(0, t), expected[t]) << t;
  EXPECT_EQ(p.msg_size(0, 0), 1);
  EXPECT_EQ(p.msg_size(0, 1), 17);
  for (int v : p.step(0, 0).message) EXPECT_EQ(v, 0);
}

TEST(Protocols, PeriodOneMatchesDelayOne) {
  const auto a = periodic_sharing_protocol(1, 3, kBinary2, kBinary2);
  const auto b = delayed_sharing_protocol({1, 1}, 3, kBinary2, kBinary2);
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < 3; ++t) {
      EXPECT_EQ(a.step(i, t).message, b.step(i, t).message);
      EXPECT_EQ(a.step(i, t).mem_update, b.step(i, t).mem_update);
    }
}

TEST(Protocols, PeriodEqualToHorizonNeverSharesEarly) {
  const auto p = periodic_sharing_protocol(3, 3, kBinary2, kBinary2);
  for (int t = 0; t < 2; ++t)
    for (int v : p.step(0, t).message) EXPECT_EQ(v, 0);
  EXPECT_GT(p.msg_size(0, 2), 1);
}

TEST(Protocols, ControlSharingSendsActionsAndKeepsObservations) {
  const auto p2 = control_sharing_protocol(2, kBinary2, kBinary2);
  EXPECT_EQ(p2.mem_size(0, 1), 2);
  const auto p3 = control_sharing_protocol(3, kBinary2, kBinary2);
  EXPECT_EQ(p3.mem_size(1, 2), 4);
  const auto& step = p3.step(0, 0);
  for (int y = 0; y < 2; ++y)
    for (int u = 0; u < 2; ++u) EXPECT_EQ(step.message[y * 2 + u], 1 + u);
}

TEST(Protocols, NoSharing) {
  const auto p0 = no_sharing_protocol(0, 3, kBinary2, kBinary2);
  for (int t = 0; t <= 3; ++t) {
    EXPECT_EQ(p0.mem_size(0, t), 1);
    if (t < 3) EXPECT_EQ(p0.msg_size(0, t), 1);
  }
  const auto p1 = no_sharing_protocol(1, 4, kBinary2, kBinary2);
  for (int t = 1; t <= 4; ++t) EXPECT_EQ(p1.mem_size(0, t), 4);
  const auto full = no_sharing_protocol(4, 3, kBinary2, kBinary2);
  EXPECT_EQ(full.mem_size(0, 1), 4);
  EXPECT_EQ(full.mem_size(0, 2), 16);
  EXPECT_EQ(full.mem_size(0, 3), 64);
  EXPECT_THROW(no_sharing_protocol(-1, 3, kBinary2, kBinary2), InvalidParameter);
}

TEST(Protocols, InvalidParameters) {
  EXPECT_THROW(delayed_sharing_protocol({0, 1}, 3, kBinary2, kBinary2), InvalidParameter);
  EXPECT_THROW(periodic_sharing_protocol(0, 3, kBinary2, kBinary2), InvalidParameter);
}

TEST(Protocols, EveryPresetIsLegalUpToFourStages) {
  for (int horizon = 1; horizon <= 4; ++horizon) {
    std::vector<SharingProtocol> presets;
    for (int s = 1; s <= 4; ++s) presets.push_back(delayed_sharing_protocol({s, s}, horizon, kBinary2, kBinary2));
    for (int s = 1; s <= 4; ++s) presets.push_back(periodic_sharing_protocol(s, horizon, kBinary2, kBinary2));
    presets.push_back(control_sharing_protocol(horizon, kBinary2, kBinary2));
    for (int s = 0; s <= 4; ++s) presets.push_back(no_sharing_protocol(s, horizon, kBinary2, kBinary2));
    for (const auto& p : presets) {
      ProblemSpec spec = random_problem({2, horizon, 2, 2, 2}, 9);
      spec.protocol = p;
      const auto issues = validate_problem(spec);
      EXPECT_TRUE(issues.empty()) << p.kind << " T=" << horizon << ": " << issues.front();
    }
  }
}

TEST(Protocols, DelayedStateSharing) {
  // Two binary components; controller i observes component i exactly.
  const auto kernels = component_observation_kernels({2, 2});
  ASSERT_EQ(kernels.size(), 2u);
  for (int x = 0; x < 4; ++x) {
    EXPECT_EQ(kernels[0](x, x >> 1), 1.0);
    EXPECT_EQ(kernels[1](x, x & 1), 1.0);
  }
  ProblemSpec spec = random_problem({2, 3, 4, 2, 2}, 5);
  for (int i = 0; i < 2; ++i) spec.obs_kernel[i].assign(3, kernels[i]);
  spec.protocol = delayed_sharing_protocol({2, 2}, 3, kBinary2, kBinary2);
  EXPECT_TRUE(validate_problem(spec).empty());
}

TEST(Protocols, ConstructionIsDeterministic) {
  EXPECT_EQ(periodic_sharing_protocol(2, 4, kBinary2, kBinary2), periodic_sharing_protocol(2, 4, kBinary2, kBinary2));
  EXPECT_EQ(delayed_sharing_protocol({2, 3}, 4, kBinary2, kBinary2),
            delayed_sharing_protocol({2, 3}, 4, kBinary2, kBinary2));
}

TEST(Protocols, StationaryPaddingKeepsSpacesConstant) {
  const auto p = delayed_sharing_protocol({2, 2}, 1, kBinary2, kBinary2, true);
  ASSERT_EQ(p.length(), 1);
  EXPECT_EQ(p.step(0, 0).mem_size, 4);
  EXPECT_EQ(p.step(0, 0).next_mem_size, 4);
  EXPECT_TRUE(check_protocol(p, kBinary2, kBinary2).empty());
}

TEST(Actions, FlatteningPutsFirstControllerFirst) {
  ProblemSpec spec = random_problem({3, 1, 2, 2, 2}, 1);
  spec.actions = {FiniteSpace{2, {}}, FiniteSpace{3, {}}, FiniteSpace{2, {}}};
  const int u[3] = {1, 2, 0};
  EXPECT_EQ(spec.flatten_actions(u), 1 * 6 + 2 * 2 + 0);
  int back[3];
  spec.split_actions(spec.flatten_actions(u), back);
  EXPECT_EQ(back[0], 1);
  EXPECT_EQ(back[1], 2);
  EXPECT_EQ(back[2], 0);
}

}  // namespace
}  // namespace cis
