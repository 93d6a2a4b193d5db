#include "cis/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <tuple>
#include <unordered_map>

#include "cis/coordinator.hpp"
#include "cis/errors.hpp"
#include "parallel.hpp"

namespace cis {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double uniform_draw(std::uint64_t seed, std::uint64_t episode, int t, DrawKind kind, int index) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ episode);
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(t)));
  h = splitmix64(h ^ static_cast<std::uint64_t>(kind));
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(index)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

int sample_index(const Eigen::Ref<const Eigen::RowVectorXd>& probabilities, double uniform) {
  double cumulative = 0.0;
  int last_positive = 0;
  for (Eigen::Index k = 0; k < probabilities.size(); ++k) {
    if (probabilities[k] <= 0.0) continue;
    cumulative += probabilities[k];
    last_positive = static_cast<int>(k);
    if (uniform < cumulative) return last_positive;
  }
  return last_positive;
}

SimReport summarize(const std::vector<double>& totals, std::uint64_t seed) {
  SimReport report;
  report.seed = seed;
  report.episodes = totals.size();
  if (totals.empty()) return report;
  // Neumaier summation for both passes.
  auto sum = [&](auto&& term) {
    double s = 0.0;
    double c = 0.0;
    for (double v : totals) {
      const double x = term(v);
      const double t = s + x;
      c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
      s = t;
    }
    return s + c;
  };
  const double n = static_cast<double>(totals.size());
  report.mean = sum([](double v) { return v; }) / n;
  if (totals.size() > 1) {
    const double ss = sum([&](double v) { return (v - report.mean) * (v - report.mean); });
    report.stderr_mean = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return report;
}

namespace {

// Raised inside an episode when a realized message has zero probability
// under the tracked belief.
struct AuditStop {};

class Actor {
 public:
  virtual ~Actor() = default;
  virtual void start(int common_obs) = 0;
  virtual void act(int t, const std::vector<int>& y, const std::vector<int>& m, std::vector<int>& u) = 0;
  virtual void observe(int t, std::int64_t z) = 0;
};

// Fills `traj` step by step so that a run aborted by an exception keeps the
// steps it completed.
void run_episode(const ProblemSpec& spec, std::uint64_t seed, std::uint64_t episode, int horizon, double discount,
                 Actor& actor, Trajectory& traj) {
  traj = Trajectory{};
  int x = sample_index(spec.initial_dist.transpose(), uniform_draw(seed, episode, 0, DrawKind::initial_state));
  if (spec.initial_common_obs.size() != 0)
    traj.common_obs = sample_index(spec.initial_common_obs.row(x), uniform_draw(seed, episode, 0, DrawKind::common_obs));
  actor.start(traj.common_obs);

  std::vector<int> m(spec.n, 0);
  std::vector<int> next_m(spec.n, 0);
  double weight = 1.0;
  for (int t = 0; t < horizon; ++t) {
    TrajectoryStep step;
    step.x = x;
    step.m = m;
    step.y.resize(spec.n);
    step.u.resize(spec.n);
    for (int i = 0; i < spec.n; ++i)
      step.y[i] = sample_index(spec.obs_at(i, t).row(x), uniform_draw(seed, episode, t, DrawKind::observation, i));
    actor.act(t, step.y, m, step.u);
    const int u_flat = spec.flatten_actions(step.u.data());
    step.cost = spec.cost_at(t)(x, u_flat);
    traj.total_cost += weight * step.cost;
    weight *= discount;

    std::int64_t z = 0;
    for (int i = 0; i < spec.n; ++i) {
      const ProtocolStep& p = spec.protocol.step(i, t);
      const int k = (m[i] * spec.num_obs(i) + step.y[i]) * spec.num_actions(i) + step.u[i];
      z = z * p.msg_size + p.message[k];
      next_m[i] = p.mem_update[k];
    }
    step.z = z;
    traj.steps.push_back(std::move(step));
    if (t + 1 == horizon) break;
    actor.observe(t, z);
    x = sample_index(spec.transition_at(t).row(x * spec.joint_actions() + u_flat),
                     uniform_draw(seed, episode, t, DrawKind::transition));
    m = next_m;
  }
}

// Prescription tables of every node of a policy tree.
std::vector<std::vector<JointPrescription>> tree_prescriptions(const ProblemSpec& spec, const PolicyTree& tree) {
  std::vector<std::vector<JointPrescription>> out(tree.stages.size());
  for (std::size_t t = 0; t < tree.stages.size(); ++t) {
    if (tree.stages[t].empty()) continue;
    const PrescriptionSpace space(spec, static_cast<int>(t), std::numeric_limits<std::uint64_t>::max());
    for (const auto& node : tree.stages[t]) out[t].push_back(space.at(node.prescription));
  }
  return out;
}

class TreeActor : public Actor {
 public:
  TreeActor(const ProblemSpec& spec, const PolicyTree& tree,
            const std::vector<std::vector<JointPrescription>>& prescriptions, bool audit)
      : spec_(spec), tree_(tree), prescriptions_(prescriptions), audit_(audit) {}

  void start(int common_obs) override {
    for (const auto& root : tree_.roots)
      if (root.common_obs == common_obs) {
        node_ = root.node;
        return;
      }
    throw UnreachableInformation("policy has no root for initial common observation " + std::to_string(common_obs));
  }

  void act(int t, const std::vector<int>& y, const std::vector<int>& m, std::vector<int>& u) override {
    if (t >= static_cast<int>(prescriptions_.size()) || node_ >= static_cast<int>(prescriptions_[t].size()))
      throw UnreachableInformation("policy has no node at stage " + std::to_string(t));
    const auto& tables = prescriptions_[t][node_].tables;
    for (int i = 0; i < spec_.n; ++i) u[i] = tables[i][y[i] * spec_.protocol.mem_size(i, t) + m[i]];
  }

  void observe(int t, std::int64_t z) override {
    if (audit_ && !(probability(t, z) > kZeroProbability)) throw AuditStop{};
    const int child = tree_.find_child(t, node_, z);
    if (child < 0)
      throw UnreachableInformation("policy has no successor for message " + std::to_string(z) + " at stage " +
                                   std::to_string(t));
    node_ = child;
  }

 private:
  double probability(int t, std::int64_t z) {
    const auto key = std::make_tuple(t, node_, z);
    auto it = audited_.find(key);
    if (it != audited_.end()) return it->second;
    const auto& stored = tree_.stages[t][node_].belief;
    const Belief belief = tree_.reduced ? zeta(spec_, {t, stored}) : Belief{t, stored};
    const double p = observation_probability(spec_, belief, prescriptions_[t][node_], z);
    audited_.emplace(key, p);
    return p;
  }

  const ProblemSpec& spec_;
  const PolicyTree& tree_;
  const std::vector<std::vector<JointPrescription>>& prescriptions_;
  bool audit_;
  int node_ = 0;
  std::map<std::tuple<int, int, std::int64_t>, double> audited_;
};

class LawActor : public Actor {
 public:
  LawActor(const ProblemSpec& spec, const ControlStrategy& g) : spec_(spec), g_(g) {}

  void start(int common_obs) override {
    auto it = g_.roots.find(common_obs);
    if (it == g_.roots.end())
      throw UnreachableInformation("strategy has no root for initial common observation " +
                                   std::to_string(common_obs));
    node_ = it->second;
  }

  void act(int t, const std::vector<int>& y, const std::vector<int>& m, std::vector<int>& u) override {
    if (t >= static_cast<int>(g_.stages.size()) || node_ >= static_cast<int>(g_.stages[t].size()))
      throw UnreachableInformation("strategy has no law at stage " + std::to_string(t));
    for (int i = 0; i < spec_.n; ++i) u[i] = g_.action(i, t, node_, y[i], m[i], spec_.protocol.mem_size(i, t));
  }

  void observe(int t, std::int64_t z) override {
    const auto& children = g_.stages[t][node_].children;
    auto it = children.find(z);
    if (it == children.end())
      throw UnreachableInformation("strategy has no successor for message " + std::to_string(z) + " at stage " +
                                   std::to_string(t));
    node_ = it->second;
  }

 private:
  const ProblemSpec& spec_;
  const ControlStrategy& g_;
  int node_ = 0;
};

class StationaryActor : public Actor {
 public:
  StationaryActor(const ProblemSpec& spec, const StationaryPolicy& policy, const PrescriptionSpace& space,
                  const std::unordered_map<BeliefKey, int, BeliefKeyHash>& index)
      : spec_(spec), policy_(policy), space_(space), index_(index) {}

  void start(int common_obs) override {
    for (const auto& root : policy_.roots)
      if (root.common_obs == common_obs) {
        enter(root.node);
        return;
      }
    throw UnreachableInformation("policy has no root for initial common observation " + std::to_string(common_obs));
  }

  void act(int, const std::vector<int>& y, const std::vector<int>& m, std::vector<int>& u) override {
    for (int i = 0; i < spec_.n; ++i) u[i] = gamma_.tables[i][y[i] * spec_.protocol.mem_size(i, 0) + m[i]];
  }

  void observe(int, std::int64_t z) override {
    const Belief here{0, policy_.entries[entry_].belief};
    if (!(observation_probability(spec_, here, gamma_, z) > kZeroProbability)) throw AuditStop{};
    const Belief next = eta_update(spec_, here, gamma_, z);
    auto it = index_.find(canonical_key(0, next.weights));
    if (it == index_.end()) throw UnreachableInformation("stationary policy has no entry for the reached belief");
    enter(it->second);
  }

 private:
  void enter(int entry) {
    entry_ = entry;
    gamma_ = space_.at(policy_.entries[entry].prescription);
  }

  const ProblemSpec& spec_;
  const StationaryPolicy& policy_;
  const PrescriptionSpace& space_;
  const std::unordered_map<BeliefKey, int, BeliefKeyHash>& index_;
  int entry_ = 0;
  JointPrescription gamma_;
};

template <typename MakeActor>
SimReport drive(const ProblemSpec& spec, std::uint64_t seed, std::uint64_t episodes, int horizon, double discount,
                const SimOptions& options, MakeActor&& make_actor) {
  if (episodes == 0) throw InvalidParameter("episodes must be at least 1");
  std::vector<double> totals(episodes, 0.0);
  std::vector<char> stopped(episodes, 0);
  if (options.trajectories) options.trajectories->assign(episodes, Trajectory{});
  detail::parallel_chunks(episodes, options.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    auto actor = make_actor();
    for (std::size_t e = begin; e < end; ++e) {
      try {
        Trajectory traj;
        run_episode(spec, seed, e, horizon, discount, *actor, traj);
        totals[e] = traj.total_cost;
        if (options.trajectories) (*options.trajectories)[e] = std::move(traj);
      } catch (const AuditStop&) {
        stopped[e] = 1;
      }
    }
  });
  std::vector<double> kept;
  kept.reserve(episodes);
  std::uint64_t violations = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    if (stopped[e])
      ++violations;
    else
      kept.push_back(totals[e]);
  }
  SimReport report = summarize(kept, seed);
  report.episodes = episodes;
  report.audit_violations = violations;
  return report;
}

void require_tree_fits(const ProblemSpec& spec, const PolicyTree& tree) {
  if (spec.mode != Mode::finite) throw InvalidParameter("policy trees execute finite-mode problems only");
  if (static_cast<int>(tree.stages.size()) != spec.horizon)
    throw InvalidParameter("policy has " + std::to_string(tree.stages.size()) + " stages but the problem has " +
                           std::to_string(spec.horizon));
}

}  // namespace

SimReport rollout(const ProblemSpec& spec, const PolicyTree& tree, std::uint64_t seed, std::uint64_t episodes,
                  const SimOptions& options) {
  require_tree_fits(spec, tree);
  const auto prescriptions = tree_prescriptions(spec, tree);
  return drive(spec, seed, episodes, spec.horizon, 1.0, options,
               [&] { return std::make_unique<TreeActor>(spec, tree, prescriptions, true); });
}

SimReport rollout(const ProblemSpec& spec, const ControlStrategy& g, std::uint64_t seed, std::uint64_t episodes,
                  const SimOptions& options) {
  if (spec.mode != Mode::finite) throw InvalidParameter("control laws execute finite-mode problems only");
  return drive(spec, seed, episodes, spec.horizon, 1.0, options,
               [&] { return std::make_unique<LawActor>(spec, g); });
}

SimReport rollout(const ProblemSpec& spec, const StationaryPolicy& policy, std::uint64_t seed,
                  std::uint64_t episodes, const SimOptions& options) {
  if (spec.mode != Mode::discounted) throw InvalidParameter("stationary policies execute discounted problems only");
  const PrescriptionSpace space(spec, 0, std::numeric_limits<std::uint64_t>::max());
  std::unordered_map<BeliefKey, int, BeliefKeyHash> index;
  for (std::size_t k = 0; k < policy.entries.size(); ++k)
    index.emplace(canonical_key(0, policy.entries[k].belief), static_cast<int>(k));
  return drive(spec, seed, episodes, policy.iterations, policy.discount, options,
               [&] { return std::make_unique<StationaryActor>(spec, policy, space, index); });
}

PairedReport paired_rollout(const ProblemSpec& spec, const PolicyTree& tree, const ControlStrategy& g,
                            std::uint64_t seed, std::uint64_t episodes) {
  require_tree_fits(spec, tree);
  const auto prescriptions = tree_prescriptions(spec, tree);
  TreeActor coordinator(spec, tree, prescriptions, false);
  LawActor controllers(spec, g);

  // A run that cannot continue is cut short and compared up to where it
  // stopped; the first missing step then counts as a divergence.
  auto run = [&](Actor& actor, std::uint64_t e, Trajectory& traj) {
    try {
      run_episode(spec, seed, e, spec.horizon, 1.0, actor, traj);
      return true;
    } catch (const UnreachableInformation&) {
      return false;
    }
  };

  PairedReport report;
  report.episodes = episodes;
  Trajectory a;
  Trajectory b;
  for (std::uint64_t e = 0; e < episodes; ++e) {
    const bool done_a = run(coordinator, e, a);
    const bool done_b = run(controllers, e, b);
    const std::size_t common = std::min(a.steps.size(), b.steps.size());

    int t_div = -1;
    std::string field;
    for (std::size_t t = 0; t < common && t_div < 0; ++t) {
      const auto& p = a.steps[t];
      const auto& q = b.steps[t];
      if (p.x != q.x) field = "x";
      else if (p.y != q.y) field = "y";
      else if (p.m != q.m) field = "m";
      else if (p.u != q.u) field = "u";
      else if (p.z != q.z) field = "z";
      else if (p.cost != q.cost) field = "cost";
      if (!field.empty()) t_div = static_cast<int>(t);
    }
    if (t_div < 0 && !(done_a && done_b)) {
      t_div = static_cast<int>(common);
      field = "unreachable";
    }
    if (t_div < 0) continue;
    ++report.divergent_episodes;
    if (!report.diverged || t_div < report.first.t) {
      report.diverged = true;
      report.first = {e, t_div, field};
    }
  }
  return report;
}

}  // namespace cis
