#include "cis/oracle.hpp"

#include <chrono>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cis/coordinator.hpp"
#include "cis/errors.hpp"

// Brute-force references. Nothing here goes through the belief machinery of
// the coordinator module: probability mass is carried on explicit
// (x, y, m) particles and the protocol tables are read directly.

namespace cis {
namespace {

using Clock = std::chrono::steady_clock;

void require_finite(const ProblemSpec& spec) {
  if (spec.mode != Mode::finite) throw InvalidParameter("enumeration oracles need a finite-mode problem");
  const auto issues = validate_problem(spec);
  if (!issues.empty()) throw InvalidParameter("invalid problem: " + issues.front());
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return b > std::numeric_limits<std::uint64_t>::max() - a ? std::numeric_limits<std::uint64_t>::max() : a + b;
}

template <typename Fn>
void for_each_obs(const ProblemSpec& spec, int t, int x, Fn&& fn) {
  std::vector<int> y(spec.n, 0);
  auto rec = [&](auto&& self, int i, double p) -> void {
    if (i == spec.n) {
      fn(y, p);
      return;
    }
    const Eigen::MatrixXd& kernel = spec.obs_at(i, t);
    for (int v = 0; v < spec.num_obs(i); ++v) {
      if (kernel(x, v) == 0.0) continue;
      y[i] = v;
      self(self, i + 1, p * kernel(x, v));
    }
  };
  rec(rec, 0, 1.0);
}

int local_row(const ProblemSpec& spec, int i, int t, int y, int m) { return y * spec.protocol.mem_size(i, t) + m; }

// Joint message and next memories produced by local data and actions.
std::int64_t communicate(const ProblemSpec& spec, int t, const std::vector<int>& y, const std::vector<int>& m,
                         const std::vector<int>& u, std::vector<int>& next_m) {
  std::int64_t z = 0;
  next_m.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    const ProtocolStep& step = spec.protocol.step(i, t);
    const int k = (m[i] * spec.num_obs(i) + y[i]) * spec.num_actions(i) + u[i];
    z = z * step.msg_size + step.message[k];
    next_m[i] = step.mem_update[k];
  }
  return z;
}

struct Particle {
  int node = 0;
  int x = 0;
  std::vector<int> y;
  std::vector<int> m;
  double p = 0.0;
};

std::vector<Particle> merge(const std::vector<Particle>& in) {
  std::map<std::vector<int>, std::size_t> index;
  std::vector<Particle> out;
  std::vector<int> key;
  for (const auto& q : in) {
    key.assign({q.node, q.x});
    key.insert(key.end(), q.y.begin(), q.y.end());
    key.insert(key.end(), q.m.begin(), q.m.end());
    auto [it, fresh] = index.emplace(key, out.size());
    if (fresh)
      out.push_back(q);
    else
      out[it->second].p += q.p;
  }
  return out;
}

// Particles of the first stage; node = index of the initial common
// observation value among those with positive probability.
std::vector<Particle> initial_particles(const ProblemSpec& spec, std::vector<int>& root_values) {
  const int num_c = spec.num_common_obs();
  std::vector<double> c_mass(num_c, 0.0);
  auto common = [&](int x, int c) { return spec.initial_common_obs.size() == 0 ? 1.0 : spec.initial_common_obs(x, c); };
  for (int x = 0; x < spec.num_states(); ++x)
    for (int c = 0; c < num_c; ++c) c_mass[c] += spec.initial_dist[x] * common(x, c);
  std::vector<int> node_of(num_c, -1);
  root_values.clear();
  for (int c = 0; c < num_c; ++c)
    if (c_mass[c] > kZeroProbability) {
      node_of[c] = static_cast<int>(root_values.size());
      root_values.push_back(c);
    }
  std::vector<Particle> out;
  for (int x = 0; x < spec.num_states(); ++x) {
    if (spec.initial_dist[x] == 0.0) continue;
    for (int c = 0; c < num_c; ++c) {
      const double pc = spec.initial_dist[x] * common(x, c);
      if (pc == 0.0 || node_of[c] < 0) continue;
      for_each_obs(spec, 0, x, [&](const std::vector<int>& y, double py) {
        out.push_back({node_of[c], x, y, std::vector<int>(spec.n, 0), pc * py});
      });
    }
  }
  return out;
}

// Decision points of one stage: every (node, controller, row).
struct DecisionLayout {
  std::vector<int> offset;  // per controller, within a node
  std::vector<int> radix;   // per decision point
  int stride = 0;

  DecisionLayout(const ProblemSpec& spec, int t, int nodes) {
    for (int i = 0; i < spec.n; ++i) {
      offset.push_back(stride);
      stride += spec.num_obs(i) * spec.protocol.mem_size(i, t);
    }
    for (int k = 0; k < nodes; ++k)
      for (int i = 0; i < spec.n; ++i)
        radix.insert(radix.end(), spec.num_obs(i) * spec.protocol.mem_size(i, t), spec.num_actions(i));
  }
  std::uint64_t choices() const {
    std::uint64_t c = 1;
    for (int r : radix) c = sat_mul(c, r);
    return c;
  }
};

bool advance_odometer(std::vector<int>& digits, const std::vector<int>& radix) {
  for (std::size_t k = digits.size(); k-- > 0;) {
    if (++digits[k] < radix[k]) return true;
    digits[k] = 0;
  }
  return false;
}

struct StageResult {
  double cost = 0.0;
  std::vector<Particle> next;
  int next_nodes = 0;
  std::vector<std::map<std::int64_t, int>> children;
};

class BasicSearch {
 public:
  BasicSearch(const ProblemSpec& spec, std::uint64_t cap) : spec_(spec), cap_(cap) {
    for (int t = 0; t < spec.horizon; ++t) levels_.emplace_back();
  }

  std::uint64_t count() {
    std::vector<int> roots;
    auto particles = initial_particles(spec_, roots);
    return count_from(0, particles, static_cast<int>(roots.size()));
  }

  EnumerationReport run() {
    const auto start = Clock::now();
    auto particles = initial_particles(spec_, roots_);
    descend(0, particles, static_cast<int>(roots_.size()), 0.0);
    report_.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return std::move(report_);
  }

 private:
  struct Level {
    int nodes = 0;
    std::vector<int> actions;
    std::vector<std::map<std::int64_t, int>> children;
  };

  double stage_cost(int t, const std::vector<Particle>& particles, const DecisionLayout& layout,
                    const std::vector<int>& actions, std::vector<int>& u) const {
    double cost = 0.0;
    const Eigen::MatrixXd& l = spec_.cost_at(t);
    for (const auto& q : particles) {
      for (int i = 0; i < spec_.n; ++i)
        u[i] = actions[q.node * layout.stride + layout.offset[i] + local_row(spec_, i, t, q.y[i], q.m[i])];
      cost += q.p * l(q.x, spec_.flatten_actions(u.data()));
    }
    return cost;
  }

  StageResult advance(int t, const std::vector<Particle>& particles, int nodes, const DecisionLayout& layout,
                      const std::vector<int>& actions) const {
    StageResult r;
    std::vector<int> u(spec_.n);
    r.cost = stage_cost(t, particles, layout, actions, u);

    std::vector<std::int64_t> z(particles.size());
    std::vector<std::vector<int>> next_m(particles.size());
    std::map<std::pair<int, std::int64_t>, double> group;
    for (std::size_t k = 0; k < particles.size(); ++k) {
      const auto& q = particles[k];
      for (int i = 0; i < spec_.n; ++i)
        u[i] = actions[q.node * layout.stride + layout.offset[i] + local_row(spec_, i, t, q.y[i], q.m[i])];
      z[k] = communicate(spec_, t, q.y, q.m, u, next_m[k]);
      group[{q.node, z[k]}] += q.p;
    }
    r.children.resize(nodes);
    for (const auto& [key, mass] : group)
      if (mass > kZeroProbability) r.children[key.first].emplace(key.second, r.next_nodes++);

    std::vector<Particle> next;
    const Eigen::MatrixXd& kernel = spec_.transition_at(t);
    for (std::size_t k = 0; k < particles.size(); ++k) {
      const auto& q = particles[k];
      auto it = r.children[q.node].find(z[k]);
      if (it == r.children[q.node].end()) continue;
      for (int i = 0; i < spec_.n; ++i)
        u[i] = actions[q.node * layout.stride + layout.offset[i] + local_row(spec_, i, t, q.y[i], q.m[i])];
      const int row = q.x * spec_.joint_actions() + spec_.flatten_actions(u.data());
      for (int x = 0; x < spec_.num_states(); ++x) {
        if (kernel(row, x) == 0.0) continue;
        for_each_obs(spec_, t + 1, x, [&](const std::vector<int>& y, double py) {
          next.push_back({it->second, x, y, next_m[k], q.p * kernel(row, x) * py});
        });
      }
    }
    r.next = merge(next);
    return r;
  }

  std::uint64_t count_from(int t, const std::vector<Particle>& particles, int nodes) {
    const DecisionLayout layout(spec_, t, nodes);
    const std::uint64_t choices = layout.choices();
    if (choices > cap_) return sat_add(cap_, 1);
    if (t + 1 == spec_.horizon) return choices;
    std::uint64_t total = 0;
    std::vector<int> actions(layout.radix.size(), 0);
    do {
      const auto r = advance(t, particles, nodes, layout, actions);
      total = sat_add(total, count_from(t + 1, r.next, r.next_nodes));
      if (total > cap_) return total;
    } while (advance_odometer(actions, layout.radix));
    return total;
  }

  void descend(int t, const std::vector<Particle>& particles, int nodes, double cost_so_far) {
    const DecisionLayout layout(spec_, t, nodes);
    Level& level = levels_[t];
    level.nodes = nodes;
    level.actions.assign(layout.radix.size(), 0);
    const bool last = t + 1 == spec_.horizon;
    std::vector<int> u(spec_.n);
    do {
      if (last) {
        ++report_.count;
        const double total = cost_so_far + stage_cost(t, particles, layout, level.actions, u);
        level.children.assign(nodes, {});
        if (report_.count == 1 || total < report_.minimum) {
          report_.minimum = total;
          snapshot();
        }
      } else {
        auto r = advance(t, particles, nodes, layout, level.actions);
        level.children = std::move(r.children);
        descend(t + 1, r.next, r.next_nodes, cost_so_far + r.cost);
      }
    } while (advance_odometer(level.actions, layout.radix));
  }

  void snapshot() {
    ControlStrategy g;
    g.stages.resize(spec_.horizon);
    for (int t = 0; t < spec_.horizon; ++t) {
      const Level& level = levels_[t];
      const DecisionLayout layout(spec_, t, 0);
      for (int k = 0; k < level.nodes; ++k) {
        LawNode law;
        for (int i = 0; i < spec_.n; ++i) {
          const int rows = spec_.num_obs(i) * spec_.protocol.mem_size(i, t);
          const auto begin = level.actions.begin() + k * layout.stride + layout.offset[i];
          law.tables.emplace_back(begin, begin + rows);
        }
        law.children = level.children[k];
        g.stages[t].push_back(std::move(law));
      }
    }
    for (std::size_t k = 0; k < roots_.size(); ++k) g.roots.emplace(roots_[k], static_cast<int>(k));
    report_.argmin = std::move(g);
  }

  const ProblemSpec& spec_;
  std::uint64_t cap_;
  std::vector<Level> levels_;
  std::vector<int> roots_;
  EnumerationReport report_;
};

// Coordinator search over the tree of (prescription, message) histories.
class CoordinatorSearch {
 public:
  CoordinatorSearch(const ProblemSpec& spec, std::uint64_t cap) : spec_(spec), cap_(cap) {
    for (int t = 0; t < spec.horizon; ++t) {
      std::uint64_t size = 1;
      std::vector<int> radix;
      for (int i = 0; i < spec.n; ++i) {
        const int rows = spec.num_obs(i) * spec.protocol.mem_size(i, t);
        radix.insert(radix.end(), rows, spec.num_actions(i));
        for (int r = 0; r < rows; ++r) size = sat_mul(size, spec.num_actions(i));
      }
      if (size > cap)
        throw Infeasible("stage " + std::to_string(t) + " has " + std::to_string(size) +
                         " joint prescriptions, above the cap of " + std::to_string(cap));
      radix_.push_back(std::move(radix));
    }
  }

  EnumerationReport run() {
    const auto start = Clock::now();
    std::vector<int> roots;
    auto particles = initial_particles(spec_, roots);
    std::vector<std::vector<Particle>> per_root(roots.size());
    for (auto& q : particles) per_root[q.node].push_back(q);

    EnumerationReport report;
    std::vector<Plan> plans;
    for (auto& group : per_root) {
      for (auto& q : group) q.node = 0;
      plans.push_back(best(0, group));
      report.minimum += plans.back().value;
    }
    report.count = evaluations_;

    ControlStrategy& g = report.argmin;
    g.stages.resize(spec_.horizon);
    std::vector<const Plan*> frontier;
    for (std::size_t k = 0; k < plans.size(); ++k) {
      g.roots.emplace(roots[k], static_cast<int>(k));
      frontier.push_back(&plans[k]);
    }
    for (int t = 0; t < spec_.horizon; ++t) {
      std::vector<const Plan*> next;
      for (const Plan* plan : frontier) {
        LawNode law;
        law.tables = plan->tables;
        for (const auto& [z, child] : plan->children) {
          law.children.emplace(z, static_cast<int>(next.size()));
          next.push_back(&child);
        }
        g.stages[t].push_back(std::move(law));
      }
      frontier = std::move(next);
    }
    report.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return report;
  }

 private:
  struct Plan {
    double value = std::numeric_limits<double>::infinity();
    std::vector<std::vector<int>> tables;
    std::vector<std::pair<std::int64_t, Plan>> children;
  };

  std::vector<std::vector<int>> split(int t, const std::vector<int>& flat) const {
    std::vector<std::vector<int>> tables;
    auto it = flat.begin();
    for (int i = 0; i < spec_.n; ++i) {
      const int rows = spec_.num_obs(i) * spec_.protocol.mem_size(i, t);
      tables.emplace_back(it, it + rows);
      it += rows;
    }
    return tables;
  }

  Plan best(int t, const std::vector<Particle>& particles) {
    Plan winner;
    std::vector<int> flat(radix_[t].size(), 0);
    std::vector<int> u(spec_.n);
    std::vector<int> next_m;
    const Eigen::MatrixXd& l = spec_.cost_at(t);
    do {
      if (++evaluations_ > kDefaultBranchCap)
        throw Infeasible("coordinator search exceeded " + std::to_string(kDefaultBranchCap) + " evaluations");
      const auto tables = split(t, flat);
      Plan plan;
      plan.value = 0.0;
      std::map<std::int64_t, std::vector<Particle>> groups;
      std::map<std::int64_t, double> group_mass;
      for (const auto& q : particles) {
        for (int i = 0; i < spec_.n; ++i) u[i] = tables[i][local_row(spec_, i, t, q.y[i], q.m[i])];
        const int u_flat = spec_.flatten_actions(u.data());
        plan.value += q.p * l(q.x, u_flat);
        if (t + 1 == spec_.horizon) continue;
        const std::int64_t z = communicate(spec_, t, q.y, q.m, u, next_m);
        group_mass[z] += q.p;
        auto& out = groups[z];
        const int row = q.x * spec_.joint_actions() + u_flat;
        for (int x = 0; x < spec_.num_states(); ++x) {
          const double px = spec_.transition_at(t)(row, x);
          if (px == 0.0) continue;
          for_each_obs(spec_, t + 1, x,
                       [&](const std::vector<int>& y, double py) { out.push_back({0, x, y, next_m, q.p * px * py}); });
        }
      }
      for (auto& [z, group] : groups) {
        if (group_mass[z] <= kZeroProbability) continue;
        Plan child = best(t + 1, merge(group));
        plan.value += child.value;
        plan.children.emplace_back(z, std::move(child));
      }
      if (plan.value < winner.value) {
        plan.tables = tables;
        winner = std::move(plan);
      }
    } while (advance_odometer(flat, radix_[t]));
    return winner;
  }

  const ProblemSpec& spec_;
  std::uint64_t cap_;
  std::vector<std::vector<int>> radix_;
  std::uint64_t evaluations_ = 0;
};

}  // namespace

double exact_cost_of_strategy(const ProblemSpec& spec, const ControlStrategy& g, std::uint64_t branch_cap) {
  require_finite(spec);
  std::uint64_t branches = 0;
  std::vector<int> u(spec.n);

  auto law = [&](int t, int node) -> const LawNode& {
    if (t >= static_cast<int>(g.stages.size()) || node < 0 || node >= static_cast<int>(g.stages[t].size()))
      throw UnreachableInformation("strategy has no law for node " + std::to_string(node) + " at stage " +
                                   std::to_string(t));
    return g.stages[t][node];
  };

  auto rec = [&](auto&& self, int t, int x, const std::vector<int>& y, const std::vector<int>& m, int node,
                 double p) -> double {
    const LawNode& here = law(t, node);
    for (int i = 0; i < spec.n; ++i) u[i] = here.tables.at(i).at(local_row(spec, i, t, y[i], m[i]));
    const int u_flat = spec.flatten_actions(u.data());
    double total = p * spec.cost_at(t)(x, u_flat);
    if (t + 1 == spec.horizon) {
      if (++branches > branch_cap)
        throw Infeasible("trajectory enumeration exceeded " + std::to_string(branch_cap) + " branches");
      return total;
    }
    std::vector<int> next_m;
    const std::vector<int> actions = u;
    const std::int64_t z = communicate(spec, t, y, m, actions, next_m);
    auto it = here.children.find(z);
    if (it == here.children.end())
      throw UnreachableInformation("strategy has no successor for message " + std::to_string(z) + " at stage " +
                                   std::to_string(t));
    const int row = x * spec.joint_actions() + u_flat;
    for (int x2 = 0; x2 < spec.num_states(); ++x2) {
      const double px = spec.transition_at(t)(row, x2);
      if (px == 0.0) continue;
      for_each_obs(spec, t + 1, x2, [&](const std::vector<int>& y2, double py) {
        total += self(self, t + 1, x2, y2, next_m, it->second, p * px * py);
      });
    }
    return total;
  };

  double total = 0.0;
  const std::vector<int> empty(spec.n, 0);
  for (int x = 0; x < spec.num_states(); ++x) {
    if (spec.initial_dist[x] == 0.0) continue;
    for (int c = 0; c < spec.num_common_obs(); ++c) {
      const double pc = spec.initial_common_obs.size() == 0 ? 1.0 : spec.initial_common_obs(x, c);
      if (pc == 0.0) continue;
      auto root = g.roots.find(c);
      if (root == g.roots.end())
        throw UnreachableInformation("strategy has no root for initial common observation " + std::to_string(c));
      for_each_obs(spec, 0, x, [&](const std::vector<int>& y, double py) {
        total += rec(rec, 0, x, y, empty, root->second, spec.initial_dist[x] * pc * py);
      });
    }
  }
  return total;
}

std::uint64_t count_basic_strategies(const ProblemSpec& spec, std::uint64_t cap) {
  require_finite(spec);
  return BasicSearch(spec, cap).count();
}

EnumerationReport enumerate_basic_strategies(const ProblemSpec& spec, std::uint64_t cap) {
  const std::uint64_t count = count_basic_strategies(spec, cap);
  if (count > cap)
    throw Infeasible("more than " + std::to_string(cap) + " basic strategies (counted at least " +
                     std::to_string(count) + ")");
  return BasicSearch(spec, cap).run();
}

EnumerationReport enumerate_coordinator_strategies(const ProblemSpec& spec, std::uint64_t cap) {
  require_finite(spec);
  return CoordinatorSearch(spec, cap).run();
}

}  // namespace cis
