#include "cis/dp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <tuple>
#include <unordered_map>

#include "cis/errors.hpp"
#include "parallel.hpp"

namespace cis {

namespace {

// Strict improvement beyond round-off; anything closer is a tie and keeps the
// earlier candidate.
bool improves(double candidate, double incumbent) {
  if (!std::isfinite(incumbent)) return true;
  return candidate < incumbent - kTieTolerance * std::max(1.0, std::abs(incumbent));
}

}  // namespace

int PolicyTree::find_child(int t, int node, std::int64_t message) const {
  const auto& children = stages[t][node].children;
  auto it = std::lower_bound(children.begin(), children.end(), message,
                             [](const auto& c, std::int64_t z) { return c.first < z; });
  if (it == children.end() || it->first != message) return -1;
  return it->second;
}

int StationaryPolicy::find(const Eigen::VectorXd& belief) const {
  const auto key = canonical_key(0, belief);
  for (std::size_t k = 0; k < entries.size(); ++k)
    if (entries[k].belief.size() == belief.size() && canonical_key(0, entries[k].belief) == key)
      return static_cast<int>(k);
  return -1;
}

std::pair<double, std::uint64_t> min_immediate_cost(const StageModel& model, const Eigen::VectorXd& belief,
                                                    const PrescriptionSpace& space) {
  // The expected immediate cost is additive over the rows of the last
  // controller's table once the other controllers' tables are fixed, so the
  // last table is minimized row by row.
  const int n = space.controllers();
  const int last = n - 1;
  const int rows = space.rows(last);
  const int nu = space.num_actions(last);
  const ProblemSpec& spec = model.spec();

  std::vector<Index> support;
  std::vector<double> mass;
  for (Eigen::Index s = 0; s < belief.size(); ++s)
    if (belief[s] > 0.0) {
      support.push_back(s);
      mass.push_back(belief[s]);
    }

  std::uint64_t prefix_count = 1;
  for (int i = 0; i < last; ++i) prefix_count *= space.controller_size(i);

  std::vector<std::vector<int>> tables(n);
  std::vector<double> accum(static_cast<std::size_t>(rows) * nu);
  std::vector<int> u(n);
  std::vector<int> last_table(rows);
  double best = std::numeric_limits<double>::infinity();
  std::uint64_t best_index = 0;

  for (std::uint64_t prefix = 0; prefix < prefix_count; ++prefix) {
    std::uint64_t rest = prefix;
    for (int i = last; i-- > 0;) {
      tables[i] = space.controller_table(i, rest % space.controller_size(i));
      rest /= space.controller_size(i);
    }
    std::fill(accum.begin(), accum.end(), 0.0);
    for (std::size_t k = 0; k < support.size(); ++k) {
      const Index s = support[k];
      int flat = 0;
      for (int i = 0; i < last; ++i) {
        u[i] = tables[i][model.row_of(i, s)];
        flat = flat * spec.num_actions(i) + u[i];
      }
      const int r = model.row_of(last, s);
      for (int a = 0; a < nu; ++a) accum[static_cast<std::size_t>(r) * nu + a] += mass[k] * model.cost(s, flat * nu + a);
    }
    double total = 0.0;
    for (int r = 0; r < rows; ++r) {
      int arg = 0;
      for (int a = 1; a < nu; ++a)
        if (improves(accum[static_cast<std::size_t>(r) * nu + a], accum[static_cast<std::size_t>(r) * nu + arg]))
          arg = a;
      last_table[r] = arg;
      total += accum[static_cast<std::size_t>(r) * nu + arg];
    }
    if (improves(total, best)) {
      best = total;
      std::uint64_t last_index = 0;
      for (int r = 0; r < rows; ++r) last_index = last_index * nu + last_table[r];
      best_index = prefix * space.controller_size(last) + last_index;
    }
  }
  return {best, best_index};
}

namespace {

using Clock = std::chrono::steady_clock;

struct StageTable {
  BeliefIndex index;
  std::vector<Eigen::VectorXd> beliefs;
  std::vector<double> value;
  std::vector<std::uint64_t> choice;

  int find(const BeliefKey& key, const Eigen::VectorXd& belief) const { return index.find(key, belief); }
  int insert(const BeliefKey& key, const Eigen::VectorXd& belief) {
    bool fresh = false;
    const int id = index.insert(key, belief, static_cast<int>(beliefs.size()), fresh);
    if (fresh) beliefs.push_back(belief);
    return id;
  }
};

Eigen::VectorXd reduce(const StateLayout& layout, const Eigen::VectorXd& full) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.reduced_size());
  const Index per_x = layout.obs_product() * layout.mem_product();
  for (Index s = 0; s < full.size(); ++s) {
    if (full[s] == 0.0) continue;
    out[(s / per_x) * layout.mem_product() + s % layout.mem_product()] += full[s];
  }
  return out;
}

class FiniteSolver {
 public:
  FiniteSolver(const ProblemSpec& spec, bool reduced, const SolveOptions& options)
      : spec_(spec), reduced_(reduced), options_(options) {
    if (spec.mode != Mode::finite) throw InvalidParameter("finite-horizon solver needs a finite-mode problem");
    const auto issues = validate_problem(spec);
    if (!issues.empty()) throw InvalidParameter("invalid problem: " + issues.front());
    for (int t = 0; t < spec.horizon; ++t) {
      models_.emplace_back(spec, t);
      spaces_.emplace_back(spec, t, options.prescription_cap);
    }
    tables_.resize(spec.horizon);
  }

  FiniteSolution run(const std::vector<RootBelief>& roots, int t0) {
    const auto start = Clock::now();
    for (const auto& root : roots) {
      const Eigen::VectorXd stored = stored_form(t0, root.belief.weights);
      tables_[t0].insert(canonical_key(t0, stored), stored);
    }
    for (int t = t0; t + 1 < spec_.horizon; ++t) expand_stage(t);
    for (int t = spec_.horizon; t-- > t0;) backup_stage(t);

    FiniteSolution solution;
    auto& tree = solution.tree;
    tree.reduced = reduced_;
    tree.stages.resize(spec_.horizon);
    std::vector<std::unordered_map<int, int>> renumber(spec_.horizon);
    std::vector<std::vector<int>> order(spec_.horizon);
    auto visit = [&](int t, int table_id) {
      auto [it, fresh] = renumber[t].emplace(table_id, static_cast<int>(order[t].size()));
      if (fresh) order[t].push_back(table_id);
      return it->second;
    };
    double total = 0.0;
    for (const auto& root : roots) {
      const Eigen::VectorXd stored = stored_form(t0, root.belief.weights);
      const int id = tables_[t0].find(canonical_key(t0, stored), stored);
      tree.roots.push_back({root.common_obs, root.probability, visit(t0, id)});
      total += root.probability * tables_[t0].value[id];
    }
    std::vector<Branch> branches;
    BeliefKey key;
    for (int t = t0; t < spec_.horizon; ++t) {
      Expander expander(models_[t]);
      for (std::size_t k = 0; k < order[t].size(); ++k) {
        const int id = order[t][k];
        PolicyNode node;
        node.belief = tables_[t].beliefs[id];
        node.prescription = tables_[t].choice[id];
        node.value = tables_[t].value[id];
        if (t + 1 < spec_.horizon) {
          expander.set_belief(full_belief(t, node.belief));
          expander.expand(spaces_[t].at(node.prescription).tables, branches);
          for (const auto& b : branches) {
            const Eigen::VectorXd child = stored_form(t + 1, b.next);
            canonical_key(t + 1, child, key);
            node.children.emplace_back(b.message, visit(t + 1, tables_[t + 1].find(key, child)));
          }
        }
        tree.stages[t].push_back(std::move(node));
      }
    }

    auto& report = solution.report;
    report.optimal_value = total;
    for (int t = 0; t < spec_.horizon; ++t) {
      report.explored_nodes.push_back(tables_[t].beliefs.size());
      report.policy_nodes.push_back(tree.stages[t].size());
      report.prescription_space_sizes.push_back(spaces_[t].size());
    }
    report.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return solution;
  }

 private:
  Eigen::VectorXd full_belief(int t, const Eigen::VectorXd& stored) const {
    if (!reduced_) return stored;
    return zeta(spec_, {t, stored}).weights;
  }
  Eigen::VectorXd stored_form(int t, const Eigen::VectorXd& full) const {
    if (!reduced_) return full;
    return reduce(models_[t].layout(), full);
  }

  void expand_stage(int t) {
    StageTable& current = tables_[t];
    StageTable& next = tables_[t + 1];
    const std::size_t count = current.beliefs.size();
    const std::size_t chunks = detail::chunk_count(count, options_.threads);
    std::vector<std::vector<std::pair<BeliefKey, Eigen::VectorXd>>> found(chunks);

    detail::parallel_chunks(count, options_.threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
      Expander expander(models_[t]);
      std::vector<Branch> branches;
      std::unordered_map<BeliefKey, int, BeliefKeyHash> seen;
      BeliefKey key;
      for (std::size_t node = begin; node < end; ++node) {
        expander.set_belief(full_belief(t, current.beliefs[node]));
        JointPrescription gamma = spaces_[t].at(0);
        do {
          expander.expand(gamma.tables, branches);
          for (const auto& b : branches) {
            const Eigen::VectorXd child = stored_form(t + 1, b.next);
            canonical_key(t + 1, child, key);
            if (seen.emplace(key, 0).second) {
              found[chunk].emplace_back(key, child);
              if (seen.size() > options_.node_cap) node_overflow(t + 1);
            }
          }
        } while (spaces_[t].next(gamma));
      }
    });

    for (auto& chunk : found)
      for (auto& [key, belief] : chunk) next.insert(key, belief);
    if (next.beliefs.size() > options_.node_cap) node_overflow(t + 1);
  }

  [[noreturn]] void node_overflow(int t) const {
    throw SizeOverflow("more than " + std::to_string(options_.node_cap) + " distinct beliefs at stage " +
                       std::to_string(t));
  }

  void backup_stage(int t) {
    StageTable& current = tables_[t];
    const std::size_t count = current.beliefs.size();
    current.value.assign(count, 0.0);
    current.choice.assign(count, 0);
    const bool last = t + 1 == spec_.horizon;

    detail::parallel_chunks(count, options_.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
      if (last) {
        for (std::size_t node = begin; node < end; ++node) {
          const auto [v, g] = min_immediate_cost(models_[t], full_belief(t, current.beliefs[node]), spaces_[t]);
          current.value[node] = v;
          current.choice[node] = g;
        }
        return;
      }
      const StageTable& next = tables_[t + 1];
      Expander expander(models_[t]);
      std::vector<Branch> branches;
      BeliefKey key;
      for (std::size_t node = begin; node < end; ++node) {
        expander.set_belief(full_belief(t, current.beliefs[node]));
        double best = std::numeric_limits<double>::infinity();
        std::uint64_t best_index = 0;
        JointPrescription gamma = spaces_[t].at(0);
        do {
          double total = expander.expand(gamma.tables, branches);
          for (const auto& b : branches) {
            const Eigen::VectorXd stored = stored_form(t + 1, b.next);
            canonical_key(t + 1, stored, key);
            const int child = next.find(key, stored);
            if (child < 0) throw Error("internal: child belief missing from the forward expansion");
            total += b.probability * next.value[child];
          }
          if (improves(total, best)) {
            best = total;
            best_index = gamma.index;
          }
        } while (spaces_[t].next(gamma));
        current.value[node] = best;
        current.choice[node] = best_index;
      }
    });
  }

  const ProblemSpec& spec_;
  bool reduced_;
  SolveOptions options_;
  std::vector<StageModel> models_;
  std::vector<PrescriptionSpace> spaces_;
  std::vector<StageTable> tables_;
};

}  // namespace

FiniteSolution solve_finite(const ProblemSpec& spec, const SolveOptions& options) {
  FiniteSolver solver(spec, false, options);
  return solver.run(initial_beliefs(spec), 0);
}

FiniteSolution solve_finite_reduced(const ProblemSpec& spec, const SolveOptions& options) {
  FiniteSolver solver(spec, true, options);
  return solver.run(initial_beliefs(spec), 0);
}

double value_from(const ProblemSpec& spec, const Belief& belief, const SolveOptions& options) {
  FiniteSolver solver(spec, false, options);
  return solver.run({{0, 1.0, belief}}, belief.t).report.optimal_value;
}

ControlStrategy extract_control_strategy(const ProblemSpec& spec, const PolicyTree& tree) {
  ControlStrategy g;
  g.stages.resize(tree.stages.size());
  for (std::size_t t = 0; t < tree.stages.size(); ++t) {
    if (tree.stages[t].empty()) continue;
    const PrescriptionSpace space(spec, static_cast<int>(t), std::numeric_limits<std::uint64_t>::max());
    for (const auto& node : tree.stages[t]) {
      LawNode law;
      law.tables = space.at(node.prescription).tables;
      for (const auto& [z, child] : node.children) law.children.emplace(z, child);
      g.stages[t].push_back(std::move(law));
    }
  }
  for (const auto& root : tree.roots) g.roots.emplace(root.common_obs, root.node);
  return g;
}

// ---------------------------------------------------------------------------
// Discounted problem

int truncation_depth(double discount, double max_abs_cost, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidParameter("epsilon must be positive");
  if (max_abs_cost == 0.0 || discount == 0.0) return 1;
  const double ratio = (1.0 - discount) * epsilon / max_abs_cost;
  if (ratio >= 1.0) return 1;
  return std::max(1, static_cast<int>(std::ceil(std::log(ratio) / std::log(discount))));
}

namespace {

class DiscountedSolver {
 public:
  DiscountedSolver(const ProblemSpec& spec, const SolveOptions& options)
      : spec_(spec), options_(options), model_(spec, 0), space_(spec, 0, options.prescription_cap) {}

  void reserve_depth(int depth) { levels_.resize(depth + 1); }

  int intern(const Eigen::VectorXd& belief) {
    canonical_key(0, belief, key_);
    bool fresh = false;
    const int id = ids_.insert(key_, belief, static_cast<int>(beliefs_.size()), fresh);
    if (fresh) {
      if (beliefs_.size() >= options_.node_cap)
        throw SizeOverflow("more than " + std::to_string(options_.node_cap) + " distinct beliefs in the discounted search");
      beliefs_.push_back(belief);
      values_.emplace_back();
      choices_.emplace_back();
    }
    return id;
  }

  double value(int id, int depth) {
    if (depth == 0) return 0.0;
    auto& known = values_[id];
    if (static_cast<int>(known.size()) > depth && !std::isnan(known[depth])) return known[depth];

    double best;
    std::uint64_t best_index;
    if (depth == 1) {
      std::tie(best, best_index) = min_immediate_cost(model_, beliefs_[id], space_);
    } else {
      auto& level = levels_[depth];
      if (!level.expander) level.expander = std::make_unique<Expander>(model_);
      level.expander->set_belief(beliefs_[id]);
      best = std::numeric_limits<double>::infinity();
      best_index = 0;
      JointPrescription gamma = space_.at(0);
      std::vector<std::pair<double, int>> children;
      do {
        double total = level.expander->expand(gamma.tables, level.branches);
        children.clear();
        for (const auto& b : level.branches) children.emplace_back(b.probability, intern(b.next));
        double future = 0.0;
        for (const auto& [p, child] : children) future += p * value(child, depth - 1);
        total += spec_.discount * future;
        if (improves(total, best)) {
          best = total;
          best_index = gamma.index;
        }
      } while (space_.next(gamma));
    }
    auto& slot = values_[id];
    if (static_cast<int>(slot.size()) <= depth) slot.resize(depth + 1, std::numeric_limits<double>::quiet_NaN());
    slot[depth] = best;
    auto& choice = choices_[id];
    if (static_cast<int>(choice.size()) <= depth) choice.resize(depth + 1, 0);
    choice[depth] = best_index;
    return best;
  }

  StationaryPolicy policy() const {
    StationaryPolicy p;
    for (std::size_t id = 0; id < beliefs_.size(); ++id) {
      StationaryEntry e;
      e.belief = beliefs_[id];
      for (int d = static_cast<int>(values_[id].size()); d-- > 1;) {
        if (!std::isnan(values_[id][d])) {
          e.depth = d;
          e.value = values_[id][d];
          e.prescription = choices_[id][d];
          break;
        }
      }
      p.entries.push_back(std::move(e));
    }
    return p;
  }

  std::size_t size() const { return beliefs_.size(); }
  std::uint64_t space_size() const { return space_.size(); }

 private:
  struct Level {
    std::unique_ptr<Expander> expander;
    std::vector<Branch> branches;
  };
  const ProblemSpec& spec_;
  SolveOptions options_;
  StageModel model_;
  PrescriptionSpace space_;
  BeliefIndex ids_;
  std::vector<Eigen::VectorXd> beliefs_;
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<std::uint64_t>> choices_;
  std::vector<Level> levels_;
  BeliefKey key_;
};

}  // namespace

DiscountedSolution solve_discounted(const ProblemSpec& spec, double epsilon, const SolveOptions& options) {
  if (spec.mode != Mode::discounted) throw InvalidParameter("discounted solver needs a discounted-mode problem");
  if (spec.protocol.kind == "control_sharing")
    throw Unsupported("control sharing has growing local memory and has no stationary formulation");
  const auto issues = validate_problem(spec);
  if (!issues.empty()) throw Unsupported("problem is not a valid time-homogeneous discounted problem: " + issues.front());

  const auto start = Clock::now();
  double max_abs = 0.0;
  for (const auto& c : spec.cost) max_abs = std::max(max_abs, c.cwiseAbs().maxCoeff());
  const int depth = truncation_depth(spec.discount, max_abs, epsilon);

  DiscountedSolver solver(spec, options);
  solver.reserve_depth(depth);
  const auto roots = initial_beliefs(spec);
  std::vector<int> root_ids;
  for (const auto& r : roots) root_ids.push_back(solver.intern(r.belief.weights));
  double v = 0.0;
  double v_prev = 0.0;
  for (std::size_t k = 0; k < roots.size(); ++k) {
    v += roots[k].probability * solver.value(root_ids[k], depth);
    v_prev += roots[k].probability * solver.value(root_ids[k], depth - 1);
  }

  DiscountedSolution solution;
  solution.policy = solver.policy();
  for (std::size_t k = 0; k < roots.size(); ++k)
    solution.policy.roots.push_back({roots[k].common_obs, roots[k].probability, root_ids[k]});
  solution.policy.discount = spec.discount;
  solution.policy.epsilon = epsilon;
  solution.policy.iterations = depth;
  solution.policy.residual = std::abs(v - v_prev);
  solution.policy.truncation_bound = std::pow(spec.discount, depth) * max_abs / (1.0 - spec.discount);
  solution.report.optimal_value = v;
  solution.report.explored_nodes = {solver.size()};
  solution.report.policy_nodes = {solution.policy.entries.size()};
  solution.report.prescription_space_sizes = {solver.space_size()};
  solution.report.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return solution;
}

}  // namespace cis
