#include "cis/model.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "cis/errors.hpp"

namespace cis {

int ProblemSpec::joint_actions() const {
  int size = 1;
  for (const auto& a : actions) size *= a.cardinality;
  return size;
}

std::vector<int> ProblemSpec::obs_sizes() const {
  std::vector<int> out;
  for (const auto& o : obs) out.push_back(o.cardinality);
  return out;
}

std::vector<int> ProblemSpec::action_sizes() const {
  std::vector<int> out;
  for (const auto& a : actions) out.push_back(a.cardinality);
  return out;
}

int ProblemSpec::flatten_actions(const int* u) const {
  int flat = 0;
  for (int i = 0; i < n; ++i) flat = flat * actions[i].cardinality + u[i];
  return flat;
}

void ProblemSpec::split_actions(int u_flat, int* u) const {
  for (int i = n; i-- > 0;) {
    u[i] = u_flat % actions[i].cardinality;
    u_flat /= actions[i].cardinality;
  }
}

int ProblemSpec::table_index(int t, std::size_t size) const {
  if (mode == Mode::discounted) return std::min(t, static_cast<int>(size) - 1);
  return t;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void check_space(const FiniteSpace& space, const std::string& name, std::vector<std::string>& issues) {
  if (space.cardinality < 1) issues.push_back(name + ": cardinality must be at least 1");
  if (!space.labels.empty()) {
    if (static_cast<int>(space.labels.size()) != space.cardinality)
      issues.push_back(name + ": label count differs from cardinality");
    std::set<std::string> unique(space.labels.begin(), space.labels.end());
    if (unique.size() != space.labels.size()) issues.push_back(name + ": labels are not unique");
  }
}

// Checks a row-stochastic matrix; `row_name` renders the row index.
template <typename RowName>
void check_rows(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const std::string& name,
                RowName row_name, std::vector<std::string>& issues) {
  if (m.rows() != rows || m.cols() != cols) {
    issues.push_back(name + ": shape mismatch, expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                     ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    return;
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double sum = m.row(r).sum();
    if ((m.row(r).array() < 0.0).any() || !m.row(r).allFinite())
      issues.push_back(name + " row " + row_name(r) + " has a negative or non-finite entry");
    else if (std::abs(sum - 1.0) > kProbabilityTolerance)
      issues.push_back(name + " row " + row_name(r) + " sums to " + fmt(sum));
  }
}

bool homogeneous(const std::vector<Eigen::MatrixXd>& slices) {
  for (const auto& s : slices)
    if (s.rows() != slices.front().rows() || s.cols() != slices.front().cols() || s != slices.front()) return false;
  return true;
}

}  // namespace

std::vector<std::string> validate_problem(const ProblemSpec& spec) {
  std::vector<std::string> issues;
  if (spec.n < 1) issues.push_back("n must be at least 1");
  if (spec.horizon < 1) issues.push_back("T must be at least 1");
  if (static_cast<int>(spec.obs.size()) != spec.n || static_cast<int>(spec.actions.size()) != spec.n) {
    issues.push_back("observation and action spaces must be given for each of the " + std::to_string(spec.n) +
                     " controllers");
    return issues;
  }
  if (!issues.empty()) return issues;
  check_space(spec.state, "state space", issues);
  for (int i = 0; i < spec.n; ++i) {
    check_space(spec.obs[i], "observation space " + std::to_string(i), issues);
    check_space(spec.actions[i], "action space " + std::to_string(i), issues);
  }
  if (!issues.empty()) return issues;

  const bool discounted = spec.mode == Mode::discounted;
  if (discounted && !(spec.discount >= 0.0 && spec.discount < 1.0))
    issues.push_back("discount must lie in [0, 1), got " + fmt(spec.discount));

  const int nx = spec.num_states();
  const int nu = spec.joint_actions();
  auto stage_count_ok = [&](std::size_t count, const std::string& name) {
    if (count == 0 || (!discounted && static_cast<int>(count) != spec.horizon)) {
      issues.push_back(name + ": expected " + std::to_string(spec.horizon) + " stages, got " +
                       std::to_string(count));
      return false;
    }
    return true;
  };

  if (spec.initial_dist.size() != nx) {
    issues.push_back("initial_dist: expected " + std::to_string(nx) + " entries");
  } else if ((spec.initial_dist.array() < 0.0).any() ||
             std::abs(spec.initial_dist.sum() - 1.0) > kProbabilityTolerance) {
    issues.push_back("initial_dist is not a probability vector (sum " + fmt(spec.initial_dist.sum()) + ")");
  }

  if (stage_count_ok(spec.transition.size(), "transition")) {
    for (std::size_t t = 0; t < spec.transition.size(); ++t) {
      check_rows(spec.transition[t], static_cast<Eigen::Index>(nx) * nu, nx, "transition[t=" + std::to_string(t) + "]",
                 [&](Eigen::Index r) {
                   return "(t=" + std::to_string(t) + ", x=" + std::to_string(r / nu) +
                          ", u=" + std::to_string(r % nu) + ")";
                 },
                 issues);
    }
  }
  if (static_cast<int>(spec.obs_kernel.size()) != spec.n) {
    issues.push_back("obs_kernels: expected one kernel list per controller");
  } else {
    for (int i = 0; i < spec.n; ++i) {
      const std::string name = "obs_kernels[" + std::to_string(i) + "]";
      if (!stage_count_ok(spec.obs_kernel[i].size(), name)) continue;
      for (std::size_t t = 0; t < spec.obs_kernel[i].size(); ++t)
        check_rows(spec.obs_kernel[i][t], nx, spec.num_obs(i), name + "[t=" + std::to_string(t) + "]",
                   [&](Eigen::Index r) { return "(t=" + std::to_string(t) + ", x=" + std::to_string(r) + ")"; },
                   issues);
    }
  }
  if (stage_count_ok(spec.cost.size(), "cost")) {
    for (std::size_t t = 0; t < spec.cost.size(); ++t) {
      const auto& c = spec.cost[t];
      if (c.rows() != nx || c.cols() != nu)
        issues.push_back("cost[t=" + std::to_string(t) + "]: shape mismatch, expected " + std::to_string(nx) + "x" +
                         std::to_string(nu));
      else if (!c.allFinite())
        issues.push_back("cost[t=" + std::to_string(t) + "] has a non-finite entry");
    }
  }
  if (spec.initial_common_obs.size() != 0)
    check_rows(spec.initial_common_obs, nx, spec.initial_common_obs.cols(), "initial_common_obs",
               [](Eigen::Index r) { return "(x=" + std::to_string(r) + ")"; }, issues);

  // Protocol structure.
  const auto proto_issues = check_protocol(spec.protocol, spec.obs_sizes(), spec.action_sizes());
  issues.insert(issues.end(), proto_issues.begin(), proto_issues.end());
  if (proto_issues.empty() && spec.protocol.controllers() == spec.n) {
    if (!discounted) {
      if (spec.protocol.length() != spec.horizon)
        issues.push_back("protocol: expected " + std::to_string(spec.horizon) + " stages, got " +
                         std::to_string(spec.protocol.length()));
      for (int i = 0; i < spec.n; ++i)
        if (spec.protocol.mem_size(i, 0) != 1)
          issues.push_back("protocol: controller " + std::to_string(i) + " must start with empty local memory");
    }
  }

  if (discounted) {
    if (spec.protocol.kind == "control_sharing")
      issues.push_back("protocol: control sharing has local memory spaces that grow with time and is excluded "
                       "from the discounted infinite-horizon problem");
    if (!homogeneous(spec.transition)) issues.push_back("transition is not time-homogeneous");
    if (!homogeneous(spec.cost)) issues.push_back("cost is not time-homogeneous");
    for (int i = 0; i < static_cast<int>(spec.obs_kernel.size()); ++i)
      if (!homogeneous(spec.obs_kernel[i]))
        issues.push_back("obs_kernels[" + std::to_string(i) + "] is not time-homogeneous");
    if (proto_issues.empty()) {
      for (int i = 0; i < spec.protocol.controllers(); ++i) {
        const auto& row = spec.protocol.steps[i];
        bool same = true;
        for (const auto& step : row) same = same && step == row.front();
        if (!same || row.front().mem_size != row.front().next_mem_size)
          issues.push_back("protocol: controller " + std::to_string(i) +
                           " is not time-homogeneous (memory/message spaces must be time-invariant)");
      }
    }
  }
  return issues;
}

Eigen::MatrixXd build_kernel_from_functional(const std::vector<std::vector<std::vector<int>>>& f_table,
                                             const NoiseModel& noise, int num_next_states) {
  const auto& q = noise.dist;
  if (q.size() != noise.space.cardinality || q.size() == 0 || (q.array() < 0.0).any() ||
      std::abs(q.sum() - 1.0) > kProbabilityTolerance)
    throw InvalidDistribution("noise distribution is not a probability vector over its space");
  if (f_table.empty() || f_table[0].empty()) throw MissingEntry("functional table is empty");
  const auto nx = static_cast<Eigen::Index>(f_table.size());
  const auto nu = static_cast<Eigen::Index>(f_table[0].size());
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(nx * nu, num_next_states);
  for (Eigen::Index x = 0; x < nx; ++x) {
    if (static_cast<Eigen::Index>(f_table[x].size()) != nu)
      throw MissingEntry("functional table is missing actions for x=" + std::to_string(x));
    for (Eigen::Index u = 0; u < nu; ++u) {
      const auto& row = f_table[x][u];
      if (static_cast<Eigen::Index>(row.size()) != q.size())
        throw MissingEntry("functional table is missing noise values at (x=" + std::to_string(x) +
                           ", u=" + std::to_string(u) + ")");
      for (Eigen::Index w = 0; w < q.size(); ++w) {
        if (row[w] < 0 || row[w] >= num_next_states)
          throw MissingEntry("functional table maps (x=" + std::to_string(x) + ", u=" + std::to_string(u) +
                             ", w=" + std::to_string(w) + ") outside the state space");
        kernel(x * nu + u, row[w]) += q(w);
      }
    }
  }
  // Rows carry exactly the mass of q; renormalize away the rounding.
  for (Eigen::Index r = 0; r < kernel.rows(); ++r) kernel.row(r) /= kernel.row(r).sum();
  return kernel;
}

std::vector<Eigen::MatrixXd> component_observation_kernels(const std::vector<int>& component_sizes) {
  int nx = 1;
  for (int c : component_sizes) nx *= c;
  std::vector<Eigen::MatrixXd> kernels;
  int stride = nx;
  for (int size : component_sizes) {
    stride /= size;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(nx, size);
    for (int x = 0; x < nx; ++x) k(x, (x / stride) % size) = 1.0;
    kernels.push_back(std::move(k));
  }
  return kernels;
}

ProblemSpec random_problem(const RandomProblemShape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto stochastic = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = unit(rng);
      m.row(r) /= m.row(r).sum();
    }
    return m;
  };

  ProblemSpec spec;
  spec.n = shape.n;
  spec.horizon = shape.horizon;
  spec.state.cardinality = shape.num_states;
  spec.obs.assign(shape.n, FiniteSpace{shape.num_obs, {}});
  spec.actions.assign(shape.n, FiniteSpace{shape.num_actions, {}});
  const int nu = spec.joint_actions();
  spec.initial_dist = stochastic(1, shape.num_states).row(0).transpose();
  for (int t = 0; t < shape.horizon; ++t) spec.transition.push_back(stochastic(shape.num_states * nu, shape.num_states));
  spec.obs_kernel.resize(shape.n);
  for (int i = 0; i < shape.n; ++i)
    for (int t = 0; t < shape.horizon; ++t) spec.obs_kernel[i].push_back(stochastic(shape.num_states, shape.num_obs));
  for (int t = 0; t < shape.horizon; ++t) {
    Eigen::MatrixXd c(shape.num_states, nu);
    for (Eigen::Index k = 0; k < c.size(); ++k) c.data()[k] = unit(rng);
    spec.cost.push_back(std::move(c));
  }
  return spec;
}

}  // namespace cis
