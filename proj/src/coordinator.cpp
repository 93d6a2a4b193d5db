#include "cis/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cis/errors.hpp"

namespace cis {

// ---------------------------------------------------------------------------
// State layout

StateLayout::StateLayout(const ProblemSpec& spec, int t) : stage_(t), num_x_(spec.num_states()) {
  for (int i = 0; i < spec.n; ++i) {
    obs_.push_back(spec.num_obs(i));
    mem_.push_back(spec.protocol.mem_size(i, t));
    obs_product_ *= obs_.back();
    mem_product_ *= mem_.back();
  }
}

Index StateLayout::obs_code(const std::vector<int>& y) const {
  Index code = 0;
  for (std::size_t i = 0; i < obs_.size(); ++i) code = code * obs_[i] + y[i];
  return code;
}

Index StateLayout::mem_code(const std::vector<int>& m) const {
  Index code = 0;
  for (std::size_t i = 0; i < mem_.size(); ++i) code = code * mem_[i] + m[i];
  return code;
}

std::vector<int> StateLayout::split_obs(Index code) const {
  std::vector<int> y(obs_.size());
  for (std::size_t i = obs_.size(); i-- > 0;) {
    y[i] = static_cast<int>(code % obs_[i]);
    code /= obs_[i];
  }
  return y;
}

std::vector<int> StateLayout::split_mem(Index code) const {
  std::vector<int> m(mem_.size());
  for (std::size_t i = mem_.size(); i-- > 0;) {
    m[i] = static_cast<int>(code % mem_[i]);
    code /= mem_[i];
  }
  return m;
}

Index StateLayout::index(const CoordState& s) const { return index(s.x, obs_code(s.y), mem_code(s.m)); }

CoordState StateLayout::state(Index s) const {
  return {x_of(s), split_obs(obs_code_of(s)), split_mem(mem_code_of(s))};
}

std::vector<CoordState> enumerate_states(const ProblemSpec& spec, int t) {
  const StateLayout layout(spec, t);
  std::vector<CoordState> out;
  out.reserve(static_cast<std::size_t>(layout.size()));
  for (Index s = 0; s < layout.size(); ++s) out.push_back(layout.state(s));
  return out;
}

// ---------------------------------------------------------------------------
// Canonical keys

std::size_t BeliefKeyHash::operator()(const BeliefKey& key) const noexcept {
  std::uint64_t h = 1469598103934665603ull ^ static_cast<std::uint64_t>(key.t);
  for (auto q : key.quanta) {
    h ^= static_cast<std::uint64_t>(q) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

void canonical_key(int t, const Eigen::VectorXd& weights, BeliefKey& key) {
  key.t = t;
  key.quanta.resize(static_cast<std::size_t>(weights.size()));
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    const double w = weights[k];
    key.quanta[k] = w < kZeroProbability ? 0 : std::llround(w * 1e12);
  }
}

BeliefKey canonical_key(int t, const Eigen::VectorXd& weights) {
  BeliefKey key;
  canonical_key(t, weights, key);
  return key;
}

namespace {

// Coordinates within this many quanta of a half quantum may round either way.
constexpr double kBoundaryBand = 1e-3;
constexpr int kMaxAmbiguous = 4;

}  // namespace

int BeliefIndex::find(const BeliefKey& key, const Eigen::VectorXd& weights) const {
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  int ambiguous[kMaxAmbiguous];
  int count = 0;
  for (Eigen::Index k = 0; k < weights.size() && count < kMaxAmbiguous; ++k) {
    const double scaled = weights[k] * 1e12;
    if (std::abs(scaled - std::floor(scaled) - 0.5) < kBoundaryBand) ambiguous[count++] = static_cast<int>(k);
  }
  if (count == 0) return -1;
  BeliefKey probe = key;
  for (int mask = 1; mask < (1 << count); ++mask) {
    for (int j = 0; j < count; ++j) {
      const int k = ambiguous[j];
      const auto down = static_cast<std::int64_t>(std::floor(weights[k] * 1e12));
      const std::int64_t other = key.quanta[k] == down ? down + 1 : down;
      probe.quanta[k] = (mask >> j) & 1 ? other : key.quanta[k];
    }
    if (auto it = ids_.find(probe); it != ids_.end()) return it->second;
  }
  return -1;
}

int BeliefIndex::insert(const BeliefKey& key, const Eigen::VectorXd& weights, int new_id, bool& fresh) {
  const int id = find(key, weights);
  fresh = id < 0;
  const int result = fresh ? new_id : id;
  ids_.emplace(key, result);
  return result;
}

// ---------------------------------------------------------------------------
// Initial beliefs

namespace {

Eigen::VectorXd joint_initial(const ProblemSpec& spec, const Eigen::VectorXd& prior) {
  const StateLayout layout(spec, 0);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(layout.size());
  for (int x = 0; x < layout.num_x(); ++x) {
    if (prior[x] == 0.0) continue;
    for (Index yc = 0; yc < layout.obs_product(); ++yc) {
      const auto y = layout.split_obs(yc);
      double p = prior[x];
      for (int i = 0; i < spec.n; ++i) p *= spec.obs_at(i, 0)(x, y[i]);
      w[layout.index(x, yc, 0)] = p;
    }
  }
  return w;
}

}  // namespace

Belief initial_belief(const ProblemSpec& spec) { return {0, joint_initial(spec, spec.initial_dist)}; }

std::vector<RootBelief> initial_beliefs(const ProblemSpec& spec) {
  std::vector<RootBelief> roots;
  if (spec.initial_common_obs.size() == 0) {
    roots.push_back({0, 1.0, initial_belief(spec)});
    return roots;
  }
  for (int c = 0; c < spec.num_common_obs(); ++c) {
    const Eigen::VectorXd joint = spec.initial_dist.cwiseProduct(spec.initial_common_obs.col(c));
    const double p = joint.sum();
    if (p <= kZeroProbability) continue;
    roots.push_back({c, p, {0, joint_initial(spec, joint / p)}});
  }
  return roots;
}

// ---------------------------------------------------------------------------
// Prescriptions

namespace {

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}

std::uint64_t saturating_pow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int k = 0; k < exp; ++k) r = saturating_mul(r, base);
  return r;
}

}  // namespace

std::uint64_t prescription_count(const ProblemSpec& spec, int t) {
  std::uint64_t size = 1;
  for (int i = 0; i < spec.n; ++i)
    size = saturating_mul(size, saturating_pow(spec.num_actions(i), spec.num_obs(i) * spec.protocol.mem_size(i, t)));
  return size;
}

PrescriptionSpace::PrescriptionSpace(const ProblemSpec& spec, int t, std::uint64_t cap) {
  std::string sizes;
  for (int i = 0; i < spec.n; ++i) {
    rows_.push_back(spec.num_obs(i) * spec.protocol.mem_size(i, t));
    actions_.push_back(spec.num_actions(i));
    controller_size_.push_back(saturating_pow(actions_.back(), rows_.back()));
    size_ = saturating_mul(size_, controller_size_.back());
    sizes += (i ? " x " : "") + std::to_string(actions_.back()) + "^" + std::to_string(rows_.back());
  }
  if (size_ > cap)
    throw SizeOverflow("prescription space at stage " + std::to_string(t) + " has " +
                       (size_ == std::numeric_limits<std::uint64_t>::max() ? std::string("more than 2^64")
                                                                           : std::to_string(size_)) +
                       " elements (" + sizes + "), cap is " + std::to_string(cap));
}

std::vector<int> PrescriptionSpace::controller_table(int i, std::uint64_t controller_index) const {
  std::vector<int> table(rows_[i]);
  for (int r = rows_[i]; r-- > 0;) {
    table[r] = static_cast<int>(controller_index % actions_[i]);
    controller_index /= actions_[i];
  }
  return table;
}

JointPrescription PrescriptionSpace::at(std::uint64_t index) const {
  JointPrescription gamma;
  gamma.index = index;
  gamma.tables.resize(rows_.size());
  for (std::size_t i = rows_.size(); i-- > 0;) {
    gamma.tables[i] = controller_table(static_cast<int>(i), index % controller_size_[i]);
    index /= controller_size_[i];
  }
  return gamma;
}

std::uint64_t PrescriptionSpace::index_of(const std::vector<std::vector<int>>& tables) const {
  std::uint64_t index = 0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    std::uint64_t ci = 0;
    for (int r = 0; r < rows_[i]; ++r) ci = ci * actions_[i] + tables[i][r];
    index = index * controller_size_[i] + ci;
  }
  return index;
}

bool PrescriptionSpace::next(JointPrescription& gamma) const {
  for (std::size_t i = rows_.size(); i-- > 0;) {
    auto& table = gamma.tables[i];
    for (int r = rows_[i]; r-- > 0;) {
      if (++table[r] < actions_[i]) {
        ++gamma.index;
        return true;
      }
      table[r] = 0;
    }
  }
  gamma.index = 0;
  return false;
}

// ---------------------------------------------------------------------------
// Stage model

StageModel::StageModel(const ProblemSpec& spec, int t)
    : spec_(&spec), n_(spec.n), layout_(spec, t), cost_(spec.cost_at(t)) {
  has_next_ = spec.mode == Mode::discounted || t + 1 < spec.horizon;
  const Index size = layout_.size();
  state_x_.resize(size);
  state_y_.resize(size * n_);
  state_m_.resize(size * n_);
  for (Index s = 0; s < size; ++s) {
    const auto st = layout_.state(s);
    state_x_[s] = st.x;
    for (int i = 0; i < n_; ++i) {
      state_y_[s * n_ + i] = st.y[i];
      state_m_[s * n_ + i] = st.m[i];
    }
  }
  msg_stride_.assign(n_, 1);
  for (int i = 0; i < n_; ++i) steps_.push_back(&spec.protocol.step(i, t));
  for (int i = n_ - 1; i-- > 0;) msg_stride_[i] = msg_stride_[i + 1] * steps_[i + 1]->msg_size;
  joint_msg_size_ = spec.protocol.joint_msg_size(t);

  if (!has_next_) return;
  next_layout_ = StateLayout(spec, t + 1);
  mem_stride_.assign(n_, 1);
  for (int i = n_ - 1; i-- > 0;) mem_stride_[i] = mem_stride_[i + 1] * next_layout_.mem_size(i + 1);

  const auto& kernel = spec.transition_at(t);
  transition_.resize(static_cast<std::size_t>(kernel.rows()));
  for (Eigen::Index r = 0; r < kernel.rows(); ++r)
    for (Eigen::Index x = 0; x < kernel.cols(); ++x)
      if (kernel(r, x) > 0.0) transition_[r].push_back({static_cast<int>(x), kernel(r, x)});

  next_obs_.resize(static_cast<std::size_t>(next_layout_.num_x()));
  for (int x = 0; x < next_layout_.num_x(); ++x) {
    for (Index yc = 0; yc < next_layout_.obs_product(); ++yc) {
      const auto y = next_layout_.split_obs(yc);
      double p = 1.0;
      for (int i = 0; i < n_; ++i) p *= spec.obs_at(i, t + 1)(x, y[i]);
      if (p > 0.0) next_obs_[x].push_back({static_cast<int>(yc), p});
    }
  }
}

int StageModel::apply(Index s, const std::vector<std::vector<int>>& tables, int* u) const {
  int flat = 0;
  for (int i = 0; i < n_; ++i) {
    u[i] = tables[i][row_of(i, s)];
    flat = flat * spec_->actions[i].cardinality + u[i];
  }
  return flat;
}

std::int64_t StageModel::message(Index s, const int* u) const {
  std::int64_t z = 0;
  for (int i = 0; i < n_; ++i) {
    const int ny = spec_->obs[i].cardinality;
    const int nu = spec_->actions[i].cardinality;
    const auto k = (static_cast<std::size_t>(mem_of(i, s)) * ny + obs_of(i, s)) * nu + u[i];
    z += static_cast<std::int64_t>(steps_[i]->message[k]) * msg_stride_[i];
  }
  return z;
}

std::int64_t StageModel::next_memory(Index s, const int* u) const {
  std::int64_t code = 0;
  for (int i = 0; i < n_; ++i) {
    const int ny = spec_->obs[i].cardinality;
    const int nu = spec_->actions[i].cardinality;
    const auto k = (static_cast<std::size_t>(mem_of(i, s)) * ny + obs_of(i, s)) * nu + u[i];
    code += static_cast<std::int64_t>(steps_[i]->mem_update[k]) * mem_stride_[i];
  }
  return code;
}

void StageModel::push(Index s, int u_flat, std::int64_t next_mem, double w, Eigen::VectorXd& out) const {
  const auto& row = transition_[static_cast<std::size_t>(x_of(s)) * spec_->joint_actions() + u_flat];
  const Index mp = next_layout_.mem_product();
  const Index yp = next_layout_.obs_product();
  for (const auto& [x, p] : row) {
    const double wp = w * p;
    const Index base = static_cast<Index>(x) * yp;
    for (const auto& [yc, l] : next_obs_[x]) out[(base + yc) * mp + next_mem] += wp * l;
  }
}

// ---------------------------------------------------------------------------
// Expander

Expander::Expander(const StageModel& model)
    : model_(&model), slot_of_message_(static_cast<std::size_t>(model.joint_msg_size()), -1), u_(model.spec().n) {}

void Expander::set_belief(const Eigen::VectorXd& weights) {
  support_.clear();
  mass_.clear();
  for (Eigen::Index s = 0; s < weights.size(); ++s) {
    if (weights[s] > 0.0) {
      support_.push_back(s);
      mass_.push_back(weights[s]);
    }
  }
}

double Expander::expected_cost(const std::vector<std::vector<int>>& tables) const {
  double c = 0.0;
  std::vector<int> u(model_->spec().n);
  for (std::size_t k = 0; k < support_.size(); ++k) {
    const int flat = model_->apply(support_[k], tables, u.data());
    c += mass_[k] * model_->cost(support_[k], flat);
  }
  return c;
}

double Expander::expand(const std::vector<std::vector<int>>& tables, std::vector<Branch>& out) {
  const StageModel& m = *model_;
  if (!m.has_next()) {
    out.clear();
    return expected_cost(tables);
  }
  const Index next_size = m.next_layout().size();
  double cost = 0.0;
  used_messages_.clear();
  for (std::size_t k = 0; k < support_.size(); ++k) {
    const Index s = support_[k];
    const double w = mass_[k];
    const int flat = m.apply(s, tables, u_.data());
    cost += w * m.cost(s, flat);
    const std::int64_t z = m.message(s, u_.data());
    int& slot = slot_of_message_[static_cast<std::size_t>(z)];
    if (slot < 0) {
      slot = static_cast<int>(used_messages_.size());
      used_messages_.push_back(z);
      if (pool_.size() < used_messages_.size()) {
        pool_.emplace_back(next_size);
        pool_mass_.push_back(0.0);
      }
      pool_[slot].setZero(next_size);
      pool_mass_[slot] = 0.0;
    }
    pool_mass_[slot] += w;
    m.push(s, flat, m.next_memory(s, u_.data()), w, pool_[slot]);
  }

  std::sort(used_messages_.begin(), used_messages_.end());
  std::size_t count = 0;
  for (const auto z : used_messages_) {
    int& slot = slot_of_message_[static_cast<std::size_t>(z)];
    const double d = pool_mass_[slot];
    if (d > kZeroProbability) {
      if (out.size() <= count) out.emplace_back();
      out[count].message = z;
      out[count].probability = d;
      out[count].next = pool_[slot] / d;
      ++count;
    }
    slot = -1;
  }
  out.resize(count);
  return cost;
}

// ---------------------------------------------------------------------------
// Single-shot operations

std::int64_t emit_message(const ProblemSpec& spec, const CoordState& s, const JointPrescription& gamma, int t) {
  const StageModel model(spec, t);
  std::vector<int> u(spec.n);
  const Index idx = model.layout().index(s);
  model.apply(idx, gamma.tables, u.data());
  return model.message(idx, u.data());
}

Eigen::VectorXd transition(const ProblemSpec& spec, const CoordState& s, const JointPrescription& gamma, int t) {
  const StageModel model(spec, t);
  if (!model.has_next()) throw InvalidParameter("no transition out of the final stage");
  std::vector<int> u(spec.n);
  const Index idx = model.layout().index(s);
  const int flat = model.apply(idx, gamma.tables, u.data());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(model.next_layout().size());
  model.push(idx, flat, model.next_memory(idx, u.data()), 1.0, out);
  return out;
}

double observation_probability(const ProblemSpec& spec, const Belief& belief, const JointPrescription& gamma,
                               std::int64_t message) {
  const StageModel model(spec, belief.t);
  std::vector<int> u(spec.n);
  double d = 0.0;
  for (Index s = 0; s < belief.weights.size(); ++s) {
    if (belief.weights[s] == 0.0) continue;
    model.apply(s, gamma.tables, u.data());
    if (model.message(s, u.data()) == message) d += belief.weights[s];
  }
  return d;
}

Belief eta_update(const ProblemSpec& spec, const Belief& belief, const JointPrescription& gamma,
                  std::int64_t message) {
  const StageModel model(spec, belief.t);
  if (!model.has_next()) throw InvalidParameter("no belief update out of the final stage");
  std::vector<int> u(spec.n);

  // Condition on the message.
  Eigen::VectorXd conditioned = Eigen::VectorXd::Zero(belief.weights.size());
  for (Index s = 0; s < belief.weights.size(); ++s) {
    if (belief.weights[s] == 0.0) continue;
    model.apply(s, gamma.tables, u.data());
    if (model.message(s, u.data()) == message) conditioned[s] = belief.weights[s];
  }
  const double d = conditioned.sum();
  if (d <= kZeroProbability)
    throw ZeroProbabilityObservation("message " + std::to_string(message) + " has probability " +
                                     std::to_string(d) + " at stage " + std::to_string(belief.t));
  conditioned /= d;

  // Predict through the dynamics.
  Eigen::VectorXd next = Eigen::VectorXd::Zero(model.next_layout().size());
  for (Index s = 0; s < conditioned.size(); ++s) {
    if (conditioned[s] == 0.0) continue;
    const int flat = model.apply(s, gamma.tables, u.data());
    model.push(s, flat, model.next_memory(s, u.data()), conditioned[s], next);
  }
  return {belief.t + 1, next / next.sum()};
}

double expected_cost(const ProblemSpec& spec, const Belief& belief, const JointPrescription& gamma) {
  const StageModel model(spec, belief.t);
  std::vector<int> u(spec.n);
  double c = 0.0;
  for (Index s = 0; s < belief.weights.size(); ++s) {
    if (belief.weights[s] == 0.0) continue;
    c += belief.weights[s] * model.cost(s, model.apply(s, gamma.tables, u.data()));
  }
  return c;
}

ReducedBelief chi(const ProblemSpec& spec, const Belief& belief) {
  const StateLayout layout(spec, belief.t);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.reduced_size());
  for (Index s = 0; s < layout.size(); ++s)
    out[layout.x_of(s) * layout.mem_product() + layout.mem_code_of(s)] += belief.weights[s];
  return {belief.t, out};
}

Belief zeta(const ProblemSpec& spec, const ReducedBelief& reduced) {
  const StateLayout layout(spec, reduced.t);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(layout.size());
  for (int x = 0; x < layout.num_x(); ++x) {
    for (Index yc = 0; yc < layout.obs_product(); ++yc) {
      const auto y = layout.split_obs(yc);
      double py = 1.0;
      for (int i = 0; i < spec.n; ++i) py *= spec.obs_at(i, reduced.t)(x, y[i]);
      if (py == 0.0) continue;
      for (Index mc = 0; mc < layout.mem_product(); ++mc)
        out[layout.index(x, yc, mc)] = reduced.weights[x * layout.mem_product() + mc] * py;
    }
  }
  return {reduced.t, out};
}

}  // namespace cis
