#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "cis/model.hpp"

namespace cis {

using Index = std::int64_t;

inline constexpr std::uint64_t kDefaultPrescriptionCap = 10'000'000;
// Messages (and initial common observations) whose probability is at or
// below this threshold are treated as impossible.
inline constexpr double kZeroProbability = 1e-15;

// A point (x, y^0..y^{n-1}, m^0..m^{n-1}) of the coordinator state space.
struct CoordState {
  int x = 0;
  std::vector<int> y;
  std::vector<int> m;

  friend bool operator==(const CoordState&, const CoordState&) = default;
};

// Lexicographic enumeration of the coordinator state space at one stage:
// x most significant, then y^0..y^{n-1}, then m^0..m^{n-1}.
class StateLayout {
 public:
  StateLayout() = default;
  StateLayout(const ProblemSpec& spec, int t);

  int stage() const { return stage_; }
  int controllers() const { return static_cast<int>(obs_.size()); }
  int num_x() const { return num_x_; }
  int num_obs(int i) const { return obs_[i]; }
  int mem_size(int i) const { return mem_[i]; }
  Index obs_product() const { return obs_product_; }
  Index mem_product() const { return mem_product_; }
  Index size() const { return num_x_ * obs_product_ * mem_product_; }
  // Size of the reduced space X x M^0 x ... x M^{n-1}.
  Index reduced_size() const { return num_x_ * mem_product_; }

  Index index(int x, Index obs_code, Index mem_code) const { return (x * obs_product_ + obs_code) * mem_product_ + mem_code; }
  Index index(const CoordState& s) const;
  CoordState state(Index index) const;

  int x_of(Index s) const { return static_cast<int>(s / (obs_product_ * mem_product_)); }
  Index obs_code_of(Index s) const { return (s / mem_product_) % obs_product_; }
  Index mem_code_of(Index s) const { return s % mem_product_; }

  Index obs_code(const std::vector<int>& y) const;
  Index mem_code(const std::vector<int>& m) const;
  std::vector<int> split_obs(Index code) const;
  std::vector<int> split_mem(Index code) const;

 private:
  int stage_ = 0;
  int num_x_ = 1;
  std::vector<int> obs_;
  std::vector<int> mem_;
  Index obs_product_ = 1;
  Index mem_product_ = 1;
};

std::vector<CoordState> enumerate_states(const ProblemSpec& spec, int t);

// Coordinator's belief over the enumerated coordinator states of stage t.
struct Belief {
  int t = 0;
  Eigen::VectorXd weights;
};

// Marginal of a Belief over (x, m).
struct ReducedBelief {
  int t = 0;
  Eigen::VectorXd weights;
};

// Canonical form used to deduplicate beliefs: weights rounded to 1e-12 with
// entries below 1e-15 dropped, tagged with the stage.
struct BeliefKey {
  int t = 0;
  std::vector<std::int64_t> quanta;

  friend bool operator==(const BeliefKey&, const BeliefKey&) = default;
};

struct BeliefKeyHash {
  std::size_t operator()(const BeliefKey& key) const noexcept;
};

BeliefKey canonical_key(int t, const Eigen::VectorXd& weights);
// Same, reusing the storage of `key`.
void canonical_key(int t, const Eigen::VectorXd& weights, BeliefKey& key);

// Map from canonical beliefs to ids. A belief whose weights sit within
// round-off of a rounding boundary also matches the keys obtained by rounding
// those coordinates the other way, so near-identical beliefs computed along
// different arithmetic paths share one id.
class BeliefIndex {
 public:
  // Id stored for `weights` (whose canonical key is `key`), or -1.
  int find(const BeliefKey& key, const Eigen::VectorXd& weights) const;
  // Returns the existing id, or registers `new_id` and returns it. `fresh` is
  // set when the belief was not known.
  int insert(const BeliefKey& key, const Eigen::VectorXd& weights, int new_id, bool& fresh);
  std::size_t size() const { return ids_.size(); }

 private:
  std::unordered_map<BeliefKey, int, BeliefKeyHash> ids_;
};

Belief initial_belief(const ProblemSpec& spec);

// One root per initial common observation value with positive probability.
struct RootBelief {
  int common_obs = 0;
  double probability = 1.0;
  Belief belief;
};
std::vector<RootBelief> initial_beliefs(const ProblemSpec& spec);

// γ = (γ^0, ..., γ^{n-1}), tables[i][y * |M^i_t| + m] = u^i.
struct JointPrescription {
  std::uint64_t index = 0;
  std::vector<std::vector<int>> tables;
};

// All joint prescriptions of a stage, enumerated lexicographically:
// controller 0 most significant, then row-major over (y, m) with row 0 most
// significant inside each controller.
class PrescriptionSpace {
 public:
  PrescriptionSpace(const ProblemSpec& spec, int t, std::uint64_t cap = kDefaultPrescriptionCap);

  std::uint64_t size() const { return size_; }
  int controllers() const { return static_cast<int>(rows_.size()); }
  int rows(int i) const { return rows_[i]; }
  int num_actions(int i) const { return actions_[i]; }
  std::uint64_t controller_size(int i) const { return controller_size_[i]; }

  JointPrescription at(std::uint64_t index) const;
  std::uint64_t index_of(const std::vector<std::vector<int>>& tables) const;
  // Moves to the next prescription in enumeration order; false after the last.
  bool next(JointPrescription& gamma) const;

  std::vector<int> controller_table(int i, std::uint64_t controller_index) const;

 private:
  std::vector<int> rows_;
  std::vector<int> actions_;
  std::vector<std::uint64_t> controller_size_;
  std::uint64_t size_ = 1;
};

// Number of joint prescriptions at stage t (no cap applied); saturates at
// UINT64_MAX.
std::uint64_t prescription_count(const ProblemSpec& spec, int t);

// Per-stage tables needed to push beliefs through one step of the
// coordinated system.
class StageModel {
 public:
  StageModel(const ProblemSpec& spec, int t);

  const ProblemSpec& spec() const { return *spec_; }
  int stage() const { return layout_.stage(); }
  const StateLayout& layout() const { return layout_; }
  bool has_next() const { return has_next_; }
  const StateLayout& next_layout() const { return next_layout_; }
  std::int64_t joint_msg_size() const { return joint_msg_size_; }

  int x_of(Index s) const { return state_x_[s]; }
  int obs_of(int i, Index s) const { return state_y_[s * n_ + i]; }
  int mem_of(int i, Index s) const { return state_m_[s * n_ + i]; }
  int row_of(int i, Index s) const { return obs_of(i, s) * layout_.mem_size(i) + mem_of(i, s); }

  // Fills u (size n) from the prescription tables; returns the flat action.
  int apply(Index s, const std::vector<std::vector<int>>& tables, int* u) const;
  std::int64_t message(Index s, const int* u) const;
  std::int64_t next_memory(Index s, const int* u) const;
  double cost(Index s, int u_flat) const { return cost_(x_of(s), u_flat); }
  // out[s'] += w * P(s' | s, u) for the successor memory next_mem.
  void push(Index s, int u_flat, std::int64_t next_mem, double w, Eigen::VectorXd& out) const;

 private:
  struct Entry {
    int target;
    double p;
  };
  const ProblemSpec* spec_;
  int n_;
  StateLayout layout_;
  StateLayout next_layout_;
  bool has_next_ = false;
  std::int64_t joint_msg_size_ = 1;
  std::vector<int> state_x_, state_y_, state_m_;
  Eigen::MatrixXd cost_;
  std::vector<std::vector<Entry>> transition_;     // [x * |U| + u] -> (x', p)
  std::vector<std::vector<Entry>> next_obs_;       // [x'] -> (y' code, prod_i P(y'^i | x'))
  std::vector<const ProtocolStep*> steps_;
  std::vector<int> msg_stride_;
  std::vector<int> mem_stride_;
};

// Reusable scratch space that expands a belief under many prescriptions.
struct Branch {
  std::int64_t message = 0;
  double probability = 0.0;
  Eigen::VectorXd next;  // normalized belief at t + 1
};

class Expander {
 public:
  explicit Expander(const StageModel& model);

  void set_belief(const Eigen::VectorXd& weights);
  double expected_cost(const std::vector<std::vector<int>>& tables) const;
  // Branches with probability above kZeroProbability, ordered by message;
  // none at the final stage.
  // Returns the expected immediate cost of the prescription.
  double expand(const std::vector<std::vector<int>>& tables, std::vector<Branch>& out);

 private:
  const StageModel* model_;
  std::vector<Index> support_;
  std::vector<double> mass_;
  std::vector<int> slot_of_message_;
  std::vector<std::int64_t> used_messages_;
  std::vector<Eigen::VectorXd> pool_;
  std::vector<double> pool_mass_;
  std::vector<int> u_;
};

std::int64_t emit_message(const ProblemSpec& spec, const CoordState& s, const JointPrescription& gamma, int t);
// Distribution over coordinator states of stage t + 1.
Eigen::VectorXd transition(const ProblemSpec& spec, const CoordState& s, const JointPrescription& gamma, int t);
double observation_probability(const ProblemSpec& spec, const Belief& belief, const JointPrescription& gamma,
                               std::int64_t message);
Belief eta_update(const ProblemSpec& spec, const Belief& belief, const JointPrescription& gamma,
                  std::int64_t message);
double expected_cost(const ProblemSpec& spec, const Belief& belief, const JointPrescription& gamma);

ReducedBelief chi(const ProblemSpec& spec, const Belief& belief);
Belief zeta(const ProblemSpec& spec, const ReducedBelief& reduced);

}  // namespace cis
