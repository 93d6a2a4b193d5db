#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cis {

enum class SlotKind { observation, action };

// One remembered or transmitted variable of a controller: its own
// observation or action taken `lag` steps before the current one.
struct Slot {
  SlotKind kind = SlotKind::observation;
  int lag = 0;

  friend bool operator==(const Slot&, const Slot&) = default;
};

using SlotList = std::vector<Slot>;

// Protocol tables of one controller at one stage.
//
// The message map σ and memory update μ are indexed by
//   (m * |Y| + y) * |U| + u
// and are the authoritative behaviour. The slot lists are the structural
// witness: memory element m is the mixed-radix code of the values held in
// `mem_slots` (first slot most significant), a message is 0 (null) when
// `msg_slots` is empty and 1 + code otherwise, and the next memory is the
// code of `next_mem_slots` expressed with lags relative to the next stage.
struct ProtocolStep {
  int mem_size = 1;
  int msg_size = 1;
  int next_mem_size = 1;
  std::vector<int> message;
  std::vector<int> mem_update;
  SlotList mem_slots;
  SlotList msg_slots;
  SlotList next_mem_slots;

  friend bool operator==(const ProtocolStep&, const ProtocolStep&) = default;
};

struct SharingProtocol {
  // Preset name ("delayed_sharing", "periodic_sharing", "control_sharing",
  // "no_sharing") or "explicit".
  std::string kind = "explicit";
  // steps[i][t]. Stationary protocols carry a single step per controller.
  std::vector<std::vector<ProtocolStep>> steps;

  int controllers() const { return static_cast<int>(steps.size()); }
  int length() const { return steps.empty() ? 0 : static_cast<int>(steps[0].size()); }

  // Step used at stage t; stages past the stored tables reuse the last one.
  const ProtocolStep& step(int i, int t) const;
  // |M^i_t|, with t == length() meaning the memory after the final update.
  int mem_size(int i, int t) const;
  int msg_size(int i, int t) const { return step(i, t).msg_size; }
  // Product of per-controller message sizes at stage t.
  std::int64_t joint_msg_size(int t) const;

  friend bool operator==(const SharingProtocol&, const SharingProtocol&) = default;
};

// Number of values a slot can take for a controller with the given
// observation and action cardinalities.
inline int slot_domain(const Slot& slot, int num_obs, int num_actions) {
  return slot.kind == SlotKind::observation ? num_obs : num_actions;
}

// Builds σ and μ for every controller and stage by projecting the slot
// lists. slots[i][t] = {mem, msg, next_mem}.
struct StepSlots {
  SlotList mem;
  SlotList msg;
  SlotList next_mem;
};
SharingProtocol protocol_from_slots(std::string kind,
                                    const std::vector<std::vector<StepSlots>>& slots,
                                    const std::vector<int>& num_obs,
                                    const std::vector<int>& num_actions);

// Delayed sharing with per-controller delays s_i >= 1. Controller i shares
// (y, u) from s_i - 1 steps back and keeps the most recent s_i - 1 pairs
// locally. With `stationary`, memory spaces are padded to their steady-state
// size from the first stage on and a single step is stored.
SharingProtocol delayed_sharing_protocol(const std::vector<int>& delays, int horizon,
                                         const std::vector<int>& num_obs,
                                         const std::vector<int>& num_actions,
                                         bool stationary = false);

// Everything accumulated during a period of length s is shared at the last
// step of the period, after which local memory is cleared.
SharingProtocol periodic_sharing_protocol(int period, int horizon,
                                          const std::vector<int>& num_obs,
                                          const std::vector<int>& num_actions);

// Actions are shared immediately; observations stay in local memory forever.
SharingProtocol control_sharing_protocol(int horizon, const std::vector<int>& num_obs,
                                         const std::vector<int>& num_actions);

// Nothing is shared; each controller keeps a window of its last `window`
// (y, u) pairs. `window >= horizon` is the full-local-memory variant.
SharingProtocol no_sharing_protocol(int window, int horizon, const std::vector<int>& num_obs,
                                    const std::vector<int>& num_actions,
                                    bool stationary = false);

// Checks the structural witness and table consistency of a protocol. Each
// returned string names one violation.
std::vector<std::string> check_protocol(const SharingProtocol& protocol,
                                        const std::vector<int>& num_obs,
                                        const std::vector<int>& num_actions);

}  // namespace cis
