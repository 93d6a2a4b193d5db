#include "cis/protocol.hpp"

#include <algorithm>
#include <sstream>

#include "cis/errors.hpp"

namespace cis {
namespace {

std::string describe(const Slot& slot) {
  std::ostringstream os;
  os << '(' << (slot.kind == SlotKind::observation ? "obs" : "act") << ", lag " << slot.lag << ')';
  return os.str();
}

bool contains(const SlotList& list, const Slot& slot) {
  return std::find(list.begin(), list.end(), slot) != list.end();
}

std::int64_t slots_size(const SlotList& slots, int num_obs, int num_actions) {
  std::int64_t size = 1;
  for (const auto& slot : slots) size *= slot_domain(slot, num_obs, num_actions);
  return size;
}

std::vector<int> decode(std::int64_t code, const SlotList& slots, int num_obs, int num_actions) {
  std::vector<int> values(slots.size());
  for (std::size_t k = slots.size(); k-- > 0;) {
    const int d = slot_domain(slots[k], num_obs, num_actions);
    values[k] = static_cast<int>(code % d);
    code /= d;
  }
  return values;
}

// Value of `slot` (lag relative to the current stage) given the decoded
// memory and the current observation/action. Returns -1 if not available.
int lookup(const Slot& slot, const SlotList& mem, const std::vector<int>& mem_values, int y, int u) {
  if (slot.lag == 0) return slot.kind == SlotKind::observation ? y : u;
  for (std::size_t k = 0; k < mem.size(); ++k)
    if (mem[k] == slot) return mem_values[k];
  return -1;
}

// Code of `slots` (lags relative to the current stage, shifted by `shift`).
int project(const SlotList& slots, int shift, const SlotList& mem, const std::vector<int>& mem_values, int y,
            int u, int num_obs, int num_actions) {
  std::int64_t code = 0;
  for (const auto& target : slots) {
    const Slot here{target.kind, target.lag - shift};
    const int v = lookup(here, mem, mem_values, y, u);
    if (v < 0) throw MissingEntry("slot " + describe(target) + " is not available at this stage");
    code = code * slot_domain(target, num_obs, num_actions) + v;
  }
  return static_cast<int>(code);
}

SlotList window(int from_lag, int to_lag) {
  SlotList out;
  for (int lag = from_lag; lag <= to_lag; ++lag) {
    out.push_back({SlotKind::observation, lag});
    out.push_back({SlotKind::action, lag});
  }
  return out;
}

void require_spaces(const std::vector<int>& num_obs, const std::vector<int>& num_actions) {
  if (num_obs.empty() || num_obs.size() != num_actions.size())
    throw InvalidParameter("observation and action cardinalities must be given for every controller");
}

}  // namespace

const ProtocolStep& SharingProtocol::step(int i, int t) const {
  const auto& row = steps.at(i);
  return row[std::min<std::size_t>(static_cast<std::size_t>(t), row.size() - 1)];
}

int SharingProtocol::mem_size(int i, int t) const {
  const auto& row = steps.at(i);
  if (static_cast<std::size_t>(t) < row.size()) return row[t].mem_size;
  return row.back().next_mem_size;
}

std::int64_t SharingProtocol::joint_msg_size(int t) const {
  std::int64_t size = 1;
  for (int i = 0; i < controllers(); ++i) size *= msg_size(i, t);
  return size;
}

SharingProtocol protocol_from_slots(std::string kind, const std::vector<std::vector<StepSlots>>& slots,
                                    const std::vector<int>& num_obs, const std::vector<int>& num_actions) {
  require_spaces(num_obs, num_actions);
  SharingProtocol protocol;
  protocol.kind = std::move(kind);
  protocol.steps.resize(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const int ny = num_obs[i];
    const int nu = num_actions[i];
    for (const auto& s : slots[i]) {
      ProtocolStep step;
      step.mem_slots = s.mem;
      step.msg_slots = s.msg;
      step.next_mem_slots = s.next_mem;
      step.mem_size = static_cast<int>(slots_size(s.mem, ny, nu));
      step.msg_size = s.msg.empty() ? 1 : 1 + static_cast<int>(slots_size(s.msg, ny, nu));
      step.next_mem_size = static_cast<int>(slots_size(s.next_mem, ny, nu));
      const std::size_t domain = static_cast<std::size_t>(step.mem_size) * ny * nu;
      step.message.resize(domain);
      step.mem_update.resize(domain);
      for (int m = 0; m < step.mem_size; ++m) {
        const auto values = decode(m, s.mem, ny, nu);
        for (int y = 0; y < ny; ++y) {
          for (int u = 0; u < nu; ++u) {
            const std::size_t k = (static_cast<std::size_t>(m) * ny + y) * nu + u;
            step.message[k] = s.msg.empty() ? 0 : 1 + project(s.msg, 0, s.mem, values, y, u, ny, nu);
            step.mem_update[k] = project(s.next_mem, 1, s.mem, values, y, u, ny, nu);
          }
        }
      }
      protocol.steps[i].push_back(std::move(step));
    }
  }
  return protocol;
}

SharingProtocol delayed_sharing_protocol(const std::vector<int>& delays, int horizon,
                                         const std::vector<int>& num_obs,
                                         const std::vector<int>& num_actions, bool stationary) {
  require_spaces(num_obs, num_actions);
  if (delays.size() != num_obs.size()) throw InvalidParameter("one delay per controller is required");
  if (horizon < 1) throw InvalidParameter("horizon must be at least 1");
  std::vector<std::vector<StepSlots>> slots(delays.size());
  for (std::size_t i = 0; i < delays.size(); ++i) {
    const int s = delays[i];
    if (s < 1) throw InvalidParameter("delay must be at least 1");
    if (stationary) {
      slots[i].push_back({window(1, s - 1), window(s - 1, s - 1), window(1, s - 1)});
      continue;
    }
    for (int t = 0; t < horizon; ++t) {
      StepSlots step;
      step.mem = window(1, std::min(s - 1, t));
      if (t >= s - 1) step.msg = window(s - 1, s - 1);
      step.next_mem = window(1, std::min(s - 1, t + 1));
      slots[i].push_back(std::move(step));
    }
  }
  return protocol_from_slots("delayed_sharing", slots, num_obs, num_actions);
}

SharingProtocol periodic_sharing_protocol(int period, int horizon, const std::vector<int>& num_obs,
                                          const std::vector<int>& num_actions) {
  require_spaces(num_obs, num_actions);
  if (period < 1) throw InvalidParameter("period must be at least 1");
  if (horizon < 1) throw InvalidParameter("horizon must be at least 1");
  std::vector<std::vector<StepSlots>> slots(num_obs.size());
  for (auto& row : slots) {
    for (int t = 0; t < horizon; ++t) {
      const int phase = t % period;
      StepSlots step;
      step.mem = window(1, phase);
      if (phase == period - 1) {
        step.msg = window(0, period - 1);
      } else {
        step.next_mem = window(1, phase + 1);
      }
      row.push_back(std::move(step));
    }
  }
  return protocol_from_slots("periodic_sharing", slots, num_obs, num_actions);
}

SharingProtocol control_sharing_protocol(int horizon, const std::vector<int>& num_obs,
                                         const std::vector<int>& num_actions) {
  require_spaces(num_obs, num_actions);
  if (horizon < 1) throw InvalidParameter("horizon must be at least 1");
  auto observations = [](int from, int to) {
    SlotList out;
    for (int lag = from; lag <= to; ++lag) out.push_back({SlotKind::observation, lag});
    return out;
  };
  std::vector<std::vector<StepSlots>> slots(num_obs.size());
  for (auto& row : slots) {
    for (int t = 0; t < horizon; ++t)
      row.push_back({observations(1, t), {{SlotKind::action, 0}}, observations(1, t + 1)});
  }
  return protocol_from_slots("control_sharing", slots, num_obs, num_actions);
}

SharingProtocol no_sharing_protocol(int window_length, int horizon, const std::vector<int>& num_obs,
                                    const std::vector<int>& num_actions, bool stationary) {
  require_spaces(num_obs, num_actions);
  if (window_length < 0) throw InvalidParameter("memory window must be non-negative");
  if (horizon < 1) throw InvalidParameter("horizon must be at least 1");
  std::vector<std::vector<StepSlots>> slots(num_obs.size());
  for (auto& row : slots) {
    if (stationary) {
      row.push_back({window(1, window_length), {}, window(1, window_length)});
      continue;
    }
    for (int t = 0; t < horizon; ++t)
      row.push_back({window(1, std::min(window_length, t)), {}, window(1, std::min(window_length, t + 1))});
  }
  return protocol_from_slots("no_sharing", slots, num_obs, num_actions);
}

std::vector<std::string> check_protocol(const SharingProtocol& protocol, const std::vector<int>& num_obs,
                                        const std::vector<int>& num_actions) {
  std::vector<std::string> issues;
  if (protocol.controllers() != static_cast<int>(num_obs.size())) {
    issues.push_back("protocol: expected tables for " + std::to_string(num_obs.size()) + " controllers, got " +
                     std::to_string(protocol.controllers()));
    return issues;
  }
  for (int i = 0; i < protocol.controllers(); ++i) {
    const auto& row = protocol.steps[i];
    if (row.empty()) {
      issues.push_back("protocol: controller " + std::to_string(i) + " has no stages");
      continue;
    }
    if (row.size() != protocol.steps[0].size())
      issues.push_back("protocol: controller " + std::to_string(i) + " has a different number of stages");
    const int ny = num_obs[i];
    const int nu = num_actions[i];
    for (std::size_t t = 0; t < row.size(); ++t) {
      const auto& step = row[t];
      const std::string where = "protocol: controller " + std::to_string(i) + " stage " + std::to_string(t) + ": ";
      auto report = [&](const std::string& what) { issues.push_back(where + what); };

      if (step.mem_size < 1 || step.msg_size < 1 || step.next_mem_size < 1) {
        report("space sizes must be positive");
        continue;
      }
      const std::size_t domain = static_cast<std::size_t>(step.mem_size) * ny * nu;
      if (step.message.size() != domain || step.mem_update.size() != domain) {
        report("message/memory tables must have " + std::to_string(domain) + " entries");
        continue;
      }
      bool tables_ok = true;
      for (std::size_t k = 0; k < domain; ++k) {
        if (step.message[k] < 0 || step.message[k] >= step.msg_size ||
            step.mem_update[k] < 0 || step.mem_update[k] >= step.next_mem_size) {
          report("table entry " + std::to_string(k) + " out of range");
          tables_ok = false;
          break;
        }
      }
      if (t + 1 < row.size() && row[t + 1].mem_size != step.next_mem_size)
        report("next memory size " + std::to_string(step.next_mem_size) +
               " differs from the memory size of the following stage");

      // Structural witness.
      bool witness_ok = true;
      auto no_duplicates = [&](const SlotList& list, const char* name) {
        for (std::size_t a = 0; a < list.size(); ++a)
          for (std::size_t b = a + 1; b < list.size(); ++b)
            if (list[a] == list[b]) {
              report(std::string(name) + " lists slot " + describe(list[a]) + " twice");
              witness_ok = false;
            }
      };
      no_duplicates(step.mem_slots, "memory");
      no_duplicates(step.msg_slots, "message");
      no_duplicates(step.next_mem_slots, "next memory");
      for (const auto& slot : step.mem_slots)
        if (slot.lag < 1) {
          report("memory slot " + describe(slot) + " must refer to a past step");
          witness_ok = false;
        }
      for (const auto& slot : step.msg_slots)
        if (slot.lag < 0 || (slot.lag > 0 && !contains(step.mem_slots, slot))) {
          report("message slot " + describe(slot) +
                 " is neither in local memory nor the current observation/action (subset violation)");
          witness_ok = false;
        }
      for (const auto& next : step.next_mem_slots) {
        const Slot here{next.kind, next.lag - 1};
        if (here.lag < 0 || (here.lag > 0 && !contains(step.mem_slots, here))) {
          report("next memory slot " + describe(next) +
                 " is not part of the local information (subset violation)");
          witness_ok = false;
        } else if (contains(step.msg_slots, here)) {
          report("next memory retains " + describe(here) +
                 " which is also sent to shared memory (no-overlap violation: local and shared memory overlap)");
          witness_ok = false;
        }
      }
      if (!witness_ok) continue;
      if (slots_size(step.mem_slots, ny, nu) != step.mem_size)
        report("memory size does not match its slot decomposition");
      if ((step.msg_slots.empty() ? 1 : 1 + slots_size(step.msg_slots, ny, nu)) != step.msg_size)
        report("message size does not match its slot decomposition");
      if (slots_size(step.next_mem_slots, ny, nu) != step.next_mem_size)
        report("next memory size does not match its slot decomposition");
      if (!tables_ok || slots_size(step.mem_slots, ny, nu) != step.mem_size) continue;

      // Tables must agree with the projection the witness describes.
      for (int m = 0; m < step.mem_size && witness_ok; ++m) {
        const auto values = decode(m, step.mem_slots, ny, nu);
        for (int y = 0; y < ny && witness_ok; ++y) {
          for (int u = 0; u < nu; ++u) {
            const std::size_t k = (static_cast<std::size_t>(m) * ny + y) * nu + u;
            const int z = step.msg_slots.empty()
                              ? 0
                              : 1 + project(step.msg_slots, 0, step.mem_slots, values, y, u, ny, nu);
            const int next = project(step.next_mem_slots, 1, step.mem_slots, values, y, u, ny, nu);
            if (z != step.message[k]) {
              report("message table disagrees with its witness at (m=" + std::to_string(m) + ", y=" +
                     std::to_string(y) + ", u=" + std::to_string(u) + ")");
              witness_ok = false;
              break;
            }
            if (next != step.mem_update[k]) {
              report("memory update disagrees with its witness at (m=" + std::to_string(m) + ", y=" +
                     std::to_string(y) + ", u=" + std::to_string(u) + ")");
              witness_ok = false;
              break;
            }
          }
        }
      }
    }
  }
  return issues;
}

}  // namespace cis
