// cis: validate, solve, enumerate and simulate decentralized control
// problems with partial history sharing.
//
// Exit codes: 0 ok, 1 invalid input, 2 malformed JSON, 3 size cap exceeded,
// 4 enumeration oracles disagree, 5 simulation audit failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "cis/dp.hpp"
#include "cis/instances.hpp"
#include "cis/io.hpp"
#include "cis/oracle.hpp"
#include "cis/sim.hpp"

namespace {

using cis::Json;

enum Exit { kOk = 0, kInvalid = 1, kParse = 2, kCap = 3, kDisagree = 4, kAudit = 5 };

struct RunConfig {
  std::string input;
  std::string output;
  std::string policy;
  std::string trajectories;
  std::string variant = "full";
  std::string fixture;
  double epsilon = 1e-4;
  double discount = 0.5;
  std::uint64_t episodes = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
  std::uint64_t cap_branches = cis::kDefaultBranchCap;
  std::uint64_t cap_prescriptions = cis::kDefaultPrescriptionCap;
};

void log(const std::string& line) { std::cerr << "cis: " << line << '\n'; }

void emit(const RunConfig& config, const Json& doc) {
  const std::string text = doc.dump(2) + "\n";
  if (config.output.empty())
    std::cout << text;
  else
    cis::write_text_file(config.output, text);
}

std::string seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f s", s);
  return buf;
}

int cmd_validate(const RunConfig& config) {
  const cis::ProblemSpec spec = cis::load_problem(config.input);
  const auto issues = cis::validate_problem(spec);
  emit(config, {{"valid", issues.empty()}, {"issues", issues}});
  return issues.empty() ? kOk : kInvalid;
}

cis::ProblemSpec load_valid(const RunConfig& config) {
  cis::ProblemSpec spec = cis::load_problem(config.input);
  const auto issues = cis::validate_problem(spec);
  if (!issues.empty()) {
    for (const auto& issue : issues) log("invalid problem: " + issue);
    throw cis::InvalidParameter(std::to_string(issues.size()) + " validation issue(s) in '" + config.input + "'");
  }
  return spec;
}

int cmd_solve(const RunConfig& config) {
  if (config.variant != "full" && config.variant != "reduced")
    throw cis::InvalidParameter("--variant must be full or reduced");
  const cis::ProblemSpec spec = load_valid(config);
  cis::SolveOptions options;
  options.prescription_cap = config.cap_prescriptions;
  options.threads = config.threads;

  Json doc;
  double value = 0.0;
  if (spec.mode == cis::Mode::finite) {
    const auto solution =
        config.variant == "reduced" ? cis::solve_finite_reduced(spec, options) : cis::solve_finite(spec, options);
    log("solved in " + seconds(solution.report.seconds));
    doc = cis::policy_to_json(spec, solution);
    doc["variant"] = config.variant;
    doc["control_strategy"] = cis::to_json(cis::extract_control_strategy(spec, solution.tree));
    value = solution.report.optimal_value;
  } else {
    if (!(config.epsilon > 0.0)) throw cis::InvalidParameter("--epsilon must be positive");
    const auto solution = cis::solve_discounted(spec, config.epsilon, options);
    log("solved in " + seconds(solution.report.seconds) + ", depth " + std::to_string(solution.policy.iterations));
    doc = cis::policy_to_json(spec, solution);
    value = solution.report.optimal_value;
  }
  if (!config.output.empty()) cis::write_text_file(config.output, doc.dump(2) + "\n");
  std::printf("J* = %.12g\n", value);
  return kOk;
}

int cmd_enumerate(const RunConfig& config) {
  const cis::ProblemSpec spec = load_valid(config);
  const auto basic = cis::enumerate_basic_strategies(spec, config.cap_prescriptions);
  log("basic enumeration: " + std::to_string(basic.count) + " strategies in " + seconds(basic.seconds));
  const auto coordinator = cis::enumerate_coordinator_strategies(spec, config.cap_prescriptions);
  log("coordinator enumeration: " + std::to_string(coordinator.count) + " evaluations in " +
      seconds(coordinator.seconds));
  const double basic_check = cis::exact_cost_of_strategy(spec, basic.argmin, config.cap_branches);
  const double coordinator_check = cis::exact_cost_of_strategy(spec, coordinator.argmin, config.cap_branches);

  const double difference = std::abs(basic.minimum - coordinator.minimum);
  const bool agree = difference <= 1e-9 && std::abs(basic_check - basic.minimum) <= 1e-9 &&
                     std::abs(coordinator_check - coordinator.minimum) <= 1e-9;
  emit(config, {{"problem_digest", cis::problem_digest(spec)},
                {"basic", cis::to_json(basic)},
                {"coordinator", cis::to_json(coordinator)},
                {"difference", difference},
                {"agree", agree}});
  if (!agree) {
    log("enumeration minima disagree: basic " + std::to_string(basic.minimum) + ", coordinator " +
        std::to_string(coordinator.minimum));
    return kDisagree;
  }
  return kOk;
}

int cmd_simulate(const RunConfig& config) {
  if (config.policy.empty()) throw cis::InvalidParameter("--policy is required");
  if (config.episodes < 1) throw cis::InvalidParameter("--episodes must be at least 1");
  const cis::ProblemSpec spec = load_valid(config);
  const Json policy = cis::read_json_file(config.policy);
  const std::string digest = cis::problem_digest(spec);
  if (policy.value("problem_digest", std::string()) != digest)
    throw cis::InvalidParameter("policy '" + config.policy + "' was not solved for problem '" + config.input +
                                "' (digest " + policy.value("problem_digest", std::string("missing")) + " vs " +
                                digest + ")");

  std::vector<cis::Trajectory> trajectories;
  cis::SimOptions options;
  options.threads = config.threads;
  if (!config.trajectories.empty()) options.trajectories = &trajectories;

  const std::string kind = policy.value("kind", std::string());
  cis::SimReport report;
  if (kind == "tree")
    report = cis::rollout(spec, cis::tree_from_json(policy), config.seed, config.episodes, options);
  else if (kind == "stationary")
    report = cis::rollout(spec, cis::stationary_from_json(policy), config.seed, config.episodes, options);
  else
    throw cis::InvalidParameter("policy file has unknown kind '" + kind + "'");

  if (!config.trajectories.empty()) {
    std::ofstream out(config.trajectories, std::ios::binary);
    if (!out) throw cis::InvalidParameter("cannot write '" + config.trajectories + "'");
    for (std::size_t e = 0; e < trajectories.size(); ++e) out << cis::to_json(trajectories[e], e).dump() << '\n';
  }
  emit(config, cis::to_json(report));
  if (report.audit_violations > 0) {
    log(std::to_string(report.audit_violations) + " episode(s) realized a zero-probability message");
    return kAudit;
  }
  return kOk;
}

// Problem fixtures, written with their protocol preset where one exists.
int cmd_generate(const RunConfig& config) {
  using namespace cis::instances;
  auto preset = [](const char* name, Json params) { return Json{{"preset", name}, {"params", std::move(params)}}; };
  const Json delay1 = preset("delayed_sharing", {{"delay", 1}});

  Json doc;
  const std::string& f = config.fixture;
  if (f == "two_controller_sharing") {
    doc = cis::problem_to_json(two_controller_sharing(config.seed), delay1);
  } else if (f == "delayed_sharing_2x2") {
    doc = cis::problem_to_json(cis::instances::random_with_protocol({2, 3, 2, 2, 2}, "delayed", 2, config.seed),
                               preset("delayed_sharing", {{"delay", 2}}));
  } else if (f == "periodic_two_controller") {
    doc = cis::problem_to_json(periodic_two_controller(config.seed), preset("periodic_sharing", {{"period", 2}}));
  } else if (f == "centralized_pomdp") {
    doc = cis::problem_to_json(centralized_pomdp(config.seed), delay1);
  } else if (f == "static_team") {
    doc = cis::problem_to_json(static_team(config.seed), preset("no_sharing", {{"window", 0}}));
  } else if (f == "reset_chain") {
    doc = cis::problem_to_json(reset_chain(config.discount, config.seed), delay1);
  } else if (f == "constant_cost") {
    doc = cis::problem_to_json(constant_cost_finite(3, 2.5, config.seed), delay1);
  } else if (f == "constant_cost_discounted") {
    doc = cis::problem_to_json(constant_cost_chain(config.discount, 2.5), delay1);
  } else if (f == "bad_row") {
    cis::ProblemSpec spec = two_controller_sharing(config.seed);
    spec.transition[0].row(1 * spec.joint_actions() + 2) *= 0.9;
    doc = cis::problem_to_json(spec, delay1);
  } else if (f == "overlap_violation") {
    // Delay-2 sharing whose memory update at stage 1 keeps the pair it just
    // shared.
    cis::ProblemSpec spec = cis::instances::random_with_protocol({2, 3, 2, 2, 2}, "delayed", 2, config.seed);
    using cis::SlotKind;
    const cis::SlotList last = {{SlotKind::observation, 1}, {SlotKind::action, 1}};
    const cis::SlotList last_two = {{SlotKind::observation, 1}, {SlotKind::action, 1},
                                    {SlotKind::observation, 2}, {SlotKind::action, 2}};
    std::vector<std::vector<cis::StepSlots>> slots(2);
    for (auto& row : slots) {
      row.push_back({{}, {}, last});
      row.push_back({last, last, last_two});
      row.push_back({last_two, last, {}});
    }
    spec.protocol = cis::protocol_from_slots("explicit", slots, spec.obs_sizes(), spec.action_sizes());
    doc = cis::problem_to_json(spec);
  } else if (f == "control_sharing_discounted") {
    doc = cis::problem_to_json(reset_chain(config.discount, config.seed), delay1);
    doc["protocol"] = preset("control_sharing", Json::object());
  } else {
    throw cis::InvalidParameter("unknown fixture '" + f + "'");
  }
  emit(config, doc);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact solver and brute-force checker for decentralized control with partial history sharing"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig config;

  app.add_option("--output", config.output, "Write the JSON result here instead of standard output")
      ->envname("CIS_OUTPUT");
  app.add_option("--variant", config.variant, "Belief representation for finite problems: full or reduced")
      ->check(CLI::IsMember({"full", "reduced"}))
      ->envname("CIS_VARIANT");
  app.add_option("--epsilon", config.epsilon, "Target accuracy of discounted solves")->envname("CIS_EPSILON");
  app.add_option("--episodes", config.episodes, "Simulated episodes")->envname("CIS_EPISODES");
  app.add_option("--seed", config.seed, "Random seed")->envname("CIS_SEED");
  app.add_option("--threads", config.threads, "Worker threads")->check(CLI::PositiveNumber)->envname("CIS_THREADS");
  app.add_option("--cap-branches", config.cap_branches, "Trajectory branch cap for exact cost evaluation")
      ->envname("CIS_CAP_BRANCHES");
  app.add_option("--cap-prescriptions", config.cap_prescriptions,
                 "Cap on joint prescriptions per stage and on enumerated strategies")
      ->envname("CIS_CAP_PRESCRIPTIONS");

  auto* validate = app.add_subcommand("validate", "Check a problem file");
  validate->add_option("problem", config.input)->required();
  auto* solve = app.add_subcommand("solve", "Solve a problem by dynamic programming over beliefs");
  solve->add_option("problem", config.input)->required();
  auto* enumerate = app.add_subcommand("enumerate", "Brute-force the basic and coordinator strategy spaces");
  enumerate->add_option("problem", config.input)->required();
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo rollouts of a solved policy");
  simulate->add_option("problem", config.input)->required();
  simulate->add_option("--policy", config.policy, "Policy file written by solve")->required()->envname("CIS_POLICY");
  simulate->add_option("--trajectories", config.trajectories, "Also dump trajectories as JSON lines");
  auto* generate = app.add_subcommand("generate", "Write a seeded benchmark problem");
  generate->add_option("fixture", config.fixture)->required();
  generate->add_option("--discount", config.discount, "Discount factor for discounted fixtures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*validate) return cmd_validate(config);
    if (*solve) return cmd_solve(config);
    if (*enumerate) return cmd_enumerate(config);
    if (*simulate) return cmd_simulate(config);
    if (*generate) return cmd_generate(config);
  } catch (const cis::ParseError& e) {
    log(e.what());
    return kParse;
  } catch (const cis::SizeOverflow& e) {
    log(std::string("size cap exceeded: ") + e.what());
    return kCap;
  } catch (const cis::ZeroProbabilityObservation& e) {
    log(std::string("audit failure: ") + e.what());
    return kAudit;
  } catch (const cis::UnreachableInformation& e) {
    log(std::string("audit failure: ") + e.what());
    return kAudit;
  } catch (const cis::Error& e) {
    log(e.what());
    return kInvalid;
  }
  return kInvalid;
}
