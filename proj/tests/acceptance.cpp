// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cis/dp.hpp"
#include "cis/instances.hpp"
#include "cis/io.hpp"
#include "cis/oracle.hpp"
#include "cis/sim.hpp"
#include "reference.hpp"

namespace {

using namespace cis;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note("FAILED " + what);
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

double since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

Outcome static_team_counts() {
  Outcome out;
  const auto spec = load_problem(std::string(CIS_DATA_DIR) + "/problems/static_team.json");
  const auto start = Clock::now();
  const auto basic = enumerate_basic_strategies(spec);
  const auto coordinator = enumerate_coordinator_strategies(spec);
  const double seconds = since(start);
  out.require(basic.count == 256, "basic count " + std::to_string(basic.count) + " != 256");
  out.require(coordinator.count == 32, "coordinator count " + std::to_string(coordinator.count) + " != 32");
  out.require(std::abs(basic.minimum - coordinator.minimum) <= 1e-9, "minima differ");
  out.require(seconds < 1.0, "runtime " + fmt("%.3f s", seconds));
  out.note("basic " + std::to_string(basic.count) + ", coordinator " + std::to_string(coordinator.count) +
           fmt(", min %.12g, |diff| %.2e, %.3f s", basic.minimum, std::abs(basic.minimum - coordinator.minimum),
               seconds));
  return out;
}

Outcome dp_matches_enumeration() {
  Outcome out;
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto spec = instances::two_controller_sharing(seed);
    const double j = solve_finite(spec).report.optimal_value;
    const auto basic = enumerate_basic_strategies(spec);
    const auto coordinator = enumerate_coordinator_strategies(spec);
    const double diff = std::max(std::abs(j - basic.minimum), std::abs(j - coordinator.minimum));
    worst = std::max(worst, diff);
    out.require(diff <= 1e-9, "seed " + std::to_string(seed) + fmt(" differs by %.2e", diff));
    out.note("seed " + std::to_string(seed) + fmt(" J* %.12f", j));
  }
  const double seconds = since(start);
  out.require(seconds < 60.0, fmt("runtime %.1f s", seconds));
  out.note(fmt("max |diff| %.2e, %.2f s", worst, seconds));
  return out;
}

Outcome reduced_matches_full() {
  Outcome out;
  std::vector<std::pair<std::string, ProblemSpec>> specs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
    specs.emplace_back("seed " + std::to_string(seed), instances::two_controller_sharing(seed));
  specs.emplace_back("periodic s=2 T=4", instances::periodic_two_controller(1));
  double worst = 0.0;
  for (const auto& [name, spec] : specs) {
    const double full = solve_finite(spec).report.optimal_value;
    const double reduced = solve_finite_reduced(spec).report.optimal_value;
    worst = std::max(worst, std::abs(full - reduced));
    out.require(std::abs(full - reduced) <= 1e-9, name + fmt(" full %.12f reduced %.12f", full, reduced));
    if (name.rfind("periodic", 0) == 0) out.note(name + fmt(" J* %.12f", full));
  }
  out.note(fmt("max |diff| %.2e over 6 instances", worst));
  return out;
}

Outcome centralized_reduction() {
  Outcome out;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto spec = instances::centralized_pomdp(seed);
    const double j = solve_finite(spec).report.optimal_value;
    const double textbook = reference::pomdp_optimum(spec);
    out.require(std::abs(j - textbook) <= 1e-9, "seed " + std::to_string(seed));
    out.note("seed " + std::to_string(seed) + fmt(" J* %.12f, POMDP %.12f", j, textbook));
  }
  return out;
}

Outcome filter_correctness() {
  Outcome out;
  std::uint64_t seed = 100;
  double tv = 0.0, mass = 0.0;
  int nodes = 0;
  for (const auto& c : reference::filter_cases()) {
    const auto spec = instances::random_with_protocol(c.shape, c.kind, c.param, ++seed);
    const auto check = reference::check_filter(spec, seed);
    out.require(check.max_states <= 200 && spec.horizon <= 3, std::string(c.kind) + " instance too large");
    out.require(check.max_total_variation <= 1e-9, std::string(c.kind) + fmt(" TV %.2e", check.max_total_variation));
    out.require(check.max_mass_error <= 1e-9, std::string(c.kind) + fmt(" mass %.2e", check.max_mass_error));
    out.require(check.max_message_error <= 1e-9, std::string(c.kind) + fmt(" P(z) %.2e", check.max_message_error));
    tv = std::max(tv, check.max_total_variation);
    mass = std::max(mass, check.max_mass_error);
    nodes += check.nodes;
  }
  out.note(fmt("10 instances, %g nodes, max TV %.2e, max |sum P(z) - 1| %.2e", nodes, tv, mass));
  return out;
}

Outcome coupling() {
  Outcome out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto spec = instances::two_controller_sharing(seed);
    const auto solution = solve_finite(spec);
    const auto g = extract_control_strategy(spec, solution.tree);
    const auto paired = paired_rollout(spec, solution.tree, g, seed, 1000);
    const double cost = exact_cost_of_strategy(spec, g);
    out.require(paired.identical(), "seed " + std::to_string(seed) + " diverged");
    out.require(std::abs(cost - solution.report.optimal_value) <= 1e-9, "seed " + std::to_string(seed) + " cost");
    out.note("seed " + std::to_string(seed) + " " + std::to_string(paired.divergent_episodes) + "/1000 divergent" +
             fmt(", |cost - J*| %.1e", std::abs(cost - solution.report.optimal_value)));
  }
  return out;
}

Outcome monte_carlo() {
  Outcome out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto spec = instances::two_controller_sharing(seed);
    const auto start = Clock::now();
    const auto solution = solve_finite(spec);
    const auto report = rollout(spec, solution.tree, seed, 100000);
    const double seconds = since(start);
    const double gap = std::abs(report.mean - solution.report.optimal_value);
    out.require(gap <= 4.0 * report.stderr_mean, "seed " + std::to_string(seed));
    out.require(seconds < 60.0, "seed " + std::to_string(seed) + fmt(" took %.1f s", seconds));
    out.note("seed " + std::to_string(seed) + fmt(" |mean - J*| %.2e vs 4 se %.2e", gap, 4.0 * report.stderr_mean));
  }
  return out;
}

Outcome discounted_fixed_point() {
  Outcome out;
  const double eps = 1e-4;
  for (double beta : {0.5, 0.9}) {
    const double v = solve_discounted(instances::constant_cost_chain(beta, 2.5), eps).report.optimal_value;
    const double exact = 2.5 / (1.0 - beta);
    out.require(std::abs(v - exact) <= eps, fmt("constant cost beta %.1f: %.8f vs %.8f", beta, v, exact));
    out.note(fmt("beta %.1f |V - c/(1-beta)| %.2e", beta, std::abs(v - exact)));
  }
  const auto spec = load_problem(std::string(CIS_DATA_DIR) + "/problems/reset_chain.json");
  const double v = solve_discounted(spec, eps).report.optimal_value;
  const double vi = reference::reset_chain_value(spec);
  out.require(std::abs(v - vi) <= 2 * eps, fmt("reset chain %.8f vs value iteration %.8f", v, vi));
  const double fine = solve_discounted(spec, eps / 2).report.optimal_value;
  out.require(std::abs(v - fine) < eps, fmt("halving epsilon moved V by %.2e", std::abs(v - fine)));
  out.note(fmt("reset chain |V - VI| %.2e, |V(eps) - V(eps/2)| %.2e", std::abs(v - vi), std::abs(v - fine)));
  return out;
}

Outcome protocol_legality() {
  Outcome out;
  const std::vector<int> binary = {2, 2};
  int accepted = 0;
  for (int horizon = 1; horizon <= 4; ++horizon) {
    ProblemSpec spec = random_problem({2, horizon, 2, 2, 2}, 3);
    std::vector<SharingProtocol> presets = {
        delayed_sharing_protocol({2, 2}, horizon, binary, binary),
        periodic_sharing_protocol(2, horizon, binary, binary),
        control_sharing_protocol(horizon, binary, binary),
        no_sharing_protocol(1, horizon, binary, binary),
    };
    for (auto& p : presets) {
      spec.protocol = p;
      const auto issues = validate_problem(spec);
      out.require(issues.empty(), p.kind + " T=" + std::to_string(horizon) + (issues.empty() ? "" : ": " + issues[0]));
      accepted += issues.empty();
    }
    ProblemSpec product = random_problem({2, horizon, 4, 2, 2}, 3);
    const auto kernels = component_observation_kernels({2, 2});
    for (int i = 0; i < 2; ++i) product.obs_kernel[i].assign(horizon, kernels[i]);
    product.protocol = delayed_sharing_protocol({1, 1}, horizon, binary, binary);
    const bool ok = validate_problem(product).empty();
    out.require(ok, "delayed state sharing T=" + std::to_string(horizon));
    accepted += ok;
  }
  const std::string data = std::string(CIS_DATA_DIR) + "/problems/";
  const auto overlap = validate_problem(load_problem(data + "overlap_violation.json"));
  bool cites_overlap = false;
  for (const auto& s : overlap) cites_overlap = cites_overlap || s.find("no-overlap") != std::string::npos;
  out.require(cites_overlap, "overlap fixture accepted");
  const auto control = validate_problem(load_problem(data + "control_sharing_discounted.json"));
  out.require(!control.empty(), "discounted control sharing accepted");
  out.note(std::to_string(accepted) + "/20 preset instances accepted; overlap fixture rejected: " +
           (cites_overlap ? "yes" : "no") + "; discounted control sharing rejected: " +
           (control.empty() ? "no" : "yes"));
  return out;
}

class CliRunner {
 public:
  CliRunner() : dir_(fs::temp_directory_path() / "cis_acceptance") {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~CliRunner() { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& stdout_name) const {
    const std::string command = std::string(CIS_CLI) + " " + args + " > " + path(stdout_name) + " 2> /dev/null";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

std::string slurp(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Outcome out;
  const CliRunner cli;
  const std::string data = std::string(CIS_DATA_DIR) + "/problems/";
  int compared = 0;
  auto same = [&](const std::string& label, const std::string& a, const std::string& b) {
    const std::string x = slurp(cli.path(a));
    const std::string y = slurp(cli.path(b));
    out.require(!x.empty() && x == y, label);
    ++compared;
  };
  auto ok = [&](int code, const std::string& label) { out.require(code == 0, label + " exit " + std::to_string(code)); };

  struct Solve {
    std::string name, problem, flags;
  };
  const std::vector<Solve> solves = {
      {"seed1", "acceptance_seed1.json", ""},
      {"seed1_reduced", "acceptance_seed1.json", "--variant reduced"},
      {"delay2", "delayed_sharing_2x2.json", ""},
      {"static", "static_team.json", ""},
      {"reset", "reset_chain.json", "--epsilon 1e-6"},
  };
  for (const auto& s : solves) {
    for (const char* run : {"a", "b", "t1", "t8"}) {
      const std::string threads = run[0] == 't' ? std::string(" --threads ") + (run + 1) : "";
      ok(cli.run(s.flags + threads + " --output " + cli.path(s.name + "_" + run + ".json") + " solve " + data + s.problem,
                 s.name + "_" + run + ".stdout"),
         "solve " + s.name);
    }
    same("solve " + s.name + " repeat", s.name + "_a.json", s.name + "_b.json");
    same("solve " + s.name + " threads", s.name + "_t1.json", s.name + "_t8.json");
  }

  for (const char* run : {"a", "b", "t8"}) {
    const std::string threads = run[0] == 't' ? " --threads 8" : "";
    ok(cli.run(threads.substr(threads.empty() ? 0 : 1) + " enumerate " + data + "acceptance_seed1.json",
               std::string("enum_") + run + ".json"),
       "enumerate");
  }
  same("enumerate repeat", "enum_a.json", "enum_b.json");
  same("enumerate threads", "enum_a.json", "enum_t8.json");
  const std::string golden = slurp(std::string(CIS_DATA_DIR) + "/golden/acceptance_seed1.json");
  out.require(!golden.empty() && golden == slurp(cli.path("enum_a.json")), "enumerate differs from golden file");
  ++compared;

  for (const auto& [name, problem] : std::vector<std::pair<std::string, std::string>>{
           {"seed1", "acceptance_seed1.json"}, {"reset", "reset_chain.json"}}) {
    for (const char* run : {"a", "b", "t1", "t8"}) {
      const std::string threads = run[0] == 't' ? std::string("--threads ") + (run + 1) + " " : "";
      const std::string stem = "sim_" + name + "_" + run;
      ok(cli.run(threads + "--episodes 20000 --seed 7 simulate " + data + problem + " --policy " +
                     cli.path(name + "_a.json") + " --trajectories " + cli.path(stem + ".jsonl"),
                 stem + ".json"),
         "simulate " + name);
    }
    same("simulate " + name + " repeat", "sim_" + name + "_a.json", "sim_" + name + "_b.json");
    same("simulate " + name + " threads", "sim_" + name + "_t1.json", "sim_" + name + "_t8.json");
    same("trajectories " + name + " repeat", "sim_" + name + "_a.jsonl", "sim_" + name + "_b.jsonl");
    same("trajectories " + name + " threads", "sim_" + name + "_t1.jsonl", "sim_" + name + "_t8.jsonl");
  }
  out.note(std::to_string(compared) + " byte comparisons over solve, enumerate and simulate");
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"static team counting", static_team_counts},
      {"DP equals both enumerations", dp_matches_enumeration},
      {"reduced belief equivalence", reduced_matches_full},
      {"centralized reduction", centralized_reduction},
      {"filter correctness", filter_correctness},
      {"tree/law coupling", coupling},
      {"Monte-Carlo consistency", monte_carlo},
      {"discounted fixed point", discounted_fixed_point},
      {"protocol legality", protocol_legality},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = criteria[k].second();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.note(std::string("exception: ") + e.what());
    }
    failed += !outcome.pass;
    std::printf("%s criterion %zu (%s): %s [%.1f s]\n", outcome.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].first.c_str(), outcome.detail.c_str(), since(start));
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
