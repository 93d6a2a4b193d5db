#include "cis/io.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "cis/coordinator.hpp"

namespace cis {

namespace {

[[noreturn]] void shape_error(const std::string& path, const std::string& what) {
  throw InvalidParameter(path + ": " + what);
}

const Json& field(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) shape_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) shape_error(path, std::string("missing field '") + key + "'");
  return *it;
}

const Json& array(const Json& j, const std::string& path, std::size_t size = 0) {
  if (!j.is_array()) shape_error(path, "expected an array");
  if (size != 0 && j.size() != size)
    shape_error(path, "expected " + std::to_string(size) + " entries, found " + std::to_string(j.size()));
  return j;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) shape_error(path, "expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) shape_error(path, "expected an integer");
  return j.get<int>();
}

std::string at(const std::string& path, std::size_t k) { return path + "[" + std::to_string(k) + "]"; }

Eigen::VectorXd vector_from(const Json& j, int size, const std::string& path) {
  array(j, path, size);
  Eigen::VectorXd v(size);
  for (int k = 0; k < size; ++k) v[k] = number(j[k], at(path, k));
  return v;
}

Eigen::MatrixXd matrix_from(const Json& j, int rows, int cols, const std::string& path) {
  array(j, path, rows);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) m.row(r) = vector_from(j[r], cols, at(path, r)).transpose();
  return m;
}

std::vector<int> ints_from(const Json& j, const std::string& path) {
  array(j, path);
  std::vector<int> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(integer(j[k], at(path, k)));
  return out;
}

FiniteSpace space_from(const Json& j, const std::string& path) {
  FiniteSpace s;
  if (j.is_number_integer()) {
    s.cardinality = j.get<int>();
    return s;
  }
  s.cardinality = integer(field(j, "cardinality", path), path + ".cardinality");
  if (auto it = j.find("labels"); it != j.end()) {
    array(*it, path + ".labels");
    for (const auto& l : *it) {
      if (!l.is_string()) shape_error(path + ".labels", "expected strings");
      s.labels.push_back(l.get<std::string>());
    }
  }
  return s;
}

Json space_to_json(const FiniteSpace& s) {
  Json j = {{"cardinality", s.cardinality}};
  if (!s.labels.empty()) j["labels"] = s.labels;
  return j;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json j = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) j.push_back(v[k]);
  return j;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(vector_to_json(m.row(r).transpose()));
  return j;
}

Json slots_to_json(const SlotList& slots) {
  Json j = Json::array();
  for (const auto& s : slots) j.push_back({{"kind", s.kind == SlotKind::observation ? "obs" : "act"}, {"lag", s.lag}});
  return j;
}

SlotList slots_from(const Json& j, const std::string& path) {
  array(j, path);
  SlotList out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string p = at(path, k);
    const Json& kind = field(j[k], "kind", p);
    if (kind != "obs" && kind != "act") shape_error(p + ".kind", "expected \"obs\" or \"act\"");
    out.push_back({kind == "obs" ? SlotKind::observation : SlotKind::action, integer(field(j[k], "lag", p), p + ".lag")});
  }
  return out;
}

Json protocol_to_json(const SharingProtocol& protocol) {
  Json steps = Json::array();
  for (const auto& row : protocol.steps) {
    Json r = Json::array();
    for (const auto& s : row)
      r.push_back({{"mem_size", s.mem_size},
                   {"msg_size", s.msg_size},
                   {"next_mem_size", s.next_mem_size},
                   {"message", s.message},
                   {"mem_update", s.mem_update},
                   {"witness",
                    {{"mem", slots_to_json(s.mem_slots)},
                     {"msg", slots_to_json(s.msg_slots)},
                     {"next_mem", slots_to_json(s.next_mem_slots)}}}});
    steps.push_back(std::move(r));
  }
  return {{"explicit", {{"kind", protocol.kind}, {"steps", std::move(steps)}}}};
}

SharingProtocol explicit_protocol(const Json& j, const std::string& path) {
  SharingProtocol protocol;
  if (auto it = j.find("kind"); it != j.end() && it->is_string()) protocol.kind = it->get<std::string>();
  const Json& steps = array(field(j, "steps", path), path + ".steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::string pi = at(path + ".steps", i);
    std::vector<ProtocolStep> row;
    for (std::size_t t = 0; t < array(steps[i], pi).size(); ++t) {
      const std::string p = at(pi, t);
      const Json& s = steps[i][t];
      ProtocolStep step;
      step.mem_size = integer(field(s, "mem_size", p), p + ".mem_size");
      step.msg_size = integer(field(s, "msg_size", p), p + ".msg_size");
      step.next_mem_size = integer(field(s, "next_mem_size", p), p + ".next_mem_size");
      step.message = ints_from(field(s, "message", p), p + ".message");
      step.mem_update = ints_from(field(s, "mem_update", p), p + ".mem_update");
      const Json& w = field(s, "witness", p);
      step.mem_slots = slots_from(field(w, "mem", p + ".witness"), p + ".witness.mem");
      step.msg_slots = slots_from(field(w, "msg", p + ".witness"), p + ".witness.msg");
      step.next_mem_slots = slots_from(field(w, "next_mem", p + ".witness"), p + ".witness.next_mem");
      row.push_back(std::move(step));
    }
    protocol.steps.push_back(std::move(row));
  }
  return protocol;
}

int param_int(const Json& params, const char* key, int fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  return integer(*it, std::string("protocol.params.") + key);
}

SharingProtocol preset_protocol(const Json& j, ProblemSpec& spec) {
  const Json& name_json = field(j, "preset", "protocol");
  if (!name_json.is_string()) shape_error("protocol.preset", "expected a string");
  const std::string name = name_json.get<std::string>();
  const Json params = j.contains("params") ? j.at("params") : Json::object();
  if (!params.is_object()) shape_error("protocol.params", "expected an object");

  const auto obs = spec.obs_sizes();
  const auto act = spec.action_sizes();
  const bool stationary = spec.mode == Mode::discounted;
  const int horizon = stationary ? 1 : spec.horizon;

  auto delays = [&] {
    if (params.contains("delays")) return ints_from(params.at("delays"), "protocol.params.delays");
    return std::vector<int>(spec.n, param_int(params, "delay", 1));
  };

  if (name == "delayed_sharing") return delayed_sharing_protocol(delays(), horizon, obs, act, stationary);
  if (name == "delayed_state_sharing") {
    // The state is a product of per-controller components and controller i
    // observes component i exactly.
    const auto components = ints_from(field(params, "components", "protocol.params"), "protocol.params.components");
    if (static_cast<int>(components.size()) != spec.n)
      shape_error("protocol.params.components", "expected one component size per controller");
    int product = 1;
    for (int c : components) product *= c;
    if (product != spec.num_states()) shape_error("protocol.params.components", "product differs from the state cardinality");
    for (int i = 0; i < spec.n; ++i)
      if (spec.num_obs(i) != components[i])
        shape_error("protocol.params.components", "controller " + std::to_string(i) + " must observe its component");
    const auto kernels = component_observation_kernels(components);
    spec.obs_kernel.assign(spec.n, {});
    for (int i = 0; i < spec.n; ++i) spec.obs_kernel[i].assign(stationary ? 1 : spec.horizon, kernels[i]);
    auto protocol = delayed_sharing_protocol(delays(), horizon, obs, act, stationary);
    protocol.kind = "delayed_state_sharing";
    return protocol;
  }
  if (name == "periodic_sharing") {
    const int period = param_int(params, "period", 1);
    return periodic_sharing_protocol(period, stationary ? std::max(1, period) : horizon, obs, act);
  }
  if (name == "control_sharing") return control_sharing_protocol(stationary ? 2 : horizon, obs, act);
  if (name == "no_sharing") return no_sharing_protocol(param_int(params, "window", 0), horizon, obs, act, stationary);
  shape_error("protocol.preset", "unknown preset '" + name + "'");
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Json prescription_json(const PrescriptionSpace& space, std::uint64_t index) {
  return {{"index", index}, {"tables", space.at(index).tables}};
}

Json roots_to_json(const std::vector<PolicyRoot>& roots) {
  Json j = Json::array();
  for (const auto& r : roots) j.push_back({{"common_obs", r.common_obs}, {"probability", r.probability}, {"node", r.node}});
  return j;
}

std::vector<PolicyRoot> roots_from(const Json& j) {
  std::vector<PolicyRoot> roots;
  for (std::size_t k = 0; k < array(j, "roots").size(); ++k) {
    const std::string p = at("roots", k);
    roots.push_back({integer(field(j[k], "common_obs", p), p), number(field(j[k], "probability", p), p),
                     integer(field(j[k], "node", p), p)});
  }
  return roots;
}

Eigen::VectorXd any_vector(const Json& j, const std::string& path) {
  array(j, path);
  return vector_from(j, static_cast<int>(j.size()), path);
}

}  // namespace

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    int line = 1;
    int column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t k = 0; k < end; ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(column), line,
                     column);
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidParameter("cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_json(buffer.str());
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidParameter("cannot write '" + path + "'");
  out << text;
}

ProblemSpec problem_from_json(const Json& doc) {
  try {
    ProblemSpec spec;
    spec.n = integer(field(doc, "n", "problem"), "n");
    if (spec.n < 1) shape_error("n", "at least one controller is required");
    const std::string mode = doc.value("mode", std::string("finite"));
    if (mode == "finite")
      spec.mode = Mode::finite;
    else if (mode == "discounted")
      spec.mode = Mode::discounted;
    else
      shape_error("mode", "expected \"finite\" or \"discounted\"");
    spec.horizon = spec.mode == Mode::finite ? integer(field(doc, "T", "problem"), "T") : doc.value("T", 1);
    if (spec.horizon < 1) shape_error("T", "horizon must be at least 1");
    if (doc.contains("discount")) spec.discount = number(doc.at("discount"), "discount");

    spec.state = space_from(field(doc, "state", "problem"), "state");
    const Json& obs = array(field(doc, "obs", "problem"), "obs", spec.n);
    const Json& actions = array(field(doc, "actions", "problem"), "actions", spec.n);
    for (int i = 0; i < spec.n; ++i) {
      spec.obs.push_back(space_from(obs[i], at("obs", i)));
      spec.actions.push_back(space_from(actions[i], at("actions", i)));
      if (spec.obs.back().cardinality < 1 || spec.actions.back().cardinality < 1)
        shape_error(at("obs", i), "cardinalities must be positive");
    }
    const int nx = spec.num_states();
    if (nx < 1) shape_error("state.cardinality", "must be positive");
    const int nu = spec.joint_actions();
    spec.initial_dist = vector_from(field(doc, "initial_dist", "problem"), nx, "initial_dist");

    const Json& transition = field(doc, "transition", "problem");
    if (transition.contains("kernel")) {
      const Json& k = array(transition.at("kernel"), "transition.kernel");
      for (std::size_t t = 0; t < k.size(); ++t) {
        const std::string p = at("transition.kernel", t);
        array(k[t], p, nx);
        Eigen::MatrixXd m(nx * nu, nx);
        for (int x = 0; x < nx; ++x) m.middleRows(x * nu, nu) = matrix_from(array(k[t][x], at(p, x), nu), nu, nx, at(p, x));
        spec.transition.push_back(std::move(m));
      }
    } else if (transition.contains("functional")) {
      const Json& f = transition.at("functional");
      const Json& noise_json = field(f, "noise", "transition.functional");
      NoiseModel noise;
      const Json& dist = array(field(noise_json, "dist", "transition.functional.noise"), "transition.functional.noise.dist");
      noise.space = noise_json.contains("space") ? space_from(noise_json.at("space"), "transition.functional.noise.space")
                                                 : FiniteSpace{static_cast<int>(dist.size()), {}};
      noise.dist = vector_from(dist, noise.space.cardinality, "transition.functional.noise.dist");
      const Json& table = array(field(f, "f_table", "transition.functional"), "transition.functional.f_table");
      for (std::size_t t = 0; t < table.size(); ++t) {
        const std::string p = at("transition.functional.f_table", t);
        std::vector<std::vector<std::vector<int>>> ft(nx);
        array(table[t], p, nx);
        for (int x = 0; x < nx; ++x) {
          array(table[t][x], at(p, x), nu);
          for (int u = 0; u < nu; ++u) ft[x].push_back(ints_from(table[t][x][u], at(at(p, x), u)));
        }
        spec.transition.push_back(build_kernel_from_functional(ft, noise, nx));
      }
    } else {
      shape_error("transition", "expected \"kernel\" or \"functional\"");
    }

    if (doc.contains("obs_kernels")) {
      const Json& ok = array(doc.at("obs_kernels"), "obs_kernels", spec.n);
      spec.obs_kernel.resize(spec.n);
      for (int i = 0; i < spec.n; ++i) {
        const std::string pi = at("obs_kernels", i);
        for (std::size_t t = 0; t < array(ok[i], pi).size(); ++t)
          spec.obs_kernel[i].push_back(matrix_from(ok[i][t], nx, spec.num_obs(i), at(pi, t)));
      }
    }

    const Json& cost = array(field(doc, "cost", "problem"), "cost");
    for (std::size_t t = 0; t < cost.size(); ++t) spec.cost.push_back(matrix_from(cost[t], nx, nu, at("cost", t)));

    if (doc.contains("initial_common_obs") && !doc.at("initial_common_obs").is_null()) {
      const Json& c = array(doc.at("initial_common_obs"), "initial_common_obs", nx);
      array(c[0], "initial_common_obs[0]");
      spec.initial_common_obs = matrix_from(c, nx, static_cast<int>(c[0].size()), "initial_common_obs");
    }

    const Json& protocol = field(doc, "protocol", "problem");
    if (protocol.contains("preset"))
      spec.protocol = preset_protocol(protocol, spec);
    else if (protocol.contains("explicit"))
      spec.protocol = explicit_protocol(protocol.at("explicit"), "protocol.explicit");
    else
      shape_error("protocol", "expected \"preset\" or \"explicit\"");

    if (spec.obs_kernel.empty()) shape_error("obs_kernels", "missing (required unless the preset supplies them)");
    return spec;
  } catch (const Json::exception& e) {
    throw InvalidParameter(std::string("problem file: ") + e.what());
  }
}

ProblemSpec load_problem(const std::string& path) { return problem_from_json(read_json_file(path)); }

Json problem_to_json(const ProblemSpec& spec, const Json& protocol) {
  Json doc;
  doc["n"] = spec.n;
  doc["mode"] = spec.mode == Mode::finite ? "finite" : "discounted";
  doc["T"] = spec.horizon;
  if (spec.mode == Mode::discounted) doc["discount"] = spec.discount;
  doc["state"] = space_to_json(spec.state);
  doc["obs"] = Json::array();
  doc["actions"] = Json::array();
  for (int i = 0; i < spec.n; ++i) {
    doc["obs"].push_back(space_to_json(spec.obs[i]));
    doc["actions"].push_back(space_to_json(spec.actions[i]));
  }
  doc["initial_dist"] = vector_to_json(spec.initial_dist);
  const int nu = spec.joint_actions();
  Json kernel = Json::array();
  for (const auto& m : spec.transition) {
    Json per_x = Json::array();
    for (int x = 0; x < spec.num_states(); ++x) per_x.push_back(matrix_to_json(m.middleRows(x * nu, nu)));
    kernel.push_back(std::move(per_x));
  }
  doc["transition"] = {{"kernel", std::move(kernel)}};
  doc["obs_kernels"] = Json::array();
  for (const auto& per_t : spec.obs_kernel) {
    Json k = Json::array();
    for (const auto& m : per_t) k.push_back(matrix_to_json(m));
    doc["obs_kernels"].push_back(std::move(k));
  }
  doc["cost"] = Json::array();
  for (const auto& c : spec.cost) doc["cost"].push_back(matrix_to_json(c));
  if (spec.initial_common_obs.size() != 0) doc["initial_common_obs"] = matrix_to_json(spec.initial_common_obs);
  doc["protocol"] = protocol.is_null() ? protocol_to_json(spec.protocol) : protocol;
  return doc;
}

std::string problem_digest(const ProblemSpec& spec) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(problem_to_json(spec).dump())));
  return buf;
}

Json to_json(const ValueReport& report) {
  return {{"optimal_value", report.optimal_value},
          {"explored_nodes", report.explored_nodes},
          {"policy_nodes", report.policy_nodes},
          {"prescription_space_sizes", report.prescription_space_sizes}};
}

Json to_json(const ControlStrategy& g) {
  Json roots = Json::array();
  for (const auto& [c, node] : g.roots) roots.push_back({{"common_obs", c}, {"node", node}});
  Json stages = Json::array();
  for (const auto& nodes : g.stages) {
    Json s = Json::array();
    for (const auto& law : nodes) {
      Json children = Json::array();
      for (const auto& [z, child] : law.children) children.push_back({z, child});
      s.push_back({{"tables", law.tables}, {"children", std::move(children)}});
    }
    stages.push_back(std::move(s));
  }
  return {{"roots", std::move(roots)}, {"stages", std::move(stages)}};
}

ControlStrategy strategy_from_json(const Json& doc) {
  try {
    ControlStrategy g;
    for (const auto& r : array(field(doc, "roots", "strategy"), "roots"))
      g.roots.emplace(r.at("common_obs").get<int>(), r.at("node").get<int>());
    for (const auto& nodes : array(field(doc, "stages", "strategy"), "stages")) {
      std::vector<LawNode> stage;
      for (const auto& n : nodes) {
        LawNode law;
        law.tables = n.at("tables").get<std::vector<std::vector<int>>>();
        for (const auto& c : n.at("children")) law.children.emplace(c.at(0).get<std::int64_t>(), c.at(1).get<int>());
        stage.push_back(std::move(law));
      }
      g.stages.push_back(std::move(stage));
    }
    return g;
  } catch (const Json::exception& e) {
    throw InvalidParameter(std::string("strategy file: ") + e.what());
  }
}

Json to_json(const EnumerationReport& report) {
  return {{"count", report.count}, {"minimum", report.minimum}, {"argmin", to_json(report.argmin)}};
}

Json to_json(const SimReport& report) {
  return {{"episodes", report.episodes},
          {"mean", report.mean},
          {"stderr", report.stderr_mean},
          {"audit_violations", report.audit_violations},
          {"seed", report.seed}};
}

Json to_json(const PairedReport& report) {
  Json j = {{"episodes", report.episodes}, {"divergent_episodes", report.divergent_episodes}};
  if (report.diverged)
    j["first_divergence"] = {{"episode", report.first.episode}, {"t", report.first.t}, {"field", report.first.field}};
  return j;
}

Json to_json(const Trajectory& trajectory, std::uint64_t episode) {
  Json steps = Json::array();
  for (const auto& s : trajectory.steps)
    steps.push_back({{"x", s.x}, {"y", s.y}, {"m", s.m}, {"u", s.u}, {"z", s.z}, {"cost", s.cost}});
  return {{"episode", episode},
          {"common_obs", trajectory.common_obs},
          {"total_cost", trajectory.total_cost},
          {"steps", std::move(steps)}};
}

Json policy_to_json(const ProblemSpec& spec, const FiniteSolution& solution) {
  Json stages = Json::array();
  for (std::size_t t = 0; t < solution.tree.stages.size(); ++t) {
    const PrescriptionSpace space(spec, static_cast<int>(t), std::numeric_limits<std::uint64_t>::max());
    Json nodes = Json::array();
    for (std::size_t k = 0; k < solution.tree.stages[t].size(); ++k) {
      const PolicyNode& node = solution.tree.stages[t][k];
      Json children = Json::array();
      for (const auto& [z, child] : node.children) children.push_back({z, child});
      nodes.push_back({{"id", k},
                       {"belief", vector_to_json(node.belief)},
                       {"prescription", prescription_json(space, node.prescription)},
                       {"value", node.value},
                       {"children", std::move(children)}});
    }
    stages.push_back(std::move(nodes));
  }
  return {{"kind", "tree"},
          {"problem_digest", problem_digest(spec)},
          {"reduced", solution.tree.reduced},
          {"report", to_json(solution.report)},
          {"roots", roots_to_json(solution.tree.roots)},
          {"stages", std::move(stages)}};
}

Json policy_to_json(const ProblemSpec& spec, const DiscountedSolution& solution) {
  const PrescriptionSpace space(spec, 0, std::numeric_limits<std::uint64_t>::max());
  const StationaryPolicy& p = solution.policy;
  Json entries = Json::array();
  for (std::size_t k = 0; k < p.entries.size(); ++k) {
    const auto& e = p.entries[k];
    entries.push_back({{"id", k},
                       {"belief", vector_to_json(e.belief)},
                       {"prescription", prescription_json(space, e.prescription)},
                       {"value", e.value},
                       {"depth", e.depth}});
  }
  return {{"kind", "stationary"},
          {"problem_digest", problem_digest(spec)},
          {"report", to_json(solution.report)},
          {"discount", p.discount},
          {"epsilon", p.epsilon},
          {"iterations", p.iterations},
          {"residual", p.residual},
          {"truncation_bound", p.truncation_bound},
          {"roots", roots_to_json(p.roots)},
          {"entries", std::move(entries)}};
}

PolicyTree tree_from_json(const Json& doc) {
  try {
    PolicyTree tree;
    tree.reduced = doc.value("reduced", false);
    tree.roots = roots_from(field(doc, "roots", "policy"));
    const Json& stages = array(field(doc, "stages", "policy"), "stages");
    for (std::size_t t = 0; t < stages.size(); ++t) {
      std::vector<PolicyNode> nodes;
      for (std::size_t k = 0; k < array(stages[t], at("stages", t)).size(); ++k) {
        const Json& n = stages[t][k];
        const std::string p = at(at("stages", t), k);
        PolicyNode node;
        node.belief = any_vector(field(n, "belief", p), p + ".belief");
        node.prescription = field(field(n, "prescription", p), "index", p + ".prescription").get<std::uint64_t>();
        node.value = number(field(n, "value", p), p + ".value");
        for (const auto& c : array(field(n, "children", p), p + ".children"))
          node.children.emplace_back(c.at(0).get<std::int64_t>(), c.at(1).get<int>());
        nodes.push_back(std::move(node));
      }
      tree.stages.push_back(std::move(nodes));
    }
    return tree;
  } catch (const Json::exception& e) {
    throw InvalidParameter(std::string("policy file: ") + e.what());
  }
}

StationaryPolicy stationary_from_json(const Json& doc) {
  try {
    StationaryPolicy p;
    p.discount = number(field(doc, "discount", "policy"), "discount");
    p.epsilon = number(field(doc, "epsilon", "policy"), "epsilon");
    p.iterations = integer(field(doc, "iterations", "policy"), "iterations");
    p.residual = number(field(doc, "residual", "policy"), "residual");
    p.truncation_bound = number(field(doc, "truncation_bound", "policy"), "truncation_bound");
    p.roots = roots_from(field(doc, "roots", "policy"));
    const Json& entries = array(field(doc, "entries", "policy"), "entries");
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const std::string path = at("entries", k);
      StationaryEntry e;
      e.belief = any_vector(field(entries[k], "belief", path), path + ".belief");
      e.prescription = field(field(entries[k], "prescription", path), "index", path).get<std::uint64_t>();
      e.value = number(field(entries[k], "value", path), path + ".value");
      e.depth = integer(field(entries[k], "depth", path), path + ".depth");
      p.entries.push_back(std::move(e));
    }
    return p;
  } catch (const Json::exception& e) {
    throw InvalidParameter(std::string("policy file: ") + e.what());
  }
}

}  // namespace cis
