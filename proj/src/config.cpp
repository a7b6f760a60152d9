/*
 * Copyright (C) 2026 The etmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "etmpc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "etmpc/terminal_io.hpp"

namespace etmpc {
namespace {

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    std::string where = origin_;
    const auto mark = n.Mark();
    if (mark.line >= 0) where += ":" + std::to_string(mark.line + 1);
    throw ConfigError(where + ": " + msg);
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(origin_ + ": " + msg); }

  void keys(const YAML::Node& map, const std::string& where,
            std::initializer_list<const char*> allowed) const {
    if (!map.IsMap()) fail(map, "'" + where + "' must be a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) fail(kv.first, "unknown key '" + key + "' in '" + where + "'");
    }
  }

  template <class T>
  T scalar(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, "'" + what + "' must be a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, "'" + what + "' has the wrong type");
    }
  }
  double real(const YAML::Node& n, const std::string& what) const {
    const double v = scalar<double>(n, what);
    if (!std::isfinite(v)) fail(n, "'" + what + "' must be finite");
    return v;
  }
  int integer(const YAML::Node& n, const std::string& what) const { return scalar<int>(n, what); }

  Vector vec(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, "'" + what + "' must be a list");
    Vector v(static_cast<int>(n.size()));
    for (std::size_t k = 0; k < n.size(); ++k) v(static_cast<int>(k)) = real(n[k], what);
    return v;
  }
  std::vector<int> ints(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) fail(n, "'" + what + "' must be a list");
    std::vector<int> v;
    for (const auto& e : n) v.push_back(integer(e, what));
    return v;
  }
  Matrix mat(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence() || n.size() == 0) fail(n, "'" + what + "' must be a list of rows");
    const auto rows = static_cast<int>(n.size());
    const Vector first = vec(n[0], what);
    Matrix M(rows, first.size());
    for (int i = 0; i < rows; ++i) {
      const Vector r = vec(n[static_cast<std::size_t>(i)], what);
      if (r.size() != M.cols()) fail(n[static_cast<std::size_t>(i)], "ragged rows in '" + what + "'");
      M.row(i) = r.transpose();
    }
    return M;
  }

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
};

void read_model(const Reader& rd, const YAML::Node& n, ModelConfig& m) {
  rd.keys(n, "model", {"type", "dt", "mass", "inertia", "gravity", "limits", "A", "B",
                       "state_bounds", "input_bounds", "position_indices"});
  if (n["type"]) {
    m.type = rd.scalar<std::string>(n["type"], "model.type");
    if (m.type != "quadcopter" && m.type != "linear") {
      rd.fail(n["type"], "model.type must be 'quadcopter' or 'linear'");
    }
  }
  if (n["dt"]) m.dt = rd.real(n["dt"], "model.dt");
  if (!(m.dt > 0.0)) rd.fail(n["dt"] ? n["dt"] : n, "model.dt must be positive");
  if (n["mass"]) m.quadcopter.mass = rd.real(n["mass"], "model.mass");
  if (n["gravity"]) m.quadcopter.gravity = rd.real(n["gravity"], "model.gravity");
  if (n["inertia"]) {
    const Vector J = rd.vec(n["inertia"], "model.inertia");
    if (J.size() != 3) rd.fail(n["inertia"], "model.inertia needs 3 entries");
    m.quadcopter.inertia = J;
  }
  if (m.quadcopter.mass <= 0 || m.quadcopter.gravity <= 0 || (m.quadcopter.inertia.array() <= 0).any()) {
    rd.fail(n, "quadcopter mass, inertia and gravity must be positive");
  }
  if (const auto l = n["limits"]) {
    rd.keys(l, "model.limits", {"position", "velocity", "attitude", "rate", "thrust", "torque"});
    auto& q = m.limits;
    if (l["position"]) q.position = rd.real(l["position"], "limits.position");
    if (l["velocity"]) q.velocity = rd.real(l["velocity"], "limits.velocity");
    if (l["attitude"]) q.attitude = rd.real(l["attitude"], "limits.attitude");
    if (l["rate"]) q.rate = rd.real(l["rate"], "limits.rate");
    if (l["thrust"]) q.thrust = rd.real(l["thrust"], "limits.thrust");
    if (l["torque"]) {
      const Vector t = rd.vec(l["torque"], "limits.torque");
      if (t.size() != 3) rd.fail(l["torque"], "limits.torque needs 3 entries");
      q.torque = t;
    }
  }
  if (m.type == "linear") {
    for (const char* k : {"A", "B", "state_bounds", "input_bounds"}) {
      if (!n[k]) rd.fail(n, std::string("linear model needs '") + k + "'");
    }
    m.A = rd.mat(n["A"], "model.A");
    m.B = rd.mat(n["B"], "model.B");
    m.state_bounds = rd.vec(n["state_bounds"], "model.state_bounds");
    m.input_bounds = rd.vec(n["input_bounds"], "model.input_bounds");
    if (m.A.rows() != m.A.cols() || m.B.rows() != m.A.rows() ||
        m.state_bounds.size() != m.A.rows() || m.input_bounds.size() != m.B.cols()) {
      rd.fail(n, "linear model dimensions are inconsistent");
    }
  }
  if (n["position_indices"]) {
    m.position_indices = rd.ints(n["position_indices"], "model.position_indices");
  } else if (m.type == "quadcopter") {
    m.position_indices = {0, 1, 2};
  }
}

void read_constants(const Reader& rd, const YAML::Node& n, AssumptionConstants& c) {
  rd.keys(n, "controller.constants",
          {"c_delta_l", "c_delta_u", "delta_loc", "kappa_max", "rho", "H_inf_norm", "L_inf_norm"});
  for (const char* k :
       {"c_delta_l", "c_delta_u", "delta_loc", "kappa_max", "rho", "H_inf_norm", "L_inf_norm"}) {
    if (!n[k]) rd.fail(n, std::string("controller.constants needs '") + k + "'");
  }
  c.c_delta_l = rd.real(n["c_delta_l"], "c_delta_l");
  c.c_delta_u = rd.real(n["c_delta_u"], "c_delta_u");
  c.delta_loc = rd.real(n["delta_loc"], "delta_loc");
  c.kappa_max = rd.real(n["kappa_max"], "kappa_max");
  c.rho = rd.real(n["rho"], "rho");
  c.H_inf_norm = rd.real(n["H_inf_norm"], "H_inf_norm");
  c.L_inf_norm = rd.real(n["L_inf_norm"], "L_inf_norm");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    rd.fail(n, e.what());
  }
}

void read_controller(const Reader& rd, const YAML::Node& n, ControllerConfig& c) {
  rd.keys(n, "controller",
          {"horizon", "epsilon", "Q", "R", "terminal_constraint", "cost_inflation", "w_hat_design",
           "lipschitz", "lipschitz_samples", "terminal_samples", "terminal_file", "constants",
           "estimation"});
  if (n["horizon"]) c.N = rd.integer(n["horizon"], "controller.horizon");
  if (c.N < 1) rd.fail(n, "controller.horizon must be at least 1");
  if (n["epsilon"]) c.epsilon = rd.real(n["epsilon"], "controller.epsilon");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) {
    rd.fail(n["epsilon"] ? n["epsilon"] : n, "controller.epsilon must lie in (0, 1)");
  }
  if (n["Q"]) c.Q_diag = rd.vec(n["Q"], "controller.Q");
  if (n["R"]) c.R_diag = rd.vec(n["R"], "controller.R");
  if (n["terminal_constraint"]) {
    c.terminal_constraint = rd.scalar<bool>(n["terminal_constraint"], "controller.terminal_constraint");
  }
  if (n["cost_inflation"]) c.cost_inflation = rd.real(n["cost_inflation"], "controller.cost_inflation");
  if (c.cost_inflation < 0.0) rd.fail(n["cost_inflation"], "cost_inflation must be non-negative");
  if (const auto w = n["w_hat_design"]) {
    if (w.IsScalar() && w.Scalar() == "certified") c.w_hat_design = -1.0;
    else {
      c.w_hat_design = rd.real(w, "controller.w_hat_design");
      if (c.w_hat_design < 0.0) rd.fail(w, "w_hat_design must be 'certified' or non-negative");
    }
  }
  if (const auto l = n["lipschitz"]) {
    if (l.IsScalar() && l.Scalar() == "estimate") c.lipschitz = 0.0;
    else if (l.IsScalar() && l.Scalar() == "spectral") c.lipschitz = -1.0;
    else {
      c.lipschitz = rd.real(l, "controller.lipschitz");
      if (!(c.lipschitz > 0.0)) rd.fail(l, "lipschitz must be 'estimate', 'spectral' or positive");
    }
  }
  if (n["lipschitz_samples"]) c.lipschitz_samples = rd.integer(n["lipschitz_samples"], "lipschitz_samples");
  if (c.lipschitz_samples < 2) rd.fail(n, "lipschitz_samples must be at least 2");
  if (n["terminal_samples"]) c.terminal_samples = rd.integer(n["terminal_samples"], "terminal_samples");
  if (c.terminal_samples < 1) rd.fail(n, "terminal_samples must be positive");
  if (n["terminal_file"]) c.terminal_file = rd.scalar<std::string>(n["terminal_file"], "terminal_file");
  if (n["constants"]) {
    AssumptionConstants k;
    read_constants(rd, n["constants"], k);
    c.constants = k;
  }
  if (const auto e = n["estimation"]) {
    rd.keys(e, "controller.estimation",
            {"samples", "seed", "local_radius", "region_scale", "metric_shift"});
    auto& o = c.estimation;
    if (e["samples"]) o.samples = rd.integer(e["samples"], "estimation.samples");
    if (e["seed"]) o.seed = rd.scalar<std::uint64_t>(e["seed"], "estimation.seed");
    if (e["local_radius"]) o.local_radius = rd.real(e["local_radius"], "estimation.local_radius");
    if (e["region_scale"]) o.region_scale = rd.real(e["region_scale"], "estimation.region_scale");
    if (e["metric_shift"]) o.metric_shift = rd.real(e["metric_shift"], "estimation.metric_shift");
    if (o.samples < 1 || !(o.local_radius > 0) || !(o.region_scale > 0) ||
        !(o.metric_shift > 0 && o.metric_shift <= 1)) {
      rd.fail(e, "estimation: samples >= 1, positive radius and scale, metric_shift in (0, 1]");
    }
  }
}

void read_solver(const Reader& rd, const YAML::Node& n, SolverConfig& s) {
  rd.keys(n, "solver", {"max_sqp_iters", "qp_max_iters", "kkt_tol", "constraint_tol",
                        "dynamics_tol", "ls_contraction", "ls_min_step", "qp_eps_abs",
                        "qp_eps_rel"});
  if (n["max_sqp_iters"]) s.max_sqp_iters = rd.integer(n["max_sqp_iters"], "max_sqp_iters");
  if (n["qp_max_iters"]) s.qp_max_iters = rd.integer(n["qp_max_iters"], "qp_max_iters");
  if (n["kkt_tol"]) s.kkt_tol = rd.real(n["kkt_tol"], "kkt_tol");
  if (n["constraint_tol"]) s.constraint_tol = rd.real(n["constraint_tol"], "constraint_tol");
  if (n["dynamics_tol"]) s.dynamics_tol = rd.real(n["dynamics_tol"], "dynamics_tol");
  if (n["ls_contraction"]) s.ls_contraction = rd.real(n["ls_contraction"], "ls_contraction");
  if (n["ls_min_step"]) s.ls_min_step = rd.real(n["ls_min_step"], "ls_min_step");
  if (n["qp_eps_abs"]) s.qp.eps_abs = rd.real(n["qp_eps_abs"], "qp_eps_abs");
  if (n["qp_eps_rel"]) s.qp.eps_rel = rd.real(n["qp_eps_rel"], "qp_eps_rel");
  if (s.max_sqp_iters < 1 || s.qp_max_iters < 1 || !(s.kkt_tol > 0) || !(s.constraint_tol > 0) ||
      !(s.dynamics_tol > 0) || !(s.ls_min_step > 0) || !(s.qp.eps_abs > 0) ||
      !(s.qp.eps_rel >= 0) || !(s.ls_contraction > 0 && s.ls_contraction < 1)) {
    rd.fail(n, "solver: iteration limits and tolerances must be positive");
  }
}

SweepSpec read_grid(const Reader& rd, const YAML::Node& n, const std::string& where,
                    const SweepSpec& defaults) {
  SweepSpec s = defaults;
  if (n["w_hat"]) {
    const Vector v = rd.vec(n["w_hat"], where + ".w_hat");
    s.w_hat_values.assign(v.data(), v.data() + v.size());
  }
  if (n["budgets"]) s.budgets = rd.ints(n["budgets"], where + ".budgets");
  if (n["runs"]) s.runs = rd.integer(n["runs"], where + ".runs");
  if (n["transient_fraction"]) {
    s.transient_fraction = rd.real(n["transient_fraction"], where + ".transient_fraction");
  }
  if (s.w_hat_values.empty() || s.budgets.empty()) rd.fail(n, "'" + where + "' has an empty grid");
  if (s.runs < 1) rd.fail(n, "'" + where + ".runs' must be at least 1");
  if (s.transient_fraction < 0.0 || s.transient_fraction >= 1.0) {
    rd.fail(n, "'" + where + ".transient_fraction' must lie in [0, 1)");
  }
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  const Reader rd(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) rd.fail("top level must be a mapping");
  rd.keys(root, "top level", {"name", "seed", "output", "model", "fleet", "disturbance",
                              "controller", "solver", "sweep", "certify"});
  ExperimentConfig c;
  c.source = origin;
  if (root["name"]) c.name = rd.scalar<std::string>(root["name"], "name");
  if (root["seed"]) c.seed = rd.scalar<std::uint64_t>(root["seed"], "seed");
  if (root["output"]) c.output_dir = rd.scalar<std::string>(root["output"], "output");
  if (root["model"]) read_model(rd, root["model"], c.model);
  else c.model.position_indices = {0, 1, 2};

  const int n = c.model.type == "quadcopter" ? quad::kStates : static_cast<int>(c.model.A.rows());
  const int m = c.model.type == "quadcopter" ? quad::kInputs : static_cast<int>(c.model.B.cols());
  for (int idx : c.model.position_indices) {
    if (idx < 0 || idx >= n) rd.fail(root["model"], "position index out of range");
  }

  if (const auto f = root["fleet"]) {
    rd.keys(f, "fleet", {"systems", "budget", "duration", "initial_position_box", "initial_box",
                         "initial_states", "divergence_threshold"});
    if (f["systems"]) c.systems = rd.integer(f["systems"], "fleet.systems");
    if (c.systems < 1) rd.fail(f["systems"] ? f["systems"] : f, "fleet.systems must be at least 1");
    if (f["budget"]) c.budget = rd.integer(f["budget"], "fleet.budget");
    if (c.budget < 1 || c.budget > c.systems) {
      rd.fail(f["budget"] ? f["budget"] : f,
              "fleet.budget must satisfy 1 <= M_c <= M_s (M_c = " + std::to_string(c.budget) +
                  ", M_s = " + std::to_string(c.systems) + ")");
    }
    if (f["duration"]) c.duration = rd.integer(f["duration"], "fleet.duration");
    if (c.duration < 1) rd.fail(f["duration"], "fleet.duration must be at least 1");
    if (f["initial_position_box"]) {
      c.initial_position_box = rd.real(f["initial_position_box"], "fleet.initial_position_box");
      if (c.initial_position_box < 0) rd.fail(f["initial_position_box"], "box must be non-negative");
    }
    if (f["initial_box"]) {
      c.initial_box = rd.vec(f["initial_box"], "fleet.initial_box");
      if (c.initial_box.size() != n || (c.initial_box.array() < 0).any()) {
        rd.fail(f["initial_box"], "fleet.initial_box needs " + std::to_string(n) +
                                      " non-negative entries");
      }
    }
    if (f["initial_states"]) {
      const Matrix X = rd.mat(f["initial_states"], "fleet.initial_states");
      if (X.rows() != c.systems || X.cols() != n) {
        rd.fail(f["initial_states"], "fleet.initial_states needs one row of length " +
                                         std::to_string(n) + " per system");
      }
      for (int i = 0; i < X.rows(); ++i) c.initial_states.push_back(X.row(i).transpose());
    }
    if (f["divergence_threshold"]) {
      c.divergence_threshold = rd.real(f["divergence_threshold"], "fleet.divergence_threshold");
    }
  }
  if (c.initial_box.size() == 0) {
    c.initial_box = Vector::Zero(n);
    for (int idx : c.model.position_indices) c.initial_box(idx) = c.initial_position_box;
  }

  if (const auto d = root["disturbance"]) {
    rd.keys(d, "disturbance", {"w_hat", "active_indices", "per_system_scale"});
    if (d["w_hat"]) c.disturbance.w_hat = rd.real(d["w_hat"], "disturbance.w_hat");
    if (c.disturbance.w_hat < 0) rd.fail(d["w_hat"], "disturbance.w_hat must be non-negative");
    if (d["active_indices"]) {
      c.disturbance.active_indices = rd.ints(d["active_indices"], "disturbance.active_indices");
      for (int idx : c.disturbance.active_indices) {
        if (idx < 0 || idx >= n) rd.fail(d["active_indices"], "disturbance index out of range");
      }
    }
    if (d["per_system_scale"]) {
      const Vector s = rd.vec(d["per_system_scale"], "disturbance.per_system_scale");
      if ((s.array() < 0).any()) rd.fail(d["per_system_scale"], "scales must be non-negative");
      c.disturbance.per_system_scale.assign(s.data(), s.data() + s.size());
    }
  } else if (c.model.type == "quadcopter") {
    c.disturbance.active_indices = {quad::kVelocity, quad::kVelocity + 1, quad::kVelocity + 2};
  }

  if (root["controller"]) read_controller(rd, root["controller"], c.controller);
  auto& ctl = c.controller;
  if (ctl.Q_diag.size() == 0) {
    ctl.Q_diag = Vector::Ones(n);
    if (c.model.type == "quadcopter") {
      ctl.Q_diag << 10, 10, 10, 1, 1, 1, 1, 1, 1, 1, 0.1, 0.1, 0.1;
    }
  }
  if (ctl.R_diag.size() == 0) {
    ctl.R_diag = c.model.type == "quadcopter" ? Vector::Constant(m, 0.1) : Vector::Ones(m);
  }
  if (ctl.Q_diag.size() != n || ctl.R_diag.size() != m) {
    rd.fail(root["controller"], "controller.Q needs " + std::to_string(n) +
                                    " and controller.R needs " + std::to_string(m) + " entries");
  }
  if ((ctl.Q_diag.array() <= 0).any() || (ctl.R_diag.array() <= 0).any()) {
    rd.fail(root["controller"], "controller.Q and controller.R must be positive");
  }
  if (ctl.lipschitz < 0.0 && c.model.type != "linear") {
    rd.fail(root["controller"], "lipschitz: 'spectral' needs a linear model");
  }
  if (!ctl.terminal_file.empty() && ctl.terminal_file.front() != '/') {
    const auto slash = origin.find_last_of('/');
    if (slash != std::string::npos) ctl.terminal_file = origin.substr(0, slash + 1) + ctl.terminal_file;
  }

  if (root["solver"]) read_solver(rd, root["solver"], c.solver);

  if (const auto s = root["sweep"]) {
    rd.keys(s, "sweep", {"w_hat", "budgets", "runs", "transient_fraction", "desk"});
    SweepSpec defaults;
    c.sweep = read_grid(rd, s, "sweep", defaults);
    for (int b : c.sweep->budgets) {
      if (b < 1 || b > c.systems) rd.fail(s["budgets"], "sweep budget outside [1, M_s]");
    }
    for (double w : c.sweep->w_hat_values) {
      if (w < 0) rd.fail(s["w_hat"], "sweep disturbance values must be non-negative");
    }
    if (const auto desk = s["desk"]) {
      rd.keys(desk, "sweep.desk", {"w_hat", "budgets", "runs", "transient_fraction"});
      c.desk_sweep = read_grid(rd, desk, "sweep.desk", *c.sweep);
      for (int b : c.desk_sweep->budgets) {
        if (b < 1 || b > c.systems) rd.fail(desk["budgets"], "desk budget outside [1, M_s]");
      }
    }
  }
  if (const auto cert = root["certify"]) {
    rd.keys(cert, "certify", {"w_hat_grid"});
    if (cert["w_hat_grid"]) {
      const Vector g = rd.vec(cert["w_hat_grid"], "certify.w_hat_grid");
      if ((g.array() < 0).any()) rd.fail(cert["w_hat_grid"], "grid values must be non-negative");
      c.certify_grid.assign(g.data(), g.data() + g.size());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path);
}

DynamicsModel build_model(const ModelConfig& config) {
  if (config.type == "quadcopter") return quadcopter_model(config.quadcopter, config.dt, config.limits);
  return linear_model(config.A, config.B, Polytope::symmetric_box(config.state_bounds),
                      Polytope::symmetric_box(config.input_bounds), config.dt,
                      config.position_indices);
}

DesignOptions design_options(const ExperimentConfig& config, int budget) {
  const auto& ctl = config.controller;
  DesignOptions o;
  o.N = ctl.N;
  o.epsilon = ctl.epsilon;
  o.systems = config.systems;
  o.budget = budget;
  o.w_hat_design = ctl.w_hat_design;
  if (ctl.lipschitz < 0.0) {
    Eigen::JacobiSVD<Matrix> svd(config.model.A);
    o.lipschitz = svd.singularValues()(0);
  } else {
    o.lipschitz = ctl.lipschitz;
  }
  o.lipschitz_samples = ctl.lipschitz_samples;
  o.terminal_constraint = ctl.terminal_constraint;
  o.constants = ctl.constants;
  o.constant_options = ctl.estimation;
  o.constant_options.seed = ctl.estimation.seed ^ config.seed;
  o.terminal.samples = ctl.terminal_samples;
  o.terminal.seed = config.seed;
  o.terminal.cost_inflation = ctl.cost_inflation;
  if (!ctl.terminal_file.empty()) o.fixed_terminal = read_terminal_file(ctl.terminal_file);
  return o;
}

FleetConfig fleet_config(const ExperimentConfig& config, std::shared_ptr<const DynamicsModel> model,
                         const ControllerDesign& design) {
  FleetConfig f;
  f.systems = config.systems;
  f.budget = config.budget;
  f.model = std::move(model);
  f.disturbance = config.disturbance;
  f.initial_states = config.initial_states;
  f.initial_box = config.initial_box;
  f.duration = config.duration;
  f.ocp = design.spec;
  f.solver = config.solver;
  f.divergence_threshold = config.divergence_threshold;
  f.seed = config.seed;
  return f;
}

}  // namespace etmpc
