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


#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "etmpc/config.hpp"
#include "etmpc/csv.hpp"
#include "etmpc/parallel.hpp"
#include "etmpc/sim.hpp"
#include "etmpc/terminal.hpp"
#include "etmpc/terminal_io.hpp"

namespace {

using namespace etmpc;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Raised for faults that are not configuration problems (a run that hits a
// solver fault, failed synthesis).
struct RuntimeFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 0;
  bool verbose = false;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

std::string output_path(const ExperimentConfig& cfg, const std::string& file) {
  std::filesystem::create_directories(cfg.output_dir);
  return (std::filesystem::path(cfg.output_dir) / file).string();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Matrix diag(const Vector& d) { return d.asDiagonal(); }

ControllerDesign design(const ExperimentConfig& cfg, const DynamicsModel& model, int budget) {
  return design_controller(model, diag(cfg.controller.Q_diag), diag(cfg.controller.R_diag),
                           design_options(cfg, budget));
}

void print_design(std::ostream& os, const ControllerDesign& d) {
  os << "design: N = " << d.spec.N << ", epsilon = " << fmt(d.spec.schedule.epsilon)
     << ", rho = " << fmt(d.constants.rho) << ", epsilon_N = "
     << fmt(d.spec.schedule.epsilon_k(d.spec.N)) << "\n"
     << "  w_hat_max = " << fmt(d.certificate.w_hat_max) << " (binding: "
     << to_string(d.certificate.binding) << (d.certificate.heuristic ? ", heuristic" : "")
     << "), design w_hat = " << fmt(d.w_hat_design) << "\n"
     << "  alpha_f = " << fmt(d.terminal.alpha_f) << ", W_N radius = "
     << fmt(d.terminal.W_N_radius) << ", terminal constraint "
     << (d.spec.terminal_constraint ? "on" : "off") << "\n";
}

int cmd_run(const Common& common) {
  const ExperimentConfig cfg = load(common);
  auto model = std::make_shared<const DynamicsModel>(build_model(cfg.model));
  const ControllerDesign d = design(cfg, *model, cfg.budget);
  const FleetConfig fleet = fleet_config(cfg, model, d);
  const SimTrace trace = run_closed_loop(fleet);

  const std::string csv = output_path(cfg, "trace.csv");
  write_csv(csv, trace_table(trace, common.verbose));

  std::ostringstream s;
  s << "experiment " << cfg.name << ", seed " << cfg.seed << "\n";
  print_design(s, d);
  s << "outcome: " << to_string(trace.outcome);
  if (!trace.message.empty()) s << " (" << trace.message << ")";
  s << "\nsteps: " << trace.steps.size() << ", M_s = " << trace.systems << ", M_c = "
    << trace.budget << "\n";
  const auto counts = trace.selection_counts();
  s << "selections per system:";
  for (int k : counts) s << " " << k;
  s << "\nfinal position error per system [m]:";
  for (const auto& x : trace.final_states) {
    double e = 0.0;
    for (int a : trace.position_indices) e += x(a) * x(a);
    s << " " << fmt(std::sqrt(e));
  }
  int iters = 0, qp_iters = 0, max_iter = 0;
  double wall = 0.0;
  for (const auto& st : trace.steps) {
    for (const auto& r : st.solves) {
      iters += r.iterations;
      qp_iters += r.qp_iterations;
      wall += r.wall_time;
      max_iter += r.status == OcpStatus::max_iter;
    }
  }
  const int solves = std::max(1, trace.total_solves());
  s << "\nmean abs position error (after 25% transient) [m]: "
    << fmt(mean_abs_position_error(trace)) << "\n"
    << "solves: " << trace.total_solves() << ", infeasible " << trace.infeasible_solves()
    << ", iteration-limited " << max_iter << ", mean SQP iterations "
    << fmt(double(iters) / solves) << ", mean QP iterations " << fmt(double(qp_iters) / solves)
    << ", mean solve time " << fmt(wall / solves) << " s\n"
    << "stability: "
    << (classify_stability(trace) == Stability::stable ? "stable" : "unstable") << "\n"
    << "trace: " << csv << "\n";
  std::ofstream(output_path(cfg, "summary.txt")) << s.str();
  std::cout << s.str();
  if (trace.outcome == Outcome::solver_fault) throw RuntimeFault("run ended with a solver fault");
  return 0;
}

int cmd_sweep(const Common& common, std::optional<int> runs, bool desk) {
  const ExperimentConfig cfg = load(common);
  if (!cfg.sweep) throw ConfigError(cfg.source + ": no 'sweep' section");
  SweepSpec spec = *cfg.sweep;
  if (desk) {
    if (!cfg.desk_sweep) throw ConfigError(cfg.source + ": --desk needs a 'sweep.desk' section");
    spec = *cfg.desk_sweep;
  }
  if (runs) spec.runs = *runs;
  spec.seed = cfg.seed;
  spec.validate(cfg.systems);

  auto model = std::make_shared<const DynamicsModel>(build_model(cfg.model));
  // The smallest budget has the longest trigger window and so the largest
  // terminal disturbance radius; that design is valid for every column.
  const int worst = *std::min_element(spec.budgets.begin(), spec.budgets.end());
  const ControllerDesign d = design(cfg, *model, worst);
  print_design(std::cout, d);
  const FleetConfig base = fleet_config(cfg, model, d);
  const SweepResult res = sweep(base, spec);

  const std::string csv = output_path(cfg, "param_sweep.csv");
  write_csv(csv, sweep_table(res));
  std::cout << "sweep " << spec.w_hat_values.size() << " x " << spec.budgets.size() << ", "
            << spec.runs << " runs per cell, seed " << spec.seed << "\n";
  std::cout << "w_hat \\ M_c";
  for (int b : spec.budgets) std::cout << "\t" << b;
  std::cout << "\n";
  for (std::size_t i = 0; i < spec.w_hat_values.size(); ++i) {
    std::cout << fmt(spec.w_hat_values[i]);
    for (std::size_t j = 0; j < spec.budgets.size(); ++j) {
      const auto& c = res.cell(static_cast<int>(i), static_cast<int>(j));
      std::cout << "\t" << fmt(c.value) << (c.unstable ? "*" : "");
    }
    std::cout << "\n";
  }
  std::cout << "(* unstable)\nresult: " << csv << "\n";
  return 0;
}

int cmd_certify(const Common& common, bool estimate) {
  const ExperimentConfig cfg = load(common);
  const auto& ctl = cfg.controller;
  const DynamicsModel model = build_model(cfg.model);
  // Linear models have closed-form constants; nonlinear ones need sampling.
  if (!ctl.constants && !estimate && !model.is_linear()) {
    throw ConfigError(cfg.source +
                      ": no 'controller.constants' section; pass --estimate to sample them");
  }
  const DesignOptions opt = design_options(cfg, cfg.budget);
  AssumptionConstants k;
  if (ctl.constants) {
    k = *ctl.constants;
  } else {
    const Matrix K = terminal_weights(model, diag(ctl.Q_diag), diag(ctl.R_diag), ctl.cost_inflation).K;
    k = estimate_assumption_constants(model, K, opt.constant_options);
  }
  k.validate();
  const double L = opt.lipschitz > 0.0
                       ? opt.lipschitz
                       : estimate_lipschitz(model, model.state_set(), opt.lipschitz_samples,
                                            opt.constant_options.seed);
  const PropagationBound bound = PropagationBound::lipschitz(L);
  const int p = window_length(cfg.systems, cfg.budget);
  const RobustnessCertificate cert = w_hat_max(k, bound, p, ctl.epsilon, ctl.N);

  std::ostream& os = std::cout;
  os << "certificate for " << cfg.name << " (" << model.name() << ")\n"
     << "  M_s = " << cfg.systems << ", M_c = " << cfg.budget << ", p = " << cert.p << "\n"
     << "  L = " << fmt(L) << ", rho = " << fmt(k.rho) << ", c_delta_l = " << fmt(k.c_delta_l)
     << ", c_delta_u = " << fmt(k.c_delta_u) << ", delta_loc = " << fmt(k.delta_loc)
     << ", kappa_max = " << fmt(k.kappa_max) << "\n"
     << "  ||H||_inf = " << fmt(k.H_inf_norm) << ", ||L||_inf = " << fmt(k.L_inf_norm)
     << ", epsilon = " << fmt(ctl.epsilon) << ", N = " << ctl.N << "\n"
     << "  constants: " << (k.heuristic ? "heuristic (sampled estimate)" : "exact") << "\n"
     << "thresholds on w_hat:\n"
     << "  local validity     " << fmt(cert.thresholds[0]) << "\n"
     << "  state constraints  " << fmt(cert.thresholds[1]) << "\n"
     << "  input constraints  " << fmt(cert.thresholds[2]) << "\n"
     << "w_hat_max = " << fmt(cert.w_hat_max) << " (binding: " << to_string(cert.binding)
     << ")\n";
  const double target = vwmax(bound, cert.w_hat_max, p);
  os << "  inverse check: analytic " << fmt(vwmax_inverse(bound, target, p)) << ", bisection "
     << fmt(vwmax_inverse_bisection(bound, target, p)) << "\n"
     << "vwmax(w_hat_max) = " << fmt(cert.vwmax_value)
     << " (the stability statement bounds vwmax(w_hat) by w_hat_max; feasibility bounds w_hat"
        " itself, both reported)\n"
     << "W_N radius at w_hat_max = " << fmt(cert.W_N_radius) << "\n"
     << "w_hat\tvwmax\tW_N radius\n";
  std::vector<double> grid = cfg.certify_grid;
  grid.push_back(cert.w_hat_max);
  for (double w : grid) {
    const double v = vwmax(bound, w, p);
    os << fmt(w) << "\t" << fmt(v) << "\t" << fmt(terminal_disturbance_radius(k, ctl.N, v)) << "\n";
  }
  return 0;
}

int cmd_terminal(const Common& common) {
  ExperimentConfig cfg = load(common);
  cfg.controller.terminal_file.clear();
  const DynamicsModel model = build_model(cfg.model);
  const ControllerDesign d = design(cfg, model, cfg.budget);
  TerminalFileMeta meta;
  meta.model = model.name();
  meta.seed = cfg.seed;
  meta.horizon = d.spec.N;
  meta.epsilon = d.spec.schedule.epsilon;
  meta.w_hat_design = d.w_hat_design;
  const std::string path = output_path(cfg, "terminal.json");
  write_terminal_file(path, d.terminal, meta);
  const auto& v = d.terminal.verification;
  print_design(std::cout, d);
  std::cout << "verification: " << v.samples << " samples, violations: Lyapunov decrease "
            << v.decrease_violations << ", robust invariance " << v.invariance_violations
            << ", constraint satisfaction " << v.constraint_violations << "\n"
            << "terminal file: " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-triggered robust MPC for fleets of disturbed systems"};
  app.require_subcommand(1);
  Common common;
  std::optional<int> runs;
  bool desk = false;
  bool estimate = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", common.config, "experiment config file")->required();
    sub->add_option("--seed", common.seed, "seed overriding the config");
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--jobs", common.jobs, "worker threads (0: runtime default)")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--verbose", common.verbose, "per-solve statistics in the trace");
  };
  auto* run = app.add_subcommand("run", "closed-loop run, writes trace.csv and summary.txt");
  add_common(run);
  auto* sw = app.add_subcommand("sweep", "parameter sweep, writes param_sweep.csv");
  add_common(sw);
  sw->add_option("--runs", runs, "runs per cell")->check(CLI::PositiveNumber);
  sw->add_flag("--desk", desk, "use the desk-scale grid");
  auto* cert = app.add_subcommand("certify", "robustness certificate report");
  add_common(cert);
  cert->add_flag("--estimate", estimate, "sample the incremental stability constants");
  auto* term = app.add_subcommand("terminal", "terminal ingredients, writes terminal.json");
  add_common(term);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    set_worker_count(common.jobs);
    if (*run) return cmd_run(common);
    if (*sw) return cmd_sweep(common, runs, desk);
    if (*cert) return cmd_certify(common, estimate);
    if (*term) return cmd_terminal(common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SynthesisError& e) {
    std::cerr << "synthesis failed: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
