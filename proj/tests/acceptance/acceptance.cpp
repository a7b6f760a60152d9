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


// End-to-end checks. Each criterion prints one PASS or FAIL line followed
// by indented details. Criteria can be picked on the command line:
//   etmpc_acceptance 1 3 9

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "etmpc/config.hpp"
#include "etmpc/csv.hpp"
#include "etmpc/riccati.hpp"
#include "etmpc/sim.hpp"
#include "etmpc/terminal.hpp"
#include "oracles.hpp"

using namespace etmpc;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::vector<std::string> details;
  void note(const std::string& s) { details.push_back(s); }
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string config_path(const std::string& name) { return std::string(ETMPC_CONFIG_DIR) + "/" + name; }

struct Setup {
  ExperimentConfig cfg;
  std::shared_ptr<const DynamicsModel> model;
  ControllerDesign design;
  FleetConfig fleet;
};

Setup setup(ExperimentConfig cfg, int design_budget) {
  Setup s;
  s.cfg = std::move(cfg);
  s.model = std::make_shared<const DynamicsModel>(build_model(s.cfg.model));
  s.design = design_controller(*s.model, s.cfg.controller.Q_diag.asDiagonal(),
                               s.cfg.controller.R_diag.asDiagonal(), design_options(s.cfg, design_budget));
  s.fleet = fleet_config(s.cfg, s.model, s.design);
  return s;
}

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("etmpc_accept_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(ETMPC_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------

Verdict prediction_error_bound() {
  Verdict o;
  auto s = setup(load_config(config_path("linear_oracle.cfg")), 1);
  const double w = s.cfg.disturbance.w_hat;
  const int p = s.design.certificate.p;
  const double bound = vwmax(s.design.bound, w, p);
  o.note(fmt("M_s = %d, M_c = %d, p = %d, L = %.6g, w_hat = %g, w_hat_max = %.6g, vwmax(w_hat) = %.6g",
             s.fleet.systems, s.fleet.budget, p, s.design.bound.lipschitz_constant(), w,
             s.design.certificate.w_hat_max, bound));
  bool ok = p == 5 && w <= s.design.certificate.w_hat_max;
  long checked = 0, violations = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto f = s.fleet;
    f.duration = 2000;
    f.seed = seed;
    const auto t = run_closed_loop(f);
    if (t.outcome != etmpc::Outcome::completed) ok = false;
    if (t.outcome != etmpc::Outcome::completed) o.note(fmt("seed %llu: %s", (unsigned long long)seed, t.message.c_str()));
    for (const auto& st : t.steps) {
      if (st.step == 0) continue;
      for (double g : st.priorities) {
        ++checked;
        worst = std::max(worst, g);
        if (g > bound) ++violations;
      }
    }
  }
  o.note(fmt("%ld prediction errors checked over 10 seeds x 2000 steps, worst %.6g (%.1f%% of the bound), violations %ld",
             checked, worst, 100.0 * worst / bound, violations));
  o.pass = ok && violations == 0 && checked == 10L * 1999 * 5;
  return o;
}

Verdict vwmax_collapse() {
  Verdict o;
  double worst = 0.0;
  const double w = 0.0213;
  for (double L : {0.5, 2.0, 5.0}) {
    for (int p : {1, 3, 10}) {
      const double closed = (std::pow(L, p) - 1.0) / (L - 1.0) * w;
      worst = std::max(worst, std::abs(vwmax(PropagationBound::lipschitz(L), w, p) - closed) / std::max(1.0, closed));
    }
  }
  double worst_one = 0.0;
  for (int p : {1, 3, 10}) {
    worst_one = std::max(worst_one, std::abs(vwmax(PropagationBound::lipschitz(1.0), w, p) - p * w));
  }
  o.note(fmt("L in {0.5, 2, 5}, p in {1, 3, 10}: worst gap to (L^p - 1)/(L - 1) w = %.3g", worst));
  o.note(fmt("L = 1: worst gap to p w = %.3g", worst_one));
  o.pass = worst <= 1e-12 && worst_one <= 1e-12;
  return o;
}

Verdict tightening_schedule() {
  Verdict o;
  const TighteningSchedule s{0.1, 0.81, 10};
  const double e0 = s.epsilon_k(0), e1 = s.epsilon_k(1), e2 = s.epsilon_k(2);
  const double gap = std::max({std::abs(e0), std::abs(e1 - 0.1), std::abs(e2 - 0.19)});
  o.note(fmt("eps_0 = %.17g, eps_1 = %.17g, eps_2 = %.17g, worst gap %.3g", e0, e1, e2, gap));
  o.pass = gap <= 1e-14;
  return o;
}

Verdict solver_oracle() {
  Verdict o;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> G;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int checked = 0, active = 0;
  double cost_gap = 0.0, traj_gap = 0.0;
  bool ok = true;
  for (int trial = 0; checked < 50 && trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(U(rng) * 4);
    const int m = 1 + static_cast<int>(U(rng) * std::min(n, 2));
    const int N = 2 + static_cast<int>(U(rng) * 9);
    Matrix A = Matrix::Identity(n, n), B(n, m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) += 0.25 * G(rng);
      for (int j = 0; j < m; ++j) B(i, j) = G(rng);
    }
    const Vector xb = Vector::Constant(n, 1.0 + 3.0 * U(rng));
    const Vector ub = Vector::Constant(m, 0.2 + U(rng));
    const auto model = linear_model(A, B, Polytope::symmetric_box(xb), Polytope::symmetric_box(ub), 0.1);
    Vector qd(n), rd(m);
    for (int i = 0; i < n; ++i) qd(i) = 0.2 + 2.0 * U(rng);
    for (int i = 0; i < m; ++i) rd(i) = 0.05 + U(rng);
    OcpSpec spec;
    spec.N = N;
    spec.Q = qd.asDiagonal();
    spec.R = rd.asDiagonal();
    try {
      spec.P = discrete_algebraic_riccati(A, B, spec.Q, spec.R);
    } catch (const SynthesisError&) {
      continue;
    }
    spec.K_f = lqr_gain(A, B, spec.R, spec.P);
    spec.schedule = TighteningSchedule{0.02 * U(rng), 0.5 + 0.4 * U(rng), N};
    spec.terminal_constraint = false;
    Vector x0(n);
    for (int i = 0; i < n; ++i) x0(i) = (2.0 * U(rng) - 1.0) * 0.9 * xb(i);

    oracle::LinearOcp ref_problem{A, B, spec.Q, spec.R, spec.P, x0, xb, ub, {}, N};
    for (int k = 0; k <= N; ++k) ref_problem.keep.push_back(1.0 - spec.schedule.epsilon_k(k));
    const auto ref = oracle::solve_linear_ocp(ref_problem);
    if (!ref.feasible) continue;
    const auto sol = solve_ocp(model, spec, x0);
    ++checked;
    if (sol.status != OcpStatus::optimal) {
      ok = false;
      o.note(fmt("trial %d: status %s (%s)", trial, to_string(sol.status).c_str(), sol.diagnostics.c_str()));
      continue;
    }
    double g = 0.0;
    bool bound_active = false;
    for (int k = 0; k < N; ++k) {
      g = std::max(g, (sol.inputs()[k] - ref.inputs[k]).lpNorm<Eigen::Infinity>());
      if ((ref.inputs[k].cwiseAbs() - ref_problem.keep[k] * ub).maxCoeff() > -1e-6) bound_active = true;
    }
    for (int k = 0; k <= N; ++k) g = std::max(g, (sol.states()[k] - ref.states[k]).lpNorm<Eigen::Infinity>());
    active += bound_active;
    cost_gap = std::max(cost_gap, std::abs(sol.cost - ref.cost));
    traj_gap = std::max(traj_gap, g);
  }
  o.note(fmt("%d instances (n <= 4, N <= 10, %d with an active input bound): worst cost gap %.3g, worst trajectory gap %.3g",
             checked, active, cost_gap, traj_gap));
  o.pass = ok && checked == 50 && cost_gap <= 1e-6 && traj_gap <= 1e-5;
  return o;
}

Verdict nominal_descent() {
  Verdict o;
  auto cfg = load_config(config_path("fig2.cfg"));
  cfg.systems = 1;
  cfg.budget = 1;
  cfg.disturbance.w_hat = 0.0;
  cfg.disturbance.per_system_scale.clear();
  cfg.duration = 100;
  auto s = setup(cfg, 1);
  bool ok = true;
  const std::vector<std::vector<double>> starts{{0.8, -0.6, 0.5}, {-1.0, 1.0, -1.0}, {0.3, 0.9, -0.2}};
  double worst_rise = -1e300, worst_final = 0.0;
  for (const auto& p : starts) {
    auto f = s.fleet;
    f.initial_states = {initial_states_for(f).front()};
    f.initial_states[0].head(3) << p[0], p[1], p[2];
    const auto t = run_closed_loop(f);
    if (t.outcome != etmpc::Outcome::completed) {
      ok = false;
      o.note("run from (" + std::to_string(p[0]) + ", ...) ended: " + t.message);
      continue;
    }
    double prev = INFINITY;
    for (const auto& st : t.steps) {
      if (st.solves.size() != 1) {
        ok = false;
        continue;
      }
      const double v = st.solves[0].cost;
      worst_rise = std::max(worst_rise, v - prev);
      prev = v;
    }
    Vector pos(3);
    for (int a = 0; a < 3; ++a) pos(a) = t.final_states[0](t.position_indices[a]);
    worst_final = std::max(worst_final, pos.norm());
  }
  o.note(fmt("3 starting positions, 100 steps each: largest step-to-step change of V_N %.3g, worst final position norm %.3g m",
             worst_rise, worst_final));
  o.pass = ok && worst_rise <= 1e-6 && worst_final <= 1e-3;
  return o;
}

Verdict recursive_feasibility() {
  Verdict o;
  auto probe = setup(load_config(config_path("linear_oracle.cfg")), 1);
  const double w = 0.9 * probe.design.certificate.w_hat_max;
  auto f = probe.fleet;
  f.disturbance.w_hat = w;
  int solves = 0, infeasible = 0, limited = 0;
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    f.seed = 100 + seed;
    f.duration = 2000;
    const auto t = run_closed_loop(f);
    if (t.outcome != etmpc::Outcome::completed) {
      ok = false;
      o.note(fmt("seed %llu: %s after %zu steps", (unsigned long long)f.seed, t.message.c_str(), t.steps.size()));
    }
    for (const auto& st : t.steps) {
      for (const auto& r : st.solves) {
        ++solves;
        infeasible += r.status == OcpStatus::infeasible;
        limited += r.status == OcpStatus::max_iter;
      }
    }
  }
  o.note(fmt("w_hat = %.6g (0.9 w_hat_max): %d trigger-time solves, %d infeasible, %d iteration-limited",
             w, solves, infeasible, limited));
  o.pass = ok && solves >= 10000 && infeasible == 0;
  return o;
}

Verdict fig2_selection() {
  Verdict o;
  auto s = setup(load_config(config_path("fig2.cfg")), 1);
  int favoured = 0, unstable = 0;
  std::string counts;
  for (std::uint64_t k = 0; k < 10; ++k) {
    auto f = s.fleet;
    f.seed = s.cfg.seed + k;
    f.duration = 40;
    const auto t = run_closed_loop(f);
    const auto c = t.selection_counts();
    if (c[0] > c[1] && c[0] > c[2]) ++favoured;
    if (classify_stability(t) == Stability::unstable) ++unstable;
    counts += fmt(" %d/%d/%d", c[0], c[1], c[2]);
  }
  o.note("selections per seed (system 0/1/2):" + counts);
  o.note(fmt("system 0 chosen most in %d of 10 seeds, %d unstable runs", favoured, unstable));
  o.pass = favoured >= 8 && unstable == 0;
  return o;
}

Verdict fig3_trends() {
  Verdict o;
  const auto cfg = load_config(config_path("fig3.cfg"));
  if (!cfg.desk_sweep) {
    o.note("fig3.cfg has no desk grid");
    return o;
  }
  const auto& spec = *cfg.desk_sweep;
  const auto dir = scratch("desk");
  if (cli("sweep " + config_path("fig3.cfg") + " --desk --out " + dir.string(), dir / "log.txt") != 0) {
    o.note("sweep failed: " + slurp(dir / "log.txt"));
    return o;
  }
  const auto tab = read_csv((dir / "param_sweep.csv").string());
  const int ni = static_cast<int>(spec.w_hat_values.size());
  const int nj = static_cast<int>(spec.budgets.size());
  std::vector<std::vector<double>> m(ni, std::vector<double>(nj, NAN));
  for (const auto& r : tab.rows) m[static_cast<int>(r[0]) - 1][static_cast<int>(r[1]) - 1] = r[2];
  auto bad = [](double v) { return v >= 1.0; };

  std::string header = "    w_hat \\ M_c";
  for (int b : spec.budgets) header += fmt(" %10d", b);
  o.note(header.substr(4));
  for (int i = 0; i < ni; ++i) {
    std::string row = fmt("%-14g", spec.w_hat_values[i]);
    for (int j = 0; j < nj; ++j) row += bad(m[i][j]) ? "   unstable" : fmt(" %10.4g", m[i][j]);
    o.note(row);
  }

  bool ok = true;
  for (int i = 0; i < ni; ++i) {
    for (int j = 0; j < nj; ++j) {
      for (int jj = j + 1; jj < nj; ++jj) {
        if (m[i][jj] > 1.10 * m[i][j]) {
          ok = false;
          o.note(fmt("not non-increasing in M_c at w_hat = %g: M_c %d -> %d gives %.4g -> %.4g",
                     spec.w_hat_values[i], spec.budgets[j], spec.budgets[jj], m[i][j], m[i][jj]));
        }
      }
      for (int ii = i + 1; ii < ni; ++ii) {
        if (m[ii][j] < 0.90 * m[i][j]) {
          ok = false;
          o.note(fmt("not non-decreasing in w_hat at M_c = %d: w_hat %g -> %g gives %.4g -> %.4g",
                     spec.budgets[j], spec.w_hat_values[i], spec.w_hat_values[ii], m[i][j], m[ii][j]));
        }
      }
      if (bad(m[i][j])) {
        for (int ii = i; ii < ni; ++ii) {
          for (int jj = 0; jj <= j; ++jj) {
            if (!bad(m[ii][jj])) {
              ok = false;
              o.note(fmt("unstable cell (w_hat %g, M_c %d) is not in a large-w_hat, small-M_c corner",
                         spec.w_hat_values[i], spec.budgets[j]));
            }
          }
        }
      }
    }
  }
  const auto wi = std::find(spec.w_hat_values.begin(), spec.w_hat_values.end(), 0.01) - spec.w_hat_values.begin();
  const auto j7 = std::find(spec.budgets.begin(), spec.budgets.end(), 7) - spec.budgets.begin();
  const auto j10 = std::find(spec.budgets.begin(), spec.budgets.end(), 10) - spec.budgets.begin();
  if (wi < ni && j7 < nj && j10 < nj) {
    const double gap = std::abs(m[wi][j7] - m[wi][j10]) / m[wi][j10];
    o.note(fmt("plateau at w_hat = 0.01: |m(7) - m(10)| / m(10) = %.3g", gap));
    if (!(gap <= 0.15)) ok = false;
  } else {
    ok = false;
    o.note("desk grid lacks w_hat = 0.01 or M_c in {7, 10}");
  }
  o.pass = ok && ni == 4 && nj == 4 && spec.runs == 5 && cfg.systems == 10;
  return o;
}

Verdict terminal_verification() {
  Verdict o;
  bool ok = true;
  for (const char* name : {"fig2.cfg", "fig3.cfg"}) {
    const auto s = setup(load_config(config_path(name)), 1);
    const auto& d = s.design;
    const auto c = verify_terminal(*s.model, d.terminal, d.spec.Q, d.spec.R, d.spec.schedule, 10000,
                                   0x5eed0000u + s.cfg.seed + 17);
    o.note(fmt("%s: alpha_f = %.6g, W_N radius = %.3g, %d fresh samples: %d decrease, %d invariance, %d constraint violations",
               name, d.terminal.alpha_f, d.terminal.W_N_radius, c.samples, c.decrease_violations,
               c.invariance_violations, c.constraint_violations));
    ok = ok && c.samples == 10000 && c.passed();
  }
  o.pass = ok;
  return o;
}

Verdict determinism() {
  Verdict o;
  const auto dir = scratch("determinism");
  bool ok = true;
  int case_id = 0;
  auto twice = [&](const std::string& args, const std::string& file, const std::string& label) {
    const std::string tag = "case" + std::to_string(case_id++);
    const auto a = dir / (tag + "_a"), b = dir / (tag + "_b");
    const int ra = cli(args + " --out " + a.string(), dir / (tag + "_a.log"));
    const int rb = cli(args + " --out " + b.string() + " --jobs 2", dir / (tag + "_b.log"));
    const std::string ca = slurp(a / file), cb = slurp(b / file);
    const bool same = ra == 0 && rb == 0 && !ca.empty() && ca == cb;
    o.note(fmt("%s: exit %d and %d, %zu bytes, %s", label.c_str(), ra, rb, ca.size(),
               same ? "identical" : "DIFFERENT"));
    ok = ok && same;
  };
  twice("run " + config_path("fig2.cfg") + " --seed 7", "trace.csv", "run fig2");
  twice("run " + config_path("linear_oracle.cfg") + " --seed 3", "trace.csv", "run linear_oracle");

  std::ofstream(dir / "small_sweep.cfg") << R"(name: small_sweep
seed: 11
model:
  type: quadcopter
fleet:
  systems: 3
  budget: 1
  duration: 12
disturbance:
  w_hat: 0.05
  active_indices: [3, 4, 5]
controller:
  horizon: 25
  epsilon: 0.02
  cost_inflation: 0.5
  estimation:
    region_scale: 0.1
    metric_shift: 0.2
sweep:
  w_hat: [0.01, 0.1]
  budgets: [1, 3]
  runs: 2
)";
  twice("sweep " + (dir / "small_sweep.cfg").string(), "param_sweep.csv", "sweep small quadcopter grid");
  o.pass = ok;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"prediction error within vwmax on the linear fleet", prediction_error_bound},
      {"vwmax closed form", vwmax_collapse},
      {"tightening schedule", tightening_schedule},
      {"OCP solver vs dense QP oracle", solver_oracle},
      {"nominal descent on the quadcopter", nominal_descent},
      {"recursive feasibility at 0.9 w_hat_max", recursive_feasibility},
      {"three-quadcopter selection pattern", fig2_selection},
      {"desk-scale sweep trends", fig3_trends},
      {"quadcopter terminal set verification", terminal_verification},
      {"CLI determinism", determinism},
  };
  // Wall-clock limits in seconds; zero means none.
  const std::map<int, double> limits{{1, 120}, {4, 60}, {7, 300}, {8, 1800}};

  std::set<int> pick;
  for (int a = 1; a < argc; ++a) pick.insert(std::atoi(argv[a]));
  int failed = 0;
  for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) {
    if (!pick.empty() && !pick.count(k)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict o;
    try {
      o = criteria[k - 1].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto lim = limits.find(k);
    if (lim != limits.end() && secs > lim->second) {
      o.pass = false;
      o.note(fmt("runtime %.1f s exceeds the %.0f s limit", secs, lim->second));
    }
    failed += !o.pass;
    std::printf("criterion %2d  %s  %-50s (%.1f s)\n", k, o.pass ? "PASS" : "FAIL",
                criteria[k - 1].first.c_str(), secs);
    for (const auto& d : o.details) std::printf("      %s\n", d.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
