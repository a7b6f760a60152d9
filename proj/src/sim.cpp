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


#include "etmpc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace etmpc {
namespace {

enum class Purpose : std::uint32_t { initial = 1, disturbance = 2 };

Rng make_rng(std::uint64_t seed, std::uint64_t stream, Purpose purpose, std::uint64_t system) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(system)};
  return Rng(seq);
}

bool exceeds(const std::vector<StateVector>& xs, double threshold) {
  for (const auto& x : xs) {
    if (!x.allFinite() || x.norm() > threshold) return true;
  }
  return false;
}

}  // namespace

void FleetConfig::validate() const {
  if (!model) throw ConfigError("fleet: no model");
  if (systems < 1) throw ConfigError("fleet: M_s must be at least 1");
  if (budget < 1 || budget > systems) {
    throw ConfigError("fleet: M_c must satisfy 1 <= M_c <= M_s (got M_c = " +
                      std::to_string(budget) + ", M_s = " + std::to_string(systems) + ")");
  }
  if (duration < 1) throw ConfigError("fleet: duration must be at least one step");
  if (disturbance.w_hat < 0.0) throw ConfigError("fleet: negative disturbance bound");
  for (int idx : disturbance.active_indices) {
    if (idx < 0 || idx >= model->n()) throw ConfigError("fleet: disturbance index out of range");
  }
  if (!initial_states.empty()) {
    if (static_cast<int>(initial_states.size()) != systems) {
      throw ConfigError("fleet: one initial state per system expected");
    }
    for (const auto& x : initial_states) {
      if (x.size() != model->n()) throw ConfigError("fleet: initial state dimension mismatch");
    }
  } else if (initial_box.size() != model->n()) {
    throw ConfigError("fleet: initial sampling box dimension mismatch");
  }
  ocp.validate(*model);
}

double FleetConfig::effective_divergence_threshold() const {
  if (divergence_threshold > 0.0) return divergence_threshold;
  return 10.0 * model->state_set().max_facet_distance();
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::completed: return "completed";
    case Outcome::diverged: return "diverged";
    case Outcome::solver_fault: return "solver_fault";
  }
  return "unknown";
}

std::vector<int> SimTrace::selection_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(systems), 0);
  for (const auto& s : steps) {
    for (SystemId id : s.selected) ++counts[id];
  }
  return counts;
}

int SimTrace::infeasible_solves() const {
  int k = 0;
  for (const auto& s : steps) {
    for (const auto& r : s.solves) k += r.status == OcpStatus::infeasible;
  }
  return k;
}

int SimTrace::total_solves() const {
  int k = 0;
  for (const auto& s : steps) k += static_cast<int>(s.solves.size());
  return k;
}

std::vector<StateVector> initial_states_for(const FleetConfig& config) {
  if (!config.initial_states.empty()) return config.initial_states;
  Rng rng = make_rng(config.seed, config.stream, Purpose::initial, 0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<StateVector> out;
  const int n = config.model->n();
  for (int i = 0; i < config.systems; ++i) {
    StateVector x(n);
    for (int k = 0; k < n; ++k) x(k) = unit(rng) * config.initial_box(k);
    out.push_back(config.model->project(x));
  }
  return out;
}

SimTrace run_closed_loop(const FleetConfig& config) {
  config.validate();
  const DynamicsModel& model = *config.model;
  const std::size_t Ms = static_cast<std::size_t>(config.systems);

  SimTrace trace;
  trace.systems = config.systems;
  trace.budget = config.budget;
  trace.dt = model.dt();
  trace.position_indices = model.position_indices();
  trace.divergence_threshold = config.effective_divergence_threshold();

  std::vector<StateVector> x = initial_states_for(config);
  std::vector<PredictionBuffer> buffers = initial_buffers(model, x, config.ocp.N);
  std::vector<Rng> noise;
  for (std::size_t i = 0; i < Ms; ++i) {
    noise.push_back(make_rng(config.seed, config.stream, Purpose::disturbance, i));
  }
  TriggerState trig = TriggerState::create(config.systems, config.budget);
  const SolverHook hook = [&](SystemId, const StateVector& measured, const Trajectory& warm) {
    return solve_ocp(model, config.ocp, measured, &warm, config.solver);
  };

  for (int t = 0; t < config.duration; ++t) {
    if (exceeds(x, trace.divergence_threshold)) {
      trace.outcome = Outcome::diverged;
      trace.message = "state norm above " + std::to_string(trace.divergence_threshold) +
                      " at step " + std::to_string(t);
      break;
    }
    std::vector<double> g(Ms);
    for (std::size_t i = 0; i < Ms; ++i) g[i] = compute_priority(x[i], buffers[i], t);
    const ScheduleDecision decision = select(g, trig);
    AdvanceResult adv = advance(buffers, x, decision, trig, model, config.ocp.K_f, hook,
                                config.exec);

    StepRecord rec;
    rec.step = t;
    rec.time = t * model.dt();
    rec.states = x;
    rec.inputs = adv.applied;
    rec.priorities = std::move(g);
    rec.selected = decision.selected;
    rec.bootstrap = decision.bootstrap;
    rec.solves = std::move(adv.solves);
    trace.steps.push_back(std::move(rec));
    if (adv.fault) {
      trace.outcome = Outcome::solver_fault;
      trace.message = adv.fault_message;
      break;
    }

    try {
      for (std::size_t i = 0; i < Ms; ++i) {
        const Vector w = sample_disturbance(config.disturbance, model.n(), i, noise[i]);
        x[i] = model.step(x[i], adv.applied[i]) + w;
      }
    } catch (const EvaluationError& e) {
      trace.outcome = Outcome::diverged;
      trace.message = std::string("model evaluation failed: ") + e.what();
      break;
    }
  }
  trace.final_states = x;
  if (trace.outcome == Outcome::completed && exceeds(x, trace.divergence_threshold)) {
    trace.outcome = Outcome::diverged;
    trace.message = "state norm above threshold after the last step";
  }
  return trace;
}

double mean_abs_position_error(const SimTrace& trace, double transient_fraction) {
  if (trace.steps.empty()) throw ConfigError("mean_abs_position_error: empty trace");
  if (transient_fraction < 0.0 || transient_fraction >= 1.0) {
    throw ConfigError("mean_abs_position_error: transient fraction must lie in [0, 1)");
  }
  const auto total = trace.steps.size();
  const auto skip = static_cast<std::size_t>(std::floor(transient_fraction * total));
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t s = std::min(skip, total - 1); s < total; ++s) {
    for (const auto& x : trace.steps[s].states) {
      for (int a : trace.position_indices) {
        sum += std::abs(x(a));
        ++count;
      }
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

Stability classify_stability(const SimTrace& trace, double divergence_threshold) {
  if (trace.outcome != Outcome::completed || trace.infeasible_solves() > 0) {
    return Stability::unstable;
  }
  const double thr = divergence_threshold > 0.0 ? divergence_threshold : trace.divergence_threshold;
  for (const auto& s : trace.steps) {
    if (exceeds(s.states, thr)) return Stability::unstable;
  }
  return exceeds(trace.final_states, thr) ? Stability::unstable : Stability::stable;
}

void SweepSpec::validate(int systems) const {
  if (w_hat_values.empty() || budgets.empty()) throw ConfigError("sweep: empty grid");
  if (runs < 1) throw ConfigError("sweep: runs per cell must be at least 1");
  for (double w : w_hat_values) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("sweep: invalid disturbance value");
  }
  for (int b : budgets) {
    if (b < 1 || b > systems) throw ConfigError("sweep: budget outside [1, M_s]");
  }
}

const SweepCell& SweepResult::cell(int i, int j) const {
  return cells.at(static_cast<std::size_t>(i) * budgets.size() + static_cast<std::size_t>(j));
}

SweepResult sweep(const FleetConfig& base, const SweepSpec& spec, Execution exec) {
  spec.validate(base.systems);
  base.validate();
  SweepResult out;
  out.w_hat_values = spec.w_hat_values;
  out.budgets = spec.budgets;
  out.runs = spec.runs;
  out.seed = spec.seed;
  const std::size_t nw = spec.w_hat_values.size();
  const std::size_t nb = spec.budgets.size();
  const std::size_t runs = static_cast<std::size_t>(spec.runs);
  const std::size_t ncells = nw * nb;

  std::vector<double> metric(ncells * runs, 0.0);
  std::vector<char> unstable(ncells * runs, 0);
  for_each_index(exec, ncells * runs, [&](std::size_t task) {
    const std::size_t c = task / runs;
    const std::size_t r = task % runs;
    FleetConfig cfg = base;
    cfg.disturbance.w_hat = spec.w_hat_values[c / nb];
    cfg.budget = spec.budgets[c % nb];
    cfg.seed = spec.seed;
    cfg.stream = r;
    cfg.exec = Execution::serial;
    const SimTrace trace = run_closed_loop(cfg);
    unstable[task] = classify_stability(trace) == Stability::unstable;
    // A run can diverge before its first recorded step.
    metric[task] = trace.steps.empty() ? 1.0 : mean_abs_position_error(trace, spec.transient_fraction);
  });

  for (std::size_t c = 0; c < ncells; ++c) {
    SweepCell cell;
    cell.i = static_cast<int>(c / nb);
    cell.j = static_cast<int>(c % nb);
    cell.w_hat = spec.w_hat_values[c / nb];
    cell.budget = spec.budgets[c % nb];
    double sum = 0.0;
    for (std::size_t r = 0; r < runs; ++r) {
      cell.run_metrics.push_back(metric[c * runs + r]);
      sum += metric[c * runs + r];
      cell.unstable_runs += unstable[c * runs + r];
    }
    cell.unstable = cell.unstable_runs > 0;
    cell.value = cell.unstable ? 1.0 : std::min(1.0, sum / static_cast<double>(runs));
    out.cells.push_back(std::move(cell));
  }
  return out;
}

}  // namespace etmpc
