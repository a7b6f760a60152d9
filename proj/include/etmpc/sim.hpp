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


// Closed-loop fleet simulation, the position error metric and the
// (w_hat, M_c) parameter sweep.

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "etmpc/dynamics.hpp"
#include "etmpc/ocp.hpp"
#include "etmpc/trigger.hpp"

namespace etmpc {

struct FleetConfig {
  int systems = 1;  // M_s
  int budget = 1;   // M_c
  std::shared_ptr<const DynamicsModel> model;
  DisturbanceSpec disturbance;
  /// Used as given when non-empty; otherwise each state is drawn uniformly
  /// from [-initial_box, initial_box] componentwise.
  std::vector<StateVector> initial_states;
  Vector initial_box;
  int duration = 1;  // steps
  OcpSpec ocp;
  SolverConfig solver;
  /// Runs whose state norm exceeds this are stopped; <= 0 picks ten times
  /// the largest facet distance of the state set.
  double divergence_threshold = 0.0;
  std::uint64_t seed = 0;
  /// Independent stream index: run r of a sweep uses stream r.
  std::uint64_t stream = 0;
  Execution exec = Execution::parallel;

  void validate() const;
  double effective_divergence_threshold() const;
};

enum class Outcome { completed, diverged, solver_fault };
std::string to_string(Outcome o);

struct StepRecord {
  int step = 0;
  double time = 0.0;
  std::vector<StateVector> states;   // measured at the start of the step
  std::vector<InputVector> inputs;   // applied u(0|t)
  std::vector<double> priorities;
  std::vector<SystemId> selected;
  bool bootstrap = false;
  std::vector<SolveRecord> solves;
};

struct SimTrace {
  int systems = 0;
  int budget = 0;
  double dt = 0.0;
  std::vector<int> position_indices;
  std::vector<StepRecord> steps;
  std::vector<StateVector> final_states;  // after the last recorded step
  Outcome outcome = Outcome::completed;
  std::string message;
  double divergence_threshold = 0.0;

  std::vector<int> selection_counts() const;
  int infeasible_solves() const;
  int total_solves() const;
};

/// Lockstep loop: priorities, selection, solve or shift, apply u(0|t), step
/// the disturbed dynamics. A solver fault or divergence truncates the trace.
SimTrace run_closed_loop(const FleetConfig& config);

/// Initial states as run_closed_loop would use them.
std::vector<StateVector> initial_states_for(const FleetConfig& config);

/// Mean |position component| over systems, position axes and the steps
/// after the first transient_fraction of the run.
double mean_abs_position_error(const SimTrace& trace, double transient_fraction = 0.25);

enum class Stability { stable, unstable };
Stability classify_stability(const SimTrace& trace, double divergence_threshold = 0.0);

struct SweepSpec {
  std::vector<double> w_hat_values;
  std::vector<int> budgets;
  int runs = 1;
  std::uint64_t seed = 0;
  double transient_fraction = 0.25;
  void validate(int systems) const;
};

struct SweepCell {
  int i = 0;  // index into w_hat_values
  int j = 0;  // index into budgets
  double w_hat = 0.0;
  int budget = 1;
  double value = 0.0;  // mean metric clamped to 1, or 1 when unstable
  bool unstable = false;
  int unstable_runs = 0;
  std::vector<double> run_metrics;
};

struct SweepResult {
  std::vector<double> w_hat_values;
  std::vector<int> budgets;
  int runs = 0;
  std::uint64_t seed = 0;
  std::vector<SweepCell> cells;  // row-major: i over w_hat, j over budgets

  const SweepCell& cell(int i, int j) const;
};

/// Every (cell, run) pair is an independent task. Run r draws its initial
/// states and disturbance stream from (seed, r) in every cell, so cells are
/// compared on matched randomness. `exec` chooses the OpenMP or the serial
/// reference path; both give identical results.
SweepResult sweep(const FleetConfig& base, const SweepSpec& spec,
                  Execution exec = Execution::parallel);

}  // namespace etmpc
