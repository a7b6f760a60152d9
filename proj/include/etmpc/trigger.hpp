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


// Priority trigger for a fleet of M_s systems sharing a budget of M_c
// recomputations per step. Systems left out replay their shifted plan.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "etmpc/ocp.hpp"
#include "etmpc/parallel.hpp"
#include "etmpc/trajectory.hpp"

namespace etmpc {

struct TriggerState {
  int systems = 1;
  int budget = 1;
  int p = 1;              // ceil(systems / budget)
  SystemId cursor = 0;    // next id to bootstrap
  int t = 0;

  /// Throws ConfigError unless 1 <= budget <= systems.
  static TriggerState create(int systems, int budget);
  bool bootstrapping() const noexcept { return t < p; }
};

struct ScheduleDecision {
  /// Highest priority first; cyclic order during bootstrap.
  std::vector<SystemId> selected;
  std::vector<double> priorities;
  bool bootstrap = false;

  bool contains(SystemId id) const;
};

/// ||x(t) - x(1|t-1)||. Zero when the buffer holds no plan from step t - 1
/// (only the case at t = 0).
double compute_priority(const StateVector& measured, const PredictionBuffer& buffer, int t);

/// Round-robin from the cursor while t < p (the cursor advances), the
/// budget largest priorities afterwards with ties going to the smaller id.
/// Does not advance state.t.
ScheduleDecision select(const std::vector<double>& priorities, TriggerState& state);

/// Plan for step buffer.time + 1 without recomputation: x(0|t) = x(1|t-1),
/// u(k|t) = u(k+1|t-1), tail from K_f.
PredictionBuffer shift(const PredictionBuffer& buffer, const Matrix& K_f,
                       const DynamicsModel& model);

/// Fresh plan for system `id` from the measured state; `warm` is the shifted
/// previous plan.
using SolverHook =
    std::function<OcpSolution(SystemId id, const StateVector& measured, const Trajectory& warm)>;

struct SolveRecord {
  SystemId system = 0;
  OcpStatus status = OcpStatus::optimal;
  double cost = 0.0;
  double kkt_residual = 0.0;
  double constraint_violation = 0.0;
  int iterations = 0;
  int qp_iterations = 0;
  double wall_time = 0.0;
  std::string diagnostics;
};

struct AdvanceResult {
  std::vector<InputVector> applied;  // u(0|t) per system
  std::vector<SolveRecord> solves;   // in decision order
  bool fault = false;                // some selected solve was infeasible
  std::string fault_message;
};

/// One trigger step at time t = state.t: selected systems get a new plan,
/// the others are shifted (no shift at t = 0, where buffers already refer
/// to t). Every buffer then refers to t. Increments state.t.
AdvanceResult advance(std::vector<PredictionBuffer>& buffers,
                      const std::vector<StateVector>& measured, const ScheduleDecision& decision,
                      TriggerState& state, const DynamicsModel& model, const Matrix& K_f,
                      const SolverHook& solver, Execution exec = Execution::parallel);

/// Buffers holding u(.|0) = 0 and the states it produces from x_i(0).
std::vector<PredictionBuffer> initial_buffers(const DynamicsModel& model,
                                              const std::vector<StateVector>& initial, int N);

}  // namespace etmpc
