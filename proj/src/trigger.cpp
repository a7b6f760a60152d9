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


#include "etmpc/trigger.hpp"

#include <algorithm>
#include <numeric>

namespace etmpc {

TriggerState TriggerState::create(int systems, int budget) {
  if (systems < 1) throw ConfigError("trigger: need at least one system");
  if (budget < 1 || budget > systems) {
    throw ConfigError("trigger: budget M_c must satisfy 1 <= M_c <= M_s (got M_c = " +
                      std::to_string(budget) + ", M_s = " + std::to_string(systems) + ")");
  }
  TriggerState s;
  s.systems = systems;
  s.budget = budget;
  s.p = window_length(systems, budget);
  return s;
}

bool ScheduleDecision::contains(SystemId id) const {
  return std::find(selected.begin(), selected.end(), id) != selected.end();
}

double compute_priority(const StateVector& measured, const PredictionBuffer& buffer, int t) {
  if (buffer.plan.empty() || buffer.time != t - 1) return 0.0;
  return (measured - buffer.plan.states[1]).norm();
}

ScheduleDecision select(const std::vector<double>& priorities, TriggerState& state) {
  const auto Ms = static_cast<SystemId>(state.systems);
  if (priorities.size() != Ms) throw ConfigError("select: one priority per system expected");
  ScheduleDecision d;
  d.priorities = priorities;
  const auto Mc = static_cast<SystemId>(state.budget);
  if (state.bootstrapping()) {
    d.bootstrap = true;
    for (SystemId k = 0; k < Mc; ++k) d.selected.push_back((state.cursor + k) % Ms);
    state.cursor = (state.cursor + Mc) % Ms;
    return d;
  }
  std::vector<SystemId> order(Ms);
  std::iota(order.begin(), order.end(), SystemId{0});
  // Stable on ids, so equal priorities keep ascending id order.
  std::stable_sort(order.begin(), order.end(),
                   [&](SystemId a, SystemId b) { return priorities[a] > priorities[b]; });
  d.selected.assign(order.begin(), order.begin() + static_cast<long>(Mc));
  return d;
}

PredictionBuffer shift(const PredictionBuffer& buffer, const Matrix& K_f,
                       const DynamicsModel& model) {
  PredictionBuffer next = buffer;
  next.plan = shift_plan(model, buffer.plan, K_f, buffer.plan.states[1]);
  next.time = buffer.time + 1;
  return next;
}

std::vector<PredictionBuffer> initial_buffers(const DynamicsModel& model,
                                              const std::vector<StateVector>& initial, int N) {
  std::vector<PredictionBuffer> out(initial.size());
  for (std::size_t i = 0; i < initial.size(); ++i) {
    out[i].plan = zero_plan(model, initial[i], N);
    out[i].owner = i;
  }
  return out;
}

AdvanceResult advance(std::vector<PredictionBuffer>& buffers,
                      const std::vector<StateVector>& measured, const ScheduleDecision& decision,
                      TriggerState& state, const DynamicsModel& model, const Matrix& K_f,
                      const SolverHook& solver, Execution exec) {
  const std::size_t Ms = buffers.size();
  if (measured.size() != Ms || static_cast<int>(Ms) != state.systems) {
    throw ConfigError("advance: fleet size mismatch");
  }
  const int t = state.t;
  std::vector<char> chosen(Ms, 0);
  for (SystemId id : decision.selected) chosen.at(id) = 1;

  AdvanceResult res;
  res.solves.resize(decision.selected.size());
  std::vector<Trajectory> fresh(decision.selected.size());

  for_each_index(exec, Ms, [&](std::size_t i) {
    if (chosen[i] || buffers[i].time == t) return;
    buffers[i] = shift(buffers[i], K_f, model);
  });
  for_each_index(exec, decision.selected.size(), [&](std::size_t s) {
    const SystemId id = decision.selected[s];
    const PredictionBuffer& buf = buffers[id];
    const Trajectory warm = buf.time < t ? warm_start_from_buffer(model, buf, K_f, measured[id])
                                         : rollout(model, measured[id], buf.plan.inputs);
    OcpSolution sol = solver(id, measured[id], warm);
    SolveRecord& rec = res.solves[s];
    rec.system = id;
    rec.status = sol.status;
    rec.cost = sol.cost;
    rec.kkt_residual = sol.kkt_residual;
    rec.constraint_violation = sol.constraint_violation;
    rec.iterations = sol.iterations;
    rec.qp_iterations = sol.qp_iterations;
    rec.wall_time = sol.wall_time;
    rec.diagnostics = sol.diagnostics;
    fresh[s] = std::move(sol.trajectory);
  });

  for (std::size_t s = 0; s < decision.selected.size(); ++s) {
    const SolveRecord& rec = res.solves[s];
    PredictionBuffer& buf = buffers[rec.system];
    if (rec.status == OcpStatus::infeasible) {
      if (!res.fault) {
        res.fault = true;
        res.fault_message = "system " + std::to_string(rec.system) + " at step " +
                            std::to_string(t) + ": " + rec.diagnostics;
      }
      // Keep the replayed plan so the caller still has inputs to report.
      if (buf.time < t) buf = shift(buf, K_f, model);
      continue;
    }
    buf.plan = std::move(fresh[s]);
    buf.time = t;
    buf.last_recompute = t;
  }

  res.applied.resize(Ms);
  for (std::size_t i = 0; i < Ms; ++i) res.applied[i] = buffers[i].plan.inputs.front();
  ++state.t;
  return res;
}

}  // namespace etmpc
