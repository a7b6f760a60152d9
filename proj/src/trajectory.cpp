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

#include "etmpc/trajectory.hpp"

namespace etmpc {

Trajectory rollout(const DynamicsModel& model, const StateVector& x0,
                   std::vector<InputVector> inputs) {
  if (x0.size() != model.n()) throw ConfigError("rollout: initial state dimension mismatch");
  Trajectory traj;
  traj.states.reserve(inputs.size() + 1);
  traj.states.push_back(x0);
  for (const auto& u : inputs) {
    if (u.size() != model.m()) throw ConfigError("rollout: input dimension mismatch");
    traj.states.push_back(model.step(traj.states.back(), u));
  }
  traj.inputs = std::move(inputs);
  return traj;
}

Trajectory zero_plan(const DynamicsModel& model, const StateVector& x0, int N) {
  if (N < 1) throw ConfigError("zero_plan: horizon must be positive");
  return rollout(model, x0, std::vector<InputVector>(N, InputVector::Zero(model.m())));
}

Trajectory shift_plan(const DynamicsModel& model, const Trajectory& plan, const Matrix& K_f,
                      const StateVector& start) {
  const int N = plan.horizon();
  if (N < 1) throw ConfigError("shift_plan: empty plan");
  if (K_f.rows() != model.m() || K_f.cols() != model.n()) {
    throw ConfigError("shift_plan: terminal gain dimension mismatch");
  }
  Trajectory next;
  next.inputs.reserve(N);
  next.states.reserve(N + 1);
  next.states.push_back(start);
  for (int k = 0; k + 1 < N; ++k) {
    next.inputs.push_back(plan.inputs[k + 1]);
    next.states.push_back(model.step(next.states.back(), next.inputs.back()));
  }
  next.inputs.push_back(K_f * next.states.back());
  next.states.push_back(model.step(next.states.back(), next.inputs.back()));
  return next;
}

}  // namespace etmpc
