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

#pragma once

#include <vector>

#include "etmpc/dynamics.hpp"
#include "etmpc/types.hpp"

namespace etmpc {

/// Open-loop plan: inputs u(0..N-1) and the states x(0..N) they produce.
struct Trajectory {
  std::vector<InputVector> inputs;
  std::vector<StateVector> states;

  int horizon() const noexcept { return static_cast<int>(inputs.size()); }
  bool empty() const noexcept { return inputs.empty(); }
};

/// Stored plan of one system together with the step it refers to.
struct PredictionBuffer {
  Trajectory plan;
  int time = 0;            // step t of u(.|t), x(.|t)
  int last_recompute = -1;  // -1 until the first solve
  SystemId owner = 0;
};

/// Nominal propagation of `inputs` from x0.
Trajectory rollout(const DynamicsModel& model, const StateVector& x0,
                   std::vector<InputVector> inputs);

/// Zero-input plan from x0, used before the first solve.
Trajectory zero_plan(const DynamicsModel& model, const StateVector& x0, int N);

/// Drops the first input, re-propagates from `start` and appends K_f times
/// the propagated state as the new last input.
Trajectory shift_plan(const DynamicsModel& model, const Trajectory& plan, const Matrix& K_f,
                      const StateVector& start);

}  // namespace etmpc
