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

// Terminal cost, terminal feedback and terminal level. The set
// X_f = {x : x'Px <= alpha_f} must satisfy, for kappa_f(x) = K x,
//   decrease:    ||f(x, Kx)||_P^2 <= ||x||_P^2 - ||x||_Q^2 - ||Kx||_R^2
//   invariance:  f(x, Kx) + w in X_f for all ||w|| <= W_N
//   constraints: (x, Kx) inside the state and input sets tightened at k = N

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "etmpc/bounds.hpp"
#include "etmpc/dynamics.hpp"
#include "etmpc/ocp.hpp"

namespace etmpc {

struct TerminalOptions {
  int samples = 10000;
  std::uint64_t seed = 0;
  /// The Riccati equation is solved with (1 + cost_inflation) Q, which buys
  /// a decrease margin for nonlinear models.
  double cost_inflation = 0.0;
  /// Relative slack, in units of ||x||_P^2, absorbing roundoff.
  double decrease_tol = 1e-9;
  int bisection_iters = 60;
  Execution exec = Execution::parallel;
};

struct TerminalCheckCounts {
  int samples = 0;
  int decrease_violations = 0;
  int invariance_violations = 0;
  int constraint_violations = 0;
  bool passed() const noexcept {
    return samples > 0 && decrease_violations == 0 && invariance_violations == 0 &&
           constraint_violations == 0;
  }
};

struct TerminalIngredients {
  Matrix P;
  Matrix K;
  double alpha_f = 0.0;
  double W_N_radius = 0.0;
  double cost_inflation = 0.0;
  double constraint_level = 0.0;  // largest level meeting the constraint condition
  TerminalCheckCounts verification;
};

/// P and K from the Riccati equation of the origin linearization.
TerminalIngredients terminal_weights(const DynamicsModel& model, const Matrix& Q, const Matrix& R,
                                     double cost_inflation = 0.0);

/// Largest alpha with (x, Kx) in the sets tightened at N for every x of the
/// level set, from the support function of the ellipsoid.
double constraint_level(const DynamicsModel& model, const Matrix& P, const Matrix& K,
                        const TighteningSchedule& schedule);

/// Fresh-sample check of the three terminal conditions at ingredients.alpha_f.
TerminalCheckCounts verify_terminal(const DynamicsModel& model,
                                    const TerminalIngredients& ingredients, const Matrix& Q,
                                    const Matrix& R, const TighteningSchedule& schedule,
                                    int samples, std::uint64_t seed,
                                    Execution exec = Execution::parallel, double decrease_tol = 1e-9);

/// Weights, then the level: bisection on the decrease condition below the
/// constraint level, followed by the invariance check and verification.
/// Throws SynthesisError naming the failed condition.
TerminalIngredients synthesize_terminal(const DynamicsModel& model, const Matrix& Q,
                                        const Matrix& R, const TighteningSchedule& schedule,
                                        double W_N_radius, const TerminalOptions& options = {});

/// Level search for given weights; fills alpha_f, W_N_radius and verification.
void find_terminal_level(const DynamicsModel& model, TerminalIngredients& ingredients,
                         const Matrix& Q, const Matrix& R, const TighteningSchedule& schedule,
                         double W_N_radius, const TerminalOptions& options = {});

struct DesignOptions {
  int N = 10;
  double epsilon = 0.01;
  int systems = 1;
  int budget = 1;
  /// Disturbance bound the terminal set is made robust against. Negative
  /// selects the certified w_hat_max.
  double w_hat_design = -1.0;
  /// Lipschitz constant of the propagation bound; <= 0 estimates it on the
  /// state set.
  double lipschitz = 0.0;
  int lipschitz_samples = 2000;
  bool terminal_constraint = true;
  std::optional<AssumptionConstants> constants;  // estimated when absent
  ConstantEstimateOptions constant_options;
  TerminalOptions terminal;
  /// Skips terminal synthesis and uses these ingredients as they are.
  std::optional<TerminalIngredients> fixed_terminal;
};

struct ControllerDesign {
  OcpSpec spec;
  TerminalIngredients terminal;
  AssumptionConstants constants;
  PropagationBound bound = PropagationBound::lipschitz(1.0);
  RobustnessCertificate certificate;
  double w_hat_design = 0.0;
};

/// Full offline design: terminal weights, incremental stability constants,
/// tightening schedule, certificate and terminal level.
ControllerDesign design_controller(const DynamicsModel& model, const Matrix& Q, const Matrix& R,
                                   const DesignOptions& options);

}  // namespace etmpc
