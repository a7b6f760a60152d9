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

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "etmpc/dynamics.hpp"
#include "etmpc/types.hpp"

namespace etmpc {

/// Bound V(w_hat, delta, tau) on the distance between a disturbed trajectory
/// and its nominal prediction after tau steps, given initial distance delta.
class PropagationBound {
 public:
  enum class Kind { lipschitz, tabulated };

  /// L^tau * delta + (L^tau - 1) / (L - 1) * w_hat, with the limit
  /// delta + tau * w_hat at L = 1.
  static PropagationBound lipschitz(double L);
  /// delta_gain[tau] * delta + w_gain[tau] * w_hat for tau < table size.
  /// Requires delta_gain > 0, w_gain[0] >= 0 and w_gain strictly increasing.
  static PropagationBound tabulated(std::vector<double> delta_gain, std::vector<double> w_gain);

  double operator()(double w_hat, double delta, int tau) const;

  Kind kind() const noexcept { return kind_; }
  double lipschitz_constant() const noexcept { return L_; }
  int max_tau() const noexcept;

 private:
  Kind kind_ = Kind::lipschitz;
  double L_ = 1.0;
  std::vector<double> delta_gain_;
  std::vector<double> w_gain_;
};

/// Worst-case one-step prediction error under the priority trigger:
/// max over integer tau in [0, p] of V(w, V(w, 0, p - tau), tau).
double vwmax(const PropagationBound& bound, double w_hat, int p);

/// Inverse of w -> vwmax(w). Analytic for the Lipschitz bound.
double vwmax_inverse(const PropagationBound& bound, double target, int p);
/// Inverse by bisection on [0, hi], hi doubled until it brackets the target.
/// Bisects to the resolution of double precision.
double vwmax_inverse_bisection(const PropagationBound& bound, double target, int p);

struct TighteningSchedule {
  double epsilon = 0.0;
  double rho = 0.5;
  int N = 1;

  /// (1 - sqrt(rho)^k) / (1 - sqrt(rho)) * epsilon for 0 <= k <= N.
  double epsilon_k(int k) const;
  /// Throws ConfigError if the tightening at k = N leaves nothing of the sets.
  void validate() const;
  /// Supremum of epsilon_k over all k.
  double supremum() const;
};

struct TightenedSets {
  Polytope state;
  Polytope input;
};

/// Right-hand sides scaled by (1 - epsilon_k).
TightenedSets tightened_sets(const DynamicsModel& model, const TighteningSchedule& schedule, int k);

/// Local incremental stability constants plus the constraint matrix norms.
struct AssumptionConstants {
  double c_delta_l = 1.0;
  double c_delta_u = 1.0;
  double delta_loc = 1.0;
  double kappa_max = 1.0;
  double rho = 0.5;
  double H_inf_norm = 1.0;
  double L_inf_norm = 1.0;
  bool heuristic = false;
  Matrix P_delta;  // metric of V_delta(x, z) = ||x - z||^2_{P_delta}, when estimated

  void validate() const;
};

enum class BindingCondition { local_validity, state_constraints, input_constraints };
std::string to_string(BindingCondition c);

struct RobustnessCertificate {
  int p = 1;
  double w_hat_max = 0.0;
  double vwmax_value = 0.0;     // vwmax(w_hat_max)
  BindingCondition binding = BindingCondition::state_constraints;
  std::array<double, 3> thresholds{};  // indexed by BindingCondition
  double W_N_radius = 0.0;      // terminal disturbance radius at w_hat_max
  bool heuristic = false;
};

/// Largest disturbance bound for which recursive feasibility is certified:
/// the minimum of the local-validity, state-constraint and input-constraint
/// thresholds mapped through the inverse of vwmax.
RobustnessCertificate w_hat_max(const AssumptionConstants& constants, const PropagationBound& bound,
                                int p, double epsilon, int N);

/// sqrt(rho^N c_delta_u / c_delta_l) * vwmax_value.
double terminal_disturbance_radius(const AssumptionConstants& constants, int N,
                                   double vwmax_value);

struct ConstantEstimateOptions {
  int samples = 1000;
  std::uint64_t seed = 0;
  /// Pairs (x, z) are drawn with ||x - z|| <= local_radius for nonlinear
  /// models; delta_loc is the V_delta level guaranteed inside that ball.
  double local_radius = 0.05;
  /// Nominal points z and inputs v are drawn from the state and input sets
  /// scaled by this factor.
  double region_scale = 1.0;
  /// The metric solves the Lyapunov equation of A_cl / gamma with
  /// gamma = r + metric_shift (1 - r), r the spectral radius of A_cl. 1 gives
  /// the plain Lyapunov metric; smaller values trade conditioning for a
  /// faster contraction and hence margin against nonlinearity.
  double metric_shift = 1.0;
  Execution exec = Execution::parallel;
};

/// Sample-based estimate of the incremental stability constants for the
/// feedback kappa(x, z, v) = v + K (x - z), with V_delta the closed-loop
/// Lyapunov metric of the origin linearization. Exact for linear models;
/// flagged heuristic otherwise.
AssumptionConstants estimate_assumption_constants(const DynamicsModel& model, const Matrix& K,
                                                  const ConstantEstimateOptions& options = {});

/// Contraction factor of x -> A x in the metric ||.||_P:
/// max_x ||A x||_P^2 / ||x||_P^2.
double contraction_in_metric(const Matrix& A, const Matrix& P);

/// Ceil(M_s / M_c), the bootstrap window length of the trigger.
int window_length(int systems, int budget);

}  // namespace etmpc
