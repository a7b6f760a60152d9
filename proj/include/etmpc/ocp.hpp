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

// Constraint-tightened finite-horizon OCP
//
//   min  sum_k ||x_k||^2_Q + ||u_k||^2_R + ||x_N||^2_P
//   s.t. x_{k+1} = f(x_k, u_k),  x_0 = measured state
//        H x_k <= (1 - eps_k) 1,  L u_k <= (1 - eps_k) 1
//        ||x_N||^2_P <= alpha_f
//
// solved by SQP over a multiple-shooting parameterization.

#pragma once

#include <limits>
#include <string>
#include <vector>

#include "etmpc/bounds.hpp"
#include "etmpc/dynamics.hpp"
#include "etmpc/qp.hpp"
#include "etmpc/trajectory.hpp"

namespace etmpc {

struct OcpSpec {
  int N = 10;
  Matrix Q;
  Matrix R;
  Matrix P;
  Matrix K_f;  // terminal feedback, used for shifted tails and warm starts
  TighteningSchedule schedule;
  double alpha_f = std::numeric_limits<double>::infinity();
  /// When off, x_N is only kept inside the tightened state set at k = N.
  bool terminal_constraint = true;

  /// Throws ConfigError on non-PD weights, bad dimensions or exhausted
  /// tightening.
  void validate(const DynamicsModel& model) const;
};

struct SolverConfig {
  int max_sqp_iters = 30;
  int qp_max_iters = 2000;
  double kkt_tol = 1e-4;
  double constraint_tol = 1e-6;
  double dynamics_tol = 1e-8;
  double ls_contraction = 0.5;
  double ls_min_step = 1e-6;
  QpSettings qp;
};

enum class OcpStatus { optimal, max_iter, infeasible };
std::string to_string(OcpStatus s);

struct OcpSolution {
  Trajectory trajectory;
  double cost = 0.0;  // V_N recomputed from the trajectory
  OcpStatus status = OcpStatus::infeasible;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double constraint_violation = std::numeric_limits<double>::infinity();
  double dynamics_violation = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int qp_iterations = 0;
  double wall_time = 0.0;  // seconds
  std::string diagnostics;

  const std::vector<InputVector>& inputs() const noexcept { return trajectory.inputs; }
  const std::vector<StateVector>& states() const noexcept { return trajectory.states; }
};

/// Nonlinear program behind the OCP, with decision vector
/// z = [x_0, u_0, x_1, u_1, ..., x_{N-1}, u_{N-1}, x_N].
/// Equalities c(z) = 0 fix x_0 and enforce the dynamics; the bounded rows
/// lo <= g(z) <= hi collect the tightened state and input sets and the
/// terminal-set condition.
class OcpProblem {
 public:
  OcpProblem(const DynamicsModel& model, const OcpSpec& spec, StateVector x0);

  int num_variables() const noexcept { return num_vars_; }
  int num_equalities() const noexcept { return (N_ + 1) * n_; }
  int num_inequalities() const noexcept { return static_cast<int>(rows_.size()); }
  int state_offset(int k) const noexcept { return k * (n_ + m_); }
  int input_offset(int k) const noexcept { return k * (n_ + m_) + n_; }

  Vector pack(const Trajectory& traj) const;
  Trajectory unpack(const Vector& z) const;

  double cost(const Vector& z) const;
  Vector cost_gradient(const Vector& z) const;
  /// Constant Hessian of the cost.
  const SparseMatrix& cost_hessian() const noexcept { return hessian_; }

  Vector equality(const Vector& z) const;
  SparseMatrix equality_jacobian(const Vector& z) const;
  /// Both residual and Jacobian from one pass over the stages.
  void linearize_equality(const Vector& z, Vector& c, SparseMatrix& J) const;

  Vector inequality(const Vector& z) const;
  SparseMatrix inequality_jacobian(const Vector& z) const;
  const Vector& inequality_lower() const noexcept { return lo_; }
  const Vector& inequality_upper() const noexcept { return hi_; }

  /// max of |c(z)| and the bound violations of g(z).
  double equality_violation(const Vector& z) const;
  double inequality_violation(const Vector& z) const;

  /// Half-widths of the bounding box of the terminal set (inf when unused).
  const Vector& terminal_box() const noexcept { return terminal_box_; }
  bool has_terminal_row() const noexcept { return terminal_row_ >= 0; }

  const StateVector& initial_state() const noexcept { return x0_; }
  const DynamicsModel& model() const noexcept { return *model_; }
  const OcpSpec& spec() const noexcept { return *spec_; }

 private:
  struct Row {
    int offset;  // first variable of the block the row acts on
    std::vector<std::pair<int, double>> coeffs;  // (local index, value)
  };
  void add_polytope_rows(const Polytope& set, int offset, double factor);

  const DynamicsModel* model_;
  const OcpSpec* spec_;
  StateVector x0_;
  int n_, m_, N_, num_vars_;
  std::vector<Row> rows_;
  Vector lo_, hi_;
  int terminal_row_ = -1;
  Vector terminal_box_;
  SparseMatrix hessian_;
};

/// SQP with Gauss-Newton Hessian, l1-merit backtracking and a final forward
/// rollout so the returned trajectory satisfies the dynamics exactly.
OcpSolution solve_ocp(const DynamicsModel& model, const OcpSpec& spec, const StateVector& x0,
                      const Trajectory* warm_start = nullptr, const SolverConfig& config = {});

/// Quadratic cost of a trajectory under the spec's weights.
double trajectory_cost(const OcpSpec& spec, const Trajectory& traj);

/// V_N of an optimal solution, recomputed from its trajectories. Throws
/// ConfigError for non-optimal solutions.
double value_function(const OcpSolution& solution, const OcpSpec& spec);

/// Shifted plan with a K_f tail, re-propagated from the measured state.
Trajectory warm_start_from_buffer(const DynamicsModel& model, const PredictionBuffer& buffer,
                                  const Matrix& K_f, const StateVector& measured);

/// Maximum violation of the tightened sets (and terminal set) by a
/// trajectory, as used to accept a solution.
double tightened_violation(const DynamicsModel& model, const OcpSpec& spec,
                           const Trajectory& traj);

}  // namespace etmpc
