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

// Operator-splitting (ADMM) solver for convex quadratic programs
//
//   minimize    0.5 x'Px + q'x
//   subject to  l <= Ax <= u
//
// following the OSQP iteration: one quasi-definite KKT factorization per
// penalty value, projection onto the bounds, and the dual update. Ruiz
// equilibration, adaptive rho, primal infeasibility certificates and
// active-set polishing are included.

#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <vector>

#include "etmpc/types.hpp"

namespace etmpc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Bounds at or beyond this magnitude are treated as infinite.
inline constexpr double kQpInfinity = 1e19;

struct QpProblem {
  SparseMatrix P;  // symmetric positive semidefinite, both triangles stored
  Vector q;
  SparseMatrix A;
  Vector l;
  Vector u;
};

struct QpSettings {
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  double eps_abs = 1e-8;
  double eps_rel = 1e-6;
  double eps_prim_inf = 1e-5;
  int max_iter = 2000;
  int scaling_iters = 10;
  bool adaptive_rho = true;
  int adaptive_rho_interval = 25;
  int check_interval = 5;
  bool polish = true;
  int polish_refine_iters = 5;
};

enum class QpStatus { solved, max_iter, primal_infeasible, numerical_error };

struct QpResult {
  Vector x;
  Vector y;  // multipliers of l <= Ax <= u (positive at the upper bound)
  QpStatus status = QpStatus::max_iter;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool polished = false;
};

class AdmmQpSolver {
 public:
  AdmmQpSolver() = default;
  explicit AdmmQpSolver(QpSettings settings) : settings_(settings) {}

  /// Scales and factorizes. With keep_rho the penalty reached by the
  /// previous solve is reused (successive SQP subproblems); otherwise it
  /// restarts from settings().rho.
  void setup(const QpProblem& problem, bool keep_rho = false);
  void warm_start(const Vector& x, const Vector& y);
  QpResult solve();

  const QpSettings& settings() const noexcept { return settings_; }
  QpSettings& settings() noexcept { return settings_; }

 private:
  void scale_problem(const QpProblem& problem);
  void assemble_kkt();
  void factorize();
  void update_rho_vector();
  bool is_equality(int i) const;
  bool polish(QpResult& result);
  double primal_residual(const Vector& x, const Vector& z) const;
  double dual_residual(const Vector& x, const Vector& y) const;
  double primal_tolerance(const Vector& x, const Vector& z) const;
  double dual_tolerance(const Vector& x, const Vector& y) const;
  bool primal_infeasible(const Vector& delta_y) const;
  void fill_result(QpResult& result) const;

  QpSettings settings_;
  int n_ = 0;
  int m_ = 0;

  // Scaled data: Ps = c D P D, qs = c D q, As = E A D, ls = E l, us = E u.
  SparseMatrix Ps_;
  SparseMatrix As_;
  SparseMatrix AsT_;
  Vector qs_, ls_, us_;
  Vector D_, E_, Dinv_, Einv_;
  double cost_scale_ = 1.0;

  Vector rho_vec_;
  Vector rho_inv_;
  double rho_ = 0.1;

  SparseMatrix kkt_;
  std::vector<int> rho_diag_index_;  // positions of -1/rho_i in kkt_ values
  std::vector<int> p_diag_index_;    // positions of the P + sigma I diagonal
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool pattern_analyzed_ = false;
  // Polishing reuses the KKT pattern with modified diagonal values.
  SparseMatrix polish_kkt_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> polish_ldlt_;
  bool polish_analyzed_ = false;
  std::vector<int> pattern_outer_;
  std::vector<int> pattern_inner_;

  Vector x_, z_, y_;
};

}  // namespace etmpc
