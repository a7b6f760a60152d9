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


// Reference implementations the library is checked against. They share no
// code with the solvers under test.

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// min 0.5 x'Gx + a'x  s.t.  C' x >= b, G positive definite. Dual active-set
/// method of Goldfarb and Idnani with dense re-factorization at every step.
struct DenseQpResult {
  bool feasible = false;
  Vec x;
  Vec multipliers;  // one per column of C
  double objective = 0.0;
  std::vector<int> active;
};
DenseQpResult goldfarb_idnani(const Mat& G, const Vec& a, const Mat& C, const Vec& b);

/// Same problem with two-sided rows lo <= A x <= hi (infinite ends dropped).
DenseQpResult dense_qp(const Mat& G, const Vec& a, const Mat& A, const Vec& lo, const Vec& hi);

/// Linear MPC instance, constraints as symmetric boxes scaled by (1 - eps_k).
struct LinearOcp {
  Mat A, B, Q, R, P;
  Vec x0;
  Vec state_bounds, input_bounds;
  std::vector<double> keep;  // 1 - eps_k for k = 0..N
  int N = 1;
};

struct LinearOcpSolution {
  bool feasible = false;
  std::vector<Vec> inputs;
  std::vector<Vec> states;
  double cost = 0.0;
};

/// Condenses the states out (x_k = A^k x0 + sum A^(k-1-j) B u_j), then solves
/// the input QP with goldfarb_idnani. State boxes at k = 1..N, input boxes at
/// k = 0..N-1. Without bounds this is the batch least-squares solution.
LinearOcpSolution solve_linear_ocp(const LinearOcp& ocp, bool constrained = true);

/// Central differences of f at x, step h per coordinate.
Mat finite_difference_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x,
                               double h = 1e-6);

/// Infinite-horizon LQR by iterating the Riccati recursion to a fixed point.
struct Lqr {
  Mat P;
  Mat K;  // u = K x
};
Lqr riccati_iteration(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, int iters = 100000,
                      double tol = 1e-13);

}  // namespace oracle
