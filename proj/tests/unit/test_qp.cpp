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


#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "etmpc/qp.hpp"
#include "etmpc/riccati.hpp"
#include "oracles.hpp"

using namespace etmpc;

namespace {

SparseMatrix sparse(const Matrix& M) { return M.sparseView(); }

struct RandomQp {
  Matrix P, A;
  Vector q, l, u;
};

RandomQp random_qp(std::mt19937_64& rng, int n, int m) {
  std::normal_distribution<double> G;
  std::uniform_real_distribution<double> U(0.2, 2.0);
  RandomQp r;
  Matrix M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = G(rng);
  r.P = M * M.transpose() + 0.5 * Matrix::Identity(n, n);
  r.q.resize(n);
  for (int i = 0; i < n; ++i) r.q(i) = 3.0 * G(rng);
  r.A.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) r.A(i, j) = G(rng);
  // The origin is strictly feasible, so every instance has a solution.
  r.l.resize(m);
  r.u.resize(m);
  for (int i = 0; i < m; ++i) {
    r.l(i) = -U(rng);
    r.u(i) = U(rng);
    if (i % 5 == 4) r.l(i) = -kQpInfinity;
  }
  return r;
}

}  // namespace

TEST(AdmmQp, BoxConstrainedExample) {
  QpProblem p;
  p.P = sparse(Matrix::Identity(2, 2));
  p.q = Vector::Constant(2, -1.0);
  p.A = sparse(Matrix::Identity(2, 2));
  p.l = Vector::Zero(2);
  p.u = Vector::Constant(2, 0.5);
  AdmmQpSolver s;
  s.setup(p);
  const auto r = s.solve();
  EXPECT_EQ(r.status, QpStatus::solved);
  EXPECT_NEAR(r.x(0), 0.5, 1e-9);
  EXPECT_NEAR(r.x(1), 0.5, 1e-9);
  EXPECT_NEAR(r.y(0), 0.5, 1e-8);  // upper bound active, positive multiplier
}

TEST(AdmmQp, EqualityConstraint) {
  QpProblem p;
  p.P = sparse(2.0 * Matrix::Identity(2, 2));
  p.q = Vector::Constant(2, -2.0);
  Matrix A(1, 2);
  A << 1, 1;
  p.A = sparse(A);
  p.l = Vector::Constant(1, 3.0);
  p.u = Vector::Constant(1, 3.0);
  AdmmQpSolver s;
  s.setup(p);
  const auto r = s.solve();
  EXPECT_EQ(r.status, QpStatus::solved);
  EXPECT_NEAR(r.x(0), 1.5, 1e-9);
  EXPECT_NEAR(r.x(1), 1.5, 1e-9);
  EXPECT_NEAR(r.y(0), -1.0, 1e-8);
}

TEST(AdmmQp, DetectsPrimalInfeasibility) {
  QpProblem p;
  p.P = sparse(Matrix::Identity(1, 1));
  p.q = Vector::Zero(1);
  Matrix A(2, 1);
  A << 1, 1;
  p.A = sparse(A);
  p.l = (Vector(2) << 1.0, -kQpInfinity).finished();
  p.u = (Vector(2) << kQpInfinity, 0.0).finished();
  AdmmQpSolver s;
  s.setup(p);
  EXPECT_EQ(s.solve().status, QpStatus::primal_infeasible);
}

TEST(AdmmQp, MatchesDualActiveSetOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 7;
    const int m = n + trial % 9;
    const auto r = random_qp(rng, n, m);
    const Vector lo = r.l.unaryExpr([](double v) {
      return v <= -kQpInfinity ? -std::numeric_limits<double>::infinity() : v;
    });
    const auto ref = oracle::dense_qp(r.P, r.q, r.A, lo, r.u);
    ASSERT_TRUE(ref.feasible);
    QpProblem p{sparse(r.P), r.q, sparse(r.A), r.l, r.u};
    AdmmQpSolver s;
    s.setup(p);
    const auto res = s.solve();
    ASSERT_EQ(res.status, QpStatus::solved) << "trial " << trial;
    EXPECT_LE((res.x - ref.x).lpNorm<Eigen::Infinity>(), 1e-7) << "trial " << trial;
    const double obj = 0.5 * res.x.dot(r.P * res.x) + r.q.dot(res.x);
    EXPECT_NEAR(obj, ref.objective, 1e-8 * (1 + std::abs(ref.objective)));
  }
}

TEST(AdmmQp, WarmStartFromSolutionConvergesQuickly) {
  std::mt19937_64 rng(5);
  const auto r = random_qp(rng, 6, 10);
  QpProblem p{sparse(r.P), r.q, sparse(r.A), r.l, r.u};
  AdmmQpSolver s;
  s.setup(p);
  const auto cold = s.solve();
  s.setup(p);
  s.warm_start(cold.x, cold.y);
  const auto warm = s.solve();
  EXPECT_EQ(warm.status, QpStatus::solved);
  EXPECT_LE(warm.iterations, cold.iterations);
  EXPECT_LE((warm.x - cold.x).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(Riccati, MatchesFixedPointIteration) {
  Matrix A(2, 2), B(2, 1);
  A << 1, 0.2, 0, 1;
  B << 0.02, 0.2;
  const Matrix Q = Matrix::Identity(2, 2), R = Matrix::Identity(1, 1);
  const Matrix P = discrete_algebraic_riccati(A, B, Q, R);
  const auto ref = oracle::riccati_iteration(A, B, Q, R);
  EXPECT_LE((P - ref.P).norm() / ref.P.norm(), 1e-9);
  EXPECT_LE((lqr_gain(A, B, R, P) - ref.K).norm(), 1e-8);
  EXPECT_LT(spectral_radius(A + B * lqr_gain(A, B, R, P)), 1.0);
}

TEST(Riccati, UnstabilizableRejected) {
  Matrix A(2, 2), B(2, 1);
  A << 1.2, 0, 0, 0.5;
  B << 0, 1;  // the unstable mode is not reachable
  EXPECT_THROW(discrete_algebraic_riccati(A, B, Matrix::Identity(2, 2), Matrix::Identity(1, 1)),
               SynthesisError);
}

TEST(Lyapunov, ResidualVanishes) {
  Matrix A(2, 2);
  A << 0.5, 0.3, -0.2, 0.7;
  const Matrix Q = Matrix::Identity(2, 2);
  const Matrix P = discrete_lyapunov(A, Q);
  EXPECT_LE((A.transpose() * P * A - P + Q).norm(), 1e-12);
  EXPECT_THROW(discrete_lyapunov(2.0 * Matrix::Identity(2, 2), Q), SynthesisError);
}
