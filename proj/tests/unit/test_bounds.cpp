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

#include <cmath>
#include <limits>
#include <random>

#include "etmpc/bounds.hpp"
#include "etmpc/riccati.hpp"

using namespace etmpc;

namespace {

// Grid maximization written out independently of vwmax.
double nested_max(double L, double w, int p) {
  auto V = [L](double ww, double d, int tau) {
    double Lt = std::pow(L, tau);
    double geo = L == 1.0 ? tau : (Lt - 1.0) / (L - 1.0);
    return Lt * d + geo * ww;
  };
  double best = 0.0;
  for (int tau = 0; tau <= p; ++tau) best = std::max(best, V(w, V(w, 0.0, p - tau), tau));
  return best;
}

DynamicsModel double_integrator(double bound = 25.0) {
  Matrix A(2, 2), B(2, 1);
  A << 1, 0.2, 0, 1;
  B << 0.02, 0.2;
  return linear_model(A, B, Polytope::symmetric_box(Vector::Constant(2, bound)),
                      Polytope::symmetric_box(Vector::Constant(1, bound)), 0.2);
}

}  // namespace

TEST(Vtilde, ZeroAtOrigin) {
  for (double L : {0.5, 1.0, 3.0}) {
    const auto b = PropagationBound::lipschitz(L);
    for (int tau = 0; tau < 6; ++tau) EXPECT_EQ(b(0.0, 0.0, tau), 0.0);
  }
}

TEST(Vtilde, ClosedFormExamples) {
  EXPECT_NEAR(PropagationBound::lipschitz(2.0)(0.1, 0.0, 3), 0.7, 1e-15);
  EXPECT_NEAR(PropagationBound::lipschitz(1.0)(0.1, 0.2, 4), 0.6, 1e-15);
}

TEST(Vtilde, NegativeArgumentsRejected) {
  const auto b = PropagationBound::lipschitz(2.0);
  EXPECT_THROW(b(-0.1, 0.0, 1), ConfigError);
  EXPECT_THROW(b(0.1, -0.1, 1), ConfigError);
  EXPECT_THROW(b(0.1, 0.1, -1), ConfigError);
}

TEST(Vtilde, StrictlyIncreasing) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int s = 0; s < 200; ++s) {
    const double L = 0.3 + 3.0 * U(rng);
    const auto b = PropagationBound::lipschitz(L);
    const double w = U(rng), d = U(rng);
    const int tau = 1 + s % 7;
    const double base = b(w, d, tau);
    EXPECT_GT(b(w + 0.01 + U(rng), d, tau), base);
    EXPECT_GT(b(w, d + 0.01 + U(rng), tau), base);
    // In tau only for L >= 1: below that L^tau delta shrinks.
    if (L >= 1.0) EXPECT_GT(b(w, d, tau + 1), base);
  }
}

TEST(Vwmax, ZeroDisturbance) {
  EXPECT_EQ(vwmax(PropagationBound::lipschitz(2.0), 0.0, 4), 0.0);
}

TEST(Vwmax, ClosedFormCollapse) {
  for (double L : {0.5, 2.0, 5.0}) {
    for (int p : {1, 3, 10}) {
      const double w = 0.0137;
      const double closed = (std::pow(L, p) - 1.0) / (L - 1.0) * w;
      const double got = vwmax(PropagationBound::lipschitz(L), w, p);
      EXPECT_NEAR(got, closed, 1e-12 * std::max(1.0, closed)) << "L=" << L << " p=" << p;
      EXPECT_NEAR(nested_max(L, w, p), closed, 1e-12 * std::max(1.0, closed));
    }
  }
  EXPECT_NEAR(vwmax(PropagationBound::lipschitz(1.0), 0.05, 5), 0.25, 1e-15);
}

TEST(Vwmax, IsKFunction) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto b = PropagationBound::lipschitz(1.7);
  EXPECT_EQ(vwmax(b, 0.0, 4), 0.0);
  for (int s = 0; s < 100; ++s) {
    double a = U(rng), c = U(rng);
    if (a == c) continue;
    if (a > c) std::swap(a, c);
    EXPECT_LT(vwmax(b, a, 4), vwmax(b, c, 4));
  }
}

TEST(Vwmax, TabulatedBoundUsesGrid) {
  // delta gain 2^tau, w gain 2^tau - 1 equals the Lipschitz form at L = 2.
  std::vector<double> dg, wg;
  for (int t = 0; t <= 6; ++t) {
    dg.push_back(std::pow(2.0, t));
    wg.push_back(std::pow(2.0, t) - 1.0);
  }
  const auto tab = PropagationBound::tabulated(dg, wg);
  const auto lip = PropagationBound::lipschitz(2.0);
  EXPECT_NEAR(vwmax(tab, 0.03, 3), vwmax(lip, 0.03, 3), 1e-14);
  EXPECT_THROW(PropagationBound::tabulated({1.0, 1.0}, {0.0, 0.0}), ConfigError);
}

TEST(Vwmax, InverseRoundTrip) {
  for (double L : {0.7, 1.0, 2.5}) {
    const auto b = PropagationBound::lipschitz(L);
    for (double y : {1e-6, 0.01, 0.3, 4.0}) {
      const double wa = vwmax_inverse(b, y, 5);
      const double wb = vwmax_inverse_bisection(b, y, 5);
      EXPECT_NEAR(vwmax(b, wa, 5), y, 1e-9 * std::max(1.0, y));
      EXPECT_NEAR(vwmax(b, wb, 5), y, 1e-9 * std::max(1.0, y));
      EXPECT_NEAR(wa, wb, 1e-9 * std::max(1.0, wa));
    }
  }
}

TEST(Schedule, Examples) {
  TighteningSchedule s{0.1, 0.81, 5};
  EXPECT_EQ(s.epsilon_k(0), 0.0);
  EXPECT_NEAR(s.epsilon_k(1), 0.1, 1e-15);
  EXPECT_NEAR(s.epsilon_k(2), 0.19, 1e-14);
  EXPECT_THROW(s.epsilon_k(6), ConfigError);
}

TEST(Schedule, MonotoneAndBounded) {
  TighteningSchedule s{0.02, 0.9, 40};
  for (int k = 0; k < 40; ++k) {
    EXPECT_LT(s.epsilon_k(k), s.epsilon_k(k + 1));
    EXPECT_LT(s.epsilon_k(k + 1), s.supremum());
  }
  EXPECT_NEAR(s.supremum(), 0.02 / (1 - std::sqrt(0.9)), 1e-15);
}

TEST(Schedule, ExhaustedConstraintsRejected) {
  TighteningSchedule s{0.5, 0.81, 10};
  EXPECT_THROW(s.validate(), ConfigError);
  TighteningSchedule ok{0.05, 0.81, 10};
  EXPECT_NO_THROW(ok.validate());
}

TEST(TightenedSets, ScaledRightHandSides) {
  const auto m = double_integrator(2.0);
  TighteningSchedule s{0.1, 0.81, 6};
  const auto t0 = tightened_sets(m, s, 0);
  EXPECT_EQ(t0.state.rhs, m.state_set().rhs);
  EXPECT_EQ(t0.state.H, m.state_set().H);
  TighteningSchedule half{0.5, 0.25, 1};  // epsilon_1 = 0.5
  const auto th = tightened_sets(m, half, 1);
  EXPECT_TRUE(th.state.rhs.isApprox(0.5 * m.state_set().rhs));
  EXPECT_TRUE(th.input.rhs.isApprox(0.5 * m.input_set().rhs));
  // Nesting: a point of the set at k+1 lies in the set at k.
  std::mt19937_64 rng(1);
  for (int k = 0; k < 6; ++k) {
    const auto a = tightened_sets(m, s, k), b = tightened_sets(m, s, k + 1);
    for (int n = 0; n < 200; ++n) {
      const Vector x = sample_polytope(b.state, rng);
      EXPECT_TRUE(a.state.contains(x, 1e-15));
    }
  }
}

TEST(Certificate, LipschitzThresholdScaling) {
  AssumptionConstants c;
  c.c_delta_l = 1.0;
  c.c_delta_u = 4.0;
  c.delta_loc = 0.3;
  c.kappa_max = 2.0;
  c.rho = 0.8;
  c.H_inf_norm = 1.5;
  c.L_inf_norm = 0.75;
  const double L = 1.3, eps = 0.05;
  const int p = 4, N = 6;
  const auto cert = w_hat_max(c, PropagationBound::lipschitz(L), p, eps, N);
  const double g = (L - 1.0) / (std::pow(L, p) - 1.0);
  const double r = std::sqrt(c.c_delta_l / c.c_delta_u);
  EXPECT_NEAR(cert.thresholds[0], g * std::sqrt(c.delta_loc / c.c_delta_u), 1e-15);
  EXPECT_NEAR(cert.thresholds[1], g * eps / c.H_inf_norm * r, 1e-15);
  EXPECT_NEAR(cert.thresholds[2], g * eps / (c.kappa_max * c.L_inf_norm) * r, 1e-15);
  // H_inf = kappa_max * L_inf here, so the constraint thresholds coincide.
  EXPECT_NEAR(cert.thresholds[1], cert.thresholds[2], 1e-15);
  const double expect = std::min({cert.thresholds[0], cert.thresholds[1], cert.thresholds[2]});
  EXPECT_EQ(cert.w_hat_max, expect);
  EXPECT_NEAR(cert.vwmax_value, vwmax(PropagationBound::lipschitz(L), cert.w_hat_max, p), 1e-15);
  EXPECT_NEAR(cert.W_N_radius, terminal_disturbance_radius(c, N, cert.vwmax_value), 1e-15);
}

TEST(Certificate, InfiniteLocalLevelNeverBinds) {
  AssumptionConstants c;
  c.delta_loc = std::numeric_limits<double>::infinity();
  c.rho = 0.5;
  const auto cert = w_hat_max(c, PropagationBound::lipschitz(2.0), 3, 0.1, 5);
  EXPECT_TRUE(std::isinf(cert.thresholds[0]));
  EXPECT_NE(cert.binding, BindingCondition::local_validity);
}

TEST(TerminalRadius, Examples) {
  AssumptionConstants c;
  c.rho = 0.81;
  c.c_delta_l = 1.0;
  c.c_delta_u = 4.0;
  EXPECT_NEAR(terminal_disturbance_radius(c, 2, 0.1), 0.162, 1e-15);
  EXPECT_EQ(terminal_disturbance_radius(c, 2, 0.0), 0.0);
  for (int N = 1; N < 10; ++N) {
    EXPECT_LT(terminal_disturbance_radius(c, N + 1, 0.1), terminal_disturbance_radius(c, N, 0.1));
  }
}

TEST(Constants, LinearModelIsExact) {
  const auto m = double_integrator();
  const Matrix Q = Matrix::Identity(2, 2), R = Matrix::Identity(1, 1);
  const auto lin = m.linearize(Vector::Zero(2), Vector::Zero(1));
  const Matrix K = lqr_gain(lin.A, lin.B, R, discrete_algebraic_riccati(lin.A, lin.B, Q, R));
  ConstantEstimateOptions o;
  o.samples = 1000;
  const auto c = estimate_assumption_constants(m, K, o);
  EXPECT_FALSE(c.heuristic);
  const Matrix Acl = lin.A + lin.B * K;
  // The metric solves Acl' P Acl - P = -I.
  EXPECT_LE((Acl.transpose() * c.P_delta * Acl - c.P_delta + Matrix::Identity(2, 2)).norm(), 1e-9);
  Eigen::SelfAdjointEigenSolver<Matrix> es(c.P_delta);
  EXPECT_NEAR(c.c_delta_l, es.eigenvalues()(0), 1e-9);
  EXPECT_NEAR(c.c_delta_u, es.eigenvalues()(1), 1e-9);
  // rho bounds the contraction of 1000 sampled pairs and is attained.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> G;
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    Vector d(2);
    d << G(rng), G(rng);
    const double before = d.dot(c.P_delta * d);
    const Vector e = Acl * d;
    const double ratio = e.dot(c.P_delta * e) / before;
    EXPECT_LE(ratio, c.rho * (1 + 1e-12));
    worst = std::max(worst, ratio);
    EXPECT_GE(before, c.c_delta_l * d.squaredNorm() * (1 - 1e-12));
    EXPECT_LE(before, c.c_delta_u * d.squaredNorm() * (1 + 1e-12));
  }
  EXPECT_GT(worst, 0.98 * c.rho);
  EXPECT_NEAR(c.rho, contraction_in_metric(Acl, c.P_delta), 1e-12);
  const Vector zero = Vector::Zero(2);
  EXPECT_EQ(zero.dot(c.P_delta * zero), 0.0);
  EXPECT_NEAR(c.kappa_max, K.norm(), 1e-9);  // rank one: spectral = Frobenius
}

TEST(Constants, UnstableFeedbackRejected) {
  const auto m = double_integrator();
  const Matrix K = Matrix::Zero(1, 2);  // double integrator is not Schur stable
  EXPECT_THROW(estimate_assumption_constants(m, K), SynthesisError);
}

TEST(Window, CeilDivision) {
  EXPECT_EQ(window_length(3, 1), 3);
  EXPECT_EQ(window_length(10, 4), 3);
  EXPECT_EQ(window_length(10, 10), 1);
}
