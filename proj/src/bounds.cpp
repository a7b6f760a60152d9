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

#include "etmpc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "etmpc/riccati.hpp"

namespace etmpc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

PropagationBound PropagationBound::lipschitz(double L) {
  if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("Lipschitz constant must be positive");
  PropagationBound b;
  b.kind_ = Kind::lipschitz;
  b.L_ = L;
  return b;
}

PropagationBound PropagationBound::tabulated(std::vector<double> delta_gain,
                                             std::vector<double> w_gain) {
  if (delta_gain.empty() || delta_gain.size() != w_gain.size()) {
    throw ConfigError("tabulated bound needs equally sized, non-empty tables");
  }
  for (std::size_t t = 0; t < delta_gain.size(); ++t) {
    if (!(delta_gain[t] > 0.0)) throw ConfigError("tabulated bound: delta gains must be positive");
    if (t == 0 && w_gain[0] < 0.0) throw ConfigError("tabulated bound: negative disturbance gain");
    if (t > 0 && !(w_gain[t] > w_gain[t - 1])) {
      throw ConfigError("tabulated bound: disturbance gains must increase strictly in tau");
    }
  }
  PropagationBound b;
  b.kind_ = Kind::tabulated;
  b.delta_gain_ = std::move(delta_gain);
  b.w_gain_ = std::move(w_gain);
  return b;
}

int PropagationBound::max_tau() const noexcept {
  return kind_ == Kind::lipschitz ? std::numeric_limits<int>::max()
                                  : static_cast<int>(w_gain_.size()) - 1;
}

double PropagationBound::operator()(double w_hat, double delta, int tau) const {
  if (w_hat < 0.0 || delta < 0.0 || tau < 0) {
    throw ConfigError("propagation bound arguments must be non-negative");
  }
  if (kind_ == Kind::tabulated) {
    if (tau > max_tau()) throw ConfigError("propagation bound table too short for tau");
    const auto t = static_cast<std::size_t>(tau);
    return delta_gain_[t] * delta + w_gain_[t] * w_hat;
  }
  if (L_ == 1.0) return delta + tau * w_hat;
  const double Lt = std::pow(L_, tau);
  if (std::abs(L_ - 1.0) < 1e-6) {
    // Geometric sum avoids the cancellation in (L^tau - 1) / (L - 1).
    double sum = 0.0;
    double term = 1.0;
    for (int j = 0; j < tau; ++j) {
      sum += term;
      term *= L_;
    }
    return Lt * delta + sum * w_hat;
  }
  return Lt * delta + (Lt - 1.0) / (L_ - 1.0) * w_hat;
}

double vwmax(const PropagationBound& bound, double w_hat, int p) {
  if (p < 1) throw ConfigError("vwmax: window length must be at least 1");
  double best = 0.0;
  for (int tau = 0; tau <= p; ++tau) {
    best = std::max(best, bound(w_hat, bound(w_hat, 0.0, p - tau), tau));
  }
  return best;
}

double vwmax_inverse_bisection(const PropagationBound& bound, double target, int p) {
  if (target < 0.0) throw ConfigError("vwmax inverse: negative target");
  if (target == 0.0) return 0.0;
  if (std::isinf(target)) return kInf;
  double hi = 1.0;
  int doublings = 0;
  while (vwmax(bound, hi, p) < target) {
    hi *= 2.0;
    if (++doublings > 1100) throw ConfigError("vwmax inverse: bound is not invertible");
  }
  double lo = 0.0;
  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (vwmax(bound, mid, p) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double e_lo = std::abs(vwmax(bound, lo, p) - target);
  const double e_hi = std::abs(vwmax(bound, hi, p) - target);
  return e_lo < e_hi ? lo : hi;
}

double vwmax_inverse(const PropagationBound& bound, double target, int p) {
  if (target < 0.0) throw ConfigError("vwmax inverse: negative target");
  if (std::isinf(target)) return kInf;
  if (bound.kind() == PropagationBound::Kind::lipschitz) {
    const double slope = vwmax(bound, 1.0, p);
    if (!(slope > 0.0)) throw ConfigError("vwmax inverse: degenerate bound");
    return target / slope;
  }
  return vwmax_inverse_bisection(bound, target, p);
}

double TighteningSchedule::epsilon_k(int k) const {
  validate();
  if (k < 0 || k > N) throw ConfigError("epsilon_k: k outside [0, N]");
  const double root = std::sqrt(rho);
  double sum = 0.0;
  double term = 1.0;
  for (int j = 0; j < k; ++j) {
    sum += term;
    term *= root;
  }
  return sum * epsilon;
}

double TighteningSchedule::supremum() const { return epsilon / (1.0 - std::sqrt(rho)); }

void TighteningSchedule::validate() const {
  if (N < 1) throw ConfigError("tightening schedule: horizon must be at least 1");
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("tightening schedule: rho must lie in (0, 1)");
  if (!(epsilon >= 0.0)) throw ConfigError("tightening schedule: epsilon must be non-negative");
  const double root = std::sqrt(rho);
  double sum = 0.0;
  double term = 1.0;
  for (int j = 0; j < N; ++j) {
    sum += term;
    term *= root;
  }
  if (!(sum * epsilon < 1.0)) {
    throw ConfigError("tightening exhausts constraints (epsilon_N >= 1)");
  }
}

TightenedSets tightened_sets(const DynamicsModel& model, const TighteningSchedule& schedule, int k) {
  const double factor = 1.0 - schedule.epsilon_k(k);
  return TightenedSets{model.state_set().scaled(factor), model.input_set().scaled(factor)};
}

void AssumptionConstants::validate() const {
  if (!(c_delta_l > 0.0) || !(c_delta_u >= c_delta_l)) {
    throw ConfigError("assumption constants: need 0 < c_delta_l <= c_delta_u");
  }
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("assumption constants: rho must lie in (0, 1)");
  if (!(delta_loc > 0.0)) throw ConfigError("assumption constants: delta_loc must be positive");
  if (!(kappa_max > 0.0)) throw ConfigError("assumption constants: kappa_max must be positive");
  if (H_inf_norm < 0.0 || L_inf_norm < 0.0) {
    throw ConfigError("assumption constants: constraint norms must be non-negative");
  }
}

std::string to_string(BindingCondition c) {
  switch (c) {
    case BindingCondition::local_validity:
      return "local_validity";
    case BindingCondition::state_constraints:
      return "state_constraints";
    case BindingCondition::input_constraints:
      return "input_constraints";
  }
  return "unknown";
}

double terminal_disturbance_radius(const AssumptionConstants& constants, int N,
                                   double vwmax_value) {
  constants.validate();
  if (N < 0) throw ConfigError("terminal radius: negative horizon");
  return std::sqrt(std::pow(constants.rho, N) * constants.c_delta_u / constants.c_delta_l) *
         vwmax_value;
}

RobustnessCertificate w_hat_max(const AssumptionConstants& constants, const PropagationBound& bound,
                                int p, double epsilon, int N) {
  constants.validate();
  if (!(epsilon > 0.0)) throw ConfigError("w_hat_max: epsilon must be positive");
  const double ratio = std::sqrt(constants.c_delta_l / constants.c_delta_u);

  std::array<double, 3> targets{};
  targets[0] = std::isinf(constants.delta_loc) ? kInf
                                               : std::sqrt(constants.delta_loc / constants.c_delta_u);
  targets[1] = constants.H_inf_norm > 0.0 ? epsilon / constants.H_inf_norm * ratio : kInf;
  const double input_scale = constants.kappa_max * constants.L_inf_norm;
  targets[2] = input_scale > 0.0 ? epsilon / input_scale * ratio : kInf;

  RobustnessCertificate cert;
  cert.p = p;
  cert.heuristic = constants.heuristic;
  for (std::size_t i = 0; i < 3; ++i) cert.thresholds[i] = vwmax_inverse(bound, targets[i], p);
  const auto it = std::min_element(cert.thresholds.begin(), cert.thresholds.end());
  if (std::isinf(*it)) throw ConfigError("w_hat_max: no threshold is finite (degenerate setup)");
  cert.binding = static_cast<BindingCondition>(it - cert.thresholds.begin());
  cert.w_hat_max = *it;
  cert.vwmax_value = vwmax(bound, cert.w_hat_max, p);
  cert.W_N_radius = terminal_disturbance_radius(constants, N, cert.vwmax_value);
  return cert;
}

double contraction_in_metric(const Matrix& A, const Matrix& P) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(A.transpose() * P * A, P);
  return ges.eigenvalues().maxCoeff();
}

int window_length(int systems, int budget) {
  if (systems < 1 || budget < 1) throw ConfigError("window length: need at least one system and slot");
  return (systems + budget - 1) / budget;
}

AssumptionConstants estimate_assumption_constants(const DynamicsModel& model, const Matrix& K,
                                                  const ConstantEstimateOptions& options) {
  const int n = model.n();
  const int m = model.m();
  if (K.rows() != m || K.cols() != n) throw ConfigError("feedback gain has wrong dimensions");
  const Linearization lin = model.linearize(StateVector::Zero(n), InputVector::Zero(m));
  const Matrix A_cl = lin.A + lin.B * K;
  const double radius = spectral_radius(A_cl);
  if (!(radius < 1.0)) {
    throw SynthesisError("closed-loop linearization is not stable (no Lyapunov metric)");
  }
  if (!(options.metric_shift > 0.0 && options.metric_shift <= 1.0)) {
    throw ConfigError("constant estimation: metric_shift must lie in (0, 1]");
  }
  const double gamma = options.metric_shift == 1.0
                           ? 1.0
                           : radius + options.metric_shift * (1.0 - radius);

  AssumptionConstants c;
  c.P_delta = discrete_lyapunov(A_cl / gamma, Matrix::Identity(n, n));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c.P_delta);
  c.c_delta_l = eig.eigenvalues().minCoeff();
  c.c_delta_u = eig.eigenvalues().maxCoeff();
  c.rho = contraction_in_metric(A_cl, c.P_delta);
  c.kappa_max = Eigen::JacobiSVD<Matrix>(K).singularValues()[0];
  c.H_inf_norm = model.state_set().inf_norm();
  c.L_inf_norm = model.input_set().inf_norm();

  if (model.is_linear()) {
    c.delta_loc = kInf;
    c.heuristic = false;
  } else {
    if (!(options.region_scale > 0.0) || !(options.local_radius > 0.0)) {
      throw ConfigError("constant estimation: region scale and local radius must be positive");
    }
    const int samples = std::max(options.samples, 2);
    const Polytope state_region = model.state_set().scaled(options.region_scale);
    const Polytope input_region = model.input_set().scaled(options.region_scale);
    Rng rng(options.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<StateVector> xs(static_cast<std::size_t>(samples));
    std::vector<StateVector> zs(static_cast<std::size_t>(samples));
    std::vector<InputVector> vs(static_cast<std::size_t>(samples));
    for (std::size_t s = 0; s < xs.size(); ++s) {
      zs[s] = model.project(sample_polytope(state_region, rng));
      vs[s] = sample_polytope(input_region, rng);
      Vector dir(n);
      for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
      const double r = options.local_radius * std::pow(unit(rng), 1.0 / n);
      xs[s] = model.project(zs[s] + r * dir.normalized());
    }
    std::vector<double> ratios(xs.size(), 0.0);
    const Matrix& P = c.P_delta;
    for_each_index(options.exec, xs.size(), [&](std::size_t s) {
      const Vector e = xs[s] - zs[s];
      const double v0 = e.dot(P * e);
      if (!(v0 > 0.0)) return;
      const Vector x_next = model.step(xs[s], vs[s] + K * e);
      const Vector z_next = model.step(zs[s], vs[s]);
      const Vector e_next = x_next - z_next;
      ratios[s] = e_next.dot(P * e_next) / v0;
    });
    c.rho = std::max(c.rho, *std::max_element(ratios.begin(), ratios.end()));
    c.delta_loc = c.c_delta_l * options.local_radius * options.local_radius;
    c.heuristic = true;
  }
  if (!(c.rho < 1.0)) {
    throw SynthesisError("feedback does not contract the sampled pairs (rho >= 1)");
  }
  return c;
}

}  // namespace etmpc
