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

#include "etmpc/terminal.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include <Eigen/Eigenvalues>

#include "etmpc/riccati.hpp"

namespace etmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinLevel = 1e-8;

// Points of the unit ball, alternating between the sphere and the
// interior. Mapped onto level sets by x = sqrt(alpha) L^-T s with P = L L'.
class UnitSampler {
 public:
  UnitSampler(int n, std::uint64_t seed) : n_(n), rng_(seed) {}
  Vector next() {
    Vector s(n_);
    for (int j = 0; j < n_; ++j) s[j] = normal_(rng_);
    s.normalize();
    const double radius = (count_++ % 2 == 0) ? 1.0 : std::pow(uniform_(rng_), 1.0 / n_);
    return radius * s;
  }

 private:
  int n_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  long count_ = 0;
};

std::vector<Vector> unit_samples(int n, int count, std::uint64_t seed) {
  UnitSampler sampler(n, seed);
  std::vector<Vector> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(sampler.next());
  return out;
}

struct LevelMap {
  Matrix LinvT;  // L^-T

  explicit LevelMap(const Matrix& P) {
    Eigen::LLT<Matrix> llt(P);
    if (llt.info() != Eigen::Success) throw SynthesisError("terminal weight is not positive definite");
    const Matrix L = llt.matrixL();
    LinvT = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(P.rows(), P.cols())).transpose();
  }
};

// Sample mapped to level alpha and pushed onto the model's state manifold;
// empty when the projection leaves the level set.
std::optional<Vector> level_point(const DynamicsModel& model, const Matrix& P,
                                  const LevelMap& map, const Vector& s, double alpha) {
  Vector x = model.project(std::sqrt(alpha) * (map.LinvT * s));
  if (x.dot(P * x) > alpha * (1.0 + 1e-12)) return std::nullopt;
  return x;
}

bool decrease_ok(const TerminalIngredients& t, const Matrix& Q,
                 const Matrix& R, const Vector& x, const Vector& next, double tol) {
  const Vector u = t.K * x;
  const double vx = x.dot(t.P * x);
  const double lhs = next.dot(t.P * next);
  const double rhs = vx - x.dot(Q * x) - u.dot(R * u);
  return lhs <= rhs + tol * vx;
}

bool constraints_ok(const DynamicsModel& model, const TerminalIngredients& t,
                    const TighteningSchedule& schedule, const Vector& x) {
  const double keep = 1.0 - schedule.epsilon_k(schedule.N);
  const double tol = 1e-12;
  return model.state_set().scaled(keep).violation(x) <= tol &&
         model.input_set().scaled(keep).violation(t.K * x) <= tol;
}

double lambda_max(const Matrix& P) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(P, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

}  // namespace

TerminalIngredients terminal_weights(const DynamicsModel& model, const Matrix& Q, const Matrix& R,
                                     double cost_inflation) {
  if (cost_inflation < 0.0) throw ConfigError("terminal: cost inflation must be non-negative");
  require_positive_definite(Q, "Q");
  require_positive_definite(R, "R");
  const Linearization lin =
      model.linearize(StateVector::Zero(model.n()), InputVector::Zero(model.m()));
  TerminalIngredients t;
  t.cost_inflation = cost_inflation;
  t.P = discrete_algebraic_riccati(lin.A, lin.B, (1.0 + cost_inflation) * Q, R);
  t.K = lqr_gain(lin.A, lin.B, R, t.P);
  return t;
}

double constraint_level(const DynamicsModel& model, const Matrix& P, const Matrix& K,
                        const TighteningSchedule& schedule) {
  const double keep = 1.0 - schedule.epsilon_k(schedule.N);
  const Matrix Pinv = P.inverse();
  double level = kInf;
  // max over the ellipsoid of h'x is sqrt(alpha h' P^-1 h)
  auto visit = [&](const Matrix& H, const Vector& rhs) {
    for (int i = 0; i < H.rows(); ++i) {
      const double spread = H.row(i) * Pinv * H.row(i).transpose();
      if (spread <= 0.0) continue;
      const double b = keep * rhs[i];
      level = std::min(level, b > 0.0 ? b * b / spread : 0.0);
    }
  };
  visit(model.state_set().H, model.state_set().rhs);
  visit(model.input_set().H * K, model.input_set().rhs);
  return level;
}

TerminalCheckCounts verify_terminal(const DynamicsModel& model,
                                    const TerminalIngredients& ingredients, const Matrix& Q,
                                    const Matrix& R, const TighteningSchedule& schedule,
                                    int samples, std::uint64_t seed, Execution exec,
                                    double decrease_tol) {
  if (samples < 1) throw ConfigError("verify_terminal: need at least one sample");
  const int n = model.n();
  const LevelMap map(ingredients.P);
  const double alpha = ingredients.alpha_f;
  // Draw until `samples` points survive the projection onto the manifold.
  UnitSampler sampler(n, seed ^ 0x7e41a1ULL);
  std::vector<Vector> points;
  points.reserve(samples);
  for (long attempt = 0; static_cast<int>(points.size()) < samples; ++attempt) {
    if (attempt > 50L * samples) throw SynthesisError("verify_terminal: level set sampling failed");
    if (auto x = level_point(model, ingredients.P, map, sampler.next(), alpha)) {
      points.push_back(std::move(*x));
    }
  }
  const auto noise = unit_samples(n, samples, seed ^ 0x5eed0fULL);
  std::vector<std::int8_t> flags(samples, 0);
  for_each_index(exec, static_cast<std::size_t>(samples), [&](std::size_t i) {
    const Vector& x = points[i];
    const Vector next = model.step(x, ingredients.K * x);
    std::int8_t f = 0;
    if (!decrease_ok(ingredients, Q, R, x, next, decrease_tol)) f |= 1;
    const Vector disturbed = next + ingredients.W_N_radius * noise[i];
    if (disturbed.dot(ingredients.P * disturbed) > alpha * (1.0 + 1e-12)) f |= 2;
    if (!constraints_ok(model, ingredients, schedule, x)) f |= 4;
    flags[i] = f;
  });
  TerminalCheckCounts counts;
  for (auto f : flags) {
    ++counts.samples;
    if (f & 1) ++counts.decrease_violations;
    if (f & 2) ++counts.invariance_violations;
    if (f & 4) ++counts.constraint_violations;
  }
  return counts;
}

void find_terminal_level(const DynamicsModel& model, TerminalIngredients& t, const Matrix& Q,
                         const Matrix& R, const TighteningSchedule& schedule, double W_N_radius,
                         const TerminalOptions& options) {
  if (W_N_radius < 0.0) throw ConfigError("terminal: disturbance radius must be non-negative");
  if (options.samples < 2) throw ConfigError("terminal: need at least two samples");
  schedule.validate();
  t.W_N_radius = W_N_radius;
  t.constraint_level = constraint_level(model, t.P, t.K, schedule);
  if (!(t.constraint_level > kMinLevel)) {
    throw SynthesisError("no verifiable terminal set: constraint satisfaction fails at every level");
  }
  const double level_cap = std::isfinite(t.constraint_level) ? t.constraint_level : 1e6;

  const LevelMap map(t.P);
  const auto samples = unit_samples(model.n(), options.samples, options.seed);
  const double w_term = W_N_radius * std::sqrt(lambda_max(t.P));

  auto decrease_holds = [&](double alpha) {
    std::atomic<bool> ok{true};
    for_each_index(options.exec, samples.size(), [&](std::size_t i) {
      if (!ok.load(std::memory_order_relaxed)) return;
      const auto x = level_point(model, t.P, map, samples[i], alpha);
      if (!x) return;
      const Vector next = model.step(*x, t.K * *x);
      if (!decrease_ok(t, Q, R, *x, next, options.decrease_tol)) ok = false;
    });
    return ok.load();
  };
  // Worst case over the disturbance ball: ||f||_P + W_N sqrt(lambda_max(P)).
  auto invariance_holds = [&](double alpha) {
    std::atomic<bool> ok{true};
    for_each_index(options.exec, samples.size(), [&](std::size_t i) {
      if (!ok.load(std::memory_order_relaxed)) return;
      const auto x = level_point(model, t.P, map, samples[i], alpha);
      if (!x) return;
      const Vector next = model.step(*x, t.K * *x);
      if (std::sqrt(next.dot(t.P * next)) + w_term > std::sqrt(alpha) * (1.0 + 1e-12)) ok = false;
    });
    return ok.load();
  };

  double alpha = level_cap;
  if (!decrease_holds(alpha)) {
    double lo = 0.0;
    double hi = level_cap;
    for (int it = 0; it < options.bisection_iters; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (decrease_holds(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    alpha = lo;
  }
  if (!(alpha > kMinLevel)) {
    throw SynthesisError("no verifiable terminal set: Lyapunov decrease fails at every level");
  }
  if (!invariance_holds(alpha)) {
    throw SynthesisError(
        "no verifiable terminal set: robust invariance fails at the largest level meeting the "
        "decrease and constraint conditions (terminal disturbance radius too large)");
  }
  // Independent samples; shrink while the fresh check still finds violations.
  for (int shrink = 0; shrink < 40; ++shrink) {
    t.alpha_f = alpha;
    t.verification = verify_terminal(model, t, Q, R, schedule, options.samples,
                                     options.seed + 1, options.exec, options.decrease_tol);
    if (t.verification.passed()) return;
    if (t.verification.constraint_violations > 0) break;
    alpha *= 0.95;
    if (!(alpha > kMinLevel) || !invariance_holds(alpha)) break;
  }
  const auto& v = t.verification;
  std::string failed = v.decrease_violations > 0    ? "Lyapunov decrease"
                       : v.invariance_violations > 0 ? "robust invariance"
                                                     : "constraint satisfaction";
  throw SynthesisError("terminal verification failed (" + failed + ") on fresh samples");
}

TerminalIngredients synthesize_terminal(const DynamicsModel& model, const Matrix& Q,
                                        const Matrix& R, const TighteningSchedule& schedule,
                                        double W_N_radius, const TerminalOptions& options) {
  TerminalIngredients t = terminal_weights(model, Q, R, options.cost_inflation);
  find_terminal_level(model, t, Q, R, schedule, W_N_radius, options);
  return t;
}

ControllerDesign design_controller(const DynamicsModel& model, const Matrix& Q, const Matrix& R,
                                   const DesignOptions& options) {
  if (options.systems < 1 || options.budget < 1 || options.budget > options.systems) {
    throw ConfigError("design: need 1 <= budget <= systems");
  }
  ControllerDesign d;
  if (options.fixed_terminal) {
    d.terminal = *options.fixed_terminal;
    const auto& t = d.terminal;
    if (t.P.rows() != model.n() || t.P.cols() != model.n() || t.K.rows() != model.m() ||
        t.K.cols() != model.n() || !(t.alpha_f > 0.0)) {
      throw ConfigError("design: precomputed terminal ingredients do not fit the model");
    }
  } else {
    d.terminal = terminal_weights(model, Q, R, options.terminal.cost_inflation);
  }
  d.constants = options.constants
                    ? *options.constants
                    : estimate_assumption_constants(model, d.terminal.K, options.constant_options);
  d.constants.validate();

  TighteningSchedule schedule{options.epsilon, d.constants.rho, options.N};
  schedule.validate();

  const double L = options.lipschitz > 0.0
                       ? options.lipschitz
                       : estimate_lipschitz(model, model.state_set(), options.lipschitz_samples,
                                            options.constant_options.seed,
                                            options.constant_options.exec);
  d.bound = PropagationBound::lipschitz(L);
  const int p = window_length(options.systems, options.budget);
  d.certificate = w_hat_max(d.constants, d.bound, p, options.epsilon, options.N);
  d.w_hat_design = options.w_hat_design < 0.0 ? d.certificate.w_hat_max : options.w_hat_design;
  const double W_N =
      terminal_disturbance_radius(d.constants, options.N, vwmax(d.bound, d.w_hat_design, p));
  if (!options.fixed_terminal) {
    find_terminal_level(model, d.terminal, Q, R, schedule, W_N, options.terminal);
  }

  d.spec.N = options.N;
  d.spec.Q = Q;
  d.spec.R = R;
  d.spec.P = d.terminal.P;
  d.spec.K_f = d.terminal.K;
  d.spec.schedule = schedule;
  d.spec.alpha_f = d.terminal.alpha_f;
  d.spec.terminal_constraint = options.terminal_constraint;
  d.spec.validate(model);
  return d;
}

}  // namespace etmpc
