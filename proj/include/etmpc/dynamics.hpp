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

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "etmpc/parallel.hpp"
#include "etmpc/types.hpp"

namespace etmpc {

using Rng = std::mt19937_64;

struct Linearization {
  Matrix A;  // d step / d x
  Matrix B;  // d step / d u
  StateVector next;  // the step value f(x, u) itself
};

/// Continuous-time dynamics xdot = rhs(x, u) with its Jacobians.
struct VectorField {
  int n = 0;
  int m = 0;
  std::function<Vector(const Vector&, const Vector&)> rhs;
  std::function<void(const Vector&, const Vector&, Matrix& fx, Matrix& fu)> jacobian;
};

/// Map applied after every integration step (e.g. quaternion
/// renormalization), together with its Jacobian.
struct Retraction {
  std::function<Vector(const Vector&)> apply;
  std::function<Matrix(const Vector&)> jacobian;
  explicit operator bool() const noexcept { return static_cast<bool>(apply); }
};

/// Constraint sets and labels attached to a model.
struct ModelSets {
  std::string name = "model";
  Polytope state_set;
  Polytope input_set;
  std::vector<int> position_indices;
};

/// Discrete-time disturbed system x+ = f(x, u) + w with equilibrium f(0,0)=0,
/// state set {Hx <= 1} and input set {Lu <= 1}. Immutable and safe to share
/// between threads.
class DynamicsModel {
 public:
  using StepFn = std::function<StateVector(const StateVector&, const InputVector&)>;
  using JacobianFn = std::function<Linearization(const StateVector&, const InputVector&)>;
  using ProjectFn = std::function<StateVector(const StateVector&)>;

  DynamicsModel(int n, int m, double dt, StepFn step, JacobianFn jacobian, ModelSets sets,
                ProjectFn project = {}, bool linear = false);

  /// Nominal step f(x, u). Throws EvaluationError on non-finite output.
  StateVector step(const StateVector& x, const InputVector& u) const;
  Linearization linearize(const StateVector& x, const InputVector& u) const;
  /// Maps an arbitrary vector onto the model's state manifold (identity for
  /// models without one).
  StateVector project(const StateVector& x) const;

  int n() const noexcept { return n_; }
  int m() const noexcept { return m_; }
  double dt() const noexcept { return dt_; }
  bool is_linear() const noexcept { return linear_; }
  const std::string& name() const noexcept { return sets_.name; }
  const Polytope& state_set() const noexcept { return sets_.state_set; }
  const Polytope& input_set() const noexcept { return sets_.input_set; }
  const std::vector<int>& position_indices() const noexcept { return sets_.position_indices; }

 private:
  int n_;
  int m_;
  double dt_;
  StepFn step_;
  JacobianFn jacobian_;
  ModelSets sets_;
  ProjectFn project_;
  bool linear_;
};

/// One classical RK4 step per call, with Jacobians propagated through the
/// four stages and the optional retraction.
DynamicsModel discretize_rk4(VectorField field, double dt, ModelSets sets = {},
                             Retraction retraction = {});

/// x+ = A x + B u, exact Jacobians.
DynamicsModel linear_model(const Matrix& A, const Matrix& B, const Polytope& state_set,
                           const Polytope& input_set, double dt,
                           std::vector<int> position_indices = {0});

struct QuadcopterParams {
  double mass = 0.035;                // kg
  Eigen::Vector3d inertia{1.7e-5, 1.7e-5, 2.9e-5};  // kg m^2, body diagonal
  double gravity = 9.81;              // m/s^2
};

/// Symmetric box limits used to build the quadcopter constraint polytopes.
struct QuadcopterLimits {
  double position = 3.0;   // m
  double velocity = 2.0;   // m/s
  double attitude = 0.3;   // bound on each quaternion vector component
  double rate = 3.0;       // rad/s
  double thrust = 0.2;     // N, deviation from hover thrust
  Eigen::Vector3d torque{2e-4, 2e-4, 1e-4};  // N m
};

namespace quad {
inline constexpr int kStates = 13;
inline constexpr int kInputs = 4;
inline constexpr int kPosition = 0;
inline constexpr int kVelocity = 3;
inline constexpr int kQuaternion = 6;  // (w, x, y, z) minus the identity
inline constexpr int kRate = 10;
}  // namespace quad

/// 13-state rigid-body quadcopter in hover-deviation coordinates:
/// position, world-frame velocity, quaternion minus identity, body rates.
/// Input is (thrust - m g, tau_x, tau_y, tau_z).
DynamicsModel quadcopter_model(const QuadcopterParams& params, double dt,
                               const QuadcopterLimits& limits = {});
VectorField quadcopter_vector_field(const QuadcopterParams& params);

struct DisturbanceSpec {
  double w_hat = 0.0;
  std::vector<int> active_indices;    // empty: all state components
  std::vector<double> per_system_scale;  // missing entries default to 1
  double scale_for(SystemId system) const;
};

/// Componentwise uniform draw on the active coordinates, scaled so that the
/// box corners sit on the sphere of radius w_hat * scale. The same number of
/// variates is consumed whatever w_hat is, so streams stay aligned across
/// disturbance levels.
Vector sample_disturbance(const DisturbanceSpec& spec, int n, SystemId system, Rng& rng);

/// Uniform sample of a polytope's axis-aligned bounding box, rejected until
/// inside the polytope. Unbounded coordinates are set to zero.
Vector sample_polytope(const Polytope& region, Rng& rng);

/// Sampled bound on ||df/dx||_2 over region x input set, inflated by 5%.
double estimate_lipschitz(const DynamicsModel& model, const Polytope& region, int n_samples,
                          std::uint64_t seed, Execution exec = Execution::parallel);

inline constexpr double kLipschitzSafetyFactor = 1.05;

}  // namespace etmpc
