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

#include "etmpc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace etmpc {

namespace {

std::string describe(const Vector& x) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << "]";
  return os.str();
}

void require_finite(const Vector& value, const Vector& state, const char* what) {
  if (!value.allFinite()) {
    throw EvaluationError(std::string(what) + " produced non-finite values at state " +
                              describe(state),
                          state);
  }
}

Eigen::Matrix3d skew(const Eigen::Vector3d& a) {
  Eigen::Matrix3d s;
  s << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return s;
}

}  // namespace

DynamicsModel::DynamicsModel(int n, int m, double dt, StepFn step, JacobianFn jacobian,
                             ModelSets sets, ProjectFn project, bool linear)
    : n_(n),
      m_(m),
      dt_(dt),
      step_(std::move(step)),
      jacobian_(std::move(jacobian)),
      sets_(std::move(sets)),
      project_(std::move(project)),
      linear_(linear) {
  if (n <= 0 || m <= 0) throw ConfigError("model dimensions must be positive");
  if (!(dt > 0.0)) throw ConfigError("sampling period must be positive");
  if (sets_.state_set.H.size() == 0) sets_.state_set = Polytope::normalized(Matrix::Zero(0, n));
  if (sets_.input_set.H.size() == 0) sets_.input_set = Polytope::normalized(Matrix::Zero(0, m));
  if (sets_.state_set.dim() != n || sets_.input_set.dim() != m) {
    throw ConfigError("constraint polytope dimension does not match the model");
  }
}

StateVector DynamicsModel::step(const StateVector& x, const InputVector& u) const {
  StateVector next = step_(x, u);
  require_finite(next, x, "model step");
  return next;
}

Linearization DynamicsModel::linearize(const StateVector& x, const InputVector& u) const {
  Linearization lin = jacobian_(x, u);
  if (lin.next.size() != n_) lin.next = step_(x, u);
  require_finite(lin.next, x, "model step");
  if (!lin.A.allFinite() || !lin.B.allFinite()) {
    throw EvaluationError("model Jacobian produced non-finite values at state " + describe(x), x);
  }
  return lin;
}

StateVector DynamicsModel::project(const StateVector& x) const {
  return project_ ? project_(x) : x;
}

DynamicsModel discretize_rk4(VectorField field, double dt, ModelSets sets, Retraction retraction) {
  if (!(dt > 0.0)) throw ConfigError("discretize_rk4: dt must be positive");
  const int n = field.n;
  const int m = field.m;
  if (sets.state_set.H.size() == 0) sets.state_set = Polytope::normalized(Matrix::Zero(0, n));
  if (sets.input_set.H.size() == 0) sets.input_set = Polytope::normalized(Matrix::Zero(0, m));

  auto rhs = field.rhs;
  auto eval = [rhs](const Vector& x, const Vector& u) {
    Vector k = rhs(x, u);
    require_finite(k, x, "vector field");
    return k;
  };

  auto step = [eval, dt, retraction](const StateVector& x, const InputVector& u) {
    const Vector k1 = eval(x, u);
    const Vector k2 = eval(x + 0.5 * dt * k1, u);
    const Vector k3 = eval(x + 0.5 * dt * k2, u);
    const Vector k4 = eval(x + dt * k3, u);
    Vector next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return retraction ? retraction.apply(next) : next;
  };

  auto jac = field.jacobian;
  auto jacobian = [eval, jac, dt, n, m, retraction](const StateVector& x, const InputVector& u) {
    Matrix fx(n, n), fu(n, m);
    const Matrix I = Matrix::Identity(n, n);

    const Vector k1 = eval(x, u);
    jac(x, u, fx, fu);
    const Matrix k1x = fx;
    const Matrix k1u = fu;

    const Vector x2 = x + 0.5 * dt * k1;
    const Vector k2 = eval(x2, u);
    jac(x2, u, fx, fu);
    const Matrix x2x = I + 0.5 * dt * k1x;
    const Matrix x2u = 0.5 * dt * k1u;
    const Matrix k2x = fx * x2x;
    const Matrix k2u = fx * x2u + fu;

    const Vector x3 = x + 0.5 * dt * k2;
    const Vector k3 = eval(x3, u);
    jac(x3, u, fx, fu);
    const Matrix x3x = I + 0.5 * dt * k2x;
    const Matrix x3u = 0.5 * dt * k2u;
    const Matrix k3x = fx * x3x;
    const Matrix k3u = fx * x3u + fu;

    const Vector x4 = x + dt * k3;
    const Vector k4 = eval(x4, u);
    jac(x4, u, fx, fu);
    const Matrix x4x = I + dt * k3x;
    const Matrix x4u = dt * k3u;
    const Matrix k4x = fx * x4x;
    const Matrix k4u = fx * x4u + fu;

    Linearization lin;
    lin.A = I + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    lin.B = (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    const Vector pre = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (retraction) {
      const Matrix G = retraction.jacobian(pre);
      lin.A = G * lin.A;
      lin.B = G * lin.B;
      lin.next = retraction.apply(pre);
    } else {
      lin.next = pre;
    }
    return lin;
  };

  DynamicsModel::ProjectFn project;
  if (retraction) project = retraction.apply;
  return DynamicsModel(n, m, dt, step, jacobian, std::move(sets), project, false);
}

DynamicsModel linear_model(const Matrix& A, const Matrix& B, const Polytope& state_set,
                           const Polytope& input_set, double dt,
                           std::vector<int> position_indices) {
  if (A.rows() != A.cols()) throw ConfigError("linear_model: A must be square");
  if (B.rows() != A.rows()) throw ConfigError("linear_model: B must have as many rows as A");
  if (B.cols() == 0) throw ConfigError("linear_model: B must have at least one column");
  if (state_set.H.size() != 0 && state_set.dim() != A.rows()) {
    throw ConfigError("linear_model: state polytope dimension mismatch");
  }
  if (input_set.H.size() != 0 && input_set.dim() != B.cols()) {
    throw ConfigError("linear_model: input polytope dimension mismatch");
  }
  ModelSets sets;
  sets.name = "linear";
  sets.state_set = state_set;
  sets.input_set = input_set;
  sets.position_indices = std::move(position_indices);
  for (int idx : sets.position_indices) {
    if (idx < 0 || idx >= A.rows()) throw ConfigError("linear_model: position index out of range");
  }
  auto step = [A, B](const StateVector& x, const InputVector& u) -> StateVector {
    return A * x + B * u;
  };
  auto jacobian = [A, B](const StateVector& x, const InputVector& u) {
    return Linearization{A, B, A * x + B * u};
  };
  return DynamicsModel(static_cast<int>(A.rows()), static_cast<int>(B.cols()), dt, step, jacobian,
                       std::move(sets), {}, true);
}

VectorField quadcopter_vector_field(const QuadcopterParams& params) {
  if (!(params.mass > 0.0) || !(params.gravity > 0.0) || !(params.inertia.minCoeff() > 0.0)) {
    throw ConfigError("quadcopter parameters must be positive");
  }
  using namespace quad;
  const double mass = params.mass;
  const double g = params.gravity;
  const Eigen::Vector3d J = params.inertia;
  const double hover = mass * g;

  VectorField field;
  field.n = kStates;
  field.m = kInputs;
  field.rhs = [=](const Vector& x, const Vector& u) {
    Vector dx(kStates);
    const Eigen::Vector3d v = x.segment<3>(kVelocity);
    const double qw = x[kQuaternion] + 1.0;
    const double qx = x[kQuaternion + 1];
    const double qy = x[kQuaternion + 2];
    const double qz = x[kQuaternion + 3];
    const Eigen::Vector3d w = x.segment<3>(kRate);
    const double thrust = hover + u[0];

    // Third column of the rotation matrix (body z axis in the world frame).
    const Eigen::Vector3d bz(2.0 * (qx * qz + qw * qy), 2.0 * (qy * qz - qw * qx),
                             1.0 - 2.0 * (qx * qx + qy * qy));
    dx.segment<3>(kPosition) = v;
    dx.segment<3>(kVelocity) = (thrust / mass) * bz - Eigen::Vector3d(0.0, 0.0, g);
    dx[kQuaternion] = 0.5 * (-qx * w.x() - qy * w.y() - qz * w.z());
    dx[kQuaternion + 1] = 0.5 * (qw * w.x() + qy * w.z() - qz * w.y());
    dx[kQuaternion + 2] = 0.5 * (qw * w.y() - qx * w.z() + qz * w.x());
    dx[kQuaternion + 3] = 0.5 * (qw * w.z() + qx * w.y() - qy * w.x());
    const Eigen::Vector3d Jw = J.cwiseProduct(w);
    dx.segment<3>(kRate) = (u.segment<3>(1) - w.cross(Jw)).cwiseQuotient(J);
    return dx;
  };
  field.jacobian = [=](const Vector& x, const Vector& u, Matrix& fx, Matrix& fu) {
    fx.setZero(kStates, kStates);
    fu.setZero(kStates, kInputs);
    const double qw = x[kQuaternion] + 1.0;
    const double qx = x[kQuaternion + 1];
    const double qy = x[kQuaternion + 2];
    const double qz = x[kQuaternion + 3];
    const Eigen::Vector3d w = x.segment<3>(kRate);
    const double thrust = hover + u[0];
    const double a = thrust / mass;

    fx.block<3, 3>(kPosition, kVelocity).setIdentity();

    // d(bz)/d(qw, qx, qy, qz)
    Eigen::Matrix<double, 3, 4> dbz;
    dbz << 2.0 * qy, 2.0 * qz, 2.0 * qw, 2.0 * qx,  //
        -2.0 * qx, -2.0 * qw, 2.0 * qz, 2.0 * qy,    //
        0.0, -4.0 * qx, -4.0 * qy, 0.0;
    fx.block<3, 4>(kVelocity, kQuaternion) = a * dbz;
    const Eigen::Vector3d bz(2.0 * (qx * qz + qw * qy), 2.0 * (qy * qz - qw * qx),
                             1.0 - 2.0 * (qx * qx + qy * qy));
    fu.block<3, 1>(kVelocity, 0) = bz / mass;

    // Quaternion kinematics 0.5 * q (x) (0, w).
    Eigen::Matrix4d dq_dq;
    dq_dq << 0.0, -w.x(), -w.y(), -w.z(),  //
        w.x(), 0.0, w.z(), -w.y(),          //
        w.y(), -w.z(), 0.0, w.x(),          //
        w.z(), w.y(), -w.x(), 0.0;
    fx.block<4, 4>(kQuaternion, kQuaternion) = 0.5 * dq_dq;
    Eigen::Matrix<double, 4, 3> dq_dw;
    dq_dw << -qx, -qy, -qz,  //
        qw, -qz, qy,          //
        qz, qw, -qx,          //
        -qy, qx, qw;
    fx.block<4, 3>(kQuaternion, kRate) = 0.5 * dq_dw;

    // Euler equations: wdot = J^-1 (tau - w x J w).
    const Eigen::Vector3d Jw = J.cwiseProduct(w);
    const Eigen::Matrix3d dgyro = -skew(w) * J.asDiagonal() + skew(Jw);
    const Eigen::Vector3d Jinv = J.cwiseInverse();
    fx.block<3, 3>(kRate, kRate) = Jinv.asDiagonal() * dgyro;
    fu.block<3, 3>(kRate, 1) = Jinv.asDiagonal();
  };
  return field;
}

DynamicsModel quadcopter_model(const QuadcopterParams& params, double dt,
                               const QuadcopterLimits& limits) {
  using namespace quad;
  VectorField field = quadcopter_vector_field(params);

  Vector state_bounds = Vector::Constant(kStates, std::numeric_limits<double>::infinity());
  state_bounds.segment<3>(kPosition).setConstant(limits.position);
  state_bounds.segment<3>(kVelocity).setConstant(limits.velocity);
  state_bounds.segment<3>(kQuaternion + 1).setConstant(limits.attitude);
  state_bounds.segment<3>(kRate).setConstant(limits.rate);
  Vector input_bounds(kInputs);
  input_bounds << limits.thrust, limits.torque.x(), limits.torque.y(), limits.torque.z();
  if (!(state_bounds.segment<3>(kPosition).minCoeff() > 0.0) || !(input_bounds.minCoeff() > 0.0)) {
    throw ConfigError("quadcopter limits must be positive");
  }

  ModelSets sets;
  sets.name = "quadcopter";
  sets.state_set = Polytope::symmetric_box(state_bounds);
  sets.input_set = Polytope::symmetric_box(input_bounds);
  sets.position_indices = {kPosition, kPosition + 1, kPosition + 2};

  Retraction renormalize;
  renormalize.apply = [](const Vector& x) {
    Vector out = x;
    Eigen::Vector4d q = x.segment<4>(kQuaternion);
    q[0] += 1.0;
    q.normalize();
    q[0] -= 1.0;
    out.segment<4>(kQuaternion) = q;
    return out;
  };
  renormalize.jacobian = [](const Vector& x) {
    Matrix G = Matrix::Identity(kStates, kStates);
    Eigen::Vector4d q = x.segment<4>(kQuaternion);
    q[0] += 1.0;
    const double nrm = q.norm();
    const Eigen::Vector4d qh = q / nrm;
    G.block<4, 4>(kQuaternion, kQuaternion) =
        (Eigen::Matrix4d::Identity() - qh * qh.transpose()) / nrm;
    return G;
  };
  return discretize_rk4(std::move(field), dt, std::move(sets), renormalize);
}

double DisturbanceSpec::scale_for(SystemId system) const {
  return system < per_system_scale.size() ? per_system_scale[system] : 1.0;
}

Vector sample_disturbance(const DisturbanceSpec& spec, int n, SystemId system, Rng& rng) {
  std::vector<int> active = spec.active_indices;
  if (active.empty()) {
    active.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = i;
  }
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector w = Vector::Zero(n);
  const double radius = spec.w_hat * spec.scale_for(system);
  const double per_axis = radius / std::sqrt(static_cast<double>(active.size()));
  for (int idx : active) {
    if (idx < 0 || idx >= n) throw ConfigError("disturbance index out of range");
    w[idx] = per_axis * unit(rng);
  }
  return w;
}

Vector sample_polytope(const Polytope& region, Rng& rng) {
  const auto bounds = region.axis_bounds();
  for (const auto& iv : bounds) {
    if (iv.lo > iv.hi) throw ConfigError("sampling region is empty");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector x(region.dim());
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (int i = 0; i < region.dim(); ++i) {
      const auto& iv = bounds[static_cast<std::size_t>(i)];
      x[i] = iv.bounded() ? iv.lo + (iv.hi - iv.lo) * unit(rng) : 0.0;
    }
    if (region.contains(x)) return x;
  }
  throw ConfigError("sampling region is empty (rejection sampling failed)");
}

double estimate_lipschitz(const DynamicsModel& model, const Polytope& region, int n_samples,
                          std::uint64_t seed, Execution exec) {
  if (n_samples < 2) throw ConfigError("estimate_lipschitz: need at least two samples");
  if (region.dim() != model.n()) throw ConfigError("estimate_lipschitz: region dimension mismatch");

  // Draw serially so the sample set does not depend on the thread count.
  Rng rng(seed);
  std::vector<StateVector> xs(static_cast<std::size_t>(n_samples));
  std::vector<InputVector> us(static_cast<std::size_t>(n_samples));
  for (int s = 0; s < n_samples; ++s) {
    xs[static_cast<std::size_t>(s)] = model.project(sample_polytope(region, rng));
    us[static_cast<std::size_t>(s)] = sample_polytope(model.input_set(), rng);
  }
  std::vector<double> norms(static_cast<std::size_t>(n_samples));
  for_each_index(exec, norms.size(), [&](std::size_t s) {
    const Linearization lin = model.linearize(xs[s], us[s]);
    Eigen::JacobiSVD<Matrix> svd(lin.A);
    norms[s] = svd.singularValues()[0];
  });
  return kLipschitzSafetyFactor * *std::max_element(norms.begin(), norms.end());
}

}  // namespace etmpc
