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

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace etmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// State of one system, in the model's deviation coordinates.
using StateVector = Eigen::VectorXd;
/// Input of one system, as a deviation from the equilibrium input.
using InputVector = Eigen::VectorXd;

using SystemId = std::size_t;

/// Raised for malformed arguments: dimension mismatches, out-of-range
/// parameters, inconsistent configurations.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a model evaluation produces non-finite values.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, StateVector state)
      : std::runtime_error(what), state_(std::move(state)) {}
  const StateVector& state() const noexcept { return state_; }

 private:
  StateVector state_;
};

/// Raised when a numerical construction has no solution (unstabilizable
/// linearization, collapsed terminal level, non-contracting feedback).
class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Polytope {x : H x <= rhs}. Models store the normalized form rhs = 1.
struct Polytope {
  Matrix H;
  Vector rhs;

  static Polytope normalized(Matrix H);
  /// Symmetric box |x_i| <= bound_i. Non-finite or non-positive bounds leave
  /// the coordinate unconstrained.
  static Polytope symmetric_box(const Vector& bounds);

  int dim() const noexcept { return static_cast<int>(H.cols()); }
  int rows() const noexcept { return static_cast<int>(H.rows()); }

  /// Same normals, right-hand side multiplied by `factor`.
  Polytope scaled(double factor) const;

  /// max_i (H x - rhs)_i, clipped below at zero.
  double violation(const Vector& x) const;
  bool contains(const Vector& x, double tol = 0.0) const { return violation(x) <= tol; }

  /// Matrix infinity norm of H (largest absolute row sum).
  double inf_norm() const;

  struct Interval {
    double lo;
    double hi;
    bool bounded() const noexcept;
  };
  /// Per-coordinate intervals implied by the axis-aligned rows; coordinates
  /// touched by no such row get (-inf, inf).
  std::vector<Interval> axis_bounds() const;

  /// Distance from the origin to the farthest facet hyperplane.
  double max_facet_distance() const;
};

}  // namespace etmpc
