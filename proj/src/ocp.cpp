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

#include "etmpc/ocp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "etmpc/riccati.hpp"

namespace etmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using Triplets = std::vector<Eigen::Triplet<double, int>>;

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double bound_violation(const Vector& g, const Vector& lo, const Vector& hi) {
  double worst = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    worst = std::max({worst, lo[i] - g[i], g[i] - hi[i]});
  }
  return worst;
}

double bound_violation_l1(const Vector& g, const Vector& lo, const Vector& hi) {
  double sum = 0.0;
  for (int i = 0; i < g.size(); ++i) sum += std::max({0.0, lo[i] - g[i], g[i] - hi[i]});
  return sum;
}

void add_dense_block(Triplets& t, int row, int col, const Matrix& M, bool keep_zeros) {
  for (int j = 0; j < M.cols(); ++j) {
    for (int i = 0; i < M.rows(); ++i) {
      if (keep_zeros || M(i, j) != 0.0) t.emplace_back(row + i, col + j, M(i, j));
    }
  }
}

void check_dims(const Matrix& M, int rows, int cols, const char* name) {
  if (M.rows() != rows || M.cols() != cols) {
    throw ConfigError(std::string("OCP spec: ") + name + " has the wrong dimensions");
  }
}

}  // namespace

std::string to_string(OcpStatus s) {
  switch (s) {
    case OcpStatus::optimal: return "optimal";
    case OcpStatus::max_iter: return "max_iter";
    case OcpStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

void OcpSpec::validate(const DynamicsModel& model) const {
  if (N < 1) throw ConfigError("OCP spec: horizon must be at least 1");
  check_dims(Q, model.n(), model.n(), "Q");
  check_dims(R, model.m(), model.m(), "R");
  check_dims(P, model.n(), model.n(), "P");
  check_dims(K_f, model.m(), model.n(), "K_f");
  require_positive_definite(Q, "Q");
  require_positive_definite(R, "R");
  require_positive_definite(P, "P");
  if (schedule.N != N) throw ConfigError("OCP spec: tightening horizon differs from N");
  schedule.validate();
  if (!(alpha_f > 0.0)) throw ConfigError("OCP spec: terminal level must be positive");
}

// ---------------------------------------------------------------------------

OcpProblem::OcpProblem(const DynamicsModel& model, const OcpSpec& spec, StateVector x0)
    : model_(&model),
      spec_(&spec),
      x0_(std::move(x0)),
      n_(model.n()),
      m_(model.m()),
      N_(spec.N) {
  if (N_ < 1) throw ConfigError("OCP: horizon must be at least 1");
  if (x0_.size() != n_) throw ConfigError("OCP: initial state dimension mismatch");
  num_vars_ = N_ * (n_ + m_) + n_;

  const bool terminal = spec.terminal_constraint && std::isfinite(spec.alpha_f);
  for (int k = 1; k < N_; ++k) {
    add_polytope_rows(model.state_set(), state_offset(k), 1.0 - spec.schedule.epsilon_k(k));
  }
  if (!terminal) {
    add_polytope_rows(model.state_set(), state_offset(N_), 1.0 - spec.schedule.epsilon_k(N_));
  }
  for (int k = 0; k < N_; ++k) {
    add_polytope_rows(model.input_set(), input_offset(k), 1.0 - spec.schedule.epsilon_k(k));
  }
  std::vector<double> lo(lo_.data(), lo_.data() + lo_.size());
  std::vector<double> hi(hi_.data(), hi_.data() + hi_.size());
  if (terminal) {
    terminal_row_ = static_cast<int>(rows_.size());
    rows_.push_back(Row{state_offset(N_), {}});
    lo.push_back(-kInf);
    hi.push_back(spec.alpha_f);
    const Matrix Pinv = spec.P.inverse();
    terminal_box_ = (spec.alpha_f * Pinv.diagonal()).cwiseSqrt();
  } else {
    terminal_box_ = Vector::Constant(n_, kInf);
  }
  lo_ = Eigen::Map<Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  hi_ = Eigen::Map<Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));

  Triplets t;
  for (int k = 0; k < N_; ++k) {
    add_dense_block(t, state_offset(k), state_offset(k), 2.0 * spec.Q, false);
    add_dense_block(t, input_offset(k), input_offset(k), 2.0 * spec.R, false);
  }
  add_dense_block(t, state_offset(N_), state_offset(N_), 2.0 * spec.P, false);
  hessian_.resize(num_vars_, num_vars_);
  hessian_.setFromTriplets(t.begin(), t.end());
}

void OcpProblem::add_polytope_rows(const Polytope& set, int offset, double factor) {
  // Opposite facets pairs become one two-sided row.
  const int rows = set.rows();
  std::vector<bool> used(rows, false);
  std::vector<double> lo(lo_.data(), lo_.data() + lo_.size());
  std::vector<double> hi(hi_.data(), hi_.data() + hi_.size());
  for (int i = 0; i < rows; ++i) {
    if (used[i]) continue;
    used[i] = true;
    double lower = -kInf;
    const double scale = std::max(1.0, set.H.row(i).cwiseAbs().maxCoeff());
    for (int j = i + 1; j < rows; ++j) {
      if (!used[j] && (set.H.row(i) + set.H.row(j)).cwiseAbs().maxCoeff() <= 1e-14 * scale) {
        used[j] = true;
        lower = -set.rhs[j] * factor;
        break;
      }
    }
    Row row{offset, {}};
    for (int c = 0; c < set.H.cols(); ++c) {
      if (set.H(i, c) != 0.0) row.coeffs.emplace_back(c, set.H(i, c));
    }
    rows_.push_back(std::move(row));
    lo.push_back(lower);
    hi.push_back(set.rhs[i] * factor);
  }
  lo_ = Eigen::Map<Vector>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  hi_ = Eigen::Map<Vector>(hi.data(), static_cast<Eigen::Index>(hi.size()));
}

Vector OcpProblem::pack(const Trajectory& traj) const {
  if (traj.horizon() != N_ || static_cast<int>(traj.states.size()) != N_ + 1) {
    throw ConfigError("OCP: trajectory horizon mismatch");
  }
  Vector z(num_vars_);
  for (int k = 0; k < N_; ++k) {
    z.segment(state_offset(k), n_) = traj.states[k];
    z.segment(input_offset(k), m_) = traj.inputs[k];
  }
  z.segment(state_offset(N_), n_) = traj.states[N_];
  return z;
}

Trajectory OcpProblem::unpack(const Vector& z) const {
  Trajectory traj;
  traj.inputs.reserve(N_);
  traj.states.reserve(N_ + 1);
  for (int k = 0; k < N_; ++k) {
    traj.states.push_back(z.segment(state_offset(k), n_));
    traj.inputs.push_back(z.segment(input_offset(k), m_));
  }
  traj.states.push_back(z.segment(state_offset(N_), n_));
  return traj;
}

double OcpProblem::cost(const Vector& z) const {
  return 0.5 * z.dot(hessian_ * z);
}

Vector OcpProblem::cost_gradient(const Vector& z) const { return hessian_ * z; }

void OcpProblem::linearize_equality(const Vector& z, Vector& c, SparseMatrix& J) const {
  c.resize(num_equalities());
  Triplets t;
  t.reserve(static_cast<std::size_t>(n_ + N_ * (n_ * n_ + n_ * m_ + n_)));
  c.head(n_) = z.head(n_) - x0_;
  for (int i = 0; i < n_; ++i) t.emplace_back(i, i, 1.0);
  for (int k = 0; k < N_; ++k) {
    const int row = (k + 1) * n_;
    const Linearization lin =
        model_->linearize(z.segment(state_offset(k), n_), z.segment(input_offset(k), m_));
    c.segment(row, n_) = lin.next - z.segment(state_offset(k + 1), n_);
    add_dense_block(t, row, state_offset(k), lin.A, true);
    add_dense_block(t, row, input_offset(k), lin.B, true);
    for (int i = 0; i < n_; ++i) t.emplace_back(row + i, state_offset(k + 1) + i, -1.0);
  }
  J.resize(num_equalities(), num_vars_);
  J.setFromTriplets(t.begin(), t.end());
}

Vector OcpProblem::equality(const Vector& z) const {
  Vector c(num_equalities());
  c.head(n_) = z.head(n_) - x0_;
  for (int k = 0; k < N_; ++k) {
    c.segment((k + 1) * n_, n_) =
        model_->step(z.segment(state_offset(k), n_), z.segment(input_offset(k), m_)) -
        z.segment(state_offset(k + 1), n_);
  }
  return c;
}

SparseMatrix OcpProblem::equality_jacobian(const Vector& z) const {
  Vector c;
  SparseMatrix J;
  linearize_equality(z, c, J);
  return J;
}

Vector OcpProblem::inequality(const Vector& z) const {
  Vector g(num_inequalities());
  for (int r = 0; r < num_inequalities(); ++r) {
    const Row& row = rows_[r];
    if (r == terminal_row_) {
      const auto xN = z.segment(row.offset, n_);
      g[r] = xN.dot(spec_->P * xN);
      continue;
    }
    double v = 0.0;
    for (const auto& [idx, coeff] : row.coeffs) v += coeff * z[row.offset + idx];
    g[r] = v;
  }
  return g;
}

SparseMatrix OcpProblem::inequality_jacobian(const Vector& z) const {
  Triplets t;
  for (int r = 0; r < num_inequalities(); ++r) {
    const Row& row = rows_[r];
    if (r == terminal_row_) {
      const Vector grad = 2.0 * spec_->P * z.segment(row.offset, n_);
      for (int i = 0; i < n_; ++i) t.emplace_back(r, row.offset + i, grad[i]);
      continue;
    }
    for (const auto& [idx, coeff] : row.coeffs) t.emplace_back(r, row.offset + idx, coeff);
  }
  SparseMatrix J(num_inequalities(), num_vars_);
  J.setFromTriplets(t.begin(), t.end());
  return J;
}

double OcpProblem::equality_violation(const Vector& z) const { return inf_norm(equality(z)); }

double OcpProblem::inequality_violation(const Vector& z) const {
  return bound_violation(inequality(z), lo_, hi_);
}

// ---------------------------------------------------------------------------

double trajectory_cost(const OcpSpec& spec, const Trajectory& traj) {
  double v = 0.0;
  for (int k = 0; k < traj.horizon(); ++k) {
    v += traj.states[k].dot(spec.Q * traj.states[k]) + traj.inputs[k].dot(spec.R * traj.inputs[k]);
  }
  const auto& xN = traj.states.back();
  return v + xN.dot(spec.P * xN);
}

double value_function(const OcpSolution& solution, const OcpSpec& spec) {
  if (solution.status != OcpStatus::optimal) {
    throw ConfigError("value_function: solution is not optimal (" + to_string(solution.status) +
                      ")");
  }
  return trajectory_cost(spec, solution.trajectory);
}

Trajectory warm_start_from_buffer(const DynamicsModel& model, const PredictionBuffer& buffer,
                                  const Matrix& K_f, const StateVector& measured) {
  return shift_plan(model, buffer.plan, K_f, measured);
}

double tightened_violation(const DynamicsModel& model, const OcpSpec& spec,
                           const Trajectory& traj) {
  const int N = traj.horizon();
  double worst = 0.0;
  const bool terminal = spec.terminal_constraint && std::isfinite(spec.alpha_f);
  for (int k = 0; k < N; ++k) {
    const double keep = 1.0 - spec.schedule.epsilon_k(k);
    if (k > 0) worst = std::max(worst, model.state_set().scaled(keep).violation(traj.states[k]));
    worst = std::max(worst, model.input_set().scaled(keep).violation(traj.inputs[k]));
  }
  const auto& xN = traj.states[N];
  if (terminal) {
    worst = std::max(worst, xN.dot(spec.P * xN) - spec.alpha_f);
  } else {
    const double keep = 1.0 - spec.schedule.epsilon_k(N);
    worst = std::max(worst, model.state_set().scaled(keep).violation(xN));
  }
  return worst;
}

// ---------------------------------------------------------------------------

OcpSolution solve_ocp(const DynamicsModel& model, const OcpSpec& spec, const StateVector& x0,
                      const Trajectory* warm_start, const SolverConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  if (!x0.allFinite()) throw ConfigError("solve_ocp: initial state is not finite");

  OcpSolution sol;
  const int n = model.n();
  const int N = spec.N;

  if (model.state_set().violation(x0) > config.constraint_tol) {
    sol.status = OcpStatus::infeasible;
    sol.diagnostics = "initial state outside the state constraint set";
    sol.trajectory = zero_plan(model, x0, N);
    sol.cost = trajectory_cost(spec, sol.trajectory);
    sol.wall_time = elapsed();
    return sol;
  }

  const OcpProblem prob(model, spec, x0);
  Trajectory init;
  const bool warm = warm_start != nullptr && warm_start->horizon() == N &&
                    static_cast<int>(warm_start->states.size()) == N + 1;
  if (warm) {
    init = *warm_start;
    init.states[0] = x0;
  } else {
    init = zero_plan(model, x0, N);
  }
  Vector z = prob.pack(init);

  const int nz = prob.num_variables();
  const int neq = prob.num_equalities();
  const int nin = prob.num_inequalities();
  const int nbox = prob.has_terminal_row() ? n : 0;
  const int nrows = neq + nin + nbox;
  const int xN_off = prob.state_offset(N);
  const Vector& lo = prob.inequality_lower();
  const Vector& hi = prob.inequality_upper();
  const Vector& box = prob.terminal_box();

  QpSettings qp_settings = config.qp;
  qp_settings.max_iter = config.qp_max_iters;
  // One solver per thread keeps the symbolic factorizations between solves;
  // setup() resets every other piece of state, so results do not depend on
  // what the thread solved before.
  thread_local AdmmQpSolver qp;
  qp.settings() = qp_settings;

  Vector lambda = Vector::Zero(nrows);
  bool have_multipliers = false;
  double merit_weight = 1.0;
  bool converged = false;
  bool qp_infeasible = false;
  Vector c, g, grad;
  SparseMatrix Je;

  for (int it = 0; it < config.max_sqp_iters; ++it) {
    prob.linearize_equality(z, c, Je);
    g = prob.inequality(z);
    const SparseMatrix Jg = prob.inequality_jacobian(z);
    grad = prob.cost_gradient(z);
    const double viol = std::max(inf_norm(c), bound_violation(g, lo, hi));

    // Assemble the QP in the step d.
    Triplets t;
    t.reserve(static_cast<std::size_t>(Je.nonZeros() + Jg.nonZeros() + nbox));
    for (int j = 0; j < Je.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator e(Je, j); e; ++e) t.emplace_back(e.row(), j, e.value());
    }
    for (int j = 0; j < Jg.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator e(Jg, j); e; ++e) {
        t.emplace_back(neq + e.row(), j, e.value());
      }
    }
    for (int i = 0; i < nbox; ++i) t.emplace_back(neq + nin + i, xN_off + i, 1.0);
    SparseMatrix A(nrows, nz);
    A.setFromTriplets(t.begin(), t.end());

    if (have_multipliers) {
      sol.kkt_residual = inf_norm(grad + A.transpose() * lambda);
      if (sol.kkt_residual <= config.kkt_tol && viol <= config.constraint_tol) {
        converged = true;
        break;
      }
    }

    QpProblem sub;
    sub.P = prob.cost_hessian();
    if (prob.has_terminal_row()) {
      // Curvature of the quadratic terminal row in the Lagrangian.
      const double mu = std::max(0.0, lambda[neq + nin - 1]);
      if (mu > 0.0) {
        Triplets h;
        add_dense_block(h, xN_off, xN_off, 2.0 * mu * spec.P, false);
        SparseMatrix extra(nz, nz);
        extra.setFromTriplets(h.begin(), h.end());
        sub.P += extra;
      }
    }
    sub.q = grad;
    sub.A = std::move(A);
    sub.l.resize(nrows);
    sub.u.resize(nrows);
    sub.l.head(neq) = -c;
    sub.u.head(neq) = -c;
    sub.l.segment(neq, nin) = lo - g;
    sub.u.segment(neq, nin) = hi - g;
    for (int i = 0; i < nbox; ++i) {
      sub.l[neq + nin + i] = -box[i] - z[xN_off + i];
      sub.u[neq + nin + i] = box[i] - z[xN_off + i];
    }
    for (int i = 0; i < nrows; ++i) {
      if (!std::isfinite(sub.l[i])) sub.l[i] = -kQpInfinity;
      if (!std::isfinite(sub.u[i])) sub.u[i] = kQpInfinity;
    }
    qp.setup(sub, it > 0);
    qp.warm_start(Vector::Zero(nz), lambda);
    const QpResult res = qp.solve();
    sol.qp_iterations += res.iterations;
    sol.iterations = it + 1;
    if (res.status == QpStatus::primal_infeasible) {
      if (warm && it == 0) {
        // A stale plan can linearize into an empty QP; start over from rest.
        OcpSolution cold = solve_ocp(model, spec, x0, nullptr, config);
        cold.qp_iterations += sol.qp_iterations;
        cold.iterations += 1;
        cold.wall_time = elapsed();
        return cold;
      }
      qp_infeasible = true;
      sol.diagnostics = "QP subproblem primal infeasible at SQP iteration " + std::to_string(it);
      break;
    }
    if (res.status == QpStatus::numerical_error) {
      sol.diagnostics = "QP subproblem numerical failure at SQP iteration " + std::to_string(it);
      break;
    }
    const Vector& d = res.x;

    // l1 merit backtracking.
    merit_weight = std::max(merit_weight, 1.1 * inf_norm(res.y));
    auto infeasibility = [&](const Vector& zz, const Vector* cc, const Vector* gg) {
      const Vector ce = cc ? *cc : prob.equality(zz);
      const Vector gi = gg ? *gg : prob.inequality(zz);
      return ce.lpNorm<1>() + bound_violation_l1(gi, lo, hi);
    };
    const double phi0 = prob.cost(z) + merit_weight * infeasibility(z, &c, &g);
    const double slope = grad.dot(d) - merit_weight * infeasibility(z, &c, &g);
    double step = 1.0;
    Vector z_trial = z + d;
    while (true) {
      bool ok = false;
      try {
        const double phi = prob.cost(z_trial) + merit_weight * infeasibility(z_trial, nullptr, nullptr);
        ok = phi <= phi0 + 1e-4 * step * std::min(slope, 0.0) + 1e-12 * std::abs(phi0);
      } catch (const EvaluationError&) {
        ok = false;
      }
      if (ok || step * config.ls_contraction < config.ls_min_step) break;
      step *= config.ls_contraction;
      z_trial = z + step * d;
    }
    z = z_trial;
    lambda = (1.0 - step) * lambda + step * res.y;
    have_multipliers = true;
    if (step * inf_norm(d) <= 1e-12 * (1.0 + inf_norm(z)) && step == 1.0) {
      // Null step: the QP multipliers certify the current point.
      prob.linearize_equality(z, c, Je);
      const double v2 = std::max(inf_norm(c), prob.inequality_violation(z));
      if (v2 <= config.constraint_tol) {
        sol.kkt_residual = 0.0;
        converged = true;
        break;
      }
    }
  }

  const Trajectory iterate = prob.unpack(z);
  sol.dynamics_violation = prob.equality_violation(z);
  // Forward rollout so the returned plan satisfies the dynamics exactly.
  try {
    sol.trajectory = rollout(model, x0, iterate.inputs);
  } catch (const EvaluationError&) {
    sol.trajectory = iterate;
    sol.status = OcpStatus::infeasible;
    sol.diagnostics = "rollout of the optimized inputs left the model domain";
    sol.cost = kInf;
    sol.wall_time = elapsed();
    return sol;
  }
  sol.constraint_violation = tightened_violation(model, spec, sol.trajectory);
  sol.cost = trajectory_cost(spec, sol.trajectory);

  if (qp_infeasible) {
    sol.status = OcpStatus::infeasible;
  } else if (converged && sol.constraint_violation <= config.constraint_tol &&
             sol.dynamics_violation <= config.dynamics_tol) {
    sol.status = OcpStatus::optimal;
  } else if (sol.constraint_violation <= config.constraint_tol) {
    sol.status = OcpStatus::max_iter;
    if (sol.diagnostics.empty()) sol.diagnostics = "SQP iteration limit reached";
  } else {
    sol.status = OcpStatus::infeasible;
    if (sol.diagnostics.empty()) sol.diagnostics = "constraint violation stalled above tolerance";
  }
  sol.wall_time = elapsed();
  return sol;
}

}  // namespace etmpc
