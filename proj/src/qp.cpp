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

#include "etmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace etmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinScaling = 1e-4;
constexpr double kMaxScaling = 1e4;
constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;
constexpr double kEqualityRhoFactor = 1e3;
constexpr double kPolishDelta = 1e-7;

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double limit_scaling(double v) {
  if (v < kMinScaling) return 1.0;
  return std::min(v, kMaxScaling);
}

Vector col_inf_norms(const SparseMatrix& M) {
  Vector out = Vector::Zero(M.cols());
  for (int j = 0; j < M.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      out[j] = std::max(out[j], std::abs(it.value()));
    }
  }
  return out;
}

Vector row_inf_norms(const SparseMatrix& M) {
  Vector out = Vector::Zero(M.rows());
  for (int j = 0; j < M.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(M, j); it; ++it) {
      out[it.row()] = std::max(out[it.row()], std::abs(it.value()));
    }
  }
  return out;
}

Vector clamp(const Vector& v, const Vector& lo, const Vector& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

Vector to_extended(const Vector& b) {
  Vector out = b;
  for (int i = 0; i < out.size(); ++i) {
    if (out[i] >= kQpInfinity) out[i] = kInf;
    if (out[i] <= -kQpInfinity) out[i] = -kInf;
  }
  return out;
}

// Row state used for polishing.
enum Active : std::int8_t { inactive = 0, lower = -1, upper = 1, equality = 2 };

bool same_pattern(const SparseMatrix& a, const std::vector<int>& outer,
                  const std::vector<int>& inner) {
  if (static_cast<std::size_t>(a.outerSize() + 1) != outer.size()) return false;
  if (static_cast<std::size_t>(a.nonZeros()) != inner.size()) return false;
  return std::equal(outer.begin(), outer.end(), a.outerIndexPtr()) &&
         std::equal(inner.begin(), inner.end(), a.innerIndexPtr());
}

}  // namespace

void AdmmQpSolver::setup(const QpProblem& problem, bool keep_rho) {
  n_ = static_cast<int>(problem.P.rows());
  m_ = static_cast<int>(problem.A.rows());
  if (problem.P.cols() != n_ || problem.q.size() != n_ || problem.A.cols() != n_ ||
      problem.l.size() != m_ || problem.u.size() != m_) {
    throw ConfigError("QP setup: dimension mismatch");
  }
  for (int i = 0; i < m_; ++i) {
    if (!(problem.l[i] <= problem.u[i])) throw ConfigError("QP setup: l > u");
  }
  scale_problem(problem);
  if (!keep_rho) rho_ = std::clamp(settings_.rho, kRhoMin, kRhoMax);
  update_rho_vector();
  assemble_kkt();
  factorize();
  x_ = Vector::Zero(n_);
  z_ = Vector::Zero(m_);
  y_ = Vector::Zero(m_);
}

void AdmmQpSolver::scale_problem(const QpProblem& problem) {
  Ps_ = problem.P;
  As_ = problem.A;
  qs_ = problem.q;
  D_ = Vector::Ones(n_);
  E_ = Vector::Ones(m_);
  cost_scale_ = 1.0;
  for (int iter = 0; iter < settings_.scaling_iters; ++iter) {
    const Vector colP = col_inf_norms(Ps_);
    const Vector colA = col_inf_norms(As_);
    const Vector rowA = row_inf_norms(As_);
    Vector dD(n_), dE(m_);
    for (int j = 0; j < n_; ++j) dD[j] = 1.0 / std::sqrt(limit_scaling(std::max(colP[j], colA[j])));
    for (int i = 0; i < m_; ++i) dE[i] = 1.0 / std::sqrt(limit_scaling(rowA[i]));
    Ps_ = dD.asDiagonal() * Ps_ * dD.asDiagonal();
    As_ = dE.asDiagonal() * As_ * dD.asDiagonal();
    qs_ = dD.cwiseProduct(qs_);
    D_ = D_.cwiseProduct(dD);
    E_ = E_.cwiseProduct(dE);

    const Vector colP2 = col_inf_norms(Ps_);
    const double mean_col = n_ > 0 ? colP2.mean() : 0.0;
    const double gamma = 1.0 / limit_scaling(std::max(mean_col, inf_norm(qs_)));
    Ps_ *= gamma;
    qs_ *= gamma;
    cost_scale_ *= gamma;
  }
  Dinv_ = D_.cwiseInverse();
  Einv_ = E_.cwiseInverse();
  AsT_ = As_.transpose();
  ls_ = to_extended(problem.l);
  us_ = to_extended(problem.u);
  for (int i = 0; i < m_; ++i) {
    if (std::isfinite(ls_[i])) ls_[i] *= E_[i];
    if (std::isfinite(us_[i])) us_[i] *= E_[i];
  }
}

bool AdmmQpSolver::is_equality(int i) const {
  return std::isfinite(ls_[i]) && us_[i] - ls_[i] <= 1e-9 * std::max(1.0, std::abs(us_[i]));
}

void AdmmQpSolver::update_rho_vector() {
  rho_vec_.resize(m_);
  for (int i = 0; i < m_; ++i) {
    if (!std::isfinite(ls_[i]) && !std::isfinite(us_[i])) {
      rho_vec_[i] = kRhoMin;
    } else if (is_equality(i)) {
      rho_vec_[i] = std::min(kEqualityRhoFactor * rho_, kRhoMax);
    } else {
      rho_vec_[i] = rho_;
    }
  }
  rho_inv_ = rho_vec_.cwiseInverse();
}

void AdmmQpSolver::assemble_kkt() {
  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(static_cast<std::size_t>(Ps_.nonZeros() + As_.nonZeros() + n_ + m_));
  for (int j = 0; j < n_; ++j) {
    for (SparseMatrix::InnerIterator it(Ps_, j); it; ++it) {
      if (it.row() >= j) triplets.emplace_back(it.row(), j, it.value());
    }
    triplets.emplace_back(j, j, settings_.sigma);
  }
  for (int j = 0; j < n_; ++j) {
    for (SparseMatrix::InnerIterator it(As_, j); it; ++it) {
      triplets.emplace_back(n_ + it.row(), j, it.value());
    }
  }
  for (int i = 0; i < m_; ++i) triplets.emplace_back(n_ + i, n_ + i, -rho_inv_[i]);
  kkt_.resize(n_ + m_, n_ + m_);
  kkt_.setFromTriplets(triplets.begin(), triplets.end());
  kkt_.makeCompressed();
  // Columns n..n+m of the lower triangle hold only their diagonal; in the
  // first n columns the diagonal comes first as well (lower storage, sorted).
  rho_diag_index_.resize(m_);
  for (int i = 0; i < m_; ++i) rho_diag_index_[i] = kkt_.outerIndexPtr()[n_ + i];
  p_diag_index_.resize(n_);
  for (int j = 0; j < n_; ++j) p_diag_index_[j] = kkt_.outerIndexPtr()[j];
}

void AdmmQpSolver::factorize() {
  if (!pattern_analyzed_ || !same_pattern(kkt_, pattern_outer_, pattern_inner_)) {
    ldlt_.analyzePattern(kkt_);
    polish_analyzed_ = false;
    pattern_outer_.assign(kkt_.outerIndexPtr(), kkt_.outerIndexPtr() + kkt_.outerSize() + 1);
    pattern_inner_.assign(kkt_.innerIndexPtr(), kkt_.innerIndexPtr() + kkt_.nonZeros());
    pattern_analyzed_ = true;
  }
  ldlt_.factorize(kkt_);
  if (ldlt_.info() != Eigen::Success) {
    throw EvaluationError("QP: KKT factorization failed", Vector());
  }
}

void AdmmQpSolver::warm_start(const Vector& x, const Vector& y) {
  if (x.size() != n_ || y.size() != m_) {
    throw ConfigError("QP warm start: dimension mismatch");
  }
  x_ = Dinv_.cwiseProduct(x);
  y_ = cost_scale_ * Einv_.cwiseProduct(y);
  z_ = As_ * x_;
}

double AdmmQpSolver::primal_residual(const Vector& x, const Vector& z) const {
  return inf_norm(Einv_.cwiseProduct(As_ * x - z));
}

double AdmmQpSolver::dual_residual(const Vector& x, const Vector& y) const {
  return inf_norm(Dinv_.cwiseProduct(Ps_ * x + qs_ + AsT_ * y)) / cost_scale_;
}

double AdmmQpSolver::primal_tolerance(const Vector& x, const Vector& z) const {
  const double scale =
      std::max(inf_norm(Einv_.cwiseProduct(As_ * x)), inf_norm(Einv_.cwiseProduct(z)));
  return settings_.eps_abs + settings_.eps_rel * scale;
}

double AdmmQpSolver::dual_tolerance(const Vector& x, const Vector& y) const {
  const double scale = std::max({inf_norm(Dinv_.cwiseProduct(Ps_ * x)),
                                 inf_norm(Dinv_.cwiseProduct(AsT_ * y)),
                                 inf_norm(Dinv_.cwiseProduct(qs_))}) /
                       cost_scale_;
  return settings_.eps_abs + settings_.eps_rel * scale;
}

bool AdmmQpSolver::primal_infeasible(const Vector& delta_y) const {
  // Certificate in unscaled terms: A'dy ~ 0 and u'dy+ + l'dy- < 0.
  Vector dy = delta_y;
  for (int i = 0; i < m_; ++i) {
    if (!std::isfinite(us_[i])) dy[i] = std::min(dy[i], 0.0);
    if (!std::isfinite(ls_[i])) dy[i] = std::max(dy[i], 0.0);
  }
  const double norm_dy = inf_norm(E_.cwiseProduct(dy));
  if (norm_dy < 1e-30) return false;
  const double tol = settings_.eps_prim_inf * norm_dy;
  if (inf_norm(Dinv_.cwiseProduct(AsT_ * dy)) > tol) return false;
  double support = 0.0;
  for (int i = 0; i < m_; ++i) {
    if (dy[i] > 0.0) support += us_[i] * dy[i];
    if (dy[i] < 0.0) support += ls_[i] * dy[i];
  }
  return support < -tol;
}

void AdmmQpSolver::fill_result(QpResult& result) const {
  result.x = D_.cwiseProduct(x_);
  result.y = E_.cwiseProduct(y_) / cost_scale_;
}

bool AdmmQpSolver::polish(QpResult& result) {
  // Active rows get a tiny regularization, inactive rows a huge one so their
  // multipliers vanish; refinement then targets the exact reduced system.
  constexpr double kInactive = 1e10;
  std::vector<std::int8_t> kind(m_, inactive);
  int na = 0;
  for (int i = 0; i < m_; ++i) {
    if (is_equality(i)) {
      kind[i] = equality;
    } else if (std::isfinite(ls_[i]) && z_[i] - ls_[i] < -y_[i]) {
      kind[i] = lower;
    } else if (std::isfinite(us_[i]) && us_[i] - z_[i] < y_[i]) {
      kind[i] = upper;
    }
    if (kind[i] != inactive) ++na;
  }
  if (na > n_) return false;

  polish_kkt_ = kkt_;
  double* values = polish_kkt_.valuePtr();
  for (int j = 0; j < n_; ++j) values[p_diag_index_[j]] += kPolishDelta - settings_.sigma;
  for (int i = 0; i < m_; ++i) {
    values[rho_diag_index_[i]] = kind[i] == inactive ? -kInactive : -kPolishDelta;
  }
  if (!polish_analyzed_) {
    polish_ldlt_.analyzePattern(polish_kkt_);
    polish_analyzed_ = true;
  }
  polish_ldlt_.factorize(polish_kkt_);
  if (polish_ldlt_.info() != Eigen::Success) return false;

  Vector b = Vector::Zero(m_);
  for (int i = 0; i < m_; ++i) {
    if (kind[i] == upper) b[i] = us_[i];
    if (kind[i] == lower || kind[i] == equality) b[i] = ls_[i];
  }
  Vector rhs(n_ + m_);
  rhs.head(n_) = -qs_;
  rhs.tail(m_) = b;
  Vector sol = polish_ldlt_.solve(rhs);
  auto exact_residual = [&](const Vector& s) {
    Vector y_act = s.tail(m_);
    for (int i = 0; i < m_; ++i) {
      if (kind[i] == inactive) y_act[i] = 0.0;
    }
    const Vector x = s.head(n_);
    Vector r(n_ + m_);
    r.head(n_) = -qs_ - Ps_ * x - AsT_ * y_act;
    const Vector Ax = As_ * x;
    for (int i = 0; i < m_; ++i) {
      r[n_ + i] = kind[i] == inactive ? kInactive * s[n_ + i] : b[i] - Ax[i];
    }
    return r;
  };
  for (int it = 0; it < settings_.polish_refine_iters; ++it) {
    sol += polish_ldlt_.solve(exact_residual(sol));
  }
  if (!sol.allFinite()) return false;

  const Vector x = sol.head(n_);
  Vector y = sol.tail(m_);
  for (int i = 0; i < m_; ++i) {
    if (kind[i] == inactive) y[i] = 0.0;
  }
  const Vector z = clamp(As_ * x, ls_, us_);

  const double y_norm = std::max(1.0, inf_norm(y));
  for (int i = 0; i < m_; ++i) {
    if (kind[i] == lower && y[i] > 1e-9 * y_norm) return false;
    if (kind[i] == upper && y[i] < -1e-9 * y_norm) return false;
  }
  const double prim = primal_residual(x, z);
  const double dual = dual_residual(x, y);
  if (prim > primal_tolerance(x, z) || dual > dual_tolerance(x, y)) return false;

  x_ = x;
  z_ = z;
  y_ = y;
  fill_result(result);
  result.primal_residual = prim;
  result.dual_residual = dual;
  result.polished = true;
  result.status = QpStatus::solved;
  return true;
}

QpResult AdmmQpSolver::solve() {
  QpResult result;
  if (n_ == 0) {
    result.x = Vector::Zero(0);
    result.y = Vector::Zero(m_);
    result.status = QpStatus::solved;
    return result;
  }
  std::vector<std::int8_t> last_guess, failed_guess;
  Vector rhs(n_ + m_);
  Vector x_prev(n_), z_prev(m_), y_prev(m_);
  double prim = kInf, dual = kInf;
  int iter = 0;
  for (iter = 1; iter <= settings_.max_iter; ++iter) {
    x_prev = x_;
    z_prev = z_;
    y_prev = y_;
    rhs.head(n_) = settings_.sigma * x_prev - qs_;
    rhs.tail(m_) = z_prev - rho_inv_.cwiseProduct(y_prev);
    const Vector sol = ldlt_.solve(rhs);
    const Vector z_tilde = z_prev + rho_inv_.cwiseProduct(sol.tail(m_) - y_prev);
    x_ = settings_.alpha * sol.head(n_) + (1.0 - settings_.alpha) * x_prev;
    const Vector z_relaxed = settings_.alpha * z_tilde + (1.0 - settings_.alpha) * z_prev;
    z_ = clamp(z_relaxed + rho_inv_.cwiseProduct(y_prev), ls_, us_);
    y_ = y_prev + rho_vec_.cwiseProduct(z_relaxed - z_);

    if (!x_.allFinite() || !y_.allFinite()) {
      result.status = QpStatus::numerical_error;
      break;
    }

    const bool check = (iter % settings_.check_interval == 0) || iter == settings_.max_iter;
    const bool adapt = settings_.adaptive_rho && iter % settings_.adaptive_rho_interval == 0;
    if (!check && !adapt) continue;

    prim = primal_residual(x_, z_);
    dual = dual_residual(x_, y_);
    if (prim <= primal_tolerance(x_, z_) && dual <= dual_tolerance(x_, y_)) {
      result.status = QpStatus::solved;
      break;
    }
    if (primal_infeasible(y_ - y_prev)) {
      result.status = QpStatus::primal_infeasible;
      result.iterations = iter;
      fill_result(result);
      result.primal_residual = prim;
      result.dual_residual = dual;
      return result;
    }
    if (settings_.polish) {
      // Early polish once the active-set guess stops moving.
      std::vector<std::int8_t> guess(m_);
      for (int i = 0; i < m_; ++i) {
        guess[i] = (z_[i] - ls_[i] < -y_[i]) ? lower
                   : (us_[i] - z_[i] < y_[i]) ? upper
                                              : inactive;
      }
      if (guess == last_guess && guess != failed_guess) {
        if (polish(result)) {
          result.iterations = iter;
          return result;
        }
        failed_guess = guess;
      }
      last_guess = std::move(guess);
    }
    if (adapt) {
      const double prim_s = inf_norm(As_ * x_ - z_) /
                            std::max(1e-30, std::max(inf_norm(As_ * x_), inf_norm(z_)));
      const double dual_s = inf_norm(Ps_ * x_ + qs_ + AsT_ * y_) /
                            std::max(1e-30, std::max({inf_norm(Ps_ * x_), inf_norm(AsT_ * y_),
                                                      inf_norm(qs_)}));
      if (prim_s > 0.0 && dual_s > 0.0) {
        const double rho_new =
            std::clamp(rho_ * std::sqrt(prim_s / dual_s), kRhoMin, kRhoMax);
        if (rho_new > 5.0 * rho_ || rho_new < 0.2 * rho_) {
          rho_ = rho_new;
          update_rho_vector();
          for (int i = 0; i < m_; ++i) kkt_.valuePtr()[rho_diag_index_[i]] = -rho_inv_[i];
          factorize();
        }
      }
    }
  }
  result.iterations = std::min(iter, settings_.max_iter);
  if (result.status != QpStatus::numerical_error && settings_.polish && polish(result)) {
    return result;
  }
  fill_result(result);
  result.primal_residual = prim;
  result.dual_residual = dual;
  return result;
}

}  // namespace etmpc
