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

#include "etmpc/types.hpp"

#include <cmath>
#include <limits>

namespace etmpc {

Polytope Polytope::normalized(Matrix H) {
  Polytope p;
  p.rhs = Vector::Ones(H.rows());
  p.H = std::move(H);
  return p;
}

Polytope Polytope::symmetric_box(const Vector& bounds) {
  std::vector<int> active;
  for (int i = 0; i < bounds.size(); ++i) {
    if (std::isfinite(bounds[i]) && bounds[i] > 0.0) active.push_back(i);
  }
  Matrix H = Matrix::Zero(2 * static_cast<int>(active.size()), bounds.size());
  for (std::size_t r = 0; r < active.size(); ++r) {
    const int i = active[r];
    H(2 * r, i) = 1.0 / bounds[i];
    H(2 * r + 1, i) = -1.0 / bounds[i];
  }
  return normalized(std::move(H));
}

Polytope Polytope::scaled(double factor) const {
  Polytope p = *this;
  p.rhs *= factor;
  return p;
}

double Polytope::violation(const Vector& x) const {
  if (H.rows() == 0) return 0.0;
  return std::max(0.0, (H * x - rhs).maxCoeff());
}

double Polytope::inf_norm() const {
  if (H.rows() == 0) return 0.0;
  return H.cwiseAbs().rowwise().sum().maxCoeff();
}

bool Polytope::Interval::bounded() const noexcept {
  return std::isfinite(lo) && std::isfinite(hi);
}

std::vector<Polytope::Interval> Polytope::axis_bounds() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<Interval> out(static_cast<std::size_t>(H.cols()), Interval{-inf, inf});
  for (int r = 0; r < H.rows(); ++r) {
    int col = -1;
    int nonzeros = 0;
    for (int c = 0; c < H.cols(); ++c) {
      if (H(r, c) != 0.0) {
        col = c;
        ++nonzeros;
      }
    }
    if (nonzeros != 1) continue;
    const double bound = rhs[r] / H(r, col);
    auto& iv = out[static_cast<std::size_t>(col)];
    if (H(r, col) > 0.0) {
      iv.hi = std::min(iv.hi, bound);
    } else {
      iv.lo = std::max(iv.lo, bound);
    }
  }
  return out;
}

double Polytope::max_facet_distance() const {
  double best = 0.0;
  for (int r = 0; r < H.rows(); ++r) {
    const double nrm = H.row(r).norm();
    if (nrm > 0.0) best = std::max(best, std::abs(rhs[r]) / nrm);
  }
  return best;
}

}  // namespace etmpc
