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

#include "etmpc/types.hpp"

namespace etmpc {

/// Stabilizing solution of  P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q  via the
/// structure-preserving doubling algorithm. Throws SynthesisError when the
/// iteration does not converge to a stabilizing solution.
Matrix discrete_algebraic_riccati(const Matrix& A, const Matrix& B, const Matrix& Q,
                                  const Matrix& R);

/// Gain of u = K x minimizing the infinite-horizon cost for the given P.
Matrix lqr_gain(const Matrix& A, const Matrix& B, const Matrix& R, const Matrix& P);

/// Solution of  A' P A - P + Q = 0  for Schur-stable A.
Matrix discrete_lyapunov(const Matrix& A, const Matrix& Q);

double spectral_radius(const Matrix& A);

/// Throws ConfigError unless M is symmetric with minimum eigenvalue > 1e-10.
void require_positive_definite(const Matrix& M, const char* name);

}  // namespace etmpc
