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

#include "etmpc/riccati.hpp"

#include <Eigen/Eigenvalues>
#include <string>

namespace etmpc {

void require_positive_definite(const Matrix& M, const char* name) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw ConfigError(std::string(name) + " must be a non-empty square matrix");
  }
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, M.cwiseAbs().maxCoeff())) {
    throw ConfigError(std::string(name) + " must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
  if (!(eig.eigenvalues().minCoeff() > 1e-10)) {
    throw ConfigError(std::string(name) + " must be positive definite");
  }
}

Matrix discrete_algebraic_riccati(const Matrix& A, const Matrix& B, const Matrix& Q,
                                  const Matrix& R) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols()) {
    throw ConfigError("discrete_algebraic_riccati: dimension mismatch");
  }
  Eigen::LLT<Matrix> R_llt(R);
  if (R_llt.info() != Eigen::Success) throw ConfigError("discrete_algebraic_riccati: R not PD");

  // Doubling iteration: A_{k+1} = A_k (I + G_k H_k)^-1 A_k,
  // G_{k+1} = G_k + A_k G_k (I + H_k G_k)^-1 A_k',
  // H_{k+1} = H_k + A_k' (I + H_k G_k)^-1 H_k A_k, converging H_k -> P.
  Matrix A_k = A;
  Matrix G_k = B * R_llt.solve(B.transpose());
  Matrix H_k = Q;
  const Matrix I = Matrix::Identity(n, n);
  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    const Matrix W = I + G_k * H_k;
    const auto W_lu = W.partialPivLu();
    const Matrix V1 = W_lu.solve(A_k);
    const Matrix V2 = W_lu.solve(G_k.transpose()).transpose();
    Matrix H_next = H_k + V1.transpose() * H_k * A_k;
    G_k += A_k * V2 * A_k.transpose();
    A_k = A_k * V1;
    if (!H_next.allFinite() || !G_k.allFinite()) break;
    const double change = (H_next - H_k).norm();
    H_k = 0.5 * (H_next + H_next.transpose());
    if (change <= 1e-11 * H_k.norm()) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw SynthesisError("Riccati iteration did not converge (linearization not stabilizable)");
  }
  const Matrix K = lqr_gain(A, B, R, H_k);
  if (!(spectral_radius(A + B * K) < 1.0)) {
    throw SynthesisError("Riccati solution is not stabilizing");
  }
  return H_k;
}

Matrix lqr_gain(const Matrix& A, const Matrix& B, const Matrix& R, const Matrix& P) {
  const Matrix S = R + B.transpose() * P * B;
  return -S.ldlt().solve(B.transpose() * P * A);
}

Matrix discrete_lyapunov(const Matrix& A, const Matrix& Q) {
  const int n = static_cast<int>(A.rows());
  if (!(spectral_radius(A) < 1.0)) {
    throw SynthesisError("discrete_lyapunov: matrix is not Schur stable");
  }
  // vec(A' P A) = (A' kron A') vec(P)
  const Matrix At = A.transpose();
  Matrix M = Matrix::Identity(n * n, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      M.block(i * n, j * n, n, n) -= At(i, j) * At;
    }
  }
  Eigen::Map<const Vector> q(Q.data(), n * n);
  const Vector p = M.partialPivLu().solve(q);
  Matrix P = Eigen::Map<const Matrix>(p.data(), n, n);
  return 0.5 * (P + P.transpose());
}

double spectral_radius(const Matrix& A) {
  Eigen::EigenSolver<Matrix> eig(A, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace etmpc
