#pragma once

#include <map>
#include <string>
#include <vector>

#include "qbmor/tensor.hpp"
#include "qbmor/types.hpp"

namespace qbmor {

// Quadratic-bilinear descriptor system
//   E x' = A x + sum_k N_k x u_k + H (x (x) x) + B u,   y = C x,   x(0) = 0.
// Treated as immutable once built; every operation takes it by const ref.
struct QBSystem {
  SparseMatrix E;
  SparseMatrix A;
  std::vector<SparseMatrix> N;  // one per input
  SparseTensor3 H;
  SparseMatrix B;  // n x m_in
  SparseMatrix C;  // p_out x n
  std::map<std::string, std::string> labels;

  Index order() const noexcept { return A.rows(); }
  Index inputs() const noexcept { return B.cols(); }
  Index outputs() const noexcept { return C.rows(); }

  bool is_linear() const;

  // Throws DimensionError on any inconsistency.
  void validate() const;
};

// Petrov-Galerkin projection:
//   E_r = W^T E V, A_r = W^T A V, N_r = W^T N V, H_r = W^T H (V (x) V),
//   B_r = W^T B, C_r = C V.
// H_r is assembled column pair by column pair from H(v_a (x) v_b); the
// n x n^2 Kronecker product of V with itself is never formed.
QBSystem project(const QBSystem& sys, const Matrix& V, const Matrix& W);

SparseMatrix to_sparse(const Matrix& dense);

}  // namespace qbmor
