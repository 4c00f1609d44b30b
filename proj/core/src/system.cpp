#include "qbmor/system.hpp"

#include <string>

#include "qbmor/errors.hpp"

namespace qbmor {

namespace {

void expect_shape(const SparseMatrix& m, Index rows, Index cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(name + " is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                         "x" + std::to_string(cols));
  }
}

}  // namespace

bool QBSystem::is_linear() const {
  if (!H.empty()) return false;
  for (const auto& nk : N) {
    if (nk.nonZeros() > 0) return false;
  }
  return true;
}

void QBSystem::validate() const {
  const Index n = A.rows();
  expect_shape(A, n, n, "A");
  expect_shape(E, n, n, "E");
  if (B.rows() != n) throw DimensionError("B has " + std::to_string(B.rows()) + " rows, expected " + std::to_string(n));
  if (C.cols() != n) throw DimensionError("C has " + std::to_string(C.cols()) + " columns, expected " + std::to_string(n));
  if (static_cast<Index>(N.size()) != B.cols()) {
    throw DimensionError("expected one N matrix per input (" + std::to_string(B.cols()) +
                         "), got " + std::to_string(N.size()));
  }
  for (std::size_t k = 0; k < N.size(); ++k) expect_shape(N[k], n, n, "N" + std::to_string(k + 1));
  if (H.dim() != n) {
    throw DimensionError("H has dimension " + std::to_string(H.dim()) + ", expected " + std::to_string(n));
  }
}

SparseMatrix to_sparse(const Matrix& dense) {
  std::vector<Triplet> t;
  for (Index c = 0; c < dense.cols(); ++c) {
    for (Index r = 0; r < dense.rows(); ++r) {
      if (dense(r, c) != 0.0) t.emplace_back(r, c, dense(r, c));
    }
  }
  SparseMatrix s(dense.rows(), dense.cols());
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

QBSystem project(const QBSystem& sys, const Matrix& V, const Matrix& W) {
  sys.validate();
  const Index n = sys.order();
  if (V.rows() != n || W.rows() != n) {
    throw DimensionError("projection bases must have " + std::to_string(n) + " rows");
  }
  if (V.cols() != W.cols()) {
    throw DimensionError("V and W must have the same number of columns (" +
                         std::to_string(V.cols()) + " vs " + std::to_string(W.cols()) + ")");
  }
  const Index r = V.cols();
  if (r == 0) throw RankCollapseError("empty projection basis");
  if (Eigen::ColPivHouseholderQR<Matrix>(V).rank() < r) {
    throw RankCollapseError("V is rank deficient");
  }
  if (Eigen::ColPivHouseholderQR<Matrix>(W).rank() < r) {
    throw RankCollapseError("W is rank deficient");
  }

  QBSystem red;
  const Matrix er = W.transpose() * (sys.E * V);
  Eigen::FullPivLU<Matrix> lu(er);
  if (!lu.isInvertible()) {
    throw SingularPencilError(Complex(0.0), "reduced pencil matrix W^T E V is singular");
  }
  red.E = to_sparse(er);
  red.A = to_sparse(W.transpose() * (sys.A * V));
  for (const auto& nk : sys.N) red.N.push_back(to_sparse(W.transpose() * (nk * V)));
  red.B = to_sparse(W.transpose() * Matrix(sys.B));
  red.C = to_sparse(Matrix(sys.C) * V);

  std::vector<TensorEntry> h;
  if (!sys.H.empty()) {
    // Y(:, b) = H(v_a (x) v_b) for fixed a, accumulated entry by entry.
    Matrix y(n, r);
    for (Index a = 0; a < r; ++a) {
      y.setZero();
      for (const auto& e : sys.H.entries()) {
        const double s = e.value * V(e.j, a);
        if (s != 0.0) y.row(e.i) += s * V.row(e.k);
      }
      const Matrix hr = W.transpose() * y;
      for (Index b = 0; b < r; ++b) {
        for (Index i = 0; i < r; ++i) {
          if (hr(i, b) != 0.0) h.push_back({i, a, b, hr(i, b)});
        }
      }
    }
  }
  red.H = SparseTensor3(r, std::move(h));
  red.labels = sys.labels;
  return red;
}

}  // namespace qbmor
