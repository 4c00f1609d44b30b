#pragma once

#include <cstddef>
#include <vector>

#include "qbmor/errors.hpp"
#include "qbmor/types.hpp"

namespace qbmor {

struct TensorEntry {
  Index i = 0;
  Index j = 0;
  Index k = 0;
  double value = 0.0;

  friend bool operator==(const TensorEntry&, const TensorEntry&) = default;
};

// Coordinate-form n x n x n tensor holding the quadratic term H of a QB
// system.
//
// Kronecker convention (0-based): (x (x) y)[j*n + k] = x_j * y_k, so the
// mode-1 matricization is H1(i, j*n + k) = T(i, j, k) and
//   apply(x, y)_i = sum_{j,k} T(i,j,k) x_j y_k = [H1 (x (x) y)]_i.
//
// The mode-2 matricization is defined by the trilinear identity
//   a^T H2 (b (x) c) = c^T H1 (a (x) b),
// which gives H2(j, k*n + i) = T(i, j, k). It is the adjoint of H with
// respect to its first Kronecker slot; apply_mode3 is the adjoint with
// respect to the second slot (a^T H3 (b (x) c) = c^T H1 (b (x) a)).
//
// Entries are kept sorted by (i, j, k) with duplicates summed and exact
// zeros removed.
class SparseTensor3 {
 public:
  SparseTensor3() = default;
  explicit SparseTensor3(Index n);
  SparseTensor3(Index n, std::vector<TensorEntry> entries);

  Index dim() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<TensorEntry>& entries() const noexcept { return entries_; }

  template <class Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> apply(
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y) const {
    check_dims(x.size(), y.size());
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n_);
    for (const auto& e : entries_) out[e.i] += e.value * x[e.j] * y[e.k];
    return out;
  }

  // H2 (b (x) c): out_j = sum_{i,k} T(i,j,k) b_k c_i.
  template <class Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> apply_mode2(
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& c) const {
    check_dims(b.size(), c.size());
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n_);
    for (const auto& e : entries_) out[e.j] += e.value * b[e.k] * c[e.i];
    return out;
  }

  // H3 (b (x) c): out_k = sum_{i,j} T(i,j,k) b_j c_i.
  template <class Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> apply_mode3(
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& c) const {
    check_dims(b.size(), c.size());
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n_);
    for (const auto& e : entries_) out[e.k] += e.value * b[e.j] * c[e.i];
    return out;
  }

  RowSparseMatrix mode1() const;
  RowSparseMatrix mode2() const;

  // Jacobian of x -> H(x (x) x): J(x) v = H(v (x) x) + H(x (x) v).
  SparseMatrix jacobian(const Vector& x) const;
  Matrix dense_jacobian(const Vector& x) const;

  // T_s(i,j,k) = (T(i,j,k) + T(i,k,j)) / 2. Leaves H(x (x) x) unchanged.
  SparseTensor3 symmetrized() const;

  friend bool operator==(const SparseTensor3&, const SparseTensor3&) = default;

 private:
  void check_dims(Index a, Index b) const;

  Index n_ = 0;
  std::vector<TensorEntry> entries_;
};

// Dense Kronecker product x (x) y under the convention above.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> kron(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(x.size() * y.size());
  for (Index j = 0; j < x.size(); ++j) out.segment(j * y.size(), y.size()) = x[j] * y;
  return out;
}

inline Vector kron_apply(const SparseTensor3& h, const Vector& x, const Vector& y) {
  return h.apply(x, y);
}

}  // namespace qbmor
