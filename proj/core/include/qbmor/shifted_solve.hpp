#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include <Eigen/SparseLU>

#include "qbmor/system.hpp"
#include "qbmor/types.hpp"

namespace qbmor {

struct FactorizationStats {
  double seconds = 0.0;
  Index lu_nonzeros = 0;
  int refinements = 0;
};

// Sparse LU of the pencil (sE - A) at one complex shift. Both the plain and
// the transposed (not conjugated) systems are solved from the same factors.
class ShiftedFactorization {
 public:
  ShiftedFactorization(const SparseMatrix& E, const SparseMatrix& A, Complex s);
  ShiftedFactorization(const ShiftedFactorization&) = delete;
  ShiftedFactorization& operator=(const ShiftedFactorization&) = delete;

  Complex shift() const noexcept { return s_; }
  FactorizationStats stats() const noexcept {
    FactorizationStats s = stats_;
    s.refinements = refinements_.load();
    return s;
  }

  // Normwise backward error above 1e-10 triggers one refinement step; if it
  // is still above, SingularPencilError is thrown.
  CVector solve(const CVector& rhs) const;
  CVector solve_transposed(const CVector& rhs) const;

  static constexpr double kResidualTolerance = 1e-10;

 private:
  template <class Solve, class Apply>
  CVector checked_solve(const CVector& rhs, Solve&& solve, Apply&& apply) const;

  Complex s_;
  CSparseMatrix pencil_;
  double pencil_norm_ = 0.0;
  // transpose() is non-const in Eigen 3.4 even though it does not mutate.
  mutable Eigen::SparseLU<CSparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  FactorizationStats stats_;
  mutable std::atomic<int> refinements_{0};
};

// Resolvent chains X_j(s) = [(sE - A)^{-1} E]^j (sE - A)^{-1} applied to
// vectors, with one cached factorization per distinct shift. Shifts are
// compared bit for bit. The solver refers to `sys`, which must outlive it.
class ShiftedSolver {
 public:
  explicit ShiftedSolver(const QBSystem& sys);

  const QBSystem& system() const noexcept { return *sys_; }
  const ShiftedFactorization& factorization(Complex s) const;
  std::size_t factorization_count() const;

  // X_j(s) b: one factorization, j + 1 solves.
  CVector xj_apply(Complex s, int j, const CVector& b) const;
  // X_j(s)^T c.
  CVector xj_apply_transposed(Complex s, int j, const CVector& c) const;

  // [X_0(s) b, ..., X_jmax(s) b].
  std::vector<CVector> xj_chain(Complex s, int jmax, const CVector& b) const;
  std::vector<CVector> xj_chain_transposed(Complex s, int jmax, const CVector& c) const;

 private:
  using Key = std::pair<std::uint64_t, std::uint64_t>;

  const QBSystem* sys_;
  CSparseMatrix e_;
  CSparseMatrix et_;
  mutable std::mutex mutex_;
  mutable std::map<Key, std::unique_ptr<ShiftedFactorization>> cache_;
};

// Compares the central finite-difference estimate of d^l/ds^l X_j(s) b
// against (-1)^l (j+l)!/j! X_{j+l}(s) b and returns the relative discrepancy.
double xj_derivative_check(const ShiftedSolver& solver, Complex s, int j, int l, const CVector& b,
                           double step);

double factorial(int k);
double binomial(int n, int k);

}  // namespace qbmor
