#include "qbmor/shifted_solve.hpp"

#include <bit>
#include <chrono>
#include <cmath>

#include "qbmor/errors.hpp"
#include "qbmor/finite_difference.hpp"

namespace qbmor {

std::vector<std::pair<int, double>> central_stencil(int order) {
  switch (order) {
    case 0: return {{0, 1.0}};
    case 1: return {{-1, -0.5}, {1, 0.5}};
    case 2: return {{-1, 1.0}, {0, -2.0}, {1, 1.0}};
    case 3: return {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}};
    default: throw Error("central_stencil: derivative order " + std::to_string(order) + " not supported");
  }
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return factorial(n) / (factorial(k) * factorial(n - k));
}

namespace {

double inf_norm(const CSparseMatrix& m) {
  Vector rows = Vector::Zero(m.rows());
  for (Index c = 0; c < m.outerSize(); ++c) {
    for (CSparseMatrix::InnerIterator it(m, c); it; ++it) rows[it.row()] += std::abs(it.value());
  }
  return m.rows() > 0 ? rows.maxCoeff() : 0.0;
}

double inf_norm(const CVector& v) { return v.size() > 0 ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

ShiftedFactorization::ShiftedFactorization(const SparseMatrix& E, const SparseMatrix& A, Complex s)
    : s_(s) {
  const auto t0 = std::chrono::steady_clock::now();
  pencil_ = s * E.cast<Complex>() - A.cast<Complex>();
  pencil_.makeCompressed();
  pencil_norm_ = inf_norm(pencil_);
  lu_.analyzePattern(pencil_);
  lu_.factorize(pencil_);
  if (lu_.info() != Eigen::Success) {
    throw SingularPencilError(s, "sparse LU of (sE - A) failed: " + lu_.lastErrorMessage());
  }
  stats_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  stats_.lu_nonzeros = lu_.nnzL() + lu_.nnzU();
}

template <class Solve, class Apply>
CVector ShiftedFactorization::checked_solve(const CVector& rhs, Solve&& solve, Apply&& apply) const {
  if (rhs.size() != pencil_.rows()) {
    throw DimensionError("shifted solve: right-hand side has length " + std::to_string(rhs.size()) +
                         ", expected " + std::to_string(pencil_.rows()));
  }
  const double rhs_norm = inf_norm(rhs);
  if (rhs_norm == 0.0) return CVector::Zero(rhs.size());
  CVector x = solve(rhs);
  auto backward_error = [&](const CVector& sol, CVector& residual) {
    residual = rhs - apply(sol);
    return inf_norm(residual) / (pencil_norm_ * inf_norm(sol) + rhs_norm);
  };
  CVector r;
  double eta = backward_error(x, r);
  if (!(eta <= kResidualTolerance)) {
    x += solve(r);
    ++refinements_;
    eta = backward_error(x, r);
    if (!(eta <= kResidualTolerance)) {
      throw SingularPencilError(s_, "solve residual " + std::to_string(eta) +
                                        " above tolerance after refinement");
    }
  }
  return x;
}

CVector ShiftedFactorization::solve(const CVector& rhs) const {
  return checked_solve(
      rhs, [&](const CVector& b) -> CVector { return lu_.solve(b); },
      [&](const CVector& x) -> CVector { return pencil_ * x; });
}

CVector ShiftedFactorization::solve_transposed(const CVector& rhs) const {
  return checked_solve(
      rhs, [&](const CVector& b) -> CVector { return lu_.transpose().solve(b); },
      [&](const CVector& x) -> CVector { return pencil_.transpose() * x; });
}

ShiftedSolver::ShiftedSolver(const QBSystem& sys) : sys_(&sys) {
  sys.validate();
  e_ = sys.E.cast<Complex>();
  et_ = CSparseMatrix(e_.transpose());
}

const ShiftedFactorization& ShiftedSolver::factorization(Complex s) const {
  const Key key{std::bit_cast<std::uint64_t>(s.real()), std::bit_cast<std::uint64_t>(s.imag())};
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    it = cache_.emplace(key, std::make_unique<ShiftedFactorization>(sys_->E, sys_->A, s)).first;
  }
  return *it->second;
}

std::size_t ShiftedSolver::factorization_count() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

std::vector<CVector> ShiftedSolver::xj_chain(Complex s, int jmax, const CVector& b) const {
  if (jmax < 0) throw Error("xj_chain: order must be non-negative");
  const auto& f = factorization(s);
  std::vector<CVector> out;
  out.reserve(static_cast<std::size_t>(jmax) + 1);
  out.push_back(f.solve(b));
  for (int j = 1; j <= jmax; ++j) out.push_back(f.solve(e_ * out.back()));
  return out;
}

std::vector<CVector> ShiftedSolver::xj_chain_transposed(Complex s, int jmax, const CVector& c) const {
  if (jmax < 0) throw Error("xj_chain_transposed: order must be non-negative");
  const auto& f = factorization(s);
  // X_j^T = M^{-T} (E^T M^{-T})^j
  std::vector<CVector> out;
  out.reserve(static_cast<std::size_t>(jmax) + 1);
  out.push_back(f.solve_transposed(c));
  for (int j = 1; j <= jmax; ++j) out.push_back(f.solve_transposed(et_ * out.back()));
  return out;
}

CVector ShiftedSolver::xj_apply(Complex s, int j, const CVector& b) const {
  return xj_chain(s, j, b).back();
}

CVector ShiftedSolver::xj_apply_transposed(Complex s, int j, const CVector& c) const {
  return xj_chain_transposed(s, j, c).back();
}

double xj_derivative_check(const ShiftedSolver& solver, Complex s, int j, int l, const CVector& b,
                           double step) {
  if (l == 0) return 0.0;
  if (l < 0 || l > 3) throw Error("xj_derivative_check: derivative order must be in 0..3");
  CVector fd = CVector::Zero(b.size());
  for (const auto& [offset, weight] : central_stencil(l)) {
    fd += weight * solver.xj_apply(s + static_cast<double>(offset) * step, j, b);
  }
  fd /= std::pow(step, l);
  const double sign = (l % 2 == 0) ? 1.0 : -1.0;
  const CVector exact = sign * factorial(j + l) / factorial(j) * solver.xj_apply(s, j + l, b);
  const double scale = exact.norm();
  return scale > 0.0 ? (fd - exact).norm() / scale : (fd - exact).norm();
}

}  // namespace qbmor
