#pragma once

#include <array>
#include <map>
#include <tuple>
#include <vector>

#include "qbmor/shifted_solve.hpp"
#include "qbmor/system.hpp"

namespace qbmor {

// A QB system seen through one input direction d and one output direction e:
// b = B d, c^T = e^T C, N = sum_k d_k N_k. For SISO systems d = e = [1].
struct SisoView {
  SparseMatrix N;
  CVector b;
  CVector c;  // stored as a column: C^T e
};

// Empty directions are only accepted for single-input / single-output sides.
SisoView make_siso_view(const QBSystem& sys, const Vector& input_dir = Vector(),
                        const Vector& output_dir = Vector());

enum class Form { regular, symmetric };
enum class Provenance { closed_form, finite_difference };

struct MomentRequest {
  int subsystem = 1;            // 1, 2 or 3
  Form form = Form::regular;
  std::vector<Complex> point;   // (s_1, ..., s_k)
  std::array<int, 3> orders{};  // (p, q, l); entries past the k-th must be zero

  void validate() const;
};

struct MomentValue {
  Complex value;
  Provenance provenance = Provenance::closed_form;
};

// Closed-form multivariate transfer functions and their partial derivatives,
// evaluated on vectors through resolvent chains:
//   H1(s)        = c X0(s) b
//   H2reg(s1,s2) = c X0(s2) [N X0(s1) b + H(X0(s2-s1) b (x) X0(s1) b)]
//   H2sym(s1,s2) = 1/2 c X0(s1+s2) [N (x1 + x2) + H(x1 (x) x2 + x2 (x) x1)]
//   H3reg        = c (Z31 + Z32 + Z33)
// All partials are exact Leibniz expansions using
//   d^l/ds^l X_j(s) = (-1)^l (j+l)!/j! X_{j+l}(s).
class TransferEvaluator {
 public:
  TransferEvaluator(const ShiftedSolver& solver, SisoView view);

  Complex h1(Complex s, int p = 0) const;
  Complex h2_reg(Complex s1, Complex s2, int p = 0, int q = 0) const;
  Complex h2_sym(Complex s1, Complex s2, int p = 0, int q = 0) const;
  Complex h3_reg(Complex s1, Complex s2, Complex s3, int p = 0, int q = 0, int l = 0) const;

  // d^{p+q}/ds1^p ds2^q of Z21 + Z22 = X0(s2) [N X0(s1) b + H(X0(s2-s1) b (x) X0(s1) b)].
  CVector z2_partial(Complex s1, Complex s2, int p, int q) const;
  // d^{p+q+l} of Z31 + Z32 + Z33 (the H3reg state-space vector).
  CVector z3_partial(Complex s1, Complex s2, Complex s3, int p, int q, int l) const;

  MomentValue evaluate(const MomentRequest& request) const;

  const SisoView& view() const noexcept { return view_; }
  const ShiftedSolver& solver() const noexcept { return *solver_; }

 private:
  Complex output(const CVector& v) const { return view_.c.transpose() * v; }

  const ShiftedSolver* solver_;
  SisoView view_;
};

// Relative discrepancy between the closed-form partial and a central finite
// difference of the order-0 evaluator with the given step. Total order <= 3.
double fd_cross_check(const TransferEvaluator& eval, const MomentRequest& request, double step);

// Full p_out x m_in value: entry (r, a) uses input direction e_a and output
// direction e_r in every slot.
CMatrix evaluate_matrix(const QBSystem& sys, const ShiftedSolver& solver, const MomentRequest& request);

// |a - b| / max(|a|, |b|); 0 when both vanish.
double relative_mismatch(Complex a, Complex b);

}  // namespace qbmor
