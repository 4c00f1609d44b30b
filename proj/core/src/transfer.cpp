#include "qbmor/transfer.hpp"

#include <cmath>
#include <string>

#include "qbmor/errors.hpp"
#include "qbmor/finite_difference.hpp"

namespace qbmor {

namespace {

double sign(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }

// x^{(a)}(s) = d^a/ds^a X0(s) b = (-1)^a a! X_a(s) b.
std::vector<CVector> derivative_chain(const ShiftedSolver& solver, Complex s, int amax, const CVector& b) {
  auto chain = solver.xj_chain(s, amax, b);
  for (int a = 0; a <= amax; ++a) chain[a] *= sign(a) * factorial(a);
  return chain;
}

}  // namespace

SisoView make_siso_view(const QBSystem& sys, const Vector& input_dir, const Vector& output_dir) {
  sys.validate();
  Vector d = input_dir;
  Vector e = output_dir;
  if (d.size() == 0) {
    if (sys.inputs() != 1) throw DimensionError("system has several inputs; an input direction is required");
    d = Vector::Ones(1);
  }
  if (e.size() == 0) {
    if (sys.outputs() != 1) throw DimensionError("system has several outputs; an output direction is required");
    e = Vector::Ones(1);
  }
  if (d.size() != sys.inputs()) throw DimensionError("input direction length does not match input count");
  if (e.size() != sys.outputs()) throw DimensionError("output direction length does not match output count");

  SisoView v;
  v.N = SparseMatrix(sys.order(), sys.order());
  for (Index k = 0; k < sys.inputs(); ++k) {
    if (d[k] != 0.0) v.N += d[k] * sys.N[static_cast<std::size_t>(k)];
  }
  v.b = (sys.B * d).cast<Complex>();
  v.c = (sys.C.transpose() * e).cast<Complex>();
  return v;
}

void MomentRequest::validate() const {
  if (subsystem < 1 || subsystem > 3) throw Error("moment request: subsystem must be 1, 2 or 3");
  if (static_cast<int>(point.size()) != subsystem) {
    throw Error("moment request: expected " + std::to_string(subsystem) + " evaluation variables");
  }
  for (int v = 0; v < 3; ++v) {
    if (orders[v] < 0) throw Error("moment request: negative derivative order");
    if (v >= subsystem && orders[v] != 0) {
      throw Error("moment request: derivative index beyond the subsystem's variables");
    }
  }
  if (form == Form::symmetric && subsystem == 3) {
    throw Error("moment request: symmetric form is only available for H1 and H2");
  }
}

TransferEvaluator::TransferEvaluator(const ShiftedSolver& solver, SisoView view)
    : solver_(&solver), view_(std::move(view)) {
  const Index n = solver.system().order();
  if (view_.b.size() != n || view_.c.size() != n || view_.N.rows() != n) {
    throw DimensionError("SISO view does not match the solver's system");
  }
}

Complex TransferEvaluator::h1(Complex s, int p) const {
  return sign(p) * factorial(p) * output(solver_->xj_apply(s, p, view_.b));
}

CVector TransferEvaluator::z2_partial(Complex s1, Complex s2, int p, int q) const {
  const auto& h = solver_->system().H;
  const auto xs1 = solver_->xj_chain(s1, p, view_.b);
  // Z21: (-1)^{p+q} p! q! X_q(s2) N X_p(s1) b
  CVector out = sign(p + q) * factorial(p) * factorial(q) *
                solver_->xj_apply(s2, q, CVector(view_.N * xs1[p]));
  if (h.empty()) return out;

  // Z22: sum_j C(q,j) (q-j)! X_{q-j}(s2) H( sum_k (-1)^{p+q-k} C(p,k)
  //        (k+j)! X_{k+j}(s2-s1) b (x) (p-k)! X_{p-k}(s1) b )
  const auto xd = solver_->xj_chain(s2 - s1, p + q, view_.b);
  for (int j = 0; j <= q; ++j) {
    CVector inner = CVector::Zero(out.size());
    for (int k = 0; k <= p; ++k) {
      const double coef = sign(p + q - k) * binomial(p, k) * factorial(k + j) * factorial(p - k);
      inner += coef * h.apply(xd[k + j], xs1[p - k]);
    }
    out += binomial(q, j) * factorial(q - j) * solver_->xj_apply(s2, q - j, inner);
  }
  return out;
}

Complex TransferEvaluator::h2_reg(Complex s1, Complex s2, int p, int q) const {
  return output(z2_partial(s1, s2, p, q));
}

Complex TransferEvaluator::h2_sym(Complex s1, Complex s2, int p, int q) const {
  const auto& h = solver_->system().H;
  const auto x1 = derivative_chain(*solver_, s1, p, view_.b);
  const auto x2 = derivative_chain(*solver_, s2, q, view_.b);
  const Index n = view_.b.size();

  // d^{p',q'} of G = N (x1 + x2) + H(x1 (x) x2 + x2 (x) x1)
  auto inner = [&](int pp, int qq) {
    CVector g = CVector::Zero(n);
    if (qq == 0) g += view_.N * x1[pp];
    if (pp == 0) g += view_.N * x2[qq];
    if (!h.empty()) g += h.apply(x1[pp], x2[qq]) + h.apply(x2[qq], x1[pp]);
    return g;
  };

  const Complex t = s1 + s2;
  Complex total = 0.0;
  for (int a = 0; a <= p; ++a) {
    for (int c = 0; c <= q; ++c) {
      const CVector g = inner(p - a, q - c);
      if (g.squaredNorm() == 0.0) continue;
      const double coef = binomial(p, a) * binomial(q, c) * sign(a + c) * factorial(a + c);
      total += coef * output(solver_->xj_apply(t, a + c, g));
    }
  }
  return 0.5 * total;
}

CVector TransferEvaluator::z3_partial(Complex s1, Complex s2, Complex s3, int p, int q, int l) const {
  const auto& h = solver_->system().H;
  const Index n = view_.b.size();

  std::map<std::tuple<int, int, int>, CVector> memo;
  // which = 0: D2 at (s1, s2); which = 1: D2 at (s2 - s1, s3 - s1).
  auto d2 = [&](int which, int pp, int qq) -> const CVector& {
    auto key = std::make_tuple(which, pp, qq);
    auto it = memo.find(key);
    if (it == memo.end()) {
      CVector v = which == 0 ? z2_partial(s1, s2, pp, qq) : z2_partial(s2 - s1, s3 - s1, pp, qq);
      it = memo.emplace(key, std::move(v)).first;
    }
    return it->second;
  };

  // Z31: (-1)^l l! X_l(s3) N D2(p, q; s1, s2)
  CVector out = sign(l) * factorial(l) * solver_->xj_apply(s3, l, CVector(view_.N * d2(0, p, q)));
  if (h.empty()) return out;

  const auto xs1 = solver_->xj_chain(s1, p, view_.b);
  const auto x32 = solver_->xj_chain(s3 - s2, q + l, view_.b);

  for (int kl = 0; kl <= l; ++kl) {
    CVector inner = CVector::Zero(n);
    // Z32: (-1)^l C(l,kl) (l-kl)! X_{l-kl}(s3) H sum_kq C(q,kq)
    //        [(kq+kl)! X_{kq+kl}(s3-s2) b (x) D2(p, q-kq; s1, s2)]
    for (int kq = 0; kq <= q; ++kq) {
      const double coef = sign(l) * binomial(q, kq) * factorial(kq + kl);
      inner += coef * h.apply(x32[kq + kl], d2(0, p, q - kq));
    }
    // Z33: (-1)^{l-kl} C(l,kl) (l-kl)! X_{l-kl}(s3) H sum_kp C(p,kp) (-1)^{p-kp}
    //        [d^{kp,q,kl} Y(s2-s1, s3-s1) (x) (p-kp)! X_{p-kp}(s1) b]
    // with d/ds1 = -(d/da + d/db), d/ds2 = d/da, d/ds3 = d/db for Y(a, b).
    for (int kp = 0; kp <= p; ++kp) {
      CVector ydiff = CVector::Zero(n);
      for (int i = 0; i <= kp; ++i) {
        ydiff += binomial(kp, i) * d2(1, i + q, kp - i + kl);
      }
      ydiff *= sign(kp);
      const double coef = sign(l - kl) * sign(p - kp) * binomial(p, kp) * factorial(p - kp);
      inner += coef * h.apply(ydiff, xs1[p - kp]);
    }
    out += binomial(l, kl) * factorial(l - kl) * solver_->xj_apply(s3, l - kl, inner);
  }
  return out;
}

Complex TransferEvaluator::h3_reg(Complex s1, Complex s2, Complex s3, int p, int q, int l) const {
  return output(z3_partial(s1, s2, s3, p, q, l));
}

MomentValue TransferEvaluator::evaluate(const MomentRequest& r) const {
  r.validate();
  const auto& o = r.orders;
  Complex v;
  switch (r.subsystem) {
    case 1:
      v = h1(r.point[0], o[0]);
      break;
    case 2:
      v = r.form == Form::regular ? h2_reg(r.point[0], r.point[1], o[0], o[1])
                                  : h2_sym(r.point[0], r.point[1], o[0], o[1]);
      break;
    default:
      v = h3_reg(r.point[0], r.point[1], r.point[2], o[0], o[1], o[2]);
      break;
  }
  return {v, Provenance::closed_form};
}

double relative_mismatch(Complex a, Complex b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

double fd_cross_check(const TransferEvaluator& eval, const MomentRequest& request, double step) {
  request.validate();
  const auto& o = request.orders;
  if (o[0] + o[1] + o[2] == 0) return 0.0;
  if (o[0] + o[1] + o[2] > 3) throw Error("fd_cross_check: total derivative order must be <= 3");

  MomentRequest base = request;
  base.orders = {0, 0, 0};
  const auto s0 = central_stencil(o[0]);
  const auto s1 = central_stencil(o[1]);
  const auto s2 = central_stencil(o[2]);
  Complex fd = 0.0;
  for (const auto& [a, wa] : s0) {
    for (const auto& [b, wb] : s1) {
      for (const auto& [c, wc] : s2) {
        MomentRequest shifted = base;
        const int offsets[3] = {a, b, c};
        for (int v = 0; v < request.subsystem; ++v) {
          shifted.point[v] += static_cast<double>(offsets[v]) * step;
        }
        fd += wa * wb * wc * eval.evaluate(shifted).value;
      }
    }
  }
  fd /= std::pow(step, o[0] + o[1] + o[2]);
  return relative_mismatch(eval.evaluate(request).value, fd);
}

CMatrix evaluate_matrix(const QBSystem& sys, const ShiftedSolver& solver, const MomentRequest& request) {
  CMatrix out(sys.outputs(), sys.inputs());
  for (Index r = 0; r < sys.outputs(); ++r) {
    for (Index a = 0; a < sys.inputs(); ++a) {
      TransferEvaluator eval(solver, make_siso_view(sys, Vector::Unit(sys.inputs(), a),
                                                    Vector::Unit(sys.outputs(), r)));
      out(r, a) = eval.evaluate(request).value;
    }
  }
  return out;
}

}  // namespace qbmor
