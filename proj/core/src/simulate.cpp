#include "qbmor/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>

#include <Eigen/LU>
#include <Eigen/SparseLU>

#include "qbmor/errors.hpp"
#include "qbmor/io.hpp"

namespace qbmor {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::trapezoidal: return "trapezoidal";
    case Scheme::implicit_euler: return "implicit-euler";
    case Scheme::rk4: return "rk4";
  }
  return "?";
}

Scheme parse_scheme(const std::string& s) {
  if (s == "trapezoidal" || s == "implicit-trapezoidal") return Scheme::trapezoidal;
  if (s == "implicit-euler") return Scheme::implicit_euler;
  if (s == "rk4" || s == "explicit-rk4") return Scheme::rk4;
  throw Error("unknown scheme '" + s + "' (expected trapezoidal, implicit-euler or rk4)");
}

void SimOptions::validate() const {
  if (!(dt > 0.0)) throw Error("time step must be positive");
  if (!(t_end >= 0.0)) throw Error("end time must be non-negative");
  if (!(newton_tol > 0.0) || newton_max_iter < 1) throw Error("invalid Newton settings");
  if (!(divergence_threshold > 0.0)) throw Error("divergence threshold must be positive");
}

Vector qb_rhs(const QBSystem& sys, const Vector& x, const Vector& u) {
  Vector f = sys.A * x + sys.B * u;
  for (Index k = 0; k < sys.inputs(); ++k) {
    if (u[k] != 0.0) f += u[k] * (sys.N[static_cast<std::size_t>(k)] * x);
  }
  if (!sys.H.empty()) f += sys.H.apply(x, x);
  return f;
}

SparseMatrix qb_jacobian(const QBSystem& sys, const Vector& x, const Vector& u) {
  SparseMatrix j = sys.A;
  for (Index k = 0; k < sys.inputs(); ++k) {
    if (u[k] != 0.0) j += u[k] * sys.N[static_cast<std::size_t>(k)];
  }
  if (!sys.H.empty()) j += sys.H.jacobian(x);
  return j;
}

namespace {

// E / dt - th * (A + sum u_k N_k + J_H(x)) on a pattern fixed at construction;
// each contribution keeps the index of its slot in the value array, so a
// Newton iteration only refills values and refactorizes numerically.
class NewtonMatrix {
 public:
  NewtonMatrix(const QBSystem& sys, double dt, double theta) : sys_(sys), dt_(dt), theta_(theta) {
    const Index n = sys.order();
    std::vector<Triplet> t;
    auto collect = [&](const SparseMatrix& m) {
      for (Index c = 0; c < m.outerSize(); ++c) {
        for (SparseMatrix::InnerIterator it(m, c); it; ++it) t.emplace_back(it.row(), it.col(), 1.0);
      }
    };
    collect(sys.E);
    collect(sys.A);
    for (const auto& nk : sys.N) collect(nk);
    for (const auto& e : sys.H.entries()) {
      t.emplace_back(e.i, e.j, 1.0);
      t.emplace_back(e.i, e.k, 1.0);
    }
    m_.resize(n, n);
    m_.setFromTriplets(t.begin(), t.end());
    m_.makeCompressed();

    e_idx_ = slots(sys.E);
    a_idx_ = slots(sys.A);
    for (const auto& nk : sys.N) n_idx_.push_back(slots(nk));
    for (const auto& e : sys.H.entries()) {
      h_idx_.emplace_back(slot(e.i, e.j), slot(e.i, e.k));
    }
    lu_.analyzePattern(m_);
  }

  void factorize(const Vector& x, const Vector& u) {
    double* v = m_.valuePtr();
    std::fill(v, v + m_.nonZeros(), 0.0);
    scatter(sys_.E, e_idx_, 1.0 / dt_);
    scatter(sys_.A, a_idx_, -theta_);
    for (std::size_t k = 0; k < n_idx_.size(); ++k) {
      if (u[static_cast<Index>(k)] != 0.0) scatter(sys_.N[k], n_idx_[k], -theta_ * u[static_cast<Index>(k)]);
    }
    const auto& entries = sys_.H.entries();
    for (std::size_t q = 0; q < entries.size(); ++q) {
      const auto& e = entries[q];
      v[h_idx_[q].first] -= theta_ * e.value * x[e.k];
      v[h_idx_[q].second] -= theta_ * e.value * x[e.j];
    }
    lu_.factorize(m_);
  }

  bool ok() const { return lu_.info() == Eigen::Success; }
  Vector solve(const Vector& rhs) const { return lu_.solve(rhs); }

 private:
  Index slot(Index row, Index col) const {
    const auto* inner = m_.innerIndexPtr();
    const auto* outer = m_.outerIndexPtr();
    const auto* pos = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
    return pos - inner;
  }
  std::vector<Index> slots(const SparseMatrix& m) const {
    std::vector<Index> idx;
    idx.reserve(static_cast<std::size_t>(m.nonZeros()));
    for (Index c = 0; c < m.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(m, c); it; ++it) idx.push_back(slot(it.row(), it.col()));
    }
    return idx;
  }
  void scatter(const SparseMatrix& m, const std::vector<Index>& idx, double scale) {
    double* v = m_.valuePtr();
    std::size_t q = 0;
    for (Index c = 0; c < m.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(m, c); it; ++it) v[idx[q++]] += scale * it.value();
    }
  }

  const QBSystem& sys_;
  double dt_;
  double theta_;
  SparseMatrix m_;
  std::vector<Index> e_idx_, a_idx_;
  std::vector<std::vector<Index>> n_idx_;
  std::vector<std::pair<Index, Index>> h_idx_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
};

// Same matrix for small (typically projected, hence dense) systems, where a
// dense LU beats the sparse machinery by a wide margin.
class DenseNewtonMatrix {
 public:
  DenseNewtonMatrix(const QBSystem& sys, double dt, double theta)
      : sys_(sys), theta_(theta), base_(Matrix(sys.E) / dt - theta * Matrix(sys.A)) {
    const Index n = sys.order();
    for (const auto& nk : sys.N) n_.emplace_back(nk);
    // symmetrized mode-1 matricization, block j holds T_s(:, j, :)
    hs_ = Matrix::Zero(n, n * n);
    for (const auto& e : sys.H.entries()) {
      hs_(e.i, e.j * n + e.k) += 0.5 * e.value;
      hs_(e.i, e.k * n + e.j) += 0.5 * e.value;
    }
  }

  Vector rhs(const Vector& x, const Vector& u) const {
    Vector f = sys_.A * x + sys_.B * u;
    for (std::size_t k = 0; k < n_.size(); ++k) {
      if (u[static_cast<Index>(k)] != 0.0) f += u[static_cast<Index>(k)] * (n_[k] * x);
    }
    if (!sys_.H.empty()) f.noalias() += hs_ * kron(x, x);
    return f;
  }

  void factorize(const Vector& x, const Vector& u) {
    Matrix m = base_;
    for (std::size_t k = 0; k < n_.size(); ++k) {
      if (u[static_cast<Index>(k)] != 0.0) m -= theta_ * u[static_cast<Index>(k)] * n_[k];
    }
    const Index n = sys_.order();
    if (!sys_.H.empty()) {
      for (Index j = 0; j < n; ++j) m.noalias() -= (2.0 * theta_ * x[j]) * hs_.middleCols(j * n, n);
    }
    lu_.compute(m);
    ok_ = lu_.rcond() > std::numeric_limits<double>::epsilon();
  }

  bool ok() const { return ok_; }
  Vector solve(const Vector& rhs) const { return lu_.solve(rhs); }

 private:
  const QBSystem& sys_;
  double theta_;
  Matrix base_;
  std::vector<Matrix> n_;
  Matrix hs_;
  Eigen::PartialPivLU<Matrix> lu_;
  bool ok_ = false;
};

// the dense quadratic term costs n^3 doubles
constexpr Index dense_newton_limit = 128;

bool finite_and_bounded(const Vector& x, double bound) {
  const double m = x.cwiseAbs().maxCoeff();
  return std::isfinite(m) && m <= bound;
}

Vector input_at(const InputFunction& u, double t, Index m) {
  Vector v = u(t);
  if (v.size() != m) throw DimensionError("input function returned " + std::to_string(v.size()) +
                                          " channels, system has " + std::to_string(m));
  return v;
}

}  // namespace

Trajectory simulate(const QBSystem& sys, const InputFunction& u, const SimOptions& opts) {
  sys.validate();
  opts.validate();
  const Index n = sys.order();
  const Index m = sys.inputs();
  const long steps = std::lround(opts.t_end / opts.dt);

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> e_lu;
  e_lu.compute(sys.E);
  if (e_lu.info() != Eigen::Success || e_lu.logAbsDeterminant() == -std::numeric_limits<double>::infinity()) {
    throw Error("E is singular: descriptor systems with singular E are not supported by the simulator");
  }

  Trajectory traj;
  traj.times.resize(static_cast<std::size_t>(steps + 1));
  traj.outputs = Matrix::Constant(sys.outputs(), steps + 1, std::numeric_limits<double>::quiet_NaN());

  Vector x = opts.x0.size() ? opts.x0 : Vector::Zero(n);
  if (x.size() != n) throw DimensionError("initial state has the wrong length");
  Vector ux = input_at(u, 0.0, m);
  traj.times[0] = 0.0;
  traj.outputs.col(0) = sys.C * x;
  if (opts.keep_states) traj.states.push_back(x);

  const bool implicit = opts.scheme != Scheme::rk4;
  const double theta = opts.scheme == Scheme::trapezoidal ? 0.5 : 1.0;
  std::unique_ptr<NewtonMatrix> sparse_newton;
  std::unique_ptr<DenseNewtonMatrix> dense_newton;
  if (n <= dense_newton_limit) {
    dense_newton = std::make_unique<DenseNewtonMatrix>(sys, opts.dt, theta);
  } else if (implicit) {
    sparse_newton = std::make_unique<NewtonMatrix>(sys, opts.dt, theta);
  }
  auto newton_step = [&](const Vector& xs, const Vector& us, const Vector& rhs, bool& ok) -> Vector {
    if (dense_newton) {
      dense_newton->factorize(xs, us);
      ok = dense_newton->ok();
      return ok ? dense_newton->solve(rhs) : Vector();
    }
    sparse_newton->factorize(xs, us);
    ok = sparse_newton->ok();
    return ok ? sparse_newton->solve(rhs) : Vector();
  };
  auto rhs = [&](const Vector& xs, const Vector& us) -> Vector {
    return dense_newton ? dense_newton->rhs(xs, us) : qb_rhs(sys, xs, us);
  };

  Vector fx = rhs(x, ux);
  for (long k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * opts.dt;
    traj.times[static_cast<std::size_t>(k)] = t;
    const Vector up = input_at(u, t, m);
    Vector xp = x;
    bool blown = false;

    if (implicit) {
      const Vector ex = sys.E * x;
      const Vector explicit_part = (1.0 - theta) * fx;
      int it = 0;
      for (;; ++it) {
        const Vector fp = rhs(xp, up);
        const Vector res = (sys.E * xp - ex) / opts.dt - theta * fp - explicit_part;
        const double rnorm = res.cwiseAbs().maxCoeff();
        if (!std::isfinite(rnorm)) {
          blown = true;
          break;
        }
        if (rnorm == 0.0) break;
        if (it == opts.newton_max_iter) {
          if (!finite_and_bounded(xp, opts.divergence_threshold) || opts.newton_failure_is_divergence) {
            traj.newton_failed = finite_and_bounded(xp, opts.divergence_threshold);
            blown = true;
            break;
          }
          throw ConvergenceError(k, rnorm, "Newton iteration did not converge at t = " + format_double(t));
        }
        bool ok = false;
        const Vector delta = newton_step(xp, up, -res, ok);
        if (!ok) {
          if (opts.newton_failure_is_divergence) {
            traj.newton_failed = true;
            blown = true;
            break;
          }
          throw ConvergenceError(k, rnorm, "singular Newton matrix at t = " + format_double(t));
        }
        xp += delta;
        const double dn = delta.cwiseAbs().maxCoeff();
        if (!std::isfinite(dn)) {
          blown = true;
          break;
        }
        if (dn <= opts.newton_tol * (1.0 + xp.cwiseAbs().maxCoeff())) {
          ++it;
          break;
        }
      }
      traj.newton_iterations += it;
      traj.max_newton_iterations = std::max(traj.max_newton_iterations, it);
    } else {
      const double h = opts.dt;
      const Vector um = input_at(u, t - 0.5 * h, m);
      auto f = [&](const Vector& xs, const Vector& us) -> Vector { return e_lu.solve(rhs(xs, us)); };
      const Vector k1 = e_lu.solve(fx);
      const Vector k2 = f(x + 0.5 * h * k1, um);
      const Vector k3 = f(x + 0.5 * h * k2, um);
      const Vector k4 = f(x + h * k3, up);
      xp = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    if (blown || !finite_and_bounded(xp, opts.divergence_threshold)) {
      traj.diverged = true;
      traj.diverged_at = t;
      for (long r = k + 1; r <= steps; ++r) traj.times[static_cast<std::size_t>(r)] = static_cast<double>(r) * opts.dt;
      break;
    }
    x = std::move(xp);
    ux = up;
    fx = rhs(x, ux);
    traj.outputs.col(k) = sys.C * x;
    if (opts.keep_states) traj.states.push_back(x);
  }
  return traj;
}

ErrorMetrics error_metrics(const Trajectory& full, const Trajectory& reduced) {
  if (full.times.size() != reduced.times.size() || full.outputs.rows() != reduced.outputs.rows()) {
    throw DimensionError("trajectories have different grids or output counts");
  }
  for (std::size_t k = 0; k < full.times.size(); ++k) {
    if (full.times[k] != reduced.times[k]) throw DimensionError("trajectories have different time grids");
  }
  const Index steps = full.steps();
  ErrorMetrics m;
  m.abs_err = Vector::Zero(steps);
  m.rel_err = Vector::Zero(steps);
  const double inf = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < steps; ++k) {
    for (Index r = 0; r < full.outputs.rows(); ++r) {
      const double y = full.outputs(r, k);
      double a = std::abs(y - reduced.outputs(r, k));
      if (std::isnan(a)) a = inf;
      const double rel = std::abs(y) < 1e-12 ? a : a / std::abs(y);
      m.abs_err[k] = std::max(m.abs_err[k], a);
      m.rel_err[k] = std::max(m.rel_err[k], rel);
    }
  }
  if (steps > 0) {
    m.e_max_abs = m.abs_err.maxCoeff();
    m.e_max_rel = m.rel_err.maxCoeff();
  }
  return m;
}

std::vector<std::string> standard_input_names() { return {"exp-decay", "cosine", "fhn-stimulus"}; }

std::function<double(double)> standard_input(const std::string& name) {
  if (name == "exp-decay") return [](double t) { return std::exp(-t); };
  if (name == "cosine") return [](double t) { return std::cos(2.0 * std::numbers::pi * t / 10.0 + 1.0) / 2.0; };
  if (name == "fhn-stimulus") return [](double t) { return 5e4 * t * t * t * std::exp(-15.0 * t); };
  throw Error("unknown input '" + name + "' (expected exp-decay, cosine or fhn-stimulus)");
}

InputFunction make_input(std::function<double(double)> scalar, Index m_in, const Vector& constants) {
  if (m_in < 1) throw DimensionError("system has no inputs");
  if (constants.size() != 0 && constants.size() != m_in - 1) {
    throw DimensionError("need one constant per input channel beyond the first");
  }
  return [scalar = std::move(scalar), m_in, constants](double t) {
    Vector u = Vector::Zero(m_in);
    u[0] = scalar(t);
    if (constants.size()) u.tail(m_in - 1) = constants;
    return u;
  };
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t";
  for (Index r = 0; r < traj.outputs.rows(); ++r) os << ",y_" << (r + 1);
  os << '\n';
  for (Index k = 0; k < traj.steps(); ++k) {
    os << format_double(traj.times[static_cast<std::size_t>(k)]);
    for (Index r = 0; r < traj.outputs.rows(); ++r) os << ',' << format_double(traj.outputs(r, k));
    os << '\n';
  }
}

void write_comparison_csv(std::ostream& os, const Trajectory& full, const Trajectory& reduced) {
  (void)error_metrics(full, reduced);  // grid check
  const Index p = full.outputs.rows();
  os << "t";
  for (Index r = 0; r < p; ++r) {
    const std::string sfx = p == 1 ? "" : "_" + std::to_string(r + 1);
    os << ",y_full" << sfx << ",y_red" << sfx << ",abs_err" << sfx << ",rel_err" << sfx;
  }
  os << '\n';
  for (Index k = 0; k < full.steps(); ++k) {
    os << format_double(full.times[static_cast<std::size_t>(k)]);
    for (Index r = 0; r < p; ++r) {
      const double y = full.outputs(r, k);
      const double yr = reduced.outputs(r, k);
      const double a = std::abs(y - yr);
      os << ',' << format_double(y) << ',' << format_double(yr) << ',' << format_double(a) << ','
         << format_double(std::abs(y) < 1e-12 ? a : a / std::abs(y));
    }
    os << '\n';
  }
}

}  // namespace qbmor
