#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qbmor/system.hpp"

namespace qbmor {

enum class Scheme { trapezoidal, implicit_euler, rk4 };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

struct SimOptions {
  double t_end = 10.0;
  double dt = 1e-3;
  Scheme scheme = Scheme::trapezoidal;
  double newton_tol = 1e-10;  // on the applied update, relative to 1 + |x|
  int newton_max_iter = 25;
  double divergence_threshold = 1e8;
  // Report a Newton failure as divergence (truncated trajectory) instead of
  // throwing; used when screening reduced models.
  bool newton_failure_is_divergence = false;
  Vector x0;  // empty: zero initial state
  bool keep_states = false;

  void validate() const;
};

// u(t) -> input vector of length m_in.
using InputFunction = std::function<Vector(double)>;

struct Trajectory {
  std::vector<double> times;
  Matrix outputs;              // p_out x times.size()
  std::vector<Vector> states;  // filled when keep_states
  long newton_iterations = 0;
  int max_newton_iterations = 0;
  bool diverged = false;
  double diverged_at = 0.0;  // first time the state bound was exceeded
  bool newton_failed = false;

  Index steps() const { return static_cast<Index>(times.size()); }
};

// Integrates E x' = A x + sum_k N_k x u_k + H(x (x) x) + B u, y = C x. The
// implicit schemes solve E (x+ - x)/dt = th f(x+, u+) + (1 - th) f(x, u) by
// Newton with a sparse Jacobian; th = 1/2 (trapezoidal) or 1 (Euler). After a
// divergence the remaining outputs are NaN.
Trajectory simulate(const QBSystem& sys, const InputFunction& u, const SimOptions& opts);

// Right-hand side f(x, u) and its state Jacobian.
Vector qb_rhs(const QBSystem& sys, const Vector& x, const Vector& u);
SparseMatrix qb_jacobian(const QBSystem& sys, const Vector& x, const Vector& u);

struct ErrorMetrics {
  Vector abs_err;  // max over outputs, per time
  Vector rel_err;
  double e_max_abs = 0.0;
  double e_max_rel = 0.0;
};

// |y - y_r| and |y - y_r| / |y| (the absolute value where |y| < 1e-12),
// maximized over outputs per time and over the grid. NaN entries (diverged
// runs) give infinite maxima.
ErrorMetrics error_metrics(const Trajectory& full, const Trajectory& reduced);

// exp-decay: e^{-t}; cosine: cos(2 pi t / 10 + 1) / 2; fhn-stimulus:
// 5e4 t^3 e^{-15 t}. Scalar-valued; see fhn_inputs for the two-channel form.
std::function<double(double)> standard_input(const std::string& name);
std::vector<std::string> standard_input_names();

// Broadcast a scalar input to channel 0 and fill the remaining channels with
// constants.
InputFunction make_input(std::function<double(double)> scalar, Index m_in, const Vector& constants = Vector());

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_comparison_csv(std::ostream& os, const Trajectory& full, const Trajectory& reduced);

}  // namespace qbmor
