#include "qbmor/orthonormalize.hpp"

#include <cmath>

#include "qbmor/errors.hpp"

namespace qbmor {

OrthoResult orthonormalize(const Matrix& columns, double tol) {
  const Index n = columns.rows();
  OrthoResult out;
  out.Q.resize(n, std::min(n, columns.cols()));
  Index r = 0;
  for (Index c = 0; c < columns.cols(); ++c) {
    const double norm = columns.col(c).norm();
    if (norm == 0.0 || !std::isfinite(norm) || r == n) {
      out.dropped.push_back(c);
      continue;
    }
    Vector v = columns.col(c) / norm;
    for (int pass = 0; pass < 2 && r > 0; ++pass) {
      const Vector h = out.Q.leftCols(r).transpose() * v;
      v -= out.Q.leftCols(r) * h;
    }
    const double residual = v.norm();
    if (residual < tol) {
      out.dropped.push_back(c);
      continue;
    }
    out.Q.col(r++) = v / residual;
    out.kept.push_back(c);
  }
  if (r == 0) throw RankCollapseError("all candidate columns are numerically zero");
  out.Q.conservativeResize(n, r);
  return out;
}

}  // namespace qbmor
