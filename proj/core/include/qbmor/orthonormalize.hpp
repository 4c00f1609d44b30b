#pragma once

#include <vector>

#include "qbmor/types.hpp"

namespace qbmor {

struct OrthoResult {
  Matrix Q;                     // n x r, orthonormal columns
  std::vector<Index> kept;      // input column index behind each column of Q
  std::vector<Index> dropped;   // input columns judged linearly dependent
};

// Classical Gram-Schmidt with one full reorthogonalization pass. Every input
// column is scaled to unit norm first, so `tol` is relative to the largest
// column norm regardless of how differently the raw columns are scaled
// (resolvent chains at small and large shifts differ by many decades).
// Exactly zero columns are dropped. Deterministic in the input order.
// Throws RankCollapseError if nothing survives.
OrthoResult orthonormalize(const Matrix& columns, double tol);

}  // namespace qbmor
