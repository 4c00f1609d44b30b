#pragma once

#include <utility>
#include <vector>

namespace qbmor {

// Central-difference stencil for the d-th derivative: pairs of (offset in
// units of h, weight); the derivative estimate is sum w * f(x + o h) / h^d.
// Supported orders: 0..3.
std::vector<std::pair<int, double>> central_stencil(int order);

}  // namespace qbmor
