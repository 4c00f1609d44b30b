#pragma once

#include <complex>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qbmor {

using Index = Eigen::Index;
using Complex = std::complex<double>;

using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;

// Column-major compressed storage; this is the in-memory form of every
// system matrix. Duplicates are summed on construction from triplets.
using SparseMatrix = Eigen::SparseMatrix<double>;
using CSparseMatrix = Eigen::SparseMatrix<Complex>;
// Used for the n x n^2 matricizations, where a column-major outer index of
// length n^2 would be wasteful.
using RowSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

using Triplet = Eigen::Triplet<double>;

}  // namespace qbmor
