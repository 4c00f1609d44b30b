#include <random>

#include <gtest/gtest.h>

#include "qbmor/models.hpp"
#include "qbmor/orthonormalize.hpp"
#include "qbmor/system.hpp"
#include "support.hpp"

namespace qbmor {
namespace {

Matrix random_orthonormal(Index n, Index r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(n, r);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < r; ++j) m(i, j) = g(rng);
  }
  return Eigen::HouseholderQR<Matrix>(m).householderQ() * Matrix::Identity(n, r);
}

TEST(Project, IdentityBasisReproducesTheSystem) {
  const QBSystem s = random_qb_system({.n = 9, .density = 0.2, .inputs = 2, .outputs = 2, .seed = 3});
  const Matrix I = Matrix::Identity(9, 9);
  const QBSystem r = project(s, I, I);
  EXPECT_EQ(Matrix(r.E), Matrix(s.E));
  EXPECT_EQ(Matrix(r.A), Matrix(s.A));
  EXPECT_EQ(Matrix(r.N[1]), Matrix(s.N[1]));
  EXPECT_EQ(Matrix(r.B), Matrix(s.B));
  EXPECT_EQ(Matrix(r.C), Matrix(s.C));
  EXPECT_EQ(r.H, s.H);
}

TEST(Project, CoordinateSelection) {
  QBSystem s;
  s.E = to_sparse(Matrix::Identity(2, 2));
  s.A = to_sparse(Vector(Eigen::Vector2d(-1, -2)).asDiagonal().toDenseMatrix());
  s.N = {SparseMatrix(2, 2)};
  s.H = SparseTensor3(2);
  s.B = to_sparse(Matrix::Ones(2, 1));
  s.C = to_sparse(Matrix::Ones(1, 2));
  const Matrix v = Eigen::Vector2d(1, 0);
  const QBSystem r = project(s, v, v);
  EXPECT_EQ(Matrix(r.E)(0, 0), 1.0);
  EXPECT_EQ(Matrix(r.A)(0, 0), -1.0);
}

TEST(Project, QuadraticTermMatchesDenseKroneckerProjection) {
  const QBSystem s = random_qb_system({.n = 6, .density = 0.3, .seed = 5});
  const Matrix V = random_orthonormal(6, 3, 1), W = random_orthonormal(6, 3, 2);
  const QBSystem r = project(s, V, W);
  Matrix vv(36, 9);
  for (Index a = 0; a < 3; ++a) {
    for (Index b = 0; b < 3; ++b) vv.col(a * 3 + b) = kron(Vector(V.col(a)), Vector(V.col(b)));
  }
  const Matrix expect = W.transpose() * oracle::mode1(s.H) * vv;
  EXPECT_LT((oracle::mode1(r.H) - expect).norm(), 1e-13);
}

TEST(Project, PermutingBasisColumnsPermutesTheReducedTensor) {
  const QBSystem s = random_qb_system({.n = 8, .density = 0.2, .seed = 6});
  const Matrix V = random_orthonormal(8, 3, 4);
  Matrix Vp = V;
  Vp.col(0) = V.col(2);
  Vp.col(2) = V.col(0);
  const Matrix h = oracle::mode1(project(s, V, V).H);
  const Matrix hp = oracle::mode1(project(s, Vp, Vp).H);
  const int perm[3] = {2, 1, 0};
  for (int i = 0; i < 3; ++i) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) EXPECT_NEAR(hp(i, a * 3 + b), h(perm[i], perm[a] * 3 + perm[b]), 1e-13);
    }
  }
}

TEST(Project, RejectsBadBases) {
  const QBSystem s = random_qb_system({.n = 5, .seed = 7});
  EXPECT_THROW(project(s, Matrix::Ones(4, 1), Matrix::Ones(4, 1)), DimensionError);
  EXPECT_THROW(project(s, Matrix::Ones(5, 2), Matrix::Ones(5, 2)), RankCollapseError);
  EXPECT_THROW(project(s, Matrix::Identity(5, 2), Matrix::Identity(5, 3)), DimensionError);
  Matrix w = Matrix::Zero(5, 1);
  w(1, 0) = 1.0;
  Matrix v = Matrix::Zero(5, 1);
  v(0, 0) = 1.0;
  QBSystem diag = s;
  diag.E = to_sparse(Matrix::Identity(5, 5));
  EXPECT_THROW(project(diag, v, w), SingularPencilError);
}

TEST(Validate, ReportsInconsistentShapes) {
  QBSystem s = oracle::scalar_system();
  EXPECT_NO_THROW(s.validate());
  s.N.clear();
  EXPECT_THROW(s.validate(), DimensionError);
  s = oracle::scalar_system();
  s.H = SparseTensor3(2);
  EXPECT_THROW(s.validate(), DimensionError);
}

TEST(Orthonormalize, OrthonormalAndSpanPreserving) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Matrix m(20, 6);
  for (Index i = 0; i < 20; ++i) {
    for (Index j = 0; j < 6; ++j) m(i, j) = g(rng);
  }
  const auto res = orthonormalize(m, 1e-10);
  ASSERT_EQ(res.Q.cols(), 6);
  EXPECT_LT((res.Q.transpose() * res.Q - Matrix::Identity(6, 6)).norm(), 1e-14);
  EXPECT_LT((m - res.Q * (res.Q.transpose() * m)).norm(), 1e-12);
}

TEST(Orthonormalize, DropsDependentAndZeroColumns) {
  Matrix m = Matrix::Zero(5, 5);
  m.col(0) = Vector::Unit(5, 0);
  m.col(1) = 3.0 * Vector::Unit(5, 0) - 1e-14 * Vector::Unit(5, 1);
  m.col(3) = Vector::Unit(5, 2);
  m.col(4) = Vector::Unit(5, 0) + Vector::Unit(5, 2);
  const auto res = orthonormalize(m, 1e-10);
  EXPECT_EQ(res.kept, (std::vector<Index>{0, 3}));
  EXPECT_EQ(res.dropped, (std::vector<Index>{1, 2, 4}));
}

TEST(Orthonormalize, ScalingColumnsDoesNotChangeTheRankDecision) {
  Matrix m(4, 3);
  m << 1, 1e-12, 0,  //
      0, 1e-12, 1,   //
      0, 0, 1e8,     //
      0, 0, 0;
  const auto a = orthonormalize(m, 1e-10);
  Matrix scaled = m;
  scaled.col(1) *= 1e15;
  scaled.col(2) *= 1e-20;
  const auto b = orthonormalize(scaled, 1e-10);
  EXPECT_EQ(a.kept, b.kept);
  EXPECT_EQ(a.kept.size(), 3u);
}

TEST(Orthonormalize, NothingLeftIsAnError) {
  EXPECT_THROW(orthonormalize(Matrix::Zero(3, 2), 1e-10), RankCollapseError);
}

}  // namespace
}  // namespace qbmor
