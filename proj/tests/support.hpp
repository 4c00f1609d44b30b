#pragma once

// Dense, deliberately naive re-implementations used as oracles: explicit
// inverses, explicit Kronecker products, the n x n^2 matricization.

#include <random>

#include <Eigen/Dense>

#include "qbmor/qbmor.hpp"

namespace qbmor::oracle {

// E = 1, A = -1, N = 0.5, H = 0.25, B = C = 1.
inline QBSystem scalar_system() {
  QBSystem s;
  auto one = [](double v) {
    SparseMatrix m(1, 1);
    m.insert(0, 0) = v;
    return m;
  };
  s.E = one(1.0);
  s.A = one(-1.0);
  s.N = {one(0.5)};
  s.H = SparseTensor3(1, {{0, 0, 0, 0.25}});
  s.B = one(1.0);
  s.C = one(1.0);
  return s;
}

inline Matrix mode1(const SparseTensor3& h) {
  const Index n = h.dim();
  Matrix m = Matrix::Zero(n, n * n);
  for (const auto& e : h.entries()) m(e.i, e.j * n + e.k) += e.value;
  return m;
}

inline CVector dense_kron(const CVector& x, const CVector& y) {
  CVector out(x.size() * y.size());
  for (Index j = 0; j < x.size(); ++j) {
    for (Index k = 0; k < y.size(); ++k) out[j * y.size() + k] = x[j] * y[k];
  }
  return out;
}

struct Dense {
  CMatrix E, A, N, H1;
  CVector b, c;

  explicit Dense(const QBSystem& s, Index in = 0, Index out = 0)
      : E(Matrix(s.E).cast<Complex>()),
        A(Matrix(s.A).cast<Complex>()),
        N(Matrix(s.N.at(static_cast<std::size_t>(in))).cast<Complex>()),
        H1(mode1(s.H).cast<Complex>()),
        b(Matrix(s.B).col(in).cast<Complex>()),
        c(Matrix(s.C).row(out).transpose().cast<Complex>()) {}

  CMatrix inv(Complex s) const { return (s * E - A).inverse(); }
  // X_j(s) = [(sE - A)^{-1} E]^j (sE - A)^{-1}
  CMatrix X(Complex s, int j) const {
    const CMatrix r = inv(s);
    CMatrix out = r;
    for (int k = 0; k < j; ++k) out = r * E * out;
    return out;
  }
  CVector H(const CVector& x, const CVector& y) const { return H1 * dense_kron(x, y); }

  Complex h1(Complex s) const { return c.dot(X(s, 0) * b); }
  CVector Z(Complex s1, Complex s2) const {
    return N * X(s1, 0) * b + H(X(s2 - s1, 0) * b, X(s1, 0) * b);
  }
  Complex h2_reg(Complex s1, Complex s2) const { return c.dot(X(s2, 0) * Z(s1, s2)); }
  Complex h2_sym(Complex s1, Complex s2) const {
    const CVector x1 = X(s1, 0) * b, x2 = X(s2, 0) * b;
    return 0.5 * c.dot(X(s1 + s2, 0) * (N * (x1 + x2) + H(x1, x2) + H(x2, x1)));
  }
  Complex h3_reg(Complex s1, Complex s2, Complex s3) const {
    const CVector y = X(s2, 0) * Z(s1, s2);
    const CVector inner = N * y + H(X(s3 - s2, 0) * b, y) + H(X(s3 - s1, 0) * Z(s2 - s1, s3 - s1), X(s1, 0) * b);
    return c.dot(X(s3, 0) * inner);
  }
};

inline std::vector<Complex> random_points(std::uint64_t seed, int count, double lo, double hi, bool complex) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> re(lo, hi), im(-1.0, 1.0);
  std::vector<Complex> pts;
  for (int k = 0; k < count; ++k) pts.emplace_back(re(rng), complex ? im(rng) : 0.0);
  return pts;
}

}  // namespace qbmor::oracle

#include <filesystem>

#include <gtest/gtest.h>

namespace qbmor::oracle {

// Fresh per-test directory under the gtest temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  std::filesystem::path p = std::filesystem::path(::testing::TempDir()) / "qbmor-tests" /
                            (std::string(info ? info->test_suite_name() : "x") + "." + (info ? info->name() : "x")) /
                            name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace qbmor::oracle
