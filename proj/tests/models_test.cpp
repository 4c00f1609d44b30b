#include <cmath>
#include <fstream>
#include <functional>

#include <gtest/gtest.h>

#include "qbmor/models.hpp"
#include "qbmor/simulate.hpp"
#include "lifting.hpp"
#include "support.hpp"

namespace qbmor {
namespace {

SimOptions rk4_opts(double dt, double t_end) {
  SimOptions o;
  o.dt = dt;
  o.t_end = t_end;
  o.scheme = Scheme::rk4;
  o.keep_states = true;
  return o;
}

TEST(Models, RcLiftingReproducesTheDiodeLadder) {
  const Index N = 20;
  const auto u = standard_input("exp-decay");
  const auto g = oracle::diode;
  const double dt = 1e-3;
  const auto ref = oracle::rk4(oracle::rc_ladder(N, u), Vector::Zero(N), dt, 3000);
  const QBSystem sys = build_rc(N);
  ASSERT_EQ(sys.order(), 2 * N);
  const Trajectory tr = simulate(sys, make_input(u, 1), rk4_opts(dt, 3.0));
  double err = 0.0, zerr = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const Vector& x = tr.states[k];
    err = std::max(err, std::abs(tr.outputs(0, static_cast<Index>(k)) - ref[k][0]));
    err = std::max(err, (x.head(N) - ref[k]).cwiseAbs().maxCoeff());
    zerr = std::max(zerr, std::abs(x[N] - g(x[0])));
    for (Index i = 1; i < N; ++i) zerr = std::max(zerr, std::abs(x[N + i] - g(x[i - 1] - x[i])));
  }
  EXPECT_LT(err, 1e-5);
  EXPECT_LT(zerr, 1e-5);
}

TEST(Models, BurgersMatchesTheFiniteDifferenceScheme) {
  const Index n = 50;
  const double nu = 0.05, alpha = 1.0, beta = 0.5;
  const auto u = standard_input("cosine");
  const double dt = 1e-4;
  const auto ref = oracle::rk4(oracle::burgers({.n = n, .nu = nu, .alpha = alpha, .beta = beta}, u), Vector::Zero(n),
                               dt, 10000);
  for (const std::string out : {"mean", "right"}) {
    const QBSystem sys = build_burgers({.n = n, .nu = nu, .alpha = alpha, .beta = beta, .output = out});
    const Trajectory tr = simulate(sys, make_input(u, 1), rk4_opts(dt, 1.0));
    double err = 0.0;
    for (std::size_t k = 0; k < ref.size(); k += 10) {
      const double y = out == "mean" ? ref[k].mean() : ref[k][n - 1];
      err = std::max(err, std::abs(tr.outputs(0, static_cast<Index>(k)) - y));
    }
    EXPECT_LT(err, 1e-5) << out;
  }
}

TEST(Models, FhnLiftingReproducesTheCable) {
  const Index m = 30;
  const double eps = 0.015, h = 0.5, gamma = 2.0, gconst = 0.05;
  const auto i0 = standard_input("fhn-stimulus");
  const FhnSpec spec{.nbar = m, .epsilon = eps, .h = h, .gamma = gamma};
  const double dt = 2e-4;
  const auto ref = oracle::rk4(oracle::fhn(spec, i0, gconst), Vector::Zero(2 * m), dt, 10000);
  const QBSystem sys = build_fhn(spec);
  ASSERT_EQ(sys.order(), 3 * m);
  ASSERT_EQ(sys.inputs(), 2);
  ASSERT_EQ(sys.outputs(), 2);
  const Trajectory tr = simulate(sys, make_input(i0, 2, Vector::Constant(1, gconst)), rk4_opts(dt, 2.0));
  double err = 0.0, zerr = 0.0, vmax = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const Vector& x = tr.states[k];
    err = std::max(err, (x.head(2 * m) - ref[k]).cwiseAbs().maxCoeff());
    err = std::max(err, std::abs(tr.outputs(0, static_cast<Index>(k)) - ref[k][0]));
    err = std::max(err, std::abs(tr.outputs(1, static_cast<Index>(k)) - ref[k][m]));
    zerr = std::max(zerr, (x.tail(m) - x.head(m).cwiseAbs2()).cwiseAbs().maxCoeff());
    vmax = std::max(vmax, ref[k][0]);
  }
  EXPECT_GT(vmax, 0.5);  // the stimulus fires a pulse
  EXPECT_LT(err, 1e-5);
  EXPECT_LT(zerr, 1e-5);
}

TEST(Models, ParametersAreValidated) {
  EXPECT_THROW(build_rc(1), Error);
  EXPECT_THROW(build_burgers({.n = 2}), Error);
  EXPECT_THROW(build_burgers({.n = 10, .nu = 0.0}), Error);
  EXPECT_THROW(build_burgers({.n = 10, .output = "left"}), Error);
  EXPECT_THROW(build_fhn({.nbar = 2}), Error);
  EXPECT_THROW(build_fhn({.nbar = 10, .gamma = -1.0}), Error);
  EXPECT_THROW(random_qb_system({.n = 5, .density = 0.0}), Error);
}

TEST(Models, RandomSystemsAreSeeded) {
  const QBSystem a = random_qb_system({.n = 12, .seed = 7});
  const QBSystem b = random_qb_system({.n = 12, .seed = 7});
  const QBSystem c = random_qb_system({.n = 12, .seed = 8});
  EXPECT_TRUE((Matrix(a.A).array() == Matrix(b.A).array()).all());
  EXPECT_EQ(a.H, b.H);
  EXPECT_FALSE(a.H == c.H);
}

TEST(Models, TensorEntriesGrowLinearly) {
  for (Index k : {10, 20, 40}) {
    EXPECT_LE(build_rc(k).H.nnz(), 4 * k) << k;
    EXPECT_LE(build_burgers({.n = k}).H.nnz(), 3 * k) << k;
    EXPECT_LE(build_fhn({.nbar = k}).H.nnz(), 8 * k) << k;
  }
  // affine in the size: equal increments
  for (auto nnz : std::vector<std::function<Index(Index)>>{[](Index k) { return build_rc(k).H.nnz(); },
                                                          [](Index k) { return build_burgers({.n = k}).H.nnz(); },
                                                          [](Index k) { return build_fhn({.nbar = k}).H.nnz(); }}) {
    EXPECT_EQ(nnz(40) - nnz(20), nnz(60) - nnz(40));
  }
}

TEST(Models, BuildersWriteIdenticalFiles) {
  auto files = [](const std::string& tag) {
    const auto dir = oracle::scratch_dir(tag);
    save_system(build_fhn({.nbar = 12}), dir);
    std::string all;
    for (const char* f : {"system.json", "A.mtx", "H.qbt"}) {
      std::ifstream in(dir / f, std::ios::binary);
      all += std::string(std::istreambuf_iterator<char>(in), {});
    }
    return all;
  };
  EXPECT_EQ(files("a"), files("b"));
}

TEST(Models, DefaultSizes) {
  EXPECT_EQ(build_rc(100).order(), 200);
  const QBSystem f = build_fhn({.nbar = 50});
  EXPECT_EQ(f.order(), 150);
  EXPECT_EQ(f.labels.at("benchmark"), "fhn");
  EXPECT_EQ(build_burgers({.n = 40}).order(), 40);
}

}  // namespace
}  // namespace qbmor
