#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "qbmor/models.hpp"
#include "qbmor/reduce.hpp"
#include "support.hpp"

namespace qbmor {
namespace {

InterpolationPlan make_plan(Method m, std::vector<Complex> pts, int P, int Q, int L = 0) {
  InterpolationPlan plan;
  plan.method = m;
  plan.points = std::move(pts);
  plan.P = P;
  plan.Q = Q;
  plan.L = L;
  return plan;
}

double residual_outside(const Matrix& basis, const CVector& v) {
  const CMatrix q = basis.cast<Complex>();
  return (v - q * (q.adjoint() * v)).norm() / v.norm();
}

struct MethodCase {
  Method method;
  int P, Q, L;
  double tol;
};

class MomentMatching : public ::testing::TestWithParam<std::tuple<MethodCase, std::uint64_t>> {};

TEST_P(MomentMatching, EveryClaimedEqualityHolds) {
  const auto [c, seed] = GetParam();
  const QBSystem sys = random_qb_system({.n = 30, .density = 0.05, .seed = seed});
  const auto plan = make_plan(c.method, {0.5, 2.0}, c.P, c.Q, c.L);
  const ReducedModel red = reduce(sys, plan);
  ASSERT_LE(red.basis.order(), sys.order());
  const auto report = verify_moments(sys, red.system, plan, c.tol);
  EXPECT_FALSE(report.checks.empty());
  for (const auto& chk : report.checks) {
    EXPECT_TRUE(chk.pass) << chk.claim.label << " rel=" << chk.rel_mismatch;
  }
}

std::string case_name(const ::testing::TestParamInfo<std::tuple<MethodCase, std::uint64_t>>& info) {
  const auto& [c, seed] = info.param;
  std::string name = to_string(c.method) + "_P" + std::to_string(c.P) + "Q" + std::to_string(c.Q) + "L" +
                     std::to_string(c.L) + "_seed" + std::to_string(seed);
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

INSTANTIATE_TEST_SUITE_P(
    Methods, MomentMatching,
    ::testing::Combine(::testing::Values(MethodCase{Method::imm_s, 0, 0, 0, 1e-6},
                                         MethodCase{Method::igmm_s, 1, 1, 0, 1e-7},
                                         MethodCase{Method::igmm_s, 2, 1, 0, 1e-7},
                                         MethodCase{Method::igmm_r2, 1, 1, 0, 1e-7},
                                         MethodCase{Method::igmm_r2, 3, 2, 0, 1e-7},
                                         MethodCase{Method::igmm_r3, 1, 1, 1, 1e-7},
                                         MethodCase{Method::igmm_r3, 1, 0, 1, 1e-7}),
                       ::testing::Values(21u, 22u)),
    case_name);

TEST(Reduce, ThirdOrderMatchingIsNontrivialOnALargerSystem) {
  // at n = 30 the igmm-r3 basis fills the whole space; here it cannot
  const QBSystem sys = random_qb_system({.n = 100, .density = 0.02, .seed = 5});
  const auto plan = make_plan(Method::igmm_r3, {0.5, 2.0}, 1, 1, 1);
  const ReducedModel red = reduce(sys, plan);
  EXPECT_LT(red.basis.order(), sys.order());
  EXPECT_TRUE(verify_moments(sys, red.system, plan, 1e-7).all_pass());
}

TEST(Reduce, ResolventChainsLieInTheBasis) {
  const QBSystem sys = random_qb_system({.n = 40, .density = 0.05, .seed = 3});
  const auto plan = make_plan(Method::igmm_r2, {0.5, 2.0}, 2, 1);
  const ReducedModel red = reduce(sys, plan);
  ShiftedSolver solver(sys);
  const CVector b = Matrix(sys.B).col(0).cast<Complex>();
  const CVector c = Matrix(sys.C).row(0).transpose().cast<Complex>();
  for (Complex s : plan.points) {
    for (const auto& v : solver.xj_chain(s, plan.P + plan.Q, b)) EXPECT_LT(residual_outside(red.basis.V, v), 1e-10);
    for (const auto& w : solver.xj_chain_transposed(2.0 * s, std::max(plan.P, plan.Q), c)) {
      EXPECT_LT(residual_outside(red.basis.W, w), 1e-10);
    }
  }
}

TEST(Reduce, OneFactorizationPerDistinctShift) {
  const QBSystem sys = random_qb_system({.n = 30, .seed = 2});
  EXPECT_EQ(reduce(sys, make_plan(Method::igmm_r2, {0.5, 2.0, 4.0}, 2, 2)).factorizations, 5u);  // 0.5,1,2,4,8
  EXPECT_EQ(reduce(sys, make_plan(Method::igmm_s, {1.0}, 3, 3)).factorizations, 2u);
  // igmm-r3 at one point: s, 2s, 3s plus the difference shifts s and 2s
  EXPECT_EQ(reduce(sys, make_plan(Method::igmm_r3, {0.7}, 1, 1, 1)).factorizations, 3u);
}

TEST(Reduce, ScalarSystemReducesToOrderOne) {
  const QBSystem s = oracle::scalar_system();
  const auto imm = make_plan(Method::imm_s, {1.0}, 0, 0);
  const ReducedModel red = reduce(s, imm);
  EXPECT_EQ(red.basis.order(), 1);
  ShiftedSolver a(s), b(red.system);
  EXPECT_LT(relative_mismatch(TransferEvaluator(a, make_siso_view(s)).h2_sym(1.0, 1.0),
                              TransferEvaluator(b, make_siso_view(red.system)).h2_sym(1.0, 1.0)),
            1e-15);
  EXPECT_EQ(reduce(s, make_plan(Method::igmm_r2, {1.0}, 0, 0)).basis.order(), 1);
}

TEST(Reduce, LinearSystemDropsTheNonlinearCandidate) {
  QBSystem s = random_qb_system({.n = 12, .seed = 8});
  s.N[0] = SparseMatrix(12, 12);
  s.H = SparseTensor3(12);
  ShiftedSolver solver(s);
  const auto cand = candidate_columns(solver, make_plan(Method::imm_s, {1.0}, 0, 0));
  ASSERT_EQ(cand.v.size(), 2u);
  EXPECT_EQ(cand.v[1].norm(), 0.0);
  const auto basis = finalize_basis(cand, ProjectionStyle::two_sided, 1e-10);
  EXPECT_EQ(basis.V.cols(), 1);
}

TEST(Reduce, CandidateCountsFollowTheOrderBounds) {
  const QBSystem sys = random_qb_system({.n = 20, .seed = 4});
  ShiftedSolver solver(sys);
  const auto s = candidate_columns(solver, make_plan(Method::igmm_s, {1.0}, 1, 1));
  EXPECT_EQ(s.v.size(), 2u);
  EXPECT_EQ(s.w.size(), 3u);
  const auto r2 = candidate_columns(solver, make_plan(Method::igmm_r2, {1.0}, 3, 2));
  EXPECT_EQ(r2.v.size(), 6u);
  EXPECT_EQ(r2.w.size(), 4u);
  auto literal = make_plan(Method::igmm_r2, {1.0}, 3, 2);
  literal.span_mode = SpanMode::paper_literal;
  EXPECT_EQ(candidate_columns(solver, literal).w.size(), 3u);
}

TEST(Reduce, TwoSidedProjectionMatchesWhenRanksAgree) {
  const QBSystem sys = random_qb_system({.n = 30, .seed = 12});
  auto plan = make_plan(Method::imm_s, {0.5, 2.0}, 0, 0);
  plan.style = ProjectionStyle::two_sided;
  const ReducedModel red = reduce(sys, plan);
  EXPECT_EQ(red.basis.V.cols(), 4);
  EXPECT_TRUE(verify_moments(sys, red.system, plan, 1e-6).all_pass());
  auto uneven = make_plan(Method::igmm_s, {1.0}, 1, 1);
  uneven.style = ProjectionStyle::two_sided;
  EXPECT_THROW(reduce(sys, uneven), RankCollapseError);
}

TEST(Reduce, PrintedSymmetricSpanMissesTheDerivativeMoments) {
  // The literal imm-s vectors use X0(sigma) where the second-kernel moments
  // need X0(2 sigma); the derivative equalities then fail visibly.
  const QBSystem sys = random_qb_system({.n = 30, .seed = 21});
  auto plan = make_plan(Method::imm_s, {0.5, 2.0}, 0, 0);
  plan.span_mode = SpanMode::paper_literal;
  const auto report = verify_moments(sys, reduce(sys, plan).system, plan, 1e-6);
  EXPECT_FALSE(report.all_pass());
  EXPECT_GT(report.max_rel_mismatch, 1e-6);
  plan.span_mode = SpanMode::per_term;
  EXPECT_TRUE(verify_moments(sys, reduce(sys, plan).system, plan, 1e-6).all_pass());
}

TEST(Reduce, ComplexPointsGiveARealBasis) {
  const QBSystem sys = random_qb_system({.n = 30, .seed = 13});
  const auto plan = make_plan(Method::igmm_r2, {Complex(0.5, 1.0)}, 1, 1);
  const ReducedModel red = reduce(sys, plan);
  EXPECT_TRUE(verify_moments(sys, red.system, plan, 1e-7).all_pass());
  std::set<bool> parts;
  for (const auto& t : red.basis.v_tags) parts.insert(t.imaginary);
  EXPECT_EQ(parts.size(), 2u);
}

TEST(Reduce, TangentialDirectionsForMultipleInputs) {
  const QBSystem sys = random_qb_system({.n = 30, .inputs = 2, .outputs = 2, .seed = 14});
  auto plan = make_plan(Method::igmm_r2, {0.5, 2.0}, 1, 1);
  EXPECT_THROW(plan.validate(sys), DimensionError);
  plan.directions = {{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)}, {Eigen::Vector2d(0.6, 0.8), Eigen::Vector2d(1, 1)}};
  const ReducedModel red = reduce(sys, plan);
  EXPECT_TRUE(verify_moments(sys, red.system, plan, 1e-7).all_pass());
}

TEST(Reduce, PlansAreValidated) {
  const QBSystem sys = random_qb_system({.n = 10, .seed = 1});
  EXPECT_THROW(make_plan(Method::igmm_r2, {}, 1, 1).validate(sys), Error);
  EXPECT_THROW(make_plan(Method::igmm_r2, {1.0}, 1, 1, 1).validate(sys), Error);
  EXPECT_THROW(make_plan(Method::igmm_s, {1.0}, -1, 1).validate(sys), Error);
  EXPECT_NO_THROW(make_plan(Method::igmm_r3, {1.0}, 1, 1, 1).validate(sys));
  EXPECT_THROW(parse_method("imm-x"), Error);
}

TEST(Reduce, TruncatedBasisFailsVerification) {
  const QBSystem sys = random_qb_system({.n = 30, .seed = 15});
  const auto plan = make_plan(Method::igmm_r2, {0.5, 2.0}, 1, 1);
  const ReducedModel red = reduce(sys, plan);
  const Matrix V = red.basis.V.leftCols(red.basis.order() - 3);
  const auto report = verify_moments(sys, project(sys, V, V), plan, 1e-6);
  EXPECT_FALSE(report.all_pass());
}

TEST(Reduce, IdentityProjectionPassesAtTightTolerance) {
  const QBSystem sys = random_qb_system({.n = 20, .seed = 16});
  const Matrix I = Matrix::Identity(20, 20);
  const auto plan = make_plan(Method::igmm_r3, {0.5}, 1, 1, 1);
  EXPECT_TRUE(verify_moments(sys, project(sys, I, I), plan, 1e-12).all_pass());
}

TEST(Reduce, ThreadCountDoesNotChangeTheBasis) {
  const QBSystem sys = random_qb_system({.n = 40, .seed = 17});
  const auto plan = make_plan(Method::igmm_r3, {0.5, 1.0, 3.0}, 1, 1, 1);
  const ReducedModel a = reduce(sys, plan, 1), b = reduce(sys, plan, 4);
  EXPECT_TRUE((a.basis.V.array() == b.basis.V.array()).all());
}

TEST(Reduce, PlanAndModelRoundTrip) {
  auto plan = make_plan(Method::igmm_r3, {Complex(0.1, 0.2), 10.0}, 1, 1, 2);
  plan.span_mode = SpanMode::paper_literal;
  plan.rank_tol = 1e-9;
  const auto back = plan_from_json(to_json(plan));
  EXPECT_EQ(back.points, plan.points);
  EXPECT_EQ(back.L, 2);
  EXPECT_EQ(back.span_mode, SpanMode::paper_literal);
  EXPECT_EQ(back.rank_tol, 1e-9);

  const QBSystem sys = random_qb_system({.n = 30, .seed = 18});
  const ReducedModel red = reduce(sys, make_plan(Method::igmm_r2, {0.5, 2.0}, 1, 1));
  const auto dir = oracle::scratch_dir("red");
  save_reduced_model(red, dir);
  const ReducedModel loaded = load_reduced_model(dir);
  EXPECT_TRUE((loaded.basis.V.array() == red.basis.V.array()).all());
  const QBSystem again = reproject(sys, loaded.basis);
  EXPECT_TRUE((Matrix(again.A).array() == Matrix(loaded.system.A).array()).all());
  EXPECT_EQ(again.H, loaded.system.H);
}

}  // namespace
}  // namespace qbmor
