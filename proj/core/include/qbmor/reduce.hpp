#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qbmor/shifted_solve.hpp"
#include "qbmor/system.hpp"
#include "qbmor/transfer.hpp"

namespace qbmor {

enum class Method { imm_s, igmm_s, igmm_r2, igmm_r3 };
enum class ProjectionStyle { one_sided_union, two_sided };

// per_term inserts every resolvent-chain term as its own column, a superset
// of the spans the matching proofs need. paper_literal reproduces the printed
// column combinations and order bounds instead.
enum class SpanMode { per_term, paper_literal };

std::string to_string(Method m);
std::string to_string(ProjectionStyle s);
std::string to_string(SpanMode m);
Method parse_method(const std::string& s);
ProjectionStyle parse_projection_style(const std::string& s);
SpanMode parse_span_mode(const std::string& s);

struct TangentialDirections {
  Vector input;   // d, length m_in
  Vector output;  // e, length p_out
};

struct InterpolationPlan {
  Method method = Method::igmm_r2;
  std::vector<Complex> points;
  int P = 0;
  int Q = 0;
  int L = 0;  // igmm-r3 only
  // Empty for SISO systems; otherwise one pair per point.
  std::vector<TangentialDirections> directions;
  ProjectionStyle style = ProjectionStyle::one_sided_union;
  SpanMode span_mode = SpanMode::per_term;
  double rank_tol = 1e-10;

  void validate(const QBSystem& sys) const;
  SisoView view(const QBSystem& sys, std::size_t point) const;
};

nlohmann::json to_json(const InterpolationPlan& plan);
InterpolationPlan plan_from_json(const nlohmann::json& j);

struct ColumnTag {
  std::size_t point = 0;
  std::string formula;
  std::vector<int> orders;
  bool imaginary = false;  // imaginary part of a complex candidate
};

// Raw candidate vectors before orthonormalization, in deterministic order.
struct CandidateColumns {
  std::vector<CVector> v;
  std::vector<ColumnTag> v_tags;
  std::vector<CVector> w;
  std::vector<ColumnTag> w_tags;
};

struct ProjectionBasis {
  Matrix V;
  Matrix W;  // equals V for one-sided projections
  std::vector<ColumnTag> v_tags;
  std::vector<ColumnTag> w_tags;
  std::vector<ColumnTag> dropped;
  ProjectionStyle style = ProjectionStyle::one_sided_union;

  Index order() const noexcept { return V.cols(); }
};

// The vectors named by each method's span definition. Interpolation points
// are processed on up to `threads` workers; the output order depends only on
// the plan.
CandidateColumns candidate_columns(const ShiftedSolver& solver, const InterpolationPlan& plan,
                                   int threads = 1);

ProjectionBasis build_basis(const ShiftedSolver& solver, const InterpolationPlan& plan, int threads = 1);
ProjectionBasis build_imm_s(const ShiftedSolver& solver, InterpolationPlan plan, int threads = 1);
ProjectionBasis build_igmm_s(const ShiftedSolver& solver, InterpolationPlan plan, int threads = 1);
ProjectionBasis build_igmm_r2(const ShiftedSolver& solver, InterpolationPlan plan, int threads = 1);
ProjectionBasis build_igmm_r3(const ShiftedSolver& solver, InterpolationPlan plan, int threads = 1);

// Orthonormalizes candidates (real and imaginary parts split) per the style.
ProjectionBasis finalize_basis(const CandidateColumns& cand, ProjectionStyle style, double rank_tol);

struct ReducedModel {
  QBSystem system;
  ProjectionBasis basis;
  InterpolationPlan plan;
  std::size_t factorizations = 0;
};

ReducedModel reduce(const QBSystem& sys, const InterpolationPlan& plan, int threads = 1);

// Re-derives the reduced matrices from the stored basis.
QBSystem reproject(const QBSystem& sys, const ProjectionBasis& basis);

nlohmann::json reduction_json(const ReducedModel& model);

// dir/system.json (reduced system), dir/reduction.json, dir/V.mtx, dir/W.mtx.
void save_reduced_model(const ReducedModel& model, const std::filesystem::path& dir);
// Restores system, plan and basis; column tags are not read back.
ReducedModel load_reduced_model(const std::filesystem::path& dir);

// Order bounds actually used by igmm-r3 (see reduce.cpp for the derivation).
struct R3Bounds {
  int v_chain = 0;   // X_j(s) B, j <= v_chain
  int w_chain2 = 0;  // X_j(2s)^T C^T
  int w_chain3 = 0;  // X_j(3s)^T C^T
  int p2 = 0;        // R_N / R_H first index
  int q2 = 0;        // chain length at 2s applied to R_N / R_H
};
R3Bounds igmm_r3_bounds(const InterpolationPlan& plan);

// ---- moment verification -------------------------------------------------

struct MomentClaim {
  std::size_t point = 0;
  MomentRequest request;
  std::string label;
};

// Every equality asserted by the method's matching theorem, per point.
std::vector<MomentClaim> theorem_claims(const InterpolationPlan& plan);

struct MomentCheck {
  MomentClaim claim;
  Complex full;
  Complex reduced;
  double abs_mismatch = 0.0;
  double rel_mismatch = 0.0;
  bool pass = false;
};

struct MomentsReport {
  std::vector<MomentCheck> checks;
  double tolerance = 1e-6;
  double max_rel_mismatch = 0.0;
  bool all_pass() const;
};

MomentsReport verify_moments(const QBSystem& full, const QBSystem& reduced, const InterpolationPlan& plan,
                             double tol = 1e-6);

nlohmann::json to_json(const MomentsReport& report);

}  // namespace qbmor
