#include "qbmor/reduce.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <thread>

#include "qbmor/errors.hpp"
#include "qbmor/io.hpp"
#include "qbmor/orthonormalize.hpp"

namespace qbmor {

std::string to_string(Method m) {
  switch (m) {
    case Method::imm_s: return "imm-s";
    case Method::igmm_s: return "igmm-s";
    case Method::igmm_r2: return "igmm-r2";
    case Method::igmm_r3: return "igmm-r3";
  }
  return "?";
}

std::string to_string(ProjectionStyle s) {
  return s == ProjectionStyle::one_sided_union ? "one-sided-union" : "two-sided";
}

std::string to_string(SpanMode m) { return m == SpanMode::per_term ? "per-term" : "paper-literal"; }

Method parse_method(const std::string& s) {
  if (s == "imm-s") return Method::imm_s;
  if (s == "igmm-s") return Method::igmm_s;
  if (s == "igmm-r2") return Method::igmm_r2;
  if (s == "igmm-r3") return Method::igmm_r3;
  throw Error("unknown method '" + s + "' (expected imm-s, igmm-s, igmm-r2 or igmm-r3)");
}

ProjectionStyle parse_projection_style(const std::string& s) {
  if (s == "one-sided-union") return ProjectionStyle::one_sided_union;
  if (s == "two-sided") return ProjectionStyle::two_sided;
  throw Error("unknown projection style '" + s + "'");
}

SpanMode parse_span_mode(const std::string& s) {
  if (s == "per-term") return SpanMode::per_term;
  if (s == "paper-literal") return SpanMode::paper_literal;
  throw Error("unknown span mode '" + s + "'");
}

void InterpolationPlan::validate(const QBSystem& sys) const {
  if (points.empty()) throw Error("interpolation plan has no points");
  if (P < 0 || Q < 0 || L < 0) throw Error("moment orders must be non-negative");
  if (L != 0 && method != Method::igmm_r3) throw Error("L is only used by igmm-r3");
  if (!(rank_tol > 0.0)) throw Error("rank tolerance must be positive");
  for (const auto& s : points) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) throw Error("non-finite interpolation point");
  }
  if (directions.empty()) {
    if (sys.inputs() != 1 || sys.outputs() != 1) {
      throw DimensionError("MIMO system needs tangential directions for every interpolation point");
    }
  } else if (directions.size() != points.size()) {
    throw DimensionError("need exactly one tangential direction pair per interpolation point");
  }
}

SisoView InterpolationPlan::view(const QBSystem& sys, std::size_t point) const {
  if (directions.empty()) return make_siso_view(sys);
  return make_siso_view(sys, directions.at(point).input, directions.at(point).output);
}

nlohmann::json to_json(const InterpolationPlan& plan) {
  nlohmann::json j;
  j["method"] = to_string(plan.method);
  j["points"] = nlohmann::json::array();
  for (const auto& s : plan.points) j["points"].push_back({s.real(), s.imag()});
  j["P"] = plan.P;
  j["Q"] = plan.Q;
  j["L"] = plan.L;
  j["directions"] = nlohmann::json::array();
  for (const auto& d : plan.directions) {
    j["directions"].push_back({{"input", std::vector<double>(d.input.data(), d.input.data() + d.input.size())},
                               {"output", std::vector<double>(d.output.data(), d.output.data() + d.output.size())}});
  }
  j["projection_style"] = to_string(plan.style);
  j["span_mode"] = to_string(plan.span_mode);
  j["rank_tol"] = plan.rank_tol;
  return j;
}

InterpolationPlan plan_from_json(const nlohmann::json& j) {
  InterpolationPlan plan;
  plan.method = parse_method(j.at("method").get<std::string>());
  for (const auto& p : j.at("points")) {
    if (p.is_array()) {
      plan.points.emplace_back(p.at(0).get<double>(), p.size() > 1 ? p.at(1).get<double>() : 0.0);
    } else {
      plan.points.emplace_back(p.get<double>(), 0.0);
    }
  }
  plan.P = j.value("P", 0);
  plan.Q = j.value("Q", 0);
  plan.L = j.value("L", 0);
  if (j.contains("directions")) {
    for (const auto& d : j.at("directions")) {
      const auto in = d.at("input").get<std::vector<double>>();
      const auto out = d.at("output").get<std::vector<double>>();
      plan.directions.push_back({Eigen::Map<const Vector>(in.data(), static_cast<Index>(in.size())),
                                 Eigen::Map<const Vector>(out.data(), static_cast<Index>(out.size()))});
    }
  }
  plan.style = parse_projection_style(j.value("projection_style", std::string("one-sided-union")));
  plan.span_mode = parse_span_mode(j.value("span_mode", std::string("per-term")));
  plan.rank_tol = j.value("rank_tol", 1e-10);
  return plan;
}

// igmm-r3 needs, at (s, 2s, 3s):
//  - the H3 partials reuse d^{p',q'}(Z21 + Z22) at (s, 2s) in V-space for
//    p' <= P + Q (the Z33 branch shifts s1-derivatives onto the first slot)
//    and q' <= max(Q, P + L) (Z31/Z32 need q, Z33 needs up to P + L);
//  - reproducing those vectors needs every chain X_t(2s) R_N(s, p) and
//    X_t(2s) R_H(s, p, j) with t <= q2 - j, and X_i(s) B for i <= p2 + q2;
//  - H1 claims at 2s and 3s need left chains of length P + Q and L.
// The two published sets of bounds are folded in with an
// element-wise maximum, so every claimed equality has its span.
R3Bounds igmm_r3_bounds(const InterpolationPlan& plan) {
  const int P = plan.P, Q = plan.Q, L = plan.L;
  R3Bounds b;
  if (plan.span_mode == SpanMode::paper_literal) {
    b.p2 = std::max(P, Q + L);
    b.q2 = std::max(P + L, Q);
    b.v_chain = P + std::max(Q, L);
    b.w_chain2 = std::max(P, Q);
    b.w_chain3 = L;
    return b;
  }
  b.p2 = std::max({P + Q, std::max(Q, P + L), std::max(P, Q + L)});
  b.q2 = std::max({std::max(Q, P + L), P + Q});
  b.v_chain = std::max({P + std::max(Q, L), Q + L, b.p2 + b.q2});
  b.w_chain2 = std::max(P + Q, std::max(P, Q));
  b.w_chain3 = L;
  return b;
}

namespace {

struct PointBuilder {
  const ShiftedSolver& solver;
  const InterpolationPlan& plan;
  std::size_t point;
  SisoView view;
  Complex s1, s2, s3;
  CandidateColumns out;

  PointBuilder(const ShiftedSolver& sv, const InterpolationPlan& pl, std::size_t i)
      : solver(sv), plan(pl), point(i), view(pl.view(sv.system(), i)) {
    s1 = pl.points[i];
    s2 = 2.0 * s1;
    s3 = 3.0 * s1;
  }

  void add_v(CVector v, std::string formula, std::vector<int> orders) {
    out.v.push_back(std::move(v));
    out.v_tags.push_back({point, std::move(formula), std::move(orders), false});
  }
  void add_w(CVector w, std::string formula, std::vector<int> orders) {
    out.w.push_back(std::move(w));
    out.w_tags.push_back({point, std::move(formula), std::move(orders), false});
  }

  std::vector<CVector> v_chain(Complex s, int jmax, const std::string& formula) {
    auto chain = solver.xj_chain(s, jmax, view.b);
    for (int j = 0; j <= jmax; ++j) add_v(chain[j], formula, {j});
    return chain;
  }
  void w_chain(Complex s, int jmax, const std::string& formula) {
    auto chain = solver.xj_chain_transposed(s, jmax, view.c);
    for (int j = 0; j <= jmax; ++j) add_w(chain[j], formula, {j});
  }

  void imm_s() {
    const auto& h = solver.system().H;
    const CVector x = solver.xj_apply(s1, 0, view.b);
    add_v(x, "X_0(s)B", {0});
    CVector g = view.N * x;
    if (!h.empty()) g += h.apply(x, x);
    const bool literal = plan.span_mode == SpanMode::paper_literal;
    // The s-derivative of H2sym(s, s) needs X_0(2s) g in V; the printed
    // X_0(s) g only reproduces the value.
    add_v(solver.xj_apply(literal ? s1 : s2, 0, g), literal ? "X_0(s)[Nx+H(x,x)]" : "X_0(2s)[Nx+H(x,x)]", {0});

    const CVector w = solver.xj_apply_transposed(s2, 0, view.c);
    add_w(w, "X_0(2s)^T C^T", {0});
    CVector z = 0.5 * (view.N.transpose() * w);
    if (!h.empty()) {
      // Mode-2 product with the symmetrized tensor; equals the plain mode-2
      // product whenever H is symmetric in its last two indices.
      z += literal ? h.apply_mode2(x, w) : CVector(0.5 * (h.apply_mode2(x, w) + h.apply_mode3(x, w)));
    }
    add_w(solver.xj_apply_transposed(s1, 0, z), "X_0(s)^T[H2(x,w)+N^T w/2]", {0});
  }

  void igmm_s() {
    v_chain(s1, std::max(plan.P, plan.Q), "X_j(s)B");
    w_chain(s2, plan.P + plan.Q, "X_j(2s)^T C^T");
  }

  void igmm_r2() {
    v_chain(s1, plan.P + plan.Q, "X_j(s)B");
    const int kw = plan.span_mode == SpanMode::paper_literal ? plan.Q : std::max(plan.P, plan.Q);
    w_chain(s2, kw, "X_j(2s)^T C^T");
  }

  void igmm_r3() {
    const auto& h = solver.system().H;
    const R3Bounds bd = igmm_r3_bounds(plan);
    v_chain(s1, bd.v_chain, "X_j(s)B");
    // R_H needs X_i(s) B up to p2 + q2 even when fewer are basis columns.
    const auto xs = solver.xj_chain(s1, std::max(bd.v_chain, bd.p2 + bd.q2), view.b);
    w_chain(s2, bd.w_chain2, "X_j(2s)^T C^T");
    w_chain(s3, bd.w_chain3, "X_j(3s)^T C^T");

    const bool literal = plan.span_mode == SpanMode::paper_literal;
    const Index n = view.b.size();
    for (int p = 0; p <= bd.p2; ++p) {
      // R_N(s, p) = (-1)^p p! N X_p(s) B
      const CVector rn = ((p % 2 ? -1.0 : 1.0) * factorial(p)) * (view.N * xs.at(p));
      if (rn.squaredNorm() > 0.0) {
        const auto chain = solver.xj_chain(s2, bd.q2, rn);
        for (int t = 0; t <= bd.q2; ++t) add_v(chain[t], "X_t(2s)R_N(s,p)", {p, t});
      }
      if (h.empty()) continue;

      std::vector<CVector> rh(bd.q2 + 1, CVector::Zero(n));
      for (int j = 0; j <= bd.q2; ++j) {
        // R_H(s, p, j) = H(sum_k (-1)^{p-k+j} C(p,k) (k+j)! X_{k+j}(s)B (x) (p-k)! X_{p-k}(s)B)
        for (int k = 0; k <= p; ++k) {
          const double coef = ((p - k + j) % 2 ? -1.0 : 1.0) * binomial(p, k) * factorial(k + j) * factorial(p - k);
          rh[j] += coef * h.apply(xs.at(k + j), xs.at(p - k));
        }
      }
      if (literal) {
        // [X_0(2s) R_H(s,p,q) - ... + (-1)^q q! X_q(2s) R_H(s,p,0)] for q <= q2
        for (int q = 0; q <= bd.q2; ++q) {
          CVector comb = CVector::Zero(n);
          for (int j = 0; j <= q; ++j) {
            comb += ((q - j) % 2 ? -1.0 : 1.0) * binomial(q, j) * factorial(q - j) *
                    solver.xj_apply(s2, q - j, rh[j]);
          }
          add_v(comb, "V_H(s,p,q)", {p, q});
        }
      } else {
        for (int j = 0; j <= bd.q2; ++j) {
          if (rh[j].squaredNorm() == 0.0) continue;
          const auto chain = solver.xj_chain(s2, bd.q2 - j, rh[j]);
          for (int t = 0; t <= bd.q2 - j; ++t) add_v(chain[t], "X_t(2s)R_H(s,p,j)", {p, j, t});
        }
      }
    }
  }

  void run() {
    switch (plan.method) {
      case Method::imm_s: imm_s(); break;
      case Method::igmm_s: igmm_s(); break;
      case Method::igmm_r2: igmm_r2(); break;
      case Method::igmm_r3: igmm_r3(); break;
    }
  }
};

void append(std::vector<CVector>& cols, std::vector<ColumnTag>& tags, const std::vector<CVector>& src,
            const std::vector<ColumnTag>& src_tags) {
  cols.insert(cols.end(), src.begin(), src.end());
  tags.insert(tags.end(), src_tags.begin(), src_tags.end());
}

// Real and imaginary parts become separate real columns; imaginary parts of
// real vectors are skipped.
void split_real(const std::vector<CVector>& cols, const std::vector<ColumnTag>& tags, std::vector<Vector>& out,
                std::vector<ColumnTag>& out_tags) {
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.push_back(cols[c].real());
    out_tags.push_back(tags[c]);
    if (cols[c].imag().squaredNorm() > 0.0) {
      out.push_back(cols[c].imag());
      out_tags.push_back(tags[c]);
      out_tags.back().imaginary = true;
    }
  }
}

Matrix stack(const std::vector<Vector>& cols, Index n) {
  Matrix m(n, static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<Index>(c)) = cols[c];
  return m;
}

}  // namespace

CandidateColumns candidate_columns(const ShiftedSolver& solver, const InterpolationPlan& plan, int threads) {
  plan.validate(solver.system());
  const std::size_t m = plan.points.size();
  std::vector<CandidateColumns> per_point(m);
  std::vector<std::exception_ptr> errors(m);

  auto work = [&](std::size_t i) {
    try {
      PointBuilder b(solver, plan, i);
      b.run();
      per_point[i] = std::move(b.out);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t nthreads = std::min<std::size_t>(m, static_cast<std::size_t>(std::max(threads, 1)));
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < m; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < m; i = next++) work(i);
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CandidateColumns all;
  for (const auto& c : per_point) {
    append(all.v, all.v_tags, c.v, c.v_tags);
    append(all.w, all.w_tags, c.w, c.w_tags);
  }
  return all;
}

ProjectionBasis finalize_basis(const CandidateColumns& cand, ProjectionStyle style, double rank_tol) {
  std::vector<Vector> v, w;
  std::vector<ColumnTag> vt, wt;
  split_real(cand.v, cand.v_tags, v, vt);
  split_real(cand.w, cand.w_tags, w, wt);
  const Index n = !v.empty() ? v.front().size() : (!w.empty() ? w.front().size() : 0);

  ProjectionBasis basis;
  basis.style = style;
  if (style == ProjectionStyle::one_sided_union) {
    std::vector<Vector> all = v;
    all.insert(all.end(), w.begin(), w.end());
    std::vector<ColumnTag> tags = vt;
    tags.insert(tags.end(), wt.begin(), wt.end());
    const auto o = orthonormalize(stack(all, n), rank_tol);
    basis.V = o.Q;
    basis.W = o.Q;
    for (auto k : o.kept) basis.v_tags.push_back(tags[k]);
    basis.w_tags = basis.v_tags;
    for (auto k : o.dropped) basis.dropped.push_back(tags[k]);
    return basis;
  }

  const auto ov = orthonormalize(stack(v, n), rank_tol);
  const auto ow = orthonormalize(stack(w, n), rank_tol);
  if (ov.Q.cols() != ow.Q.cols()) {
    throw RankCollapseError("two-sided projection needs V and W of equal rank (got " +
                            std::to_string(ov.Q.cols()) + " and " + std::to_string(ow.Q.cols()) + ")");
  }
  basis.V = ov.Q;
  basis.W = ow.Q;
  for (auto k : ov.kept) basis.v_tags.push_back(vt[k]);
  for (auto k : ow.kept) basis.w_tags.push_back(wt[k]);
  for (auto k : ov.dropped) basis.dropped.push_back(vt[k]);
  for (auto k : ow.dropped) basis.dropped.push_back(wt[k]);
  return basis;
}

ProjectionBasis build_basis(const ShiftedSolver& solver, const InterpolationPlan& plan, int threads) {
  return finalize_basis(candidate_columns(solver, plan, threads), plan.style, plan.rank_tol);
}

ProjectionBasis build_imm_s(const ShiftedSolver& solver, InterpolationPlan plan, int threads) {
  plan.method = Method::imm_s;
  return build_basis(solver, plan, threads);
}
ProjectionBasis build_igmm_s(const ShiftedSolver& solver, InterpolationPlan plan, int threads) {
  plan.method = Method::igmm_s;
  return build_basis(solver, plan, threads);
}
ProjectionBasis build_igmm_r2(const ShiftedSolver& solver, InterpolationPlan plan, int threads) {
  plan.method = Method::igmm_r2;
  return build_basis(solver, plan, threads);
}
ProjectionBasis build_igmm_r3(const ShiftedSolver& solver, InterpolationPlan plan, int threads) {
  plan.method = Method::igmm_r3;
  return build_basis(solver, plan, threads);
}

QBSystem reproject(const QBSystem& sys, const ProjectionBasis& basis) { return project(sys, basis.V, basis.W); }

ReducedModel reduce(const QBSystem& sys, const InterpolationPlan& plan, int threads) {
  ShiftedSolver solver(sys);
  ReducedModel model;
  model.plan = plan;
  model.basis = build_basis(solver, plan, threads);
  model.system = reproject(sys, model.basis);
  model.system.labels["method"] = to_string(plan.method);
  model.factorizations = solver.factorization_count();
  return model;
}

namespace {

nlohmann::json tag_json(const ColumnTag& t) {
  return {{"point", t.point}, {"formula", t.formula}, {"orders", t.orders}, {"part", t.imaginary ? "imag" : "real"}};
}

}  // namespace

nlohmann::json reduction_json(const ReducedModel& model) {
  nlohmann::json j;
  j["method"] = to_string(model.plan.method);
  j["plan"] = to_json(model.plan);
  j["order"] = model.basis.order();
  j["factorizations"] = model.factorizations;
  j["columns"] = nlohmann::json::array();
  for (const auto& t : model.basis.v_tags) j["columns"].push_back(tag_json(t));
  if (model.basis.style == ProjectionStyle::two_sided) {
    j["w_columns"] = nlohmann::json::array();
    for (const auto& t : model.basis.w_tags) j["w_columns"].push_back(tag_json(t));
  }
  j["dropped"] = nlohmann::json::array();
  for (const auto& t : model.basis.dropped) j["dropped"].push_back(tag_json(t));
  if (model.plan.method == Method::igmm_r3) {
    const auto b = igmm_r3_bounds(model.plan);
    j["bounds"] = {{"v_chain", b.v_chain}, {"w_chain_2s", b.w_chain2}, {"w_chain_3s", b.w_chain3},
                   {"p2", b.p2}, {"q2", b.q2}};
  }
  return j;
}

void save_reduced_model(const ReducedModel& model, const std::filesystem::path& dir) {
  save_system(model.system, dir);
  write_matrix_market(to_sparse(model.basis.V), dir / "V.mtx");
  write_matrix_market(to_sparse(model.basis.W), dir / "W.mtx");
  write_file_atomically(dir / "reduction.json", dump_json(reduction_json(model)) + "\n");
}

ReducedModel load_reduced_model(const std::filesystem::path& dir) {
  ReducedModel model;
  model.system = load_system(dir / "system.json");
  std::ifstream in(dir / "reduction.json");
  if (!in) throw IoError("cannot open " + (dir / "reduction.json").string());
  nlohmann::json j;
  try {
    in >> j;
    model.plan = plan_from_json(j.at("plan"));
    model.factorizations = j.value("factorizations", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw IoError((dir / "reduction.json").string() + ": " + e.what());
  }
  model.basis.style = model.plan.style;
  model.basis.V = Matrix(read_matrix_market(dir / "V.mtx"));
  model.basis.W = Matrix(read_matrix_market(dir / "W.mtx"));
  if (model.basis.V.cols() != model.system.order() || model.basis.W.cols() != model.system.order()) {
    throw DimensionError("basis files do not match the reduced order in " + dir.string());
  }
  return model;
}

}  // namespace qbmor
