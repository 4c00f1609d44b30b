#include <algorithm>
#include <sstream>

#include "qbmor/reduce.hpp"

namespace qbmor {

namespace {

std::string claim_label(const MomentRequest& r) {
  std::ostringstream os;
  static const char* points[3] = {"s", "2s", "3s"};
  switch (r.subsystem) {
    case 1: os << "H1"; break;
    case 2: os << (r.form == Form::regular ? "H2reg" : "H2sym"); break;
    default: os << "H3reg"; break;
  }
  os << " d^(";
  for (int v = 0; v < r.subsystem; ++v) os << (v ? "," : "") << r.orders[v];
  os << ") @ (";
  if (r.subsystem == 1) {
    // H1 claims are made at s, 2s or 3s; recorded in the point itself.
    os << "x";
  } else if (r.form == Form::symmetric) {
    os << "s,s";
  } else {
    for (int v = 0; v < r.subsystem; ++v) os << (v ? "," : "") << points[v];
  }
  os << ")";
  return os.str();
}

}  // namespace

std::vector<MomentClaim> theorem_claims(const InterpolationPlan& plan) {
  std::vector<MomentClaim> claims;
  const int P = plan.P, Q = plan.Q, L = plan.L;
  for (std::size_t i = 0; i < plan.points.size(); ++i) {
    const Complex s1 = plan.points[i];
    const Complex s2 = 2.0 * s1;
    const Complex s3 = 3.0 * s1;
    auto h1 = [&](Complex s, int maxp, const char* where) {
      for (int p = 0; p <= maxp; ++p) {
        MomentRequest r{1, Form::regular, {s}, {p, 0, 0}};
        claims.push_back({i, r, "H1 d^(" + std::to_string(p) + ") @ " + where});
      }
    };
    auto h2 = [&](Form f, Complex a, Complex b, int maxp, int maxq) {
      for (int p = 0; p <= maxp; ++p) {
        for (int q = 0; q <= maxq; ++q) {
          MomentRequest r{2, f, {a, b}, {p, q, 0}};
          claims.push_back({i, r, claim_label(r)});
        }
      }
    };
    switch (plan.method) {
      case Method::imm_s: {
        h1(s1, 0, "s");
        for (auto o : {std::array<int, 3>{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}) {
          MomentRequest r{2, Form::symmetric, {s1, s1}, o};
          claims.push_back({i, r, claim_label(r)});
        }
        break;
      }
      case Method::igmm_s:
        h1(s1, std::max(P, Q), "s");
        h1(s2, P + Q, "2s");
        h2(Form::symmetric, s1, s1, P, Q);
        break;
      case Method::igmm_r2:
        h1(s1, P + Q, "s");
        h1(s2, std::max(P, Q), "2s");
        h2(Form::regular, s1, s2, P, Q);
        break;
      case Method::igmm_r3:
        h1(s1, P + std::max(Q, L), "s");
        h1(s2, P + Q, "2s");
        h1(s3, L, "3s");
        h2(Form::regular, s1, s2, std::max(Q, P + L), P + Q);
        for (int p = 0; p <= P; ++p) {
          for (int q = 0; q <= Q; ++q) {
            for (int l = 0; l <= L; ++l) {
              MomentRequest r{3, Form::regular, {s1, s2, s3}, {p, q, l}};
              claims.push_back({i, r, claim_label(r)});
            }
          }
        }
        break;
    }
  }
  return claims;
}

bool MomentsReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const MomentCheck& c) { return c.pass; });
}

MomentsReport verify_moments(const QBSystem& full, const QBSystem& reduced, const InterpolationPlan& plan,
                             double tol) {
  plan.validate(full);
  ShiftedSolver full_solver(full);
  ShiftedSolver red_solver(reduced);
  MomentsReport report;
  report.tolerance = tol;
  std::size_t current = static_cast<std::size_t>(-1);
  std::optional<TransferEvaluator> fe, re;
  for (const auto& claim : theorem_claims(plan)) {
    if (claim.point != current) {
      current = claim.point;
      fe.emplace(full_solver, plan.view(full, current));
      re.emplace(red_solver, plan.view(reduced, current));
    }
    MomentCheck c;
    c.claim = claim;
    c.full = fe->evaluate(claim.request).value;
    c.reduced = re->evaluate(claim.request).value;
    c.abs_mismatch = std::abs(c.full - c.reduced);
    c.rel_mismatch = relative_mismatch(c.full, c.reduced);
    c.pass = c.rel_mismatch < tol;
    report.max_rel_mismatch = std::max(report.max_rel_mismatch, c.rel_mismatch);
    report.checks.push_back(std::move(c));
  }
  return report;
}

nlohmann::json to_json(const MomentsReport& report) {
  nlohmann::json j;
  j["tolerance"] = report.tolerance;
  j["max_rel_mismatch"] = report.max_rel_mismatch;
  j["all_pass"] = report.all_pass();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : report.checks) {
    nlohmann::json pt = nlohmann::json::array();
    for (const auto& s : c.claim.request.point) pt.push_back({s.real(), s.imag()});
    j["checks"].push_back({{"point_index", c.claim.point},
                           {"claim", c.claim.label},
                           {"subsystem", c.claim.request.subsystem},
                           {"form", c.claim.request.form == Form::regular ? "regular" : "symmetric"},
                           {"at", pt},
                           {"orders", c.claim.request.orders},
                           {"full", {c.full.real(), c.full.imag()}},
                           {"reduced", {c.reduced.real(), c.reduced.imag()}},
                           {"abs_mismatch", c.abs_mismatch},
                           {"rel_mismatch", c.rel_mismatch},
                           {"status", c.pass ? "PASS" : "FAIL"}});
  }
  return j;
}

}  // namespace qbmor
