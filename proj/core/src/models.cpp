#include "qbmor/models.hpp"

#include <map>
#include <random>

#include "qbmor/errors.hpp"
#include "qbmor/io.hpp"

namespace qbmor {

namespace {

SparseMatrix identity(Index n) {
  SparseMatrix e(n, n);
  e.setIdentity();
  return e;
}

SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Triplet>& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.prune(0.0);
  m.makeCompressed();
  return m;
}

}  // namespace

QBSystem build_rc(Index nodes) {
  if (nodes < 2) throw Error("RC ladder needs at least 2 nodes");
  const Index N = nodes;
  const Index n = 2 * N;
  const double k = 40.0;
  auto z = [N](Index node) { return N + node; };  // node is 0-based

  // v'_node as a linear form in z plus a coefficient on u.
  struct Form {
    std::map<Index, double> zc;
    double uc = 0.0;
  };
  std::vector<Form> vdot(static_cast<std::size_t>(N));
  vdot[0].zc[z(0)] = -1.0;
  vdot[0].zc[z(1)] = -1.0;
  vdot[0].uc = 1.0;
  for (Index i = 1; i + 1 < N; ++i) {
    vdot[i].zc[z(i)] = 1.0;
    vdot[i].zc[z(i + 1)] = -1.0;
  }
  vdot[N - 1].zc[z(N - 1)] = 1.0;

  std::vector<Triplet> a, nb, b;
  std::vector<TensorEntry> h;
  for (Index i = 0; i < N; ++i) {
    for (const auto& [col, c] : vdot[i].zc) a.emplace_back(i, col, c);
    if (vdot[i].uc != 0.0) b.emplace_back(i, 0, vdot[i].uc);
  }
  // z' = k (z + 1) l with l = v'_1 for z_1 and v'_{i-1} - v'_i otherwise.
  for (Index i = 0; i < N; ++i) {
    Form l = vdot[i == 0 ? 0 : i - 1];
    if (i > 0) {
      for (const auto& [col, c] : vdot[i].zc) l.zc[col] -= c;
      l.uc -= vdot[i].uc;
    }
    const Index row = z(i);
    for (const auto& [col, c] : l.zc) {
      if (c == 0.0) continue;
      a.emplace_back(row, col, k * c);
      h.push_back({row, row, col, k * c});
    }
    if (l.uc != 0.0) {
      b.emplace_back(row, 0, k * l.uc);
      nb.emplace_back(row, row, k * l.uc);
    }
  }

  QBSystem sys;
  sys.E = identity(n);
  sys.A = from_triplets(n, n, a);
  sys.N = {from_triplets(n, n, nb)};
  sys.H = SparseTensor3(n, std::move(h));
  sys.B = from_triplets(n, 1, b);
  sys.C = from_triplets(1, n, {Triplet(0, 0, 1.0)});
  sys.labels = {{"benchmark", "rc-ladder"}, {"nodes", std::to_string(N)}};
  sys.validate();
  return sys;
}

QBSystem build_burgers(const BurgersSpec& spec) {
  const Index n = spec.n;
  if (n < 3) throw Error("Burgers discretization needs n >= 3");
  if (!(spec.nu > 0.0)) throw Error("viscosity must be positive");
  if (spec.output != "mean" && spec.output != "right") throw Error("Burgers output must be 'mean' or 'right'");
  const double dx = 1.0 / static_cast<double>(n + 1);
  const double denom = spec.alpha - spec.beta / dx;
  if (denom == 0.0) throw Error("boundary coefficients make v(0, t) undetermined");
  // v_0 = au * u + a1 * v_1
  const double au = 1.0 / denom;
  const double a1 = -(spec.beta / dx) / denom;
  const double d = spec.nu / (dx * dx);
  const double c = 1.0 / (2.0 * dx);

  std::vector<Triplet> a, nb, b, cm;
  std::vector<TensorEntry> h;
  for (Index i = 0; i < n; ++i) {
    // nu (v_{i+1} - 2 v_i + v_{i-1}) / dx^2 - v_i (v_{i+1} - v_{i-1}) / (2 dx)
    a.emplace_back(i, i, -2.0 * d);
    if (i + 1 < n) {
      a.emplace_back(i, i + 1, d);
      h.push_back({i, i, i + 1, -c});
    } else {
      a.emplace_back(i, i, d);
      h.push_back({i, i, i, -c});
    }
    if (i > 0) {
      a.emplace_back(i, i - 1, d);
      h.push_back({i, i, i - 1, c});
    } else {
      a.emplace_back(i, i, d * a1);
      b.emplace_back(i, 0, d * au);
      h.push_back({i, i, i, c * a1});
      nb.emplace_back(i, i, c * au);
    }
  }
  if (spec.output == "mean") {
    for (Index i = 0; i < n; ++i) cm.emplace_back(0, i, 1.0 / static_cast<double>(n));
  } else {
    cm.emplace_back(0, n - 1, 1.0);
  }

  QBSystem sys;
  sys.E = identity(n);
  sys.A = from_triplets(n, n, a);
  sys.N = {from_triplets(n, n, nb)};
  sys.H = SparseTensor3(n, std::move(h));
  sys.B = from_triplets(n, 1, b);
  sys.C = from_triplets(1, n, cm);
  sys.labels = {{"benchmark", "burgers"},       {"n", std::to_string(n)},
                {"nu", format_double(spec.nu)}, {"alpha", format_double(spec.alpha)},
                {"beta", format_double(spec.beta)}, {"output", spec.output}};
  sys.validate();
  return sys;
}

QBSystem build_fhn(const FhnSpec& spec) {
  const Index m = spec.nbar;
  if (m < 3) throw Error("FitzHugh-Nagumo discretization needs at least 3 points");
  if (!(spec.epsilon > 0.0) || !(spec.h > 0.0) || !(spec.gamma > 0.0)) {
    throw Error("FitzHugh-Nagumo parameters must be positive");
  }
  const Index n = 3 * m;
  const double eps = spec.epsilon;
  const double hx = 1.0 / static_cast<double>(m - 1);
  const double lap = 1.0 / (hx * hx);
  auto V = [](Index i) { return i; };
  auto W = [m](Index i) { return m + i; };
  auto Z = [m](Index i) { return 2 * m + i; };

  // Discrete Laplacian row i with mirrored ghosts; v_x(0) = -i0 puts
  // 2 i0 / hx into row 0.
  auto laplacian_row = [&](Index i) {
    std::vector<std::pair<Index, double>> row;
    if (i == 0) {
      row = {{0, -2.0 * lap}, {1, 2.0 * lap}};
    } else if (i == m - 1) {
      row = {{m - 2, 2.0 * lap}, {m - 1, -2.0 * lap}};
    } else {
      row = {{i - 1, lap}, {i, -2.0 * lap}, {i + 1, lap}};
    }
    return row;
  };
  const double stim = 2.0 / hx;

  std::vector<Triplet> a, n1, n2, b;
  std::vector<TensorEntry> h;
  for (Index i = 0; i < m; ++i) {
    // v' = (1/eps) [eps^2 lap v - 0.1 v + 1.1 z - v z - w + g]
    for (const auto& [j, c] : laplacian_row(i)) a.emplace_back(V(i), V(j), eps * c);
    a.emplace_back(V(i), V(i), -0.1 / eps);
    a.emplace_back(V(i), Z(i), 1.1 / eps);
    a.emplace_back(V(i), W(i), -1.0 / eps);
    h.push_back({V(i), V(i), Z(i), -1.0 / eps});
    b.emplace_back(V(i), 1, 1.0 / eps);
    if (i == 0) b.emplace_back(V(i), 0, eps * stim);

    // w' = h v - gamma w + g
    a.emplace_back(W(i), V(i), spec.h);
    a.emplace_back(W(i), W(i), -spec.gamma);
    b.emplace_back(W(i), 1, 1.0);

    // z' = 2 v v' with v^2 -> z, v^3 -> v z, v^4 -> z^2
    for (const auto& [j, c] : laplacian_row(i)) h.push_back({Z(i), V(i), V(j), 2.0 * eps * c});
    a.emplace_back(Z(i), Z(i), -0.2 / eps);
    h.push_back({Z(i), V(i), Z(i), 2.2 / eps});
    h.push_back({Z(i), Z(i), Z(i), -2.0 / eps});
    h.push_back({Z(i), V(i), W(i), -2.0 / eps});
    n2.emplace_back(Z(i), V(i), 2.0 / eps);
    if (i == 0) n1.emplace_back(Z(i), V(i), 2.0 * eps * stim);
  }

  QBSystem sys;
  sys.E = identity(n);
  sys.A = from_triplets(n, n, a);
  sys.N = {from_triplets(n, n, n1), from_triplets(n, n, n2)};
  sys.H = SparseTensor3(n, std::move(h));
  sys.B = from_triplets(n, 2, b);
  sys.C = from_triplets(2, n, {Triplet(0, V(0), 1.0), Triplet(1, W(0), 1.0)});
  sys.labels = {{"benchmark", "fhn"},
                {"nbar", std::to_string(m)},
                {"epsilon", format_double(eps)},
                {"h", format_double(spec.h)},
                {"gamma", format_double(spec.gamma)},
                {"inputs", "i0,g"},
                {"outputs", "v(0),w(0)"}};
  sys.validate();
  return sys;
}

QBSystem random_qb_system(const RandomSystemSpec& spec) {
  const Index n = spec.n;
  if (n < 1 || spec.inputs < 1 || spec.outputs < 1) throw Error("random system dimensions must be positive");
  if (!(spec.density > 0.0) || spec.density > 1.0) throw Error("density must lie in (0, 1]");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::bernoulli_distribution keep(spec.density);

  std::vector<Triplet> e, a;
  Vector rowsum = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (keep(rng)) {
        const double v = unif(rng);
        a.emplace_back(i, j, v);
        rowsum[i] += std::abs(v);
      }
      if (keep(rng)) e.emplace_back(i, j, 0.05 * unif(rng));
    }
  }
  for (Index i = 0; i < n; ++i) {
    a.emplace_back(i, i, -(rowsum[i] + 1.0 + 0.5 * (unif(rng) + 1.0)));
    e.emplace_back(i, i, 1.0);
  }

  QBSystem sys;
  sys.E = from_triplets(n, n, e);
  sys.A = from_triplets(n, n, a);
  for (Index k = 0; k < spec.inputs; ++k) {
    std::vector<Triplet> t;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (keep(rng)) t.emplace_back(i, j, 0.5 * unif(rng));
      }
    }
    sys.N.push_back(from_triplets(n, n, t));
  }
  std::vector<TensorEntry> h;
  const auto hnnz = static_cast<Index>(std::max(1.0, std::round(spec.density * static_cast<double>(n * n))));
  std::uniform_int_distribution<Index> idx(0, n - 1);
  for (Index q = 0; q < hnnz; ++q) {
    const Index i = idx(rng), j = idx(rng), k = idx(rng);
    h.push_back({i, j, k, 0.5 * unif(rng)});
  }
  sys.H = SparseTensor3(n, std::move(h));
  Matrix b(n, spec.inputs), c(spec.outputs, n);
  for (Index i = 0; i < b.size(); ++i) b.data()[i] = unif(rng);
  for (Index i = 0; i < c.size(); ++i) c.data()[i] = unif(rng);
  sys.B = to_sparse(b);
  sys.C = to_sparse(c);
  sys.labels = {{"benchmark", "random"}, {"seed", std::to_string(spec.seed)}};
  sys.validate();
  return sys;
}

}  // namespace qbmor
