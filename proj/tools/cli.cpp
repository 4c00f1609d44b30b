#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qbmor/qbmor.hpp"

namespace qbmor::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int thread_budget() {
  if (const char* env = std::getenv("QBMOR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min<long>(v, 1024));
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

namespace {

struct Globals {
  double tol = 1e-6;
  double rank_tol = 1e-10;
  double dt = 1e-3;
  double t_end = 10.0;
  std::string scheme = "trapezoidal";
  std::string out = "qbmor-out";
  std::uint64_t seed = 1;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw Error("not a number: '" + s + "'");
  return v;
}

// "2", "1.5+0.5i", "-3j"
Complex parse_complex(std::string s) {
  if (s.empty()) throw Error("empty interpolation point");
  const char last = s.back();
  if (last != 'i' && last != 'j') return {to_double(s), 0.0};
  s.pop_back();
  std::size_t cut = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      cut = k;
      break;
    }
  }
  auto imag = [](const std::string& t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return to_double(t);
  };
  if (cut == std::string::npos) return {0.0, imag(s)};
  return {to_double(s.substr(0, cut)), imag(s.substr(cut))};
}

std::vector<Complex> parse_points(const std::string& s) {
  std::vector<Complex> pts;
  for (const auto& t : split(s, ',')) pts.push_back(parse_complex(t));
  if (pts.empty()) throw Error("no interpolation points given");
  return pts;
}

Vector parse_vector(const std::string& s) {
  const auto parts = split(s, ',');
  Vector v(static_cast<Index>(parts.size()));
  for (std::size_t k = 0; k < parts.size(); ++k) v[static_cast<Index>(k)] = to_double(parts[k]);
  return v;
}

struct LoadedModel {
  QBSystem system;
  std::optional<ReducedModel> reduced;
};

// A system manifest, a directory holding system.json, or a reduce output
// directory (recognized by its reduction.json).
LoadedModel load_model(const fs::path& path) {
  LoadedModel m;
  if (fs::is_directory(path)) {
    if (fs::exists(path / "reduction.json")) {
      m.reduced = load_reduced_model(path);
      m.system = m.reduced->system;
    } else {
      m.system = load_system(path / "system.json");
    }
  } else {
    m.system = load_system(path);
  }
  return m;
}

std::string model_label(const fs::path& path) {
  fs::path p = path.lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  if (p.filename() == "system.json") p = p.parent_path();
  std::string name = p.filename().string();
  return name.empty() ? "model" : name;
}

SimOptions sim_options(const Globals& g) {
  SimOptions o;
  o.dt = g.dt;
  o.t_end = g.t_end;
  o.scheme = parse_scheme(g.scheme);
  o.validate();
  return o;
}

InputFunction named_input(const std::string& name, const QBSystem& sys, const std::vector<double>& constants) {
  Vector c;
  if (sys.inputs() > 1) {
    c = Vector::Zero(sys.inputs() - 1);
    if (!constants.empty()) {
      if (static_cast<Index>(constants.size()) != sys.inputs() - 1) {
        throw DimensionError("--const needs " + std::to_string(sys.inputs() - 1) + " value(s) for this system");
      }
      for (std::size_t k = 0; k < constants.size(); ++k) c[static_cast<Index>(k)] = constants[k];
    }
  }
  return make_input(standard_input(name), sys.inputs(), c);
}

// Runs tasks on up to `threads` workers; results land in task order.
template <class Result>
std::vector<Result> run_pool(const std::vector<std::function<Result()>>& tasks, int threads) {
  std::vector<std::optional<Result>> slots(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < tasks.size();) {
      try {
        slots[k] = tasks[k]();
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < n; ++w) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(tasks.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) { write_file_atomically(path, text); }

template <class Writer>
void write_csv(const fs::path& path, Writer&& w) {
  std::ostringstream os;
  w(os);
  write_text(path, os.str());
}

// ---- generate --------------------------------------------------------------

struct GenerateArgs {
  Index nodes = 1250;
  BurgersSpec burgers;
  FhnSpec fhn;
  RandomSystemSpec random;
};

int finish_generate(const QBSystem& sys, const Globals& g, std::ostream& out) {
  const fs::path manifest = save_system(sys, g.out);
  out << "n=" << sys.order() << " m=" << sys.inputs() << " p=" << sys.outputs() << " nnz(A)=" << sys.A.nonZeros()
      << " nnz(H)=" << sys.H.nnz() << " -> " << manifest.string() << "\n";
  return exit_ok;
}

// ---- reduce ----------------------------------------------------------------

struct ReduceArgs {
  std::string system;
  std::string plan_file;
  std::string method = "igmm-r2";
  std::string points;
  std::vector<int> orders;
  std::string span_mode = "per-term";
  std::string style = "one-sided-union";
  std::vector<std::string> dir_in;
  std::vector<std::string> dir_out;
};

InterpolationPlan plan_from_args(const ReduceArgs& a, const Globals& g) {
  InterpolationPlan plan;
  if (!a.plan_file.empty()) {
    std::ifstream in(a.plan_file);
    if (!in) throw IoError("cannot open " + a.plan_file);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw IoError(a.plan_file + ": " + e.what());
    }
    plan = plan_from_json(j.contains("plan") ? j.at("plan") : j);
    return plan;
  }
  plan.method = parse_method(a.method);
  if (a.points.empty()) throw Error("reduce needs --points or --plan");
  plan.points = parse_points(a.points);
  if (a.orders.size() > 3) throw Error("--orders takes at most three values P,Q,L");
  if (!a.orders.empty()) plan.P = a.orders[0];
  if (a.orders.size() > 1) plan.Q = a.orders[1];
  if (a.orders.size() > 2) plan.L = a.orders[2];
  plan.span_mode = parse_span_mode(a.span_mode);
  plan.style = parse_projection_style(a.style);
  plan.rank_tol = g.rank_tol;
  if (a.dir_in.size() != a.dir_out.size()) throw Error("--dir-in and --dir-out must be given the same number of times");
  if (!a.dir_in.empty()) {
    if (a.dir_in.size() != 1 && a.dir_in.size() != plan.points.size()) {
      throw Error("give one tangential direction pair, or one per point");
    }
    for (std::size_t k = 0; k < plan.points.size(); ++k) {
      const std::size_t src = a.dir_in.size() == 1 ? 0 : k;
      plan.directions.push_back({parse_vector(a.dir_in[src]), parse_vector(a.dir_out[src])});
    }
  }
  return plan;
}

int cmd_reduce(const ReduceArgs& a, const Globals& g, std::ostream& out) {
  const QBSystem sys = load_system(a.system);
  InterpolationPlan plan = plan_from_args(a, g);
  plan.validate(sys);
  const ReducedModel model = reduce(sys, plan, thread_budget());
  save_reduced_model(model, g.out);
  out << to_string(plan.method) << ": r=" << model.basis.order() << " (dropped " << model.basis.dropped.size()
      << " candidate columns, " << model.factorizations << " factorizations) -> " << g.out << "\n";
  return exit_ok;
}

// ---- verify ----------------------------------------------------------------

int cmd_verify(const std::string& full_path, const std::string& reduced_dir, const Globals& g, std::ostream& out) {
  const QBSystem full = load_system(full_path);
  const ReducedModel red = load_reduced_model(reduced_dir);
  const MomentsReport report = verify_moments(full, red.system, red.plan, g.tol);
  json j = to_json(report);
  j["method"] = to_string(red.plan.method);
  j["order"] = red.system.order();
  write_text(fs::path(g.out) / "moments_report.json", dump_json(j) + "\n");
  std::size_t failed = 0;
  for (const auto& c : report.checks) failed += c.pass ? 0 : 1;
  out << report.checks.size() - failed << "/" << report.checks.size() << " moment equalities PASS at tol " << g.tol
      << " (max rel mismatch " << report.max_rel_mismatch << ")\n";
  return report.all_pass() ? exit_ok : exit_verification_failed;
}

// ---- simulate --------------------------------------------------------------

int cmd_simulate(const std::string& path, const std::vector<std::string>& inputs, const std::vector<double>& constants,
                 const Globals& g, std::ostream& out) {
  const LoadedModel m = load_model(path);
  const SimOptions opts = sim_options(g);
  std::vector<std::function<Trajectory()>> tasks;
  for (const auto& name : inputs) {
    tasks.emplace_back([&, name] { return simulate(m.system, named_input(name, m.system, constants), opts); });
  }
  const auto trajs = run_pool(tasks, thread_budget());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const fs::path file = fs::path(g.out) / ("trajectory_" + inputs[k] + ".csv");
    write_csv(file, [&](std::ostream& os) { write_trajectory_csv(os, trajs[k]); });
    out << inputs[k] << ": " << trajs[k].steps() << " samples";
    if (trajs[k].diverged) out << ", DIVERGED at t=" << trajs[k].diverged_at;
    out << " -> " << file.string() << "\n";
  }
  return exit_ok;
}

// ---- compare ---------------------------------------------------------------

struct CompareArgs {
  std::string full;
  std::vector<std::string> models;
  std::vector<std::string> inputs{"exp-decay"};
  std::vector<double> constants;
};

int cmd_compare(const CompareArgs& a, const Globals& g, std::ostream& out) {
  const QBSystem full = load_system(a.full);
  const SimOptions opts = sim_options(g);
  SimOptions screen = opts;
  screen.newton_failure_is_divergence = true;

  std::vector<LoadedModel> models;
  std::vector<std::string> labels;
  for (const auto& p : a.models) {
    models.push_back(load_model(p));
    std::string label = model_label(p);
    while (std::find(labels.begin(), labels.end(), label) != labels.end()) label += "_";
    labels.push_back(label);
    if (models.back().system.outputs() != full.outputs() || models.back().system.inputs() != full.inputs()) {
      throw DimensionError(p + ": input/output counts differ from the full model");
    }
  }

  // (model, input) tasks; the full model is model -1.
  std::vector<std::function<Trajectory()>> tasks;
  for (const auto& in : a.inputs) {
    tasks.emplace_back([&, in] { return simulate(full, named_input(in, full, a.constants), opts); });
  }
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (const auto& in : a.inputs) {
      tasks.emplace_back([&, m, in] {
        return simulate(models[m].system, named_input(in, full, a.constants), screen);
      });
    }
  }
  const auto trajs = run_pool(tasks, thread_budget());
  const std::size_t ni = a.inputs.size();

  json summary;
  summary["config"] = {{"full", a.full},
                       {"models", a.models},
                       {"inputs", a.inputs},
                       {"constants", a.constants},
                       {"t_end", opts.t_end},
                       {"dt", opts.dt},
                       {"scheme", to_string(opts.scheme)}};
  json fulls = json::array();
  for (std::size_t i = 0; i < ni; ++i) {
    fulls.push_back({{"input", a.inputs[i]}, {"newton_iterations", trajs[i].newton_iterations}});
    write_csv(fs::path(g.out) / ("trajectory_full_" + a.inputs[i] + ".csv"),
              [&](std::ostream& os) { write_trajectory_csv(os, trajs[i]); });
  }
  summary["full"] = {{"n", full.order()}, {"labels", full.labels}, {"runs", fulls}};

  json results = json::array();
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (std::size_t i = 0; i < ni; ++i) {
      const Trajectory& ref = trajs[i];
      const Trajectory& tr = trajs[ni + m * ni + i];
      const ErrorMetrics em = error_metrics(ref, tr);
      const std::string stem = "compare_" + labels[m] + "_" + a.inputs[i];
      write_csv(fs::path(g.out) / (stem + ".csv"), [&](std::ostream& os) { write_comparison_csv(os, ref, tr); });
      json r;
      r["model"] = labels[m];
      r["method"] = models[m].reduced ? to_string(models[m].reduced->plan.method) : "none";
      r["r"] = models[m].system.order();
      r["input"] = a.inputs[i];
      r["diverged"] = tr.diverged;
      r["diverged_at"] = tr.diverged ? json(tr.diverged_at) : json(nullptr);
      r["newton_failed"] = tr.newton_failed;
      r["e_max_abs"] = tr.diverged ? json(nullptr) : nullable(em.e_max_abs);
      r["e_max_rel"] = tr.diverged ? json(nullptr) : nullable(em.e_max_rel);
      r["newton_iterations"] = tr.newton_iterations;
      results.push_back(r);
      out << labels[m] << " [" << a.inputs[i] << "] r=" << models[m].system.order() << " ";
      if (tr.diverged) {
        out << "DIVERGED at t=" << tr.diverged_at << "\n";
      } else {
        out << "e_max=" << em.e_max_abs << " e_max_rel=" << em.e_max_rel << "\n";
      }
    }
  }
  summary["results"] = results;
  write_text(fs::path(g.out) / "summary.json", dump_json(summary) + "\n");
  return exit_ok;
}

}  // namespace

namespace {

int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interpolatory multi-moment matching reduction of quadratic-bilinear systems", "qbmor"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--tol", g.tol, "Relative tolerance for moment verification")->capture_default_str();
  app.add_option("--rank-tol", g.rank_tol, "Drop basis candidates whose orthogonal residual is below this")
      ->capture_default_str();
  app.add_option("--dt", g.dt, "Time step")->capture_default_str();
  app.add_option("--t-end", g.t_end, "Final time")->capture_default_str();
  app.add_option("--scheme", g.scheme, "trapezoidal | implicit-euler | rk4")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for randomized systems")->capture_default_str();

  std::function<int()> action;

  // generate
  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Write a benchmark system (manifest + Matrix Market files)");
  gen->require_subcommand(1);
  auto* rc = gen->add_subcommand("rc-ladder", "Diode RC ladder, n = 2 * nodes");
  rc->add_option("--nodes,--size", ga.nodes, "Number of ladder nodes (>= 2)")->capture_default_str();
  rc->callback([&] { action = [&] { return finish_generate(build_rc(ga.nodes), g, out); }; });
  auto* bu = gen->add_subcommand("burgers", "Boundary-controlled viscous Burgers equation");
  bu->add_option("--n,--size", ga.burgers.n, "Interior grid points")->capture_default_str();
  bu->add_option("--nu", ga.burgers.nu, "Viscosity")->capture_default_str();
  bu->add_option("--alpha", ga.burgers.alpha, "alpha in alpha v(0) + beta v_x(0) = u")->capture_default_str();
  bu->add_option("--beta", ga.burgers.beta, "beta in alpha v(0) + beta v_x(0) = u")->capture_default_str();
  bu->add_option("--output", ga.burgers.output, "mean | right")->capture_default_str();
  bu->callback([&] { action = [&] { return finish_generate(build_burgers(ga.burgers), g, out); }; });
  auto* fh = gen->add_subcommand("fhn", "FitzHugh-Nagumo cable, n = 3 * nbar");
  fh->add_option("--nbar,--size", ga.fhn.nbar, "Spatial nodes")->capture_default_str();
  fh->add_option("--epsilon", ga.fhn.epsilon)->capture_default_str();
  fh->add_option("--h-param", ga.fhn.h, "Recovery coupling h")->capture_default_str();
  fh->add_option("--gamma", ga.fhn.gamma)->capture_default_str();
  fh->callback([&] { action = [&] { return finish_generate(build_fhn(ga.fhn), g, out); }; });
  auto* rnd = gen->add_subcommand("random", "Seeded random sparse QB system (uses --seed)");
  rnd->add_option("--n,--size", ga.random.n)->capture_default_str();
  rnd->add_option("--density", ga.random.density, "Fraction of n^2 nonzeros in H")->capture_default_str();
  rnd->add_option("--inputs", ga.random.inputs)->capture_default_str();
  rnd->add_option("--outputs", ga.random.outputs)->capture_default_str();
  rnd->callback([&] {
    action = [&] {
      ga.random.seed = g.seed;
      return finish_generate(random_qb_system(ga.random), g, out);
    };
  });

  // reduce
  ReduceArgs ra;
  auto* red = app.add_subcommand("reduce", "Build V, W by multi-moment matching and project");
  red->add_option("--system", ra.system, "Full system manifest")->required();
  red->add_option("--plan", ra.plan_file, "Plan JSON (overrides the flags below)");
  red->add_option("--method", ra.method, "imm-s | igmm-s | igmm-r2 | igmm-r3")->capture_default_str();
  red->add_option("--points", ra.points, "Comma-separated interpolation points, e.g. 0.1,10 or 1+2i");
  red->add_option("--orders", ra.orders, "P,Q[,L]")->delimiter(',');
  red->add_option("--span-mode", ra.span_mode, "per-term | paper-literal")->capture_default_str();
  red->add_option("--style", ra.style, "one-sided-union | two-sided")->capture_default_str();
  red->add_option("--dir-in", ra.dir_in, "Tangential input direction (comma list); once, or once per point");
  red->add_option("--dir-out", ra.dir_out, "Tangential output direction (comma list)");
  red->callback([&] { action = [&] { return cmd_reduce(ra, g, out); }; });

  // verify
  std::string v_full, v_reduced;
  auto* ver = app.add_subcommand("verify", "Check every claimed moment equality of a reduced model");
  ver->add_option("--full", v_full, "Full system manifest")->required();
  ver->add_option("--reduced", v_reduced, "Directory written by reduce")->required();
  ver->callback([&] { action = [&] { return cmd_verify(v_full, v_reduced, g, out); }; });

  // simulate
  std::string s_system;
  std::vector<std::string> s_inputs{"exp-decay"};
  std::vector<double> s_const;
  auto* sim = app.add_subcommand("simulate", "Integrate a system and write trajectory CSVs");
  sim->add_option("--system", s_system, "Manifest or reduce output directory")->required();
  sim->add_option("--input", s_inputs, "exp-decay | cosine | fhn-stimulus (repeatable)")->capture_default_str();
  sim->add_option("--const", s_const, "Constant values for input channels 2..m (repeatable)");
  sim->callback([&] { action = [&] { return cmd_simulate(s_system, s_inputs, s_const, g, out); }; });

  // compare
  CompareArgs ca;
  auto* cmp = app.add_subcommand("compare", "Simulate full and reduced models and tabulate output errors");
  cmp->add_option("--full", ca.full, "Full system manifest")->required();
  cmp->add_option("--model", ca.models, "Reduce output directory or manifest (repeatable)")->required();
  cmp->add_option("--input", ca.inputs, "Input name (repeatable)")->capture_default_str();
  cmp->add_option("--const", ca.constants, "Constant values for input channels 2..m (repeatable)");
  cmp->callback([&] { action = [&] { return cmd_compare(ca, g, out); }; });

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_error;
  }

  return action ? action() : exit_error;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run_app(args, out, err);
  } catch (const std::exception& e) {
    err << "qbmor: error: " << e.what() << "\n";
    return exit_error;
  }
}

}  // namespace qbmor::cli
