#include "bdsde/cli.hpp"

#include <Eigen/Core>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "bdsde/analysis.hpp"
#include "bdsde/config.hpp"
#include "bdsde/noise.hpp"
#include "bdsde/regularize.hpp"
#include "bdsde/solver.hpp"

#ifndef BDSDE_VERSION
#define BDSDE_VERSION "unknown"
#endif

namespace bdsde::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
  std::string kind;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  RunConfig cfg;
  Options opts;
  fs::path out_dir;
  std::string command;
  json diagnostics = json::object();
  std::vector<std::string> outputs;
  std::ostream* out;

  void write_file(const std::string& name, const std::string& body) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
    f << body;
    outputs.push_back(name);
  }

  void write_report(const std::string& name, const ExperimentReport& rep) {
    std::ostringstream os;
    write_csv(os, rep);
    write_file(name, os.str());
    for (const auto& [k, v] : rep.diagnostics) diagnostics[k] = v;
    json meta = json::object();
    for (const auto& [k, v] : rep.metadata) meta[k] = v;
    diagnostics["metadata"] = meta;
  }

  void write_manifest() {
    json m;
    m["command"] = command;
    m["version"] = BDSDE_VERSION;
    m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    m["seed"] = cfg.seed;
    m["config"] = cfg.raw;
    m["outputs"] = outputs;
    m["diagnostics"] = diagnostics;
    std::ofstream f(out_dir / "manifest.json", std::ios::binary);
    f << m.dump(2) << '\n';
  }
};

PathBundle make_bundle(const Context& ctx) {
  const auto& c = ctx.cfg;
  NoiseOptions no;
  no.memory_budget_bytes = static_cast<std::size_t>(c.memory_budget_mb * 1024.0 * 1024.0);
  no.threads = ctx.opts.threads;
  return generate_paths(TimeGrid(c.T, c.N), BundleShape{c.d, c.l, c.M_B, c.M_W}, c.seed, no);
}

SchemeConfig scheme_of(const Context& ctx) {
  SchemeConfig s = ctx.cfg.scheme;
  s.threads = ctx.opts.threads;
  return s;
}

std::vector<double> or_default(const std::vector<double>& v, std::vector<double> fallback) {
  return v.empty() ? fallback : v;
}

int cmd_validate(Context& ctx) {
  const BDSDEProblem p = build_problem(ctx.cfg);
  const ValidationReport rep = validate_problem(p, ctx.cfg.budget, ctx.cfg.seed, ctx.cfg.validation);
  std::ostringstream os;
  os << "hypothesis,worst_ratio,samples,passed\n";
  json witnesses = json::object();
  for (const auto& c : rep.checks) {
    os << c.name << ',' << format_number(c.worst_ratio) << ',' << c.samples << ',' << (c.passed ? 1 : 0) << '\n';
    json w = json::array();
    for (double x : c.witness) w.push_back(format_number(x));
    witnesses[c.name] = w;
  }
  ctx.write_file("validate.csv", os.str());
  ctx.diagnostics["witness"] = witnesses;
  ctx.diagnostics["passed"] = rep.passed();
  *ctx.out << (rep.passed() ? "validation passed" : "validation FAILED") << '\n';
  return rep.passed() ? 0 : 1;
}

int cmd_solve(Context& ctx) {
  const BDSDEProblem p = build_problem(ctx.cfg);
  std::string method = ctx.cfg.method;
  if (method == "auto") {
    if (p.f.lipschitz) {
      method = "regression";
    } else if (!deterministic_obstacle(p)) {
      method = "ode";
    } else {
      throw UsageError("solve: f has no Lipschitz constant and the ODE path does not apply; use `bracket`");
    }
  }
  GridSolution sol = [&] {
    if (method == "ode") {
      if (auto why = deterministic_obstacle(p)) throw UsageError("solve: ODE path unavailable: " + *why);
      return GridSolution::from_curve(p.grid, solve_deterministic(p), p.d);
    }
    return solve_lipschitz(p, make_bundle(ctx), scheme_of(ctx));
  }();

  std::vector<std::string> cols{"i", "t", "Y_mean", "Y_se"};
  for (int k = 0; k < p.d; ++k) cols.push_back("Z" + std::to_string(k + 1) + "_mean");
  std::vector<std::vector<Cell>> rows;
  for (int i = 0; i < sol.nodes(); ++i) {
    double mean = 0.0, m2 = 0.0;
    std::vector<double> zm(p.d, 0.0);
    std::size_t n = 0;
    for (int b = 0; b < sol.outer(); ++b) {
      for (int w = 0; w < sol.inner(); ++w) {
        ++n;
        const double x = sol.y(b, w, i), delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
        for (int k = 0; k < p.d; ++k) zm[k] += (sol.z(b, w, i, k) - zm[k]) / static_cast<double>(n);
      }
    }
    const double se = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    std::vector<Cell> row{static_cast<double>(i), p.grid.node(i), mean, se};
    for (double z : zm) row.push_back(z);
    rows.push_back(row);
  }
  std::ostringstream os;
  write_csv(os, cols, rows);
  ctx.write_file("solve.csv", os.str());
  const Estimate y0 = initial_value(sol);
  ctx.diagnostics["method"] = method;
  ctx.diagnostics["Y0"] = format_number(y0.mean);
  ctx.diagnostics["Y0_se"] = format_number(y0.se);
  ctx.diagnostics["warnings"] = sol.warnings;
  *ctx.out << "Y0 = " << format_number(y0.mean) << " (se " << format_number(y0.se) << ")\n";
  return 0;
}

int cmd_bracket(Context& ctx) {
  const BDSDEProblem p = build_problem(ctx.cfg);
  const auto ms = m_schedule_for(ctx.cfg, p.f.growth);
  const SequenceReport rep = minimal_maximal_estimate(p, ms, ctx.cfg.lattice, make_bundle(ctx), scheme_of(ctx));
  std::vector<std::string> cols{"m", "spacing", "lower_Y0", "lower_se", "upper_Y0", "upper_se", "width", "width_se"};
  std::vector<std::vector<Cell>> rows;
  for (std::size_t j = 0; j < rep.m.size(); ++j) {
    rows.push_back({rep.m[j], rep.spacing[j], rep.lower_y0[j].mean, rep.lower_y0[j].se, rep.upper_y0[j].mean,
                    rep.upper_y0[j].se, rep.width[j], rep.width_se[j]});
  }
  std::ostringstream os;
  write_csv(os, cols, rows);
  ctx.write_file("bracket.csv", os.str());
  ctx.diagnostics["lower_limit"] = format_number(rep.lower_limit);
  ctx.diagnostics["upper_limit"] = format_number(rep.upper_limit);
  ctx.diagnostics["lower_monotone"] = rep.lower_monotone;
  ctx.diagnostics["upper_monotone"] = rep.upper_monotone;
  ctx.diagnostics["width_monotone"] = rep.width_monotone;
  ctx.diagnostics["node_monotone"] = rep.node_monotone;
  *ctx.out << "lower limit " << format_number(rep.lower_limit) << ", upper limit " << format_number(rep.upper_limit)
           << '\n';
  return 0;
}

int cmd_regularize_check(Context& ctx) {
  const BDSDEProblem p = build_problem(ctx.cfg);
  const auto ms = m_schedule_for(ctx.cfg, p.f.growth);
  const auto pts = lattice_test_points(ctx.cfg.lattice, ctx.cfg.test_points, p.d, ctx.cfg.test_box, ctx.cfg.seed);
  PropertyOptions po;
  po.seed = ctx.cfg.seed;
  const PropertyReport rep = check_lemma_properties(p.f, ms, pts, ctx.cfg.lattice, p.d, po);
  std::ostringstream os;
  os << "property,passed,worst,bound,checks,violations\n";
  for (const auto& r : rep.properties) {
    os << r.name << ',' << (r.passed ? 1 : 0) << ',' << format_number(r.worst) << ',' << format_number(r.bound) << ','
       << r.checks << ',' << r.violations << '\n';
    ctx.diagnostics["note_" + r.name] = r.note;
  }
  ctx.write_file("regularize_check.csv", os.str());
  ctx.diagnostics["certification"] = rep.certified ? "certified" : "empirical";
  ctx.diagnostics["passed"] = rep.passed();
  *ctx.out << (rep.passed() ? "all properties passed" : "property check FAILED") << '\n';
  return rep.passed() ? 0 : 1;
}

int cmd_experiment(Context& ctx) {
  std::string kind = ctx.opts.kind.empty() ? ctx.cfg.kind : ctx.opts.kind;
  if (kind.empty()) throw UsageError("experiment: kind missing (cd, family, counterexample or stability)");
  if (!ctx.opts.kind.empty() && !ctx.cfg.kind.empty() && ctx.opts.kind != ctx.cfg.kind) {
    throw UsageError("experiment: command line kind '" + ctx.opts.kind + "' contradicts config kind '" +
                     ctx.cfg.kind + "'");
  }
  ctx.command += " " + kind;
  const auto& c = ctx.cfg;
  ExperimentReport rep;
  if (kind == "counterexample") {
    const auto ns = or_default(c.perturbations, {1, 10, 100, 1e4, 1e6});
    rep = counterexample_scenario(c.T, ns, c.N);
  } else if (kind == "stability") {
    const auto deltas = or_default(c.perturbations, {1.0, 0.1, 0.01});
    rep = stability_ratio(build_problem(c), deltas, make_bundle(ctx), scheme_of(ctx),
                          c.mode == "scale" ? Perturbation::Scale : Perturbation::Shift);
  } else if (kind == "cd") {
    const BDSDEProblem p = build_problem(c);
    const auto ns = or_default(c.perturbations, {1, 2, 4, 8, 16});
    std::vector<SequenceTerm> terms;
    for (double n : ns) {
      if (!(n > 0.0)) throw UsageError("experiment cd: n values must be positive");
      terms.push_back({n, p.xi.shifted(1.0 / n)});
    }
    rep = continuous_dependence_experiment(p, terms, make_bundle(ctx), scheme_of(ctx), m_schedule_for(c, p.f.growth),
                                           c.lattice);
  } else if (kind == "family") {
    const ParamFamily fam = build_family(c);
    const auto lambdas = family_lambdas(c);
    rep = family_dependence_experiment(fam, lambdas, make_bundle(ctx), scheme_of(ctx),
                                       m_schedule_for(c, fam.growth), c.lattice);
  } else {
    throw UsageError("experiment: unknown kind '" + kind + "'");
  }
  ctx.write_report(kind + ".csv", rep);
  *ctx.out << kind << ": " << rep.rows.size() << " rows written\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical laboratory for backward doubly stochastic differential equations", "bdsde"};
  app.fallthrough();
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", BDSDE_VERSION);
  Options opts;
  app.add_option("--config", opts.config, "JSON configuration file")->required();
  app.add_option("--seed", opts.seed, "override paths.seed");
  app.add_option("--out", opts.out, "output directory (default: $BDSDE_OUT or .)");
  app.add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "check the growth and Lipschitz hypotheses by sampling");
  auto* solve = app.add_subcommand("solve", "solve the configured problem");
  auto* bracket = app.add_subcommand("bracket", "lower/upper regularized solutions along the m schedule");
  auto* experiment = app.add_subcommand("experiment", "run an experiment: cd, family, counterexample, stability");
  experiment->add_option("kind", opts.kind, "experiment kind")
      ->check(CLI::IsMember({"cd", "family", "counterexample", "stability"}));
  auto* regcheck = app.add_subcommand("regularize-check", "property suite of the lattice regularizations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  Context ctx;
  ctx.opts = opts;
  ctx.out = &out;
  try {
    ctx.cfg = load_config(opts.config);
    if (opts.seed) {
      ctx.cfg.seed = *opts.seed;
      ctx.cfg.raw["paths"]["seed"] = *opts.seed;
    }
    if (!opts.out.empty()) {
      ctx.out_dir = opts.out;
    } else if (const char* env = std::getenv("BDSDE_OUT"); env && *env) {
      ctx.out_dir = env;
    } else {
      ctx.out_dir = ".";
    }
    fs::create_directories(ctx.out_dir);

    int code = 0;
    if (validate->parsed()) {
      ctx.command = "validate";
      code = cmd_validate(ctx);
    } else if (solve->parsed()) {
      ctx.command = "solve";
      code = cmd_solve(ctx);
    } else if (bracket->parsed()) {
      ctx.command = "bracket";
      code = cmd_bracket(ctx);
    } else if (experiment->parsed()) {
      ctx.command = "experiment";
      code = cmd_experiment(ctx);
    } else if (regcheck->parsed()) {
      ctx.command = "regularize-check";
      code = cmd_regularize_check(ctx);
    }
    ctx.write_manifest();
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const TruncationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace bdsde::cli
