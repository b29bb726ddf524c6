// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 100).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bdsde/analysis.hpp"
#include "bdsde/catalog.hpp"
#include "bdsde/cli.hpp"
#include "bdsde/config.hpp"
#include "bdsde/dsl.hpp"
#include "bdsde/regularize.hpp"
#include "bdsde/solver.hpp"
#include "random_expr.hpp"

using namespace bdsde;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string yes(bool b) { return b ? "yes" : "no"; }

std::string cli_binary;

fs::path scratch_dir() {
  std::random_device rd;
  fs::path p = fs::temp_directory_path() / ("bdsde_acceptance_" + std::to_string(rd()));
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::vector<std::string>& args) {
  if (!cli_binary.empty()) {
    std::string cmd = "\"" + cli_binary + "\"";
    for (const auto& a : args) cmd += " \"" + a + "\"";
    cmd += " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }
  std::vector<std::string> full{"bdsde"};
  full.insert(full.end(), args.begin(), args.end());
  std::ostringstream out, err;
  return cli::run(full, out, err);
}

std::vector<std::vector<double>> read_csv_numbers(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell == "undefined" ? NAN : std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

// 1. Counterexample through the CLI.
Outcome counterexample() {
  const auto t0 = Clock::now();
  const fs::path dir = scratch_dir();
  std::ofstream(dir / "ce.json") << R"({"problem": {"T": 1}, "experiment": {"perturbations": [1, 10, 100, 10000, 1000000]}})";
  const int rc = run_cli({"experiment", "counterexample", "--config", (dir / "ce.json").string(), "--out", dir.string()});
  const double secs = seconds_since(t0);
  Outcome o;
  if (rc != 0) {
    o.detail = "CLI exit " + std::to_string(rc);
    fs::remove_all(dir);
    return o;
  }
  const auto rows = read_csv_numbers(dir / "counterexample.csv");
  fs::remove_all(dir);
  const auto& last = rows.back();
  const double to_zero = last[2], to_max = last[3];
  const bool a = std::abs(to_zero - 1.0) <= 0.02, b = to_max < 1e-3, c = secs < 5.0;
  o.pass = a && b && c && last[0] == 1e6;
  o.detail = "n=1e6 dist_to_zero=" + num(to_zero) + " (|.-1|<=0.02: " + yes(a) + "), dist_to_max=" + num(to_max) +
             " (<1e-3: " + yes(b) + "), " + num(secs) + " s (<5: " + yes(c) + ")";
  return o;
}

// 2. Property suite on the catalog.
Outcome regularizer_properties() {
  const auto t0 = Clock::now();
  const LatticeSpec lat{10.0, 1e-3};
  const auto pts = lattice_test_points(lat, 1000, 1, 2.0, 2024);
  const std::vector<DriverF> fs{catalog::abs_f(), catalog::linear_f(1.0, 0.5), catalog::power23(3.0),
                                catalog::norm_growth(1.0)};
  Outcome o;
  o.pass = true;
  std::string failed;
  for (const auto& f : fs) {
    const auto ms = default_m_schedule(f.growth);
    const auto rep = check_lemma_properties(f, ms, pts, lat, 1);
    for (const auto& p : rep.properties) {
      if (!p.passed) {
        o.pass = false;
        failed += " " + f.name + ":" + p.name;
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool fast = secs < 60.0;
  o.pass = o.pass && fast;
  o.detail = "4 drivers x 4 properties at 1000 lattice points, " + num(secs) + " s (<60: " + yes(fast) + ")" +
             (failed.empty() ? std::string() : "; failed:" + failed);
  return o;
}

// 3. Upper regularization of power23 at zero.
Outcome upper_at_zero() {
  const double K = 3.0, h = 1e-3;
  const LatticeSpec lat{10.0, h};
  const auto f = catalog::power23(K);
  Outcome o;
  o.pass = true;
  const double z = 0.0;
  for (double m : default_m_schedule(K)) {
    const double v = upper_regularize(f, m, lat)(0.0, 0.0, std::span<const double>(&z, 1));
    const double err = std::abs(v - 4.0 / (m * m)), tol = 2.0 * (m + K) * h;
    o.pass = o.pass && err <= tol;
    o.detail += "m=" + num(m) + " err=" + num(err) + "/tol=" + num(tol) + " ";
  }
  return o;
}

// 4. Solver against closed-form and ODE oracles.
Outcome solver_oracles() {
  const auto t0 = Clock::now();
  std::string detail;

  // (a) xi = W_T, f = 0, g = 0
  bool a = false;
  {
    const BDSDEProblem p{catalog::zero_f(), catalog::zero_g(), catalog::linear_xi(0.0, 1.0), TimeGrid(1.0, 50), 1, 1};
    const auto bundle = generate_paths(p.grid, BundleShape{1, 1, 1, 10000}, 4001);
    const auto s = solve_lipschitz(p, bundle, SchemeConfig{});
    const auto y0 = initial_value(s);
    double mean = 0.0, m2 = 0.0;
    const auto& za = s.z_target_average;
    for (std::size_t k = 0; k < za.size(); ++k) {
      const double dlt = za[k] - mean;
      mean += dlt / static_cast<double>(k + 1);
      m2 += dlt * (za[k] - mean);
    }
    const double zse = std::sqrt(m2 / static_cast<double>(za.size() - 1) / static_cast<double>(za.size()));
    const bool ya = std::abs(y0.mean) <= 3.0 * y0.se, zb = std::abs(mean - 1.0) <= 3.0 * zse;
    a = ya && zb;
    detail += "(a) Y0=" + num(y0.mean) + " se=" + num(y0.se) + " meanZ=" + num(mean) + " se=" + num(zse) + " " +
              yes(a) + "; ";
  }

  // (b) deterministic subclass: f = y, xi = 1
  bool b = false;
  {
    const BDSDEProblem p{catalog::linear_f(1.0), catalog::zero_g(), catalog::constant_xi(1.0), TimeGrid(1.0, 100), 1, 1};
    const auto bundle = generate_paths(p.grid, BundleShape{1, 1, 1, 10000}, 4002);
    const double scheme = initial_value(solve_lipschitz(p, bundle, SchemeConfig{})).mean;
    const double ode = solve_deterministic(p).front();
    const double rel = std::abs(scheme - ode) / std::abs(ode);
    b = rel <= 0.02;
    detail += "(b) scheme=" + num(scheme) + " ode=" + num(ode) + " rel=" + num(rel) + " " + yes(b) + "; ";
  }

  // (c) constant g: Y_t = c + sigma (B_T - B_t)
  bool c = false;
  {
    const double cst = 0.5, sigma = 0.8;
    double err[2];
    const int Ns[2] = {50, 100};
    for (int r = 0; r < 2; ++r) {
      const BDSDEProblem p{catalog::zero_f(), catalog::constant_g({sigma}), catalog::constant_xi(cst),
                           TimeGrid(1.0, Ns[r]), 1, 1};
      const auto bundle = generate_paths(p.grid, BundleShape{1, 1, 20, 500}, 4003);
      const auto s = solve_lipschitz(p, bundle, SchemeConfig{});
      const auto pv = cumulate(bundle);
      double worst = 0.0;
      for (int bb = 0; bb < 20; ++bb)
        for (int w = 0; w < 500; ++w)
          for (int i = 0; i <= Ns[r]; ++i)
            worst = std::max(worst, std::abs(s.y(bb, w, i) - (cst + sigma * pv.tail_at(bb, i, 0))));
      err[r] = worst;
    }
    const double shrink = err[1] > 0.0 ? err[0] / err[1] : (err[0] > 0.0 ? INFINITY : NAN);
    c = shrink >= 1.5;
    detail += "(c) max error N=50 " + num(err[0]) + ", N=100 " + num(err[1]) + ", shrink " + num(shrink) + " " +
              yes(c) + "; ";
  }
  const double secs = seconds_since(t0);
  const bool fast = secs < 120.0;
  detail += num(secs) + " s (<120: " + yes(fast) + ")";
  return {a && b && c && fast, detail};
}

// 5. Bracketing sandwich on power23.
Outcome bracketing() {
  const BDSDEProblem p{catalog::power23(3.0), catalog::zero_g(), catalog::constant_xi(0.0), TimeGrid(1.0, 200), 1, 1};
  const RunConfig defaults = parse_config(nlohmann::json::object());
  const auto ms = default_m_schedule(p.f.growth);
  const auto bundle = generate_paths(p.grid, BundleShape{1, 1, 1, 500}, 5005);
  const auto rep = minimal_maximal_estimate(p, ms, defaults.lattice, bundle, SchemeConfig{});
  const double m = ms.back();
  const auto lower = lower_regularize(p.f, m, scheduled_lattice(defaults.lattice, m));
  // A driver error of at most eps moves Y_0 by at most eps * T.
  const double tol = lower.lattice_tolerance() * p.grid.horizon() + 3.0 * rep.lower_y0.back().se;
  const double lo = rep.lower_y0.back().mean, up = rep.upper_y0.back().mean;
  const bool a = std::abs(lo) <= tol, b = std::abs(up - 1.0) <= 0.05, c = rep.width_monotone;
  std::string widths;
  for (double w : rep.width) widths += num(w) + " ";
  return {a && b && c, "m=" + num(m) + " lower=" + num(lo) + " (tol " + num(tol) + ": " + yes(a) + "), upper=" +
                           num(up) + " (|.-1|<=0.05: " + yes(b) + "), widths " + widths + "(monotone: " + yes(c) + ")"};
}

// 6. Stability ratio for f = y.
Outcome stability() {
  const BDSDEProblem p{catalog::linear_f(1.0), catalog::zero_g(), catalog::linear_xi(0.0, 1.0), TimeGrid(1.0, 200), 1, 1};
  const auto bundle = generate_paths(p.grid, BundleShape{1, 1, 1, 1000}, 6006);
  const std::vector<double> deltas{1.0, 0.1, 0.01};
  const auto rep = stability_ratio(p, deltas, bundle, SchemeConfig{});
  const double e2 = std::exp(2.0);
  bool near = true;
  double lo = INFINITY, hi = -INFINITY;
  std::string detail = "ratios";
  for (std::size_t r = 0; r < deltas.size(); ++r) {
    const double v = rep.cell(r, "ratio").value_or(NAN);
    near = near && std::abs(v / e2 - 1.0) <= 0.02;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    detail += " " + num(v);
  }
  const bool flat = hi / lo - 1.0 <= 0.02;
  return {near && flat, detail + " vs e^2=" + num(e2) + " (within 2%: " + yes(near) + "), spread " +
                            num(hi / lo - 1.0) + " (<=0.02: " + yes(flat) + ")"};
}

// 7. Continuous dependence in the terminal value, Lipschitz driver.
Outcome continuous_dependence() {
  const BDSDEProblem p{catalog::linear_f(1.0, 0.0), catalog::linear_g(0.3, 0.0), catalog::linear_xi(0.0, 1.0),
                       TimeGrid(1.0, 50), 1, 1};
  const auto bundle = generate_paths(p.grid, BundleShape{1, 1, 20, 500}, 7007);
  const std::vector<double> deltas{1.0, 0.1, 0.01};
  const auto stab = stability_ratio(p, deltas, bundle, SchemeConfig{});
  const double C = std::stod(stab.diagnostic("empirical_C"));
  std::vector<SequenceTerm> terms;
  for (double n : {1.0, 2.0, 4.0, 8.0, 16.0}) terms.push_back({n, p.xi.shifted(1.0 / n)});
  const auto ms = default_m_schedule(p.f.growth);
  const auto rep = continuous_dependence_experiment(p, terms, bundle, SchemeConfig{}, ms, LatticeSpec{10.0, 1e-2});
  bool decreasing = true;
  std::string dists;
  for (std::size_t r = 0; r < rep.rows.size(); ++r) {
    const double d = rep.cell(r, "dist_lower").value();
    dists += num(d) + " ";
    if (r > 0) decreasing = decreasing && d < rep.cell(r - 1, "dist_lower").value();
  }
  const std::size_t last = rep.rows.size() - 1;
  const double n = rep.cell(last, "n").value();
  const double bound = C / (n * n) + 3.0 * rep.standard_errors[last];
  const double final_dist = rep.cell(last, "dist_lower").value();
  const bool within = final_dist <= bound;
  return {decreasing && within, "dists " + dists + "(decreasing: " + yes(decreasing) + "), final " + num(final_dist) +
                                    " <= C/n^2+3se=" + num(bound) + " with C=" + num(C) + ": " + yes(within)};
}

// 8. Shift family through the configuration layer.
Outcome family() {
  const auto cfg = parse_config(nlohmann::json::parse(R"({
    "problem": {"f": "y + lam", "g": ["0.3*y"], "xi": "w + lam", "K": 2, "L": 1, "N": 50},
    "paths": {"M_B": 10, "M_W": 500, "seed": 8008},
    "experiment": {"kind": "family", "perturbations": [1, 0.3, 0.1, 0.03], "anchor": 0, "domain": [-1, 1]}
  })"));
  const ParamFamily fam = build_family(cfg);
  const auto bundle = generate_paths(TimeGrid(cfg.T, cfg.N), BundleShape{1, 1, cfg.M_B, cfg.M_W}, cfg.seed);
  const auto rep = family_dependence_experiment(fam, cfg.perturbations, bundle, cfg.scheme,
                                                m_schedule_for(cfg, fam.growth), cfg.lattice);
  bool decreasing = rep.diagnostic("dist_decreasing") == "true";
  double lo = INFINITY, hi = 0.0;
  bool finite = true;
  std::string detail = "dist/ratio";
  for (std::size_t r = 0; r < rep.rows.size(); ++r) {
    const auto ratio = rep.cell(r, "ratio");
    finite = finite && ratio && std::isfinite(*ratio) && *ratio > 0.0;
    if (ratio) {
      lo = std::min(lo, *ratio);
      hi = std::max(hi, *ratio);
    }
    detail += " " + num(rep.cell(r, "dist").value_or(NAN)) + "/" + num(ratio.value_or(NAN));
  }
  const double first = rep.cell(0, "dist").value(), lastd = rep.cell(rep.rows.size() - 1, "dist").value();
  const bool vanishing = decreasing && lastd < 0.01 * first;
  const bool bounded = finite && hi / lo <= 2.0;
  return {vanishing && bounded, detail + "; dist -> 0: " + yes(vanishing) + ", ratio max/min " + num(hi / lo) +
                                    " (<=2: " + yes(bounded) + ")"};
}

// 9. Byte-identical CLI outputs across runs and thread counts.
Outcome determinism() {
  const fs::path dir = scratch_dir();
  struct Job {
    std::string name, config;
    std::vector<std::string> cmd;
  };
  const std::vector<Job> jobs{
      {"validate", R"({"problem": {"f": "power23", "K": 3}})", {"validate"}},
      {"solve", R"({"problem": {"f": {"name": "linear", "params": {"a": 1}}, "g": {"name": "linear", "params": {"a": 0.3, "b": 0}}, "xi": "w", "N": 20}, "paths": {"M_B": 6, "M_W": 300}})",
       {"solve"}},
      {"bracket", R"({"problem": {"f": "power23", "K": 3, "N": 50}, "paths": {"M_B": 2, "M_W": 100}})", {"bracket"}},
      {"regcheck", R"({"problem": {"f": "power23", "K": 3}, "regularize": {"test_points": 200}})", {"regularize-check"}},
      {"cd", R"({"problem": {"f": {"name": "linear", "params": {"a": 1}}, "xi": "w", "N": 20}, "paths": {"M_B": 4, "M_W": 200}})",
       {"experiment", "cd"}},
      {"family", R"({"problem": {"f": "y + lam", "xi": "w + lam", "K": 2, "L": 1, "N": 20}, "paths": {"M_B": 4, "M_W": 200}, "experiment": {"kind": "family"}})",
       {"experiment"}},
      {"counterexample", R"({})", {"experiment", "counterexample"}},
      {"stability", R"({"problem": {"f": {"name": "linear", "params": {"a": 1}}, "xi": "w", "N": 20}, "paths": {"M_B": 4, "M_W": 200}})",
       {"experiment", "stability"}},
  };
  Outcome o;
  o.pass = true;
  int files = 0;
  std::string bad;
  for (const auto& job : jobs) {
    const fs::path cfg = dir / (job.name + ".json");
    std::ofstream(cfg) << job.config;
    std::vector<fs::path> outs;
    const char* threads[] = {"1", "1", "4"};
    for (int r = 0; r < 3; ++r) {
      const fs::path out = dir / (job.name + "_" + std::to_string(r));
      fs::create_directories(out);
      std::vector<std::string> args{"--threads", threads[r]};
      args.insert(args.end(), job.cmd.begin(), job.cmd.end());
      args.insert(args.end(), {"--config", cfg.string(), "--out", out.string()});
      const int rc = run_cli(args);
      if (rc != 0) {
        o.pass = false;
        bad += " " + job.name + "(exit " + std::to_string(rc) + ")";
      }
      outs.push_back(out);
    }
    for (const auto& entry : fs::directory_iterator(outs[0])) {
      const auto name = entry.path().filename();
      const std::string ref = slurp(entry.path());
      ++files;
      for (int r = 1; r < 3; ++r) {
        if (slurp(outs[r] / name) != ref) {
          o.pass = false;
          bad += " " + job.name + "/" + name.string();
        }
      }
    }
  }
  fs::remove_all(dir);
  o.detail = std::to_string(jobs.size()) + " commands, " + std::to_string(files) +
             " files compared over 3 runs (threads 1, 1, 4)" + (bad.empty() ? "" : "; differing:" + bad);
  return o;
}

// 10. DSL round trip and power23 values.
Outcome dsl_roundtrip() {
  testing_util::ExprGenerator gen(10101, 1);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto ast = gen(8);
    if (!dsl::structurally_equal(*dsl::parse(dsl::print(*ast)), *ast)) ++mismatches;
  }
  const auto e = dsl::parse(catalog::kPower23Source);
  std::mt19937_64 rng(10102);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double y = u(rng), z = 0.0;
    dsl::Bindings b;
    b.t = 0.0;
    b.y = y;
    b.z = std::span<const double>(&z, 1);
    const double exact = 3.0 * std::pow(std::abs(y), 2.0 / 3.0);
    worst = std::max(worst, std::abs(dsl::evaluate(*e, b) - exact) / exact);
  }
  return {mismatches == 0 && worst <= 1e-12,
          std::to_string(mismatches) + " round-trip mismatches in 1000, power23 worst relative error " + num(worst)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) cli_binary = argv[1];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"counterexample", counterexample},
      {"regularizer properties", regularizer_properties},
      {"upper regularizer at zero", upper_at_zero},
      {"solver oracles", solver_oracles},
      {"bracketing sandwich", bracketing},
      {"stability ratio", stability},
      {"continuous dependence", continuous_dependence},
      {"family experiment", family},
      {"determinism", determinism},
      {"dsl round trip", dsl_roundtrip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %zu (%s): %s: %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return std::min(failed, 100);
}
