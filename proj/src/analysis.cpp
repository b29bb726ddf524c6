#include "bdsde/analysis.hpp"

#include <cmath>
#include <sstream>

#include "bdsde/catalog.hpp"

namespace bdsde {

namespace {

struct Welford {
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double se() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0; }
};

std::string flag(bool b) { return b ? "true" : "false"; }

std::string join(std::span<const double> v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + format_number(x);
  return s;
}

void add_common_metadata(ExperimentReport& rep, const PathBundle& bundle, const SchemeConfig& cfg) {
  rep.metadata.emplace_back("seed", std::to_string(bundle.seed()));
  rep.metadata.emplace_back("T", format_number(bundle.grid().horizon()));
  rep.metadata.emplace_back("N", std::to_string(bundle.grid().steps()));
  rep.metadata.emplace_back("M_B", std::to_string(bundle.shape().outer));
  rep.metadata.emplace_back("M_W", std::to_string(bundle.shape().inner));
  rep.metadata.emplace_back("degree", std::to_string(cfg.degree));
  rep.metadata.emplace_back("picard", std::to_string(cfg.picard));
}

BDSDEProblem with_xi(BDSDEProblem p, TerminalCondition xi) {
  p.xi = std::move(xi);
  return p;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

}  // namespace

Estimate sup_sq_distance(const GridSolution& a, const GridSolution& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("sup_sq_distance: solutions have different shapes");
  if (a.bundle_seed() != b.bundle_seed()) {
    throw std::invalid_argument("sup_sq_distance: solutions come from different path bundles");
  }
  Welford acc;
  for (int o = 0; o < a.outer(); ++o) {
    for (int w = 0; w < a.inner(); ++w) {
      double mx = 0.0;
      for (int i = 0; i < a.nodes(); ++i) {
        const double diff = a.y(o, w, i) - b.y(o, w, i);
        mx = std::max(mx, diff * diff);
      }
      acc.add(mx);
    }
  }
  return {acc.mean, acc.se()};
}

double terminal_gap_sq(const TerminalCondition& a, const TerminalCondition& b, const PathBundle& bundle) {
  const auto& s = bundle.shape();
  const int nodes = bundle.grid().steps() + 1;
  std::vector<double> w(static_cast<std::size_t>(nodes) * s.d);
  Welford acc;
  for (int o = 0; o < s.outer; ++o) {
    for (int i = 0; i < s.inner; ++i) {
      cumulate_w(bundle, o, i, w);
      const PathView path{w, s.d};
      const double diff = a(path) - b(path);
      acc.add(diff * diff);
    }
  }
  return acc.mean;
}

ExperimentReport stability_ratio(const BDSDEProblem& problem, std::span<const double> deltas,
                                 const PathBundle& bundle, const SchemeConfig& cfg, Perturbation mode) {
  if (deltas.empty()) throw std::invalid_argument("stability_ratio: no perturbation sizes");
  ExperimentReport rep;
  rep.kind = "stability";
  rep.columns = {"delta", "dist", "xi_gap_sq", "ratio"};
  add_common_metadata(rep, bundle, cfg);
  rep.metadata.emplace_back("f", problem.f.name);
  rep.metadata.emplace_back("g", problem.g.name);
  rep.metadata.emplace_back("xi", problem.xi.name());
  rep.metadata.emplace_back("mode", mode == Perturbation::Shift ? "shift" : "scale");

  const GridSolution base = solve_lipschitz(problem, bundle, cfg);
  std::optional<double> worst;
  for (double delta : deltas) {
    TerminalCondition xi = mode == Perturbation::Shift ? problem.xi.shifted(delta) : problem.xi.scaled(1.0 + delta);
    const GridSolution pert = solve_lipschitz(with_xi(problem, xi), bundle, cfg);
    const Estimate dist = sup_sq_distance(pert, base);
    const double gap = terminal_gap_sq(xi, problem.xi, bundle);
    Cell ratio;
    if (delta != 0.0 && gap > 0.0) {
      ratio = dist.mean / gap;
      worst = worst ? std::max(*worst, *ratio) : *ratio;
    }
    rep.add_row({delta, dist.mean, gap, ratio}, dist.se);
  }
  rep.diagnostics.emplace_back("empirical_C", worst ? format_number(*worst) : "undefined");
  return rep;
}

ExperimentReport continuous_dependence_experiment(const BDSDEProblem& problem, std::span<const SequenceTerm> terms,
                                                  const PathBundle& bundle, const SchemeConfig& cfg,
                                                  std::span<const double> m_schedule, const LatticeSpec& lattice) {
  ExperimentReport rep;
  rep.kind = "cd";
  rep.columns = {"n", "dist_lower", "dist_upper", "se", "N", "M_B", "M_W"};
  add_common_metadata(rep, bundle, cfg);
  rep.metadata.emplace_back("f", problem.f.name);
  rep.metadata.emplace_back("g", problem.g.name);
  rep.metadata.emplace_back("xi", problem.xi.name());
  const double N = bundle.grid().steps(), MB = bundle.shape().outer, MW = bundle.shape().inner;

  std::vector<double> lower_col, upper_col;
  if (problem.f.lipschitz) {
    rep.metadata.emplace_back("method", "lipschitz");
    const GridSolution base = solve_lipschitz(problem, bundle, cfg);
    for (const auto& term : terms) {
      const Estimate d = sup_sq_distance(solve_lipschitz(with_xi(problem, term.xi), bundle, cfg), base);
      rep.add_row({term.n, d.mean, d.mean, d.se, N, MB, MW}, d.se);
      lower_col.push_back(d.mean);
      upper_col.push_back(d.mean);
    }
  } else {
    if (m_schedule.empty()) throw std::invalid_argument("continuous_dependence_experiment: empty m schedule");
    const double m = m_schedule.back();
    const LatticeSpec lat = scheduled_lattice(lattice, m);
    rep.metadata.emplace_back("method", "bracket");
    rep.metadata.emplace_back("m", format_number(m));
    rep.metadata.emplace_back("spacing", format_number(lat.spacing));
    const BracketResult base = bracket_solutions(problem, m, lat, bundle, cfg);
    BDSDEProblem up = problem;
    up.f = upper_regularize(problem.f, m, lat, problem.d).as_driver();
    for (const auto& term : terms) {
      const GridSolution sol = solve_lipschitz(with_xi(up, term.xi), bundle, cfg);
      const Estimate dl = sup_sq_distance(sol, base.lower);
      const Estimate du = sup_sq_distance(sol, base.upper);
      const double se = std::max(dl.se, du.se);
      rep.add_row({term.n, dl.mean, du.mean, se, N, MB, MW}, se);
      lower_col.push_back(dl.mean);
      upper_col.push_back(du.mean);
    }
  }
  rep.diagnostics.emplace_back("dist_lower_decreasing", flag(strictly_decreasing(lower_col)));
  rep.diagnostics.emplace_back("dist_upper_decreasing", flag(strictly_decreasing(upper_col)));
  return rep;
}

ExperimentReport counterexample_scenario(double T, std::span<const double> n_values, int steps) {
  if (!(T > 0.0)) throw std::invalid_argument("counterexample: T must be positive");
  for (double n : n_values) {
    if (!(n >= 1.0) || n != std::floor(n)) throw std::invalid_argument("counterexample: n must be a positive integer");
  }
  const TimeGrid grid(T, steps);
  ExperimentReport rep;
  rep.kind = "counterexample";
  rep.columns = {"n", "Y0", "dist_to_min_sq", "dist_to_max_sq"};
  rep.metadata.emplace_back("T", format_number(T));
  rep.metadata.emplace_back("N", std::to_string(steps));
  rep.metadata.emplace_back("f", "power23{3}");
  rep.metadata.emplace_back("g", "zero");
  rep.metadata.emplace_back("method", "ode-rk4");

  std::vector<double> zero(static_cast<std::size_t>(steps) + 1, 0.0), cubic(zero.size());
  for (int i = 0; i <= steps; ++i) cubic[i] = std::pow(T - grid.node(i), 3);
  const GridSolution minimal = GridSolution::from_curve(grid, zero);
  const GridSolution maximal = GridSolution::from_curve(grid, cubic);

  std::vector<double> to_min, to_max;
  for (double n : n_values) {
    BDSDEProblem p{catalog::power23(3.0), catalog::zero_g(1), catalog::constant_xi(1.0 / n), grid, 1, 1};
    const GridSolution sol = GridSolution::from_curve(grid, solve_deterministic(p));
    const Estimate dmin = sup_sq_distance(sol, minimal);
    const Estimate dmax = sup_sq_distance(sol, maximal);
    rep.add_row({n, sol.y(0, 0, 0), dmin.mean, dmax.mean}, 0.0);
    to_min.push_back(dmin.mean);
    to_max.push_back(dmax.mean);
  }
  bool inc = true, dec = true;
  for (std::size_t i = 2; i < to_min.size(); ++i) {
    inc = inc && to_min[i] <= to_min[i - 1];
    dec = dec && to_max[i] <= to_max[i - 1];
  }
  // Y0 = (T + n^(-1/3))^3 falls toward T^3, so both distances shrink in n.
  rep.diagnostics.emplace_back("dist_to_min_nonincreasing", flag(inc));
  rep.diagnostics.emplace_back("dist_to_max_nonincreasing", flag(dec));
  rep.diagnostics.emplace_back("limit_dist_to_min", format_number(std::pow(T, 6)));
  rep.diagnostics.emplace_back("limit_dist_to_max", format_number(0.0));
  return rep;
}

ExperimentReport family_dependence_experiment(const ParamFamily& family, std::span<const double> lambdas,
                                              const PathBundle& bundle, const SchemeConfig& cfg,
                                              std::span<const double> m_schedule, const LatticeSpec& lattice) {
  if (family.anchor.size() != 1) throw std::invalid_argument("family experiment: scalar parameter expected");
  const TimeGrid& grid = bundle.grid();
  const int d = bundle.shape().d, l = bundle.shape().l;
  auto problem_at = [&](double lam) {
    FamilyMember mem = family.at(lam);
    return BDSDEProblem{std::move(mem.f), std::move(mem.g), std::move(mem.xi), grid, d, l};
  };
  const double lam0 = family.anchor[0];
  const BDSDEProblem p0 = problem_at(lam0);

  ExperimentReport rep;
  rep.kind = "family";
  rep.columns = {"lambda", "dist", "rhs_eq8", "ratio"};
  add_common_metadata(rep, bundle, cfg);
  rep.metadata.emplace_back("anchor", format_number(lam0));
  rep.metadata.emplace_back("f", p0.f.name);
  rep.metadata.emplace_back("g", p0.g.name);
  rep.metadata.emplace_back("xi", p0.xi.name());

  std::vector<double> dists;
  if (p0.f.lipschitz) {
    rep.metadata.emplace_back("method", "lipschitz");
    const GridSolution s0 = solve_lipschitz(p0, bundle, cfg);
    const double dt = grid.dt();
    std::vector<double> z(d), g0(l), g1(l);
    for (double lam : lambdas) {
      const BDSDEProblem p = problem_at(lam);
      if (!p.f.lipschitz) throw std::invalid_argument("family experiment: member without Lipschitz constant");
      const Estimate dist = sup_sq_distance(solve_lipschitz(p, bundle, cfg), s0);
      double integral = 0.0;
      std::size_t paths = 0;
      for (int o = 0; o < s0.outer(); ++o) {
        for (int w = 0; w < s0.inner(); ++w) {
          double acc = 0.0;
          for (int i = 0; i < grid.steps(); ++i) {
            const double t = grid.node(i), y = s0.y(o, w, i);
            for (int k = 0; k < d; ++k) z[k] = s0.z(o, w, i, k);
            const double df = p.f.eval(t, y, z) - p0.f.eval(t, y, z);
            p.g.eval(t, y, z, g1);
            p0.g.eval(t, y, z, g0);
            double dg = 0.0;
            for (int j = 0; j < l; ++j) dg += (g1[j] - g0[j]) * (g1[j] - g0[j]);
            acc += (df * df + dg) * dt;
          }
          ++paths;
          integral += (acc - integral) / static_cast<double>(paths);
        }
      }
      const double rhs = terminal_gap_sq(p.xi, p0.xi, bundle) + integral;
      Cell ratio;
      if (rhs > 0.0) ratio = dist.mean / rhs;
      rep.add_row({lam, dist.mean, rhs, ratio}, dist.se);
      dists.push_back(dist.mean);
    }
  } else {
    if (m_schedule.empty()) throw std::invalid_argument("family experiment: empty m schedule");
    const double m = m_schedule.back();
    const LatticeSpec lat = scheduled_lattice(lattice, m);
    rep.metadata.emplace_back("method", "bracket");
    rep.metadata.emplace_back("m", format_number(m));
    rep.metadata.emplace_back("spacing", format_number(lat.spacing));
    const BracketResult base = bracket_solutions(p0, m, lat, bundle, cfg);
    std::vector<double> to_max;
    for (double lam : lambdas) {
      BDSDEProblem p = problem_at(lam);
      p.f = upper_regularize(p.f, m, lat, d).as_driver();
      const GridSolution sol = solve_lipschitz(p, bundle, cfg);
      const Estimate dmin = sup_sq_distance(sol, base.lower);
      const Estimate dmax = sup_sq_distance(sol, base.upper);
      rep.add_row({lam, dmin.mean, Cell{}, Cell{}}, dmin.se);
      dists.push_back(dmin.mean);
      to_max.push_back(dmax.mean);
    }
    rep.diagnostics.emplace_back("dist_to_maximal", join(to_max));
  }
  rep.diagnostics.emplace_back("dist_decreasing", flag(strictly_decreasing(dists)));
  return rep;
}

}  // namespace bdsde
