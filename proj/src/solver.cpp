#include "bdsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bdsde/parallel.hpp"
#include "bdsde/regression.hpp"

namespace bdsde {

namespace {

// Exponent tuples of all monomials of total degree <= p in d variables.
std::vector<std::vector<int>> monomials(int d, int p) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(d, 0);
  for (;;) {
    int total = 0;
    for (int x : e) total += x;
    if (total <= p) out.push_back(e);
    int k = 0;
    for (; k < d; ++k) {
      if (++e[k] <= p) break;
      e[k] = 0;
    }
    if (k == d) break;
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    int sa = 0, sb = 0;
    for (int x : a) sa += x;
    for (int x : b) sb += x;
    return sa < sb;
  });
  return out;
}

Eigen::MatrixXd design(const std::vector<double>& W, int nodes, int d, int inner, int i, double t, int degree) {
  const auto mono = monomials(d, degree);
  Eigen::MatrixXd X(inner, static_cast<Eigen::Index>(mono.size()));
  const double scale = t > 0.0 ? 1.0 / std::sqrt(t) : 0.0;
  std::vector<double> x(d);
  for (int w = 0; w < inner; ++w) {
    for (int k = 0; k < d; ++k) x[k] = W[(static_cast<std::size_t>(w) * nodes + i) * d + k] * scale;
    for (std::size_t c = 0; c < mono.size(); ++c) {
      double v = 1.0;
      for (int k = 0; k < d; ++k) {
        for (int r = 0; r < mono[c][k]; ++r) v *= x[k];
      }
      X(w, static_cast<Eigen::Index>(c)) = v;
    }
  }
  return X;
}

struct Fit {
  Eigen::MatrixXd X;
  std::optional<LeastSquares> ls;
  int degree = 0;
};

// Largest degree <= requested with a full-rank design; node 0 is intercept only.
Fit make_fit(const std::vector<double>& W, int nodes, int d, int inner, int i, double t, int degree,
             std::vector<std::string>& warnings) {
  Fit fit;
  const int start = i == 0 ? 0 : degree;
  for (int p = start; p >= 0; --p) {
    fit.X = design(W, nodes, d, inner, i, t, p);
    if (fit.X.rows() < fit.X.cols()) {
      warnings.push_back("node " + std::to_string(i) + ": too few inner paths for degree " + std::to_string(p) +
                         ", degree reduced");
      continue;
    }
    fit.ls.emplace(fit.X);
    if (!fit.ls->rank_deficient() || p == 0) {
      if (p < start) {
        warnings.push_back("node " + std::to_string(i) + ": regression rank-deficient, degree reduced to " +
                           std::to_string(p));
      }
      fit.degree = p;
      return fit;
    }
  }
  return fit;
}

Eigen::VectorXd fitted(const Fit& fit, const Eigen::VectorXd& target) { return fit.X * fit.ls->solve(target); }

double clip_value(double v, const std::optional<double>& clip) {
  return clip ? std::clamp(v, -*clip, *clip) : v;
}

double checked_f(const DriverF& f, double t, double y, std::span<const double> z) {
  const double v = f.eval(t, y, z);
  if (!std::isfinite(v)) {
    std::vector<double> pt{t, y};
    pt.insert(pt.end(), z.begin(), z.end());
    throw DriverEvaluationError("solver: f is not finite", pt);
  }
  return v;
}

}  // namespace

void SchemeConfig::check() const {
  if (degree < 0) throw std::invalid_argument("scheme: degree must be >= 0");
  if (picard < 1) throw std::invalid_argument("scheme: picard sweeps must be >= 1");
  if (clip && !(*clip > 0.0)) throw std::invalid_argument("scheme: clip bound must be positive");
  if (threads < 1) throw std::invalid_argument("scheme: threads must be >= 1");
}

std::optional<std::string> deterministic_obstacle(const BDSDEProblem& problem) {
  if (problem.xi.kind() != TerminalKind::Constant) return "terminal condition is not deterministic";
  if (!problem.g.vanishes_at_zero_z) return "g is not declared to vanish at z = 0";
  return std::nullopt;
}

std::vector<double> solve_deterministic(const BDSDEProblem& problem) {
  problem.check();
  if (auto why = deterministic_obstacle(problem)) {
    throw std::invalid_argument("solve_deterministic: " + *why + "; use the stochastic scheme");
  }
  const TimeGrid& grid = problem.grid;
  const int N = grid.steps();
  const std::vector<double> zero(static_cast<std::size_t>(problem.d), 0.0);
  auto F = [&](double t, double y) { return checked_f(problem.f, t, y, zero); };
  std::vector<double> y(static_cast<std::size_t>(N) + 1);
  y[N] = *problem.xi.constant_value();
  constexpr int kSub = 10;
  const double h = grid.dt() / kSub;
  for (int i = N - 1; i >= 0; --i) {
    double Y = y[i + 1];
    double t = grid.node(i + 1);
    for (int s = 0; s < kSub; ++s) {
      const double k1 = F(t, Y);
      const double k2 = F(t - 0.5 * h, Y + 0.5 * h * k1);
      const double k3 = F(t - 0.5 * h, Y + 0.5 * h * k2);
      const double k4 = F(t - h, Y + h * k3);
      Y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t = grid.node(i + 1) - (s + 1) * h;
    }
    y[i] = Y;
  }
  return y;
}

GridSolution solve_lipschitz(const BDSDEProblem& problem, const PathBundle& bundle, const SchemeConfig& cfg) {
  problem.check();
  cfg.check();
  if (!problem.f.lipschitz) {
    throw std::invalid_argument("solve_lipschitz: driver '" + problem.f.name +
                                "' has no Lipschitz constant; regularize it first");
  }
  if (!(bundle.grid() == problem.grid)) throw std::invalid_argument("solve_lipschitz: bundle grid differs");
  const BundleShape& shape = bundle.shape();
  if (shape.d != problem.d || shape.l != problem.l) {
    throw std::invalid_argument("solve_lipschitz: bundle dimensions differ from the problem");
  }

  const TimeGrid& grid = problem.grid;
  const int N = grid.steps(), d = problem.d, l = problem.l, Mw = shape.inner, nodes = N + 1;
  const double dt = grid.dt();
  GridSolution sol(grid, shape.outer, Mw, d, bundle.seed());
  sol.features.resize(nodes);
  for (int i = 0; i < nodes; ++i) sol.features[i] = NodeFeatures{i, i};
  sol.z_target_average.assign(static_cast<std::size_t>(shape.outer) * Mw * d, 0.0);
  std::vector<std::vector<std::string>> warnings(shape.outer);

  parallel_for(static_cast<std::size_t>(shape.outer), cfg.threads, [&](std::size_t bi) {
    const int b = static_cast<int>(bi);
    std::vector<double> W(static_cast<std::size_t>(Mw) * nodes * d);
    for (int w = 0; w < Mw; ++w) {
      cumulate_w(bundle, b, w,
                 std::span<double>(W).subspan(static_cast<std::size_t>(w) * nodes * d,
                                              static_cast<std::size_t>(nodes) * d));
    }
    auto& warn = warnings[bi];

    for (int w = 0; w < Mw; ++w) {
      PathView path{std::span<const double>(W).subspan(static_cast<std::size_t>(w) * nodes * d,
                                                       static_cast<std::size_t>(nodes) * d),
                    d};
      sol.y(b, w, N) = problem.xi(path);
    }

    // Z at the terminal node: g-free estimate from the last step.
    {
      Fit fit = make_fit(W, nodes, d, Mw, N - 1, grid.node(N - 1), cfg.degree, warn);
      for (int k = 0; k < d; ++k) {
        Eigen::VectorXd tz(Mw);
        for (int w = 0; w < Mw; ++w) tz[w] = clip_value(sol.y(b, w, N) * bundle.dw_at(b, w, N - 1, k) / dt, cfg.clip);
        const Eigen::VectorXd zf = fitted(fit, tz);
        for (int w = 0; w < Mw; ++w) sol.z(b, w, N, k) = zf[w];
      }
    }

    Eigen::VectorXd ty(Mw), tbase(Mw), fterm(Mw), gterm(Mw);
    Eigen::MatrixXd tz(Mw, d);
    // Per path: xi plus every f and g increment used. Its sample mean is Y_0,
    // since each fit has an intercept and preserves the target mean.
    Eigen::VectorXd telescoped(Mw);
    for (int w = 0; w < Mw; ++w) telescoped[w] = sol.y(b, w, N);
    std::vector<double> zbuf(d), gbuf(l);
    for (int i = N - 1; i >= 0; --i) {
      const double t1 = grid.node(i + 1), t0 = grid.node(i);
      Fit fit = make_fit(W, nodes, d, Mw, i, t0, cfg.degree, warn);
      for (int w = 0; w < Mw; ++w) {
        const double y1 = sol.y(b, w, i + 1);
        for (int k = 0; k < d; ++k) zbuf[k] = sol.z(b, w, i + 1, k);
        problem.g.eval(t1, y1, zbuf, gbuf);
        double gdb = 0.0;
        for (int j = 0; j < l; ++j) gdb += gbuf[j] * bundle.db_at(b, i, j);
        const double fv = checked_f(problem.f, t1, y1, zbuf);
        fterm[w] = fv * dt;
        gterm[w] = gdb;
        tbase[w] = clip_value(y1 + gdb, cfg.clip);
        ty[w] = clip_value(y1 + fv * dt + gdb, cfg.clip);
        for (int k = 0; k < d; ++k) tz(w, k) = clip_value((y1 + gdb) * bundle.dw_at(b, w, i, k) / dt, cfg.clip);
      }
      for (int k = 0; k < d; ++k) {
        const Eigen::VectorXd zf = fitted(fit, tz.col(k));
        for (int w = 0; w < Mw; ++w) {
          sol.z(b, w, i, k) = zf[w];
          sol.z_target_average[(bi * Mw + w) * d + k] += tz(w, k) / N;
        }
      }
      const Eigen::VectorXd yf = fitted(fit, ty);
      for (int w = 0; w < Mw; ++w) sol.y(b, w, i) = yf[w];
      if (cfg.picard > 1) {
        const Eigen::VectorXd base = fitted(fit, tbase);
        for (int sweep = 1; sweep < cfg.picard; ++sweep) {
          for (int w = 0; w < Mw; ++w) {
            for (int k = 0; k < d; ++k) zbuf[k] = sol.z(b, w, i, k);
            fterm[w] = dt * checked_f(problem.f, t0, sol.y(b, w, i), zbuf);
            sol.y(b, w, i) = base[w] + fterm[w];
          }
        }
      }
      telescoped += fterm + gterm;
      if (i == 0) {
        double mean = 0.0, m2 = 0.0;
        for (int w = 0; w < Mw; ++w) {
          const double delta = telescoped[w] - mean;
          mean += delta / (w + 1);
          m2 += delta * (telescoped[w] - mean);
        }
        sol.y0_se[bi] = Mw > 1 ? std::sqrt(m2 / (Mw - 1) / Mw) : 0.0;
      }
    }
  });

  std::set<std::string> seen;
  for (const auto& ws : warnings) {
    for (const auto& w : ws) {
      if (seen.insert(w).second) sol.warnings.push_back(w);
    }
  }
  return sol;
}

BracketResult bracket_solutions(const BDSDEProblem& problem, double m, const LatticeSpec& lattice,
                                const PathBundle& bundle, const SchemeConfig& cfg) {
  problem.check();
  BDSDEProblem lo = problem, up = problem;
  lo.f = lower_regularize(problem.f, m, lattice, problem.d).as_driver();
  up.f = upper_regularize(problem.f, m, lattice, problem.d).as_driver();
  BracketResult r{solve_lipschitz(lo, bundle, cfg), solve_lipschitz(up, bundle, cfg), m, {}, {}};
  r.lower_y0 = initial_value(r.lower);
  r.upper_y0 = initial_value(r.upper);
  r.width = r.upper_y0.mean - r.lower_y0.mean;
  r.width_se = std::hypot(r.lower_y0.se, r.upper_y0.se);
  return r;
}

std::vector<double> default_m_schedule(double K) { return {K, 2 * K, 4 * K, 8 * K}; }

LatticeSpec scheduled_lattice(const LatticeSpec& base, double m) {
  if (!(m > 0.0)) throw std::invalid_argument("scheduled_lattice: m must be positive");
  return LatticeSpec{base.radius, base.spacing / m};
}

double aitken_limit(std::span<const double> seq) {
  if (seq.empty()) throw std::invalid_argument("aitken_limit: empty sequence");
  const std::size_t n = seq.size();
  if (n < 3) return seq.back();
  const double x0 = seq[n - 3], x1 = seq[n - 2], x2 = seq[n - 1];
  const double d1 = x1 - x0, d2 = x2 - x1, denom = d2 - d1;
  // Only extrapolate a geometrically shrinking tail.
  if (denom == 0.0 || d1 == 0.0 || d2 / d1 <= 0.0 || d2 / d1 >= 1.0) return x2;
  return x2 - d2 * d2 / denom;
}

SequenceReport minimal_maximal_estimate(const BDSDEProblem& problem, std::span<const double> m_schedule,
                                        const LatticeSpec& lattice, const PathBundle& bundle,
                                        const SchemeConfig& cfg, bool refine_lattice) {
  if (m_schedule.empty()) throw std::invalid_argument("minimal_maximal_estimate: empty m schedule");
  for (std::size_t j = 0; j < m_schedule.size(); ++j) {
    if (!(m_schedule[j] >= problem.f.growth)) throw std::invalid_argument("minimal_maximal_estimate: m below K");
    if (j > 0 && !(m_schedule[j] > m_schedule[j - 1])) {
      throw std::invalid_argument("minimal_maximal_estimate: m schedule must be strictly ascending");
    }
  }
  SequenceReport rep;
  std::optional<BracketResult> prev;
  for (double m : m_schedule) {
    const LatticeSpec lat = refine_lattice ? scheduled_lattice(lattice, m) : lattice;
    BracketResult br = bracket_solutions(problem, m, lat, bundle, cfg);
    rep.m.push_back(m);
    rep.spacing.push_back(lat.spacing);
    rep.lower_y0.push_back(br.lower_y0);
    rep.upper_y0.push_back(br.upper_y0);
    rep.width.push_back(br.width);
    rep.width_se.push_back(br.width_se);
    if (prev) {
      const double dl = br.lower_y0.mean - prev->lower_y0.mean;
      const double du = br.upper_y0.mean - prev->upper_y0.mean;
      rep.lower_diffs.push_back(dl);
      rep.upper_diffs.push_back(du);
      const double tol_l = 3.0 * std::hypot(br.lower_y0.se, prev->lower_y0.se);
      const double tol_u = 3.0 * std::hypot(br.upper_y0.se, prev->upper_y0.se);
      const double tol_w = 3.0 * std::hypot(br.width_se, prev->width_se);
      rep.lower_monotone = rep.lower_monotone && dl >= -tol_l;
      rep.upper_monotone = rep.upper_monotone && du <= tol_u;
      rep.width_monotone = rep.width_monotone && br.width <= prev->width + tol_w;
      double min_diff = std::numeric_limits<double>::infinity();
      for (int b = 0; b < br.lower.outer(); ++b) {
        for (int w = 0; w < br.lower.inner(); ++w) {
          for (int i = 0; i < br.lower.nodes(); ++i) {
            min_diff = std::min(min_diff, br.lower.y(b, w, i) - prev->lower.y(b, w, i));
          }
        }
      }
      rep.min_node_lower_diff.push_back(min_diff);
      rep.node_monotone = rep.node_monotone && min_diff >= -tol_l;
    }
    prev = std::move(br);
  }
  std::vector<double> lo, up;
  for (const auto& e : rep.lower_y0) lo.push_back(e.mean);
  for (const auto& e : rep.upper_y0) up.push_back(e.mean);
  rep.lower_limit = aitken_limit(lo);
  rep.upper_limit = aitken_limit(up);
  rep.last = std::move(prev);
  return rep;
}

}  // namespace bdsde
