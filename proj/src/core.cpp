#include "bdsde/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

namespace bdsde {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
  }
  if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
}

DriverEvaluationError::DriverEvaluationError(const std::string& what, std::vector<double> point)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << what << " at (";
        for (std::size_t i = 0; i < point.size(); ++i) os << (i ? ", " : "") << point[i];
        os << ")";
        return os.str();
      }()),
      point_(std::move(point)) {}

GrowthEnvelope DriverF::growth_envelope(double K) {
  return [K](double slope) -> std::optional<double> {
    if (slope >= K) return K;
    return std::nullopt;
  };
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

TerminalCondition TerminalCondition::constant(double value, std::string name) {
  TerminalCondition tc;
  tc.kind_ = TerminalKind::Constant;
  tc.constant_ = value;
  tc.fn_ = [value](const PathView&) { return value; };
  tc.name_ = name.empty() ? "constant" : std::move(name);
  return tc;
}

TerminalCondition TerminalCondition::of_terminal_w(std::function<double(std::span<const double>)> fn,
                                                   std::string name) {
  TerminalCondition tc;
  tc.kind_ = TerminalKind::TerminalW;
  tc.fn_ = [fn = std::move(fn)](const PathView& w) { return fn(w.terminal()); };
  tc.name_ = std::move(name);
  return tc;
}

TerminalCondition TerminalCondition::of_path(std::function<double(const PathView&)> fn,
                                             std::string name) {
  TerminalCondition tc;
  tc.kind_ = TerminalKind::PathFunctional;
  tc.fn_ = std::move(fn);
  tc.name_ = std::move(name);
  return tc;
}

TerminalCondition TerminalCondition::shifted(double delta) const {
  TerminalCondition tc = *this;
  tc.fn_ = [fn = fn_, delta](const PathView& w) { return fn(w) + delta; };
  if (constant_) tc.constant_ = *constant_ + delta;
  std::ostringstream os;
  os << name_ << "+" << delta;
  tc.name_ = os.str();
  return tc;
}

TerminalCondition TerminalCondition::scaled(double factor) const {
  TerminalCondition tc = *this;
  tc.fn_ = [fn = fn_, factor](const PathView& w) { return factor * fn(w); };
  if (constant_) tc.constant_ = *constant_ * factor;
  std::ostringstream os;
  os << factor << "*" << name_;
  tc.name_ = os.str();
  return tc;
}

void BDSDEProblem::check() const {
  if (d < 1 || l < 1) throw std::invalid_argument("problem: d and l must be >= 1");
  if (!f.eval || !g.eval) throw std::invalid_argument("problem: drivers must be set");
  if (f.z_dim != 0 && f.z_dim != d) {
    throw std::invalid_argument("problem: f expects z of dimension " + std::to_string(f.z_dim) +
                                ", problem has d = " + std::to_string(d));
  }
  if (g.z_dim != 0 && g.z_dim != d) {
    throw std::invalid_argument("problem: g expects z of dimension " + std::to_string(g.z_dim) +
                                ", problem has d = " + std::to_string(d));
  }
  if (g.out_dim != l) {
    throw std::invalid_argument("problem: g has " + std::to_string(g.out_dim) +
                                " outputs, problem has l = " + std::to_string(l));
  }
  if (!(f.growth > 0.0)) throw std::invalid_argument("problem: growth constant K must be positive");
  if (!(g.c > 0.0) || !(g.alpha > 0.0 && g.alpha < 1.0)) {
    throw std::invalid_argument("problem: g constants need c > 0 and 0 < alpha < 1");
  }
}

bool ParamFamily::contains(std::span<const double> lambda) const {
  if (lambda.size() != lower.size() || lambda.size() != upper.size()) return false;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < lower[i] || lambda[i] > upper[i]) return false;
  }
  return true;
}

FamilyMember ParamFamily::at(std::span<const double> lambda) const {
  if (!contains(lambda)) throw std::invalid_argument("ParamFamily: parameter outside domain");
  FamilyMember m = member(lambda);
  if (m.f.growth > growth) {
    throw std::invalid_argument("ParamFamily: member growth constant exceeds the family's K");
  }
  return m;
}

GridSolution::GridSolution(TimeGrid grid, int outer, int inner, int d, std::uint64_t bundle_seed)
    : grid_(grid), outer_(outer), inner_(inner), d_(d), seed_(bundle_seed) {
  if (outer < 1 || inner < 1 || d < 1) throw std::invalid_argument("GridSolution: bad shape");
  const std::size_t n = paths() * static_cast<std::size_t>(nodes());
  y_.assign(n, 0.0);
  z_.assign(n * d, 0.0);
  y0_se.assign(outer, 0.0);
}

GridSolution GridSolution::from_curve(const TimeGrid& grid, std::span<const double> y, int d) {
  if (y.size() != static_cast<std::size_t>(grid.steps() + 1)) {
    throw std::invalid_argument("GridSolution::from_curve: curve length must be N+1");
  }
  GridSolution s(grid, 1, 1, d, 0);
  for (int i = 0; i < s.nodes(); ++i) s.y(0, 0, i) = y[i];
  return s;
}

bool GridSolution::same_shape(const GridSolution& o) const noexcept {
  return grid_ == o.grid_ && outer_ == o.outer_ && inner_ == o.inner_ && d_ == o.d_;
}

Estimate initial_value(const GridSolution& s) {
  // Welford keeps identical samples at exactly zero spread.
  double mean = 0.0;
  std::size_t n = 0;
  for (int b = 0; b < s.outer(); ++b) {
    for (int w = 0; w < s.inner(); ++w) {
      ++n;
      mean += (s.y(b, w, 0) - mean) / static_cast<double>(n);
    }
  }
  Estimate e{mean, 0.0};
  if (s.outer() >= 2) {
    double m = 0.0, m2 = 0.0;
    for (int b = 0; b < s.outer(); ++b) {
      const double x = s.y(b, 0, 0);
      const double delta = x - m;
      m += delta / (b + 1);
      m2 += delta * (x - m);
    }
    e.se = std::sqrt(m2 / (s.outer() - 1) / s.outer());
  } else {
    e.se = s.y0_se.empty() ? 0.0 : s.y0_se[0];
  }
  return e;
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

namespace {

constexpr std::array<int, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t index, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

// Halton points with a seeded Cranley-Patterson rotation.
class QuasiSampler {
 public:
  QuasiSampler(int dim, std::uint64_t seed) : shift_(dim) {
    if (dim > static_cast<int>(kPrimes.size())) {
      throw std::invalid_argument("validate_problem: z dimension too large for the sampler");
    }
    std::mt19937_64 rng(seed);
    for (auto& s : shift_) s = std::generate_canonical<double, 53>(rng);
  }

  void point(std::uint64_t index, std::span<double> u) const {
    for (std::size_t k = 0; k < shift_.size(); ++k) {
      double v = radical_inverse(index + 1, kPrimes[k]) + shift_[k];
      u[k] = v >= 1.0 ? v - 1.0 : v;
    }
  }

 private:
  std::vector<double> shift_;
};

double eval_f(const DriverF& f, double t, double y, std::span<const double> z) {
  auto fail = [&](const std::string& why) {
    std::vector<double> p{t, y};
    p.insert(p.end(), z.begin(), z.end());
    throw DriverEvaluationError("f(" + f.name + ") " + why, std::move(p));
  };
  double v = 0.0;
  try {
    v = f(t, y, z);
  } catch (const DriverEvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("failed: ") + e.what());
  }
  if (!std::isfinite(v)) fail("returned a non-finite value");
  return v;
}

void eval_g(const DriverG& g, double t, double y, std::span<const double> z, std::span<double> out) {
  auto fail = [&](const std::string& why) {
    std::vector<double> p{t, y};
    p.insert(p.end(), z.begin(), z.end());
    throw DriverEvaluationError("g(" + g.name + ") " + why, std::move(p));
  };
  try {
    g(t, y, z, out);
  } catch (const DriverEvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    fail(std::string("failed: ") + e.what());
  }
  for (double v : out) {
    if (!std::isfinite(v)) fail("returned a non-finite value");
  }
}

struct Scaled {
  const BDSDEProblem& p;
  const SamplingBox& box;
  double t(double u) const { return u * p.grid.horizon(); }
  double y(double u) const { return (2.0 * u - 1.0) * box.y_max; }
  double z(double u) const { return (2.0 * u - 1.0) * box.z_max; }
};

void record(HypothesisCheck& c, double ratio, std::vector<double> point) {
  if (ratio > c.worst_ratio || c.witness.empty()) {
    c.worst_ratio = std::max(c.worst_ratio, ratio);
    c.witness = std::move(point);
  }
}

}  // namespace

ValidationReport validate_problem(const BDSDEProblem& problem, std::size_t budget,
                                  std::uint64_t seed, const ValidationOptions& opts) {
  if (budget < 1) throw std::invalid_argument("validate_problem: budget must be >= 1");
  problem.check();
  const int d = problem.d;
  const int l = problem.l;
  const Scaled sc{problem, opts.box};
  ValidationReport report;

  // Growth, or its re-centered variant.
  {
    HypothesisCheck c;
    c.name = opts.recenter ? "growth of f - f(0,0,0)" : "growth of f";
    const QuasiSampler qs(2 + d, seed);
    std::vector<double> u(2 + d), z(d), zero(d, 0.0);
    const double f0 = opts.recenter ? eval_f(problem.f, 0.0, 0.0, zero) : 0.0;
    for (std::size_t n = 0; n < budget; ++n) {
      qs.point(n, u);
      const double t = sc.t(u[0]), y = sc.y(u[1]);
      for (int k = 0; k < d; ++k) z[k] = sc.z(u[2 + k]);
      const double fv = eval_f(problem.f, t, y, z) - f0;
      const double ratio = std::abs(fv) / (problem.f.growth * (1.0 + std::abs(y) + norm(z)));
      std::vector<double> p{t, y};
      p.insert(p.end(), z.begin(), z.end());
      record(c, ratio, std::move(p));
    }
    c.samples = budget;
    c.passed = c.worst_ratio <= 1.0 + opts.tolerance;
    report.checks.push_back(std::move(c));
  }

  // Declared Lipschitz constant of f.
  if (problem.f.lipschitz) {
    const double L = *problem.f.lipschitz;
    HypothesisCheck c;
    c.name = "Lipschitz constant of f";
    const QuasiSampler qs(1 + 2 * (1 + d), seed ^ 0x5bd1e995u);
    std::vector<double> u(1 + 2 * (1 + d)), z1(d), z2(d), dz(d);
    for (std::size_t n = 0; n < budget; ++n) {
      qs.point(n, u);
      const double t = sc.t(u[0]), y1 = sc.y(u[1]), y2 = sc.y(u[2 + d]);
      for (int k = 0; k < d; ++k) {
        z1[k] = sc.z(u[2 + k]);
        z2[k] = sc.z(u[3 + d + k]);
        dz[k] = z1[k] - z2[k];
      }
      const double df = std::abs(eval_f(problem.f, t, y1, z1) - eval_f(problem.f, t, y2, z2));
      const double dist = std::abs(y1 - y2) + norm(dz);
      double ratio = 0.0;
      if (df > 0.0) ratio = (L * dist > 0.0) ? df / (L * dist) : INFINITY;
      std::vector<double> p{t, y1};
      p.insert(p.end(), z1.begin(), z1.end());
      p.push_back(y2);
      p.insert(p.end(), z2.begin(), z2.end());
      record(c, ratio, std::move(p));
    }
    c.samples = budget;
    c.passed = c.worst_ratio <= 1.0 + opts.tolerance;
    report.checks.push_back(std::move(c));
  }

  // Contraction of g.
  {
    HypothesisCheck c;
    c.name = "contraction of g";
    const QuasiSampler qs(1 + 2 * (1 + d), seed ^ 0x27d4eb2fu);
    std::vector<double> u(1 + 2 * (1 + d)), z1(d), z2(d), dz(d), g1(l), g2(l);
    for (std::size_t n = 0; n < budget; ++n) {
      qs.point(n, u);
      const double t = sc.t(u[0]), y1 = sc.y(u[1]), y2 = sc.y(u[2 + d]);
      for (int k = 0; k < d; ++k) {
        z1[k] = sc.z(u[2 + k]);
        z2[k] = sc.z(u[3 + d + k]);
        dz[k] = z1[k] - z2[k];
      }
      eval_g(problem.g, t, y1, z1, g1);
      eval_g(problem.g, t, y2, z2, g2);
      double dg2 = 0.0;
      for (int j = 0; j < l; ++j) dg2 += (g1[j] - g2[j]) * (g1[j] - g2[j]);
      const double nz = norm(dz);
      const double bound = problem.g.c * (y1 - y2) * (y1 - y2) + problem.g.alpha * nz * nz;
      double ratio = 0.0;
      if (dg2 > 0.0) ratio = bound > 0.0 ? dg2 / bound : INFINITY;
      std::vector<double> p{t, y1};
      p.insert(p.end(), z1.begin(), z1.end());
      p.push_back(y2);
      p.insert(p.end(), z2.begin(), z2.end());
      record(c, ratio, std::move(p));
    }
    c.samples = budget;
    c.passed = c.worst_ratio <= 1.0 + opts.tolerance;
    report.checks.push_back(std::move(c));
  }
  return report;
}

}  // namespace bdsde
