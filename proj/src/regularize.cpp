#include "bdsde/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace bdsde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxCacheNodes = std::size_t{1} << 22;

double rounding_slack(double a, double b) {
  return 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(a) + std::abs(b));
}

}  // namespace

void LatticeSpec::check() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("lattice: radius must be positive");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw std::invalid_argument("lattice: spacing must be positive");
  if (spacing > radius) throw std::invalid_argument("lattice: spacing must not exceed the radius");
}

long LatticeSpec::half_count() const {
  return static_cast<long>(std::floor(radius / spacing * (1.0 + 1e-12)));
}

bool LatticeSpec::is_node(double x) const {
  const double k = std::nearbyint(x / spacing);
  return std::abs(k) <= static_cast<double>(half_count()) && node(static_cast<long>(k)) == x;
}

TruncationError::TruncationError(const std::string& what, double required_radius)
    : std::runtime_error(what), required_(required_radius) {}

struct RegularizedDriver::State {
  DriverF base;
  double m = 0.0;
  Direction dir = Direction::Lower;
  LatticeSpec lat;
  int d = 1;
  RegularizeOptions opts;

  long K = 0;
  double h = 0.0;
  double sign = 1.0;  // minimize sign * f + m * dist
  std::vector<std::pair<double, double>> env;  // (slope B, intercept A) with B < m
  bool separable = false;
  bool corner = false;

  std::size_t cache_n = 0;
  std::unique_ptr<std::atomic<double>[]> cache;

  long width() const { return 2 * K + 1; }

  double raw(double t, long ky, std::span<const long> kz, std::vector<double>& zbuf) const {
    zbuf.assign(static_cast<std::size_t>(d), 0.0);
    if (!separable) {
      for (int i = 0; i < d; ++i) zbuf[i] = lat.node(kz[i]);
    }
    const double v = base.eval(t, lat.node(ky), zbuf);
    if (!std::isfinite(v)) {
      std::vector<double> pt{t, lat.node(ky)};
      pt.insert(pt.end(), zbuf.begin(), zbuf.end());
      throw DriverEvaluationError("regularize: driver '" + base.name + "' is not finite at a lattice node", pt);
    }
    return v;
  }

  // sign * f at a lattice node, cached for time-homogeneous drivers.
  double node_value(double t, long ky, std::span<const long> kz, std::vector<double>& zbuf) const {
    if (!cache) return sign * raw(t, ky, kz, zbuf);
    std::size_t idx = static_cast<std::size_t>(ky + K);
    if (!separable) {
      std::size_t stride = static_cast<std::size_t>(width());
      for (int i = 0; i < d; ++i) {
        idx += static_cast<std::size_t>(kz[i] + K) * stride;
        stride *= static_cast<std::size_t>(width());
      }
    }
    double v = cache[idx].load(std::memory_order_relaxed);
    if (std::isnan(v)) {
      v = raw(t, ky, kz, zbuf);
      cache[idx].store(v, std::memory_order_relaxed);
    }
    return sign * v;
  }

  double stop_bound(double s, double pnorm, double extra) const {
    double b = -kInf;
    for (const auto& [B, A] : env) b = std::max(b, (m - B) * s - A - B * pnorm + extra);
    return b;
  }

  double required_radius(double best, double pnorm, double extra, double coord_max) const {
    double s = kInf;
    for (const auto& [B, A] : env) s = std::min(s, (best - extra + A + B * pnorm) / (m - B));
    return coord_max + std::max(0.0, s);
  }

  long cell(double x) const { return std::clamp(static_cast<long>(std::floor(x / h)), -K, K - 1); }

  // z-independent f: the z coordinate of every candidate is free, so its penalty vanishes.
  double eval_separable(double t, double y) const {
    std::vector<double> zbuf;
    const long c = cell(y);
    auto cand = [&](long k) { return node_value(t, k, {}, zbuf) + m * std::abs(y - lat.node(k)); };
    double best = std::min(cand(c), cand(c + 1));
    if (corner) return best;
    if (env.empty()) {
      for (long k = -K; k <= K; ++k) best = std::min(best, cand(k));
      return best;
    }
    const double ay = std::abs(y);
    auto stop = [&](long k) {
      const double s = std::abs(y - lat.node(k));
      const double b = stop_bound(s, ay, 0.0);
      return b > best + rounding_slack(best, b);
    };
    for (long k = c - 1;; --k) {
      if (stop(k)) break;
      if (k < -K) {
        throw TruncationError("regularize: lattice radius " + std::to_string(lat.radius) + " below the required " +
                                  std::to_string(required_radius(best, ay, 0.0, ay)),
                              required_radius(best, ay, 0.0, ay));
      }
      best = std::min(best, cand(k));
    }
    for (long k = c + 2;; ++k) {
      if (stop(k)) break;
      if (k > K) {
        throw TruncationError("regularize: lattice radius " + std::to_string(lat.radius) + " below the required " +
                                  std::to_string(required_radius(best, ay, 0.0, ay)),
                              required_radius(best, ay, 0.0, ay));
      }
      best = std::min(best, cand(k));
    }
    return best;
  }

  double eval_corners(double t, double y, double z) const {
    std::vector<double> zbuf;
    const long cy = cell(y), cz = cell(z);
    double best = kInf;
    for (long ky = cy; ky <= cy + 1; ++ky) {
      for (long kz = cz; kz <= cz + 1; ++kz) {
        const long kzs[1] = {kz};
        const double v = node_value(t, ky, kzs, zbuf) + m * (std::abs(y - lat.node(ky)) + std::abs(z - lat.node(kz)));
        best = std::min(best, v);
      }
    }
    return best;
  }

  // Scan of L-infinity rings around the base cell, stopped by the growth envelope.
  double eval_rings(double t, double y, std::span<const double> z) const {
    const int n = 1 + d;
    std::vector<double> p(n);
    p[0] = y;
    for (int i = 0; i < d; ++i) p[i + 1] = z[i];
    const double pnorm = std::abs(y) + norm(z);
    double coord_max = 0.0;
    for (double x : p) coord_max = std::max(coord_max, std::abs(x));
    std::vector<long> c(n), off(n), lo(n), hi(n);
    for (int i = 0; i < n; ++i) c[i] = cell(p[i]);
    std::vector<double> zbuf;
    std::vector<long> kz(d);

    double best = kInf;
    auto visit = [&]() {
      double dz2 = 0.0;
      for (int i = 0; i < d; ++i) {
        kz[i] = c[i + 1] + off[i + 1];
        const double diff = z[i] - lat.node(kz[i]);
        dz2 += diff * diff;
      }
      const long ky = c[0] + off[0];
      const double v = node_value(t, ky, kz, zbuf) + m * (std::abs(y - lat.node(ky)) + std::sqrt(dz2));
      best = std::min(best, v);
    };

    for (long k = 0;; ++k) {
      if (k >= 1 && !env.empty()) {
        const double s = static_cast<double>(k - 1) * h;
        const double b = stop_bound(s, pnorm, 0.0);
        if (b > best + rounding_slack(best, b)) break;
      }
      bool clipped = false, any_inside = false;
      for (int i = 0; i < n; ++i) {
        if (c[i] - k < -K || c[i] + k > K) clipped = true;
        if (c[i] - k >= -K || c[i] + k <= K) any_inside = true;
      }
      if (clipped && !env.empty()) {
        const double r = required_radius(best, pnorm, 0.0, coord_max);
        throw TruncationError("regularize: lattice radius " + std::to_string(lat.radius) + " below the required " +
                                  std::to_string(r),
                              r);
      }
      if (env.empty() && k > 2 * K + 1) break;
      if (!any_inside && k > 0) continue;
      if (k == 0) {
        std::fill(off.begin(), off.end(), 0);
        visit();
        continue;
      }
      // Ring k: first coordinate with |offset| = k is j.
      for (int j = 0; j < n; ++j) {
        for (long sj : {-k, k}) {
          if (c[j] + sj < -K || c[j] + sj > K) continue;
          bool empty = false;
          for (int i = 0; i < n; ++i) {
            if (i == j) {
              lo[i] = hi[i] = sj;
              continue;
            }
            const long span = i < j ? k - 1 : k;
            lo[i] = std::max(-span, -K - c[i]);
            hi[i] = std::min(span, K - c[i]);
            if (lo[i] > hi[i]) empty = true;
          }
          if (empty) continue;
          off = lo;
          for (;;) {
            visit();
            int i = 0;
            for (; i < n; ++i) {
              if (off[i] < hi[i]) {
                ++off[i];
                break;
              }
              off[i] = lo[i];
            }
            if (i == n) break;
          }
        }
      }
    }
    return best;
  }
};

RegularizedDriver::RegularizedDriver(DriverF base, double m, Direction dir, LatticeSpec lattice, int d,
                                     RegularizeOptions opts)
    : s_(std::make_shared<State>()) {
  lattice.check();
  if (d < 1) throw std::invalid_argument("regularize: d must be >= 1");
  if (!(m >= base.growth)) {
    throw std::invalid_argument("regularize: m = " + std::to_string(m) + " is below the growth constant K = " +
                                std::to_string(base.growth));
  }
  if (base.z_dim != 0 && base.z_dim != d) throw std::invalid_argument("regularize: driver z dimension mismatch");
  State& s = *s_;
  s.base = std::move(base);
  s.m = m;
  s.dir = dir;
  s.lat = lattice;
  s.d = d;
  s.opts = opts;
  s.K = lattice.half_count();
  s.h = lattice.spacing;
  s.sign = dir == Direction::Lower ? 1.0 : -1.0;
  s.separable = !s.base.depends_on_z;
  s.corner = s.base.lipschitz && *s.base.lipschitz <= m && (s.separable || d == 1);

  const GrowthEnvelope& envelope = dir == Direction::Lower ? s.base.envelope_below : s.base.envelope_above;
  if (envelope) {
    std::vector<double> slopes{0.0, m / 4.0, m / 2.0, 3.0 * m / 4.0};
    if (s.base.growth < m) slopes.push_back(s.base.growth);
    std::sort(slopes.begin(), slopes.end());
    slopes.erase(std::unique(slopes.begin(), slopes.end()), slopes.end());
    for (double B : slopes) {
      if (!(B < m)) continue;
      if (auto A = envelope(B)) s.env.emplace_back(B, *A);
    }
  }

  if (!s.base.depends_on_t) {
    std::size_t nodes = static_cast<std::size_t>(s.width());
    bool fits = true;
    if (!s.separable) {
      for (int i = 0; i < d && fits; ++i) {
        if (nodes > kMaxCacheNodes / static_cast<std::size_t>(s.width())) fits = false;
        nodes *= static_cast<std::size_t>(s.width());
      }
    }
    if (fits && nodes <= kMaxCacheNodes) {
      s.cache_n = nodes;
      s.cache.reset(new std::atomic<double>[nodes]);
      for (std::size_t i = 0; i < nodes; ++i) s.cache[i].store(kNaN, std::memory_order_relaxed);
    }
  }
}

double RegularizedDriver::value(double t, double y, std::span<const double> z) const {
  const State& s = *s_;
  if (z.size() != static_cast<std::size_t>(s.d)) {
    throw std::invalid_argument("regularize: query z has dimension " + std::to_string(z.size()) + ", expected " +
                                std::to_string(s.d));
  }
  const double ext = s.lat.extent();
  double coord_max = std::abs(y);
  if (!s.separable) {
    for (double zi : z) coord_max = std::max(coord_max, std::abs(zi));
  }
  if (!(coord_max <= ext)) {
    throw TruncationError("regularize: query point outside the lattice box of radius " + std::to_string(ext),
                          coord_max);
  }
  double best;
  if (s.separable) {
    best = s.eval_separable(t, y);
  } else if (s.corner && s.d == 1) {
    best = s.eval_corners(t, y, z[0]);
  } else {
    best = s.eval_rings(t, y, z);
  }
  if (s.opts.include_query_point) best = std::min(best, s.sign * s.base.eval(t, y, z));
  return s.sign * best;
}

DriverF RegularizedDriver::as_driver() const {
  DriverF f;
  const State& s = *s_;
  f.name = std::string(s.dir == Direction::Lower ? "lower" : "upper") + "[m=" + std::to_string(s.m) + "](" +
           s.base.name + ")";
  auto self = *this;
  f.eval = [self](double t, double y, std::span<const double> z) { return self.value(t, y, z); };
  f.growth = s.base.growth;
  if (lipschitz_exact()) f.lipschitz = s.m;
  const double m = s.m;
  f.modulus = [m](double delta) { return m * delta; };
  f.envelope_below = DriverF::growth_envelope(s.base.growth);
  f.envelope_above = DriverF::growth_envelope(s.base.growth);
  f.depends_on_t = s.base.depends_on_t;
  f.depends_on_z = s.base.depends_on_z;
  f.z_dim = s.d;
  return f;
}

std::optional<double> RegularizedDriver::certified_error() const {
  const State& s = *s_;
  if (!s.base.modulus) return std::nullopt;
  const double n = 1.0 + s.d;
  return s.base.modulus(s.h * std::sqrt(n)) + s.m * s.h * n;
}

double RegularizedDriver::lattice_tolerance() const {
  if (auto e = certified_error()) return *e;
  return s_->m * s_->h * (1.0 + s_->d);
}

bool RegularizedDriver::certified() const { return static_cast<bool>(s_->base.modulus); }
bool RegularizedDriver::lipschitz_exact() const { return !s_->opts.include_query_point; }
bool RegularizedDriver::truncation_certified() const { return !s_->env.empty() || s_->corner; }
double RegularizedDriver::m() const { return s_->m; }
Direction RegularizedDriver::direction() const { return s_->dir; }
const LatticeSpec& RegularizedDriver::lattice() const { return s_->lat; }
const DriverF& RegularizedDriver::base() const { return s_->base; }
int RegularizedDriver::dim() const { return s_->d; }

RegularizedDriver lower_regularize(const DriverF& f, double m, const LatticeSpec& lattice, int d,
                                   RegularizeOptions opts) {
  return RegularizedDriver(f, m, Direction::Lower, lattice, d, opts);
}

RegularizedDriver upper_regularize(const DriverF& f, double m, const LatticeSpec& lattice, int d,
                                   RegularizeOptions opts) {
  return RegularizedDriver(f, m, Direction::Upper, lattice, d, opts);
}

double point_distance(const QueryPoint& p, const QueryPoint& q) {
  double dz2 = 0.0;
  for (std::size_t i = 0; i < p.z.size(); ++i) dz2 += (p.z[i] - q.z[i]) * (p.z[i] - q.z[i]);
  return std::abs(p.y - q.y) + std::sqrt(dz2);
}

std::vector<QueryPoint> lattice_test_points(const LatticeSpec& lattice, std::size_t n, int d, double box,
                                            std::uint64_t seed) {
  lattice.check();
  const long kmax = std::min(lattice.half_count(), static_cast<long>(std::floor(box / lattice.spacing)));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> pick(-kmax, kmax);
  std::vector<QueryPoint> pts(n);
  for (auto& p : pts) {
    p.y = lattice.node(pick(rng));
    p.z.resize(static_cast<std::size_t>(d));
    for (double& zi : p.z) zi = lattice.node(pick(rng));
  }
  return pts;
}

bool PropertyReport::passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.passed; });
}

const PropertyResult& PropertyReport::get(const std::string& name) const {
  for (const auto& p : properties) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("PropertyReport: no property '" + name + "'");
}

PropertyReport check_lemma_properties(const DriverF& f, std::span<const double> m_values,
                                      std::span<const QueryPoint> test_points, const LatticeSpec& lattice, int d,
                                      const PropertyOptions& opts) {
  lattice.check();
  if (m_values.empty()) throw std::invalid_argument("check_lemma_properties: empty m list");
  if (test_points.empty()) throw std::invalid_argument("check_lemma_properties: no test points");
  for (std::size_t j = 0; j < m_values.size(); ++j) {
    if (!(m_values[j] >= f.growth)) throw std::invalid_argument("check_lemma_properties: m below K");
    if (j > 0 && !(m_values[j] > m_values[j - 1])) {
      throw std::invalid_argument("check_lemma_properties: m values must be strictly ascending");
    }
  }
  for (const auto& p : test_points) {
    if (p.z.size() != static_cast<std::size_t>(d)) throw std::invalid_argument("check_lemma_properties: bad point");
  }

  const double K = f.growth;
  const double h = lattice.spacing;
  const double n1 = 1.0 + d;
  const std::size_t M = m_values.size(), P = test_points.size();
  const double t = opts.t;

  PropertyReport rep;
  rep.certified = static_cast<bool>(f.modulus);
  rep.include_query_point = opts.regularize.include_query_point;

  std::vector<RegularizedDriver> lo, up;
  for (double m : m_values) {
    lo.push_back(lower_regularize(f, m, lattice, d, opts.regularize));
    up.push_back(upper_regularize(f, m, lattice, d, opts.regularize));
  }
  std::vector<std::vector<double>> lv(M, std::vector<double>(P)), uv(M, std::vector<double>(P));
  std::vector<double> fv(P);
  for (std::size_t p = 0; p < P; ++p) {
    const auto& q = test_points[p];
    fv[p] = f.eval(t, q.y, q.z);
    for (std::size_t j = 0; j < M; ++j) {
      lv[j][p] = lo[j].value(t, q.y, q.z);
      uv[j][p] = up[j].value(t, q.y, q.z);
    }
  }

  // (i) linear growth up to the lattice term.
  {
    PropertyResult r{"growth"};
    double min_norm = kInf;
    for (const auto& q : test_points) min_norm = std::min(min_norm, 1.0 + std::abs(q.y) + norm(q.z));
    r.bound = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      const double bound = 1.0 + (K + m_values[j]) * h * n1 / min_norm;
      for (std::size_t p = 0; p < P; ++p) {
        const auto& q = test_points[p];
        const double g = K * (1.0 + std::abs(q.y) + norm(q.z));
        const double ratio = std::max(std::abs(lv[j][p]), std::abs(uv[j][p])) / g;
        ++r.checks;
        if (ratio > r.worst) {
          r.worst = ratio;
          r.bound = bound;
        }
        if (ratio > bound) ++r.violations;
      }
    }
    r.passed = r.violations == 0;
    rep.properties.push_back(r);
  }

  // (ii) lower_m <= lower_m' <= f <= upper_m' <= upper_m, no slack.
  {
    PropertyResult r{"monotone"};
    std::size_t skipped = 0;
    auto check = [&](double a, double b) {
      ++r.checks;
      if (a > b) {
        ++r.violations;
        r.worst = std::max(r.worst, a - b);
      }
    };
    for (std::size_t p = 0; p < P; ++p) {
      const auto& q = test_points[p];
      bool on_lattice = lattice.is_node(q.y);
      for (double zi : q.z) on_lattice = on_lattice && lattice.is_node(zi);
      for (std::size_t j = 0; j + 1 < M; ++j) {
        check(lv[j][p], lv[j + 1][p]);
        check(uv[j + 1][p], uv[j][p]);
      }
      if (on_lattice || opts.regularize.include_query_point) {
        for (std::size_t j = 0; j < M; ++j) {
          check(lv[j][p], fv[p]);
          check(fv[p], uv[j][p]);
        }
      } else {
        ++skipped;
      }
    }
    if (skipped) r.note = std::to_string(skipped) + " off-lattice points: f-sandwich not checked";
    r.passed = r.violations == 0;
    rep.properties.push_back(r);
  }

  // (iii) m-Lipschitz on random pairs inside the bounding box of the test points.
  {
    PropertyResult r{"lipschitz"};
    double ybox = 0.0, zbox = 0.0;
    for (const auto& q : test_points) {
      ybox = std::max(ybox, std::abs(q.y));
      for (double zi : q.z) zbox = std::max(zbox, std::abs(zi));
    }
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> uy(-ybox, ybox), uz(-zbox, zbox);
    auto draw = [&]() {
      QueryPoint q;
      q.y = uy(rng);
      q.z.resize(static_cast<std::size_t>(d));
      for (double& zi : q.z) zi = uz(rng);
      return q;
    };
    for (std::size_t k = 0; k < opts.lipschitz_pairs; ++k) {
      const QueryPoint a = draw(), b = draw();
      const double dist = point_distance(a, b);
      for (std::size_t j = 0; j < M; ++j) {
        for (const auto* drv : {&lo[j], &up[j]}) {
          const double va = drv->value(t, a.y, a.z), vb = drv->value(t, b.y, b.z);
          const double lhs = std::abs(va - vb), rhs = m_values[j] * dist;
          ++r.checks;
          if (dist > 0.0) r.worst = std::max(r.worst, lhs / dist / m_values[j]);
          if (lhs > rhs + rounding_slack(va, vb) * (1.0 + rhs)) ++r.violations;
        }
      }
    }
    r.bound = 1.0;
    if (!lo.front().lipschitz_exact()) r.note = "query point in candidate set: Lipschitz bound not certified";
    r.passed = r.violations == 0;
    rep.properties.push_back(r);
  }

  // (iv) convergence along p_m -> p with spacing h m_0 / m.
  {
    PropertyResult r{"convergence"};
    const double m0 = m_values.front();
    std::vector<double> err(M, 0.0);
    double tol = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      const double m = m_values[j];
      LatticeSpec lat_m{lattice.radius, h * m0 / m};
      auto l = lower_regularize(f, m, lat_m, d, opts.regularize);
      auto u = upper_regularize(f, m, lat_m, d, opts.regularize);
      if (j + 1 == M) tol = std::max(l.lattice_tolerance(), u.lattice_tolerance());
      for (std::size_t p = 0; p < P; ++p) {
        QueryPoint q = test_points[p];
        q.y += 1.0 / m;
        for (double& zi : q.z) zi += 1.0 / m;
        err[j] = std::max({err[j], std::abs(l.value(t, q.y, q.z) - fv[p]), std::abs(u.value(t, q.y, q.z) - fv[p])});
        ++r.checks;
      }
    }
    std::vector<double> tail(err);
    for (std::size_t j = M - 1; j-- > 0;) tail[j] = std::max(tail[j], tail[j + 1]);
    r.worst = tail.back();
    r.bound = tol;
    const bool decreasing = M == 1 || tail.back() < tail.front();
    r.passed = decreasing || tail.front() <= tol;
    r.note = "tail errors:";
    for (double e : tail) r.note += " " + std::to_string(e);
    rep.properties.push_back(r);
  }
  return rep;
}

bool FamilyRegularization::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.passed; });
}

FamilyRegularization family_regularize(const ParamFamily& family, double m, const LatticeSpec& lattice, int d,
                                       std::span<const std::vector<double>> lambdas,
                                       std::span<const QueryPoint> test_points, double t) {
  lattice.check();
  if (!(m >= family.growth)) throw std::invalid_argument("family_regularize: m below the family's K");
  FamilyRegularization out;
  out.lower = [family, m, lattice, d](std::span<const double> lam) {
    return lower_regularize(family.at(lam).f, m, lattice, d);
  };
  out.upper = [family, m, lattice, d](std::span<const double> lam) {
    return upper_regularize(family.at(lam).f, m, lattice, d);
  };
  const FamilyMember anchor = family.at(family.anchor);
  const auto lo0 = lower_regularize(anchor.f, m, lattice, d);
  const auto up0 = upper_regularize(anchor.f, m, lattice, d);
  std::vector<double> l0(test_points.size()), u0(test_points.size()), f0(test_points.size());
  for (std::size_t p = 0; p < test_points.size(); ++p) {
    const auto& q = test_points[p];
    l0[p] = lo0.value(t, q.y, q.z);
    u0[p] = up0.value(t, q.y, q.z);
    f0[p] = anchor.f.eval(t, q.y, q.z);
  }
  for (const auto& lam : lambdas) {
    const FamilyMember mem = family.at(lam);
    const auto lo = lower_regularize(mem.f, m, lattice, d);
    const auto up = upper_regularize(mem.f, m, lattice, d);
    ContinuityRow row;
    row.lambda = lam;
    for (std::size_t p = 0; p < test_points.size(); ++p) {
      const auto& q = test_points[p];
      row.regularized_distance = std::max({row.regularized_distance, std::abs(lo.value(t, q.y, q.z) - l0[p]),
                                           std::abs(up.value(t, q.y, q.z) - u0[p])});
      row.base_distance = std::max(row.base_distance, std::abs(mem.f.eval(t, q.y, q.z) - f0[p]));
    }
    row.bound = row.base_distance + 2.0 * std::max(lo.lattice_tolerance(), lo0.lattice_tolerance());
    row.passed = row.regularized_distance <= row.bound;
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace bdsde
