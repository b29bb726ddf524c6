#include "bdsde/catalog.hpp"

#include <cmath>
#include <sstream>

namespace bdsde::catalog {

namespace {

GrowthEnvelope constant_envelope(double A, double min_slope = 0.0) {
  return [A, min_slope](double slope) -> std::optional<double> {
    if (slope >= min_slope) return A;
    return std::nullopt;
  };
}

double param(const Params& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void check_keys(const Params& p, std::initializer_list<const char*> allowed, const std::string& who) {
  for (const auto& [k, v] : p) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw std::invalid_argument(who + ": unknown parameter '" + k + "'");
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

DriverF zero_f(double K) {
  DriverF f;
  f.name = "zero";
  f.eval = [](double, double, std::span<const double>) { return 0.0; };
  f.growth = K;
  f.lipschitz = 0.0;
  f.modulus = [](double) { return 0.0; };
  f.envelope_below = constant_envelope(0.0);
  f.envelope_above = constant_envelope(0.0);
  f.depends_on_t = f.depends_on_z = false;
  return f;
}

DriverF constant_f(double c) {
  DriverF f;
  f.name = "constant{" + fmt(c) + "}";
  f.eval = [c](double, double, std::span<const double>) { return c; };
  f.growth = c != 0.0 ? std::abs(c) : 1.0;
  f.lipschitz = 0.0;
  f.modulus = [](double) { return 0.0; };
  f.envelope_below = constant_envelope(std::max(0.0, -c));
  f.envelope_above = constant_envelope(std::max(0.0, c));
  f.depends_on_t = f.depends_on_z = false;
  return f;
}

DriverF linear_f(double a, double b, int d) {
  DriverF f;
  f.name = "linear{" + fmt(a) + "," + fmt(b) + "}";
  f.eval = [a, b](double, double y, std::span<const double> z) {
    double s = 0.0;
    for (double zk : z) s += zk;
    return a * y + b * s;
  };
  const double L = std::max(std::abs(a), std::abs(b) * std::sqrt(static_cast<double>(d)));
  f.growth = L > 0.0 ? L : 1.0;
  f.lipschitz = L;
  f.modulus = [L](double delta) { return L * delta; };
  f.envelope_below = constant_envelope(0.0, L);
  f.envelope_above = constant_envelope(0.0, L);
  f.depends_on_t = false;
  f.depends_on_z = b != 0.0;
  f.z_dim = b != 0.0 ? d : 0;
  return f;
}

DriverF abs_f(double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("abs: scale must be positive");
  DriverF f;
  f.name = "abs{" + fmt(scale) + "}";
  f.eval = [scale](double, double y, std::span<const double>) { return scale * std::abs(y); };
  f.growth = scale;
  f.lipschitz = scale;
  f.modulus = [scale](double delta) { return scale * delta; };
  f.envelope_below = constant_envelope(0.0);
  f.envelope_above = constant_envelope(0.0, scale);
  f.depends_on_t = f.depends_on_z = false;
  return f;
}

DriverF power23(double coef) {
  if (!(coef > 0.0)) throw std::invalid_argument("power23: coefficient must be positive");
  DriverF f;
  f.name = "power23{" + fmt(coef) + "}";
  f.eval = [coef](double, double y, std::span<const double>) { return coef * std::cbrt(y * y); };
  // coef*s^(2/3) <= coef*(1 + s) for s >= 0.
  f.growth = coef;
  f.modulus = [coef](double delta) { return coef * std::cbrt(delta * delta); };
  f.envelope_below = constant_envelope(0.0);
  // max_s coef*s^(2/3) - B*s = 4 coef^3 / (27 B^2), attained at s = (2 coef / 3B)^3.
  f.envelope_above = [coef](double slope) -> std::optional<double> {
    if (!(slope > 0.0)) return std::nullopt;
    return 4.0 * coef * coef * coef / (27.0 * slope * slope);
  };
  f.depends_on_t = f.depends_on_z = false;
  return f;
}

DriverF norm_growth(double K) {
  if (!(K > 0.0)) throw std::invalid_argument("norm-growth: K must be positive");
  DriverF f;
  f.name = "norm-growth{" + fmt(K) + "}";
  f.eval = [K](double, double y, std::span<const double> z) {
    return K * (1.0 + std::abs(y) + norm(z));
  };
  f.growth = K;
  f.lipschitz = K;
  f.modulus = [K](double delta) { return K * delta; };
  f.envelope_below = constant_envelope(0.0);
  f.envelope_above = constant_envelope(K, K);
  f.depends_on_t = false;
  return f;
}

std::vector<std::string> f_names() {
  return {"zero", "constant", "linear", "abs", "power23", "norm-growth"};
}

DriverF make_f(const std::string& name, const Params& params, int d) {
  DriverF f;
  if (name == "zero") {
    check_keys(params, {"K"}, name);
    f = zero_f();
  } else if (name == "constant") {
    check_keys(params, {"c", "K"}, name);
    f = constant_f(param(params, "c", 0.0));
  } else if (name == "linear") {
    check_keys(params, {"a", "b", "K"}, name);
    f = linear_f(param(params, "a", 1.0), param(params, "b", 0.0), d);
  } else if (name == "abs") {
    check_keys(params, {"scale", "K"}, name);
    f = abs_f(param(params, "scale", 1.0));
  } else if (name == "power23") {
    check_keys(params, {"coef", "K"}, name);
    f = power23(param(params, "coef", 3.0));
  } else if (name == "norm-growth") {
    check_keys(params, {"K"}, name);
    f = norm_growth(param(params, "K", 1.0));
    return f;
  } else {
    throw std::invalid_argument("unknown catalog driver f '" + name + "'");
  }
  if (auto it = params.find("K"); it != params.end()) {
    if (!(it->second > 0.0)) throw std::invalid_argument(name + ": K must be positive");
    f.growth = it->second;
  }
  return f;
}

DriverG zero_g(int l) {
  DriverG g;
  g.name = "zero";
  g.out_dim = l;
  g.eval = [](double, double, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  g.c = 1.0;
  g.alpha = 0.5;
  g.vanishes_at_zero_z = true;
  return g;
}

DriverG constant_g(std::vector<double> sigma) {
  if (sigma.empty()) throw std::invalid_argument("constant g: sigma must be non-empty");
  DriverG g;
  g.name = "constant";
  g.out_dim = static_cast<int>(sigma.size());
  bool all_zero = true;
  for (double s : sigma) all_zero = all_zero && s == 0.0;
  g.eval = [sigma](double, double, std::span<const double>, std::span<double> out) {
    std::copy(sigma.begin(), sigma.end(), out.begin());
  };
  g.c = 1.0;
  g.alpha = 0.5;
  g.vanishes_at_zero_z = all_zero;
  return g;
}

DriverG linear_g(double a, double b, int l) {
  DriverG g;
  g.name = "linear{" + fmt(a) + "," + fmt(b) + "}";
  g.out_dim = l;
  g.eval = [a, b](double, double y, std::span<const double> z, std::span<double> out) {
    const double v = a * y + b * (z.empty() ? 0.0 : z[0]);
    std::fill(out.begin(), out.end(), v);
  };
  // |dg|^2 = l (a dy + b dz_1)^2.
  if (a == 0.0) {
    g.c = 1.0;
    g.alpha = b == 0.0 ? 0.5 : l * b * b;
  } else if (b == 0.0) {
    g.c = l * a * a;
    g.alpha = 0.5;
  } else {
    g.c = 2.0 * l * a * a;
    g.alpha = 2.0 * l * b * b;
  }
  if (!(g.alpha < 1.0)) {
    throw std::invalid_argument("linear g: z coefficient too large for the contraction condition");
  }
  g.vanishes_at_zero_z = a == 0.0;
  return g;
}

DriverG make_g(const std::string& name, const Params& params, int l) {
  if (name == "zero") {
    check_keys(params, {}, name);
    return zero_g(l);
  }
  if (name == "constant") {
    std::vector<double> sigma(l, param(params, "sigma", 0.0));
    for (int j = 0; j < l; ++j) {
      const std::string key = "sigma" + std::to_string(j + 1);
      if (params.count(key)) sigma[j] = params.at(key);
    }
    for (const auto& [k, v] : params) {
      if (k != "sigma" && !(k.starts_with("sigma") && k.size() > 5)) {
        throw std::invalid_argument("constant g: unknown parameter '" + k + "'");
      }
    }
    return constant_g(sigma);
  }
  if (name == "linear") {
    check_keys(params, {"a", "b"}, name);
    return linear_g(param(params, "a", 0.0), param(params, "b", 0.0), l);
  }
  throw std::invalid_argument("unknown catalog driver g '" + name + "'");
}

TerminalCondition constant_xi(double c) { return TerminalCondition::constant(c, "constant{" + fmt(c) + "}"); }

TerminalCondition linear_xi(double a, double b) {
  if (b == 0.0) return constant_xi(a);
  return TerminalCondition::of_terminal_w([a, b](std::span<const double> w) { return a + b * w[0]; },
                                          "linear{" + fmt(a) + "," + fmt(b) + "}");
}

TerminalCondition make_xi(const std::string& name, const Params& params) {
  if (name == "constant") {
    check_keys(params, {"c"}, name);
    return constant_xi(param(params, "c", 0.0));
  }
  if (name == "linear") {
    check_keys(params, {"a", "b"}, name);
    return linear_xi(param(params, "a", 0.0), param(params, "b", 1.0));
  }
  if (name == "wT") {
    check_keys(params, {}, name);
    return linear_xi(0.0, 1.0);
  }
  throw std::invalid_argument("unknown catalog terminal condition '" + name + "'");
}

DriverF expr_f(const std::string& source, int d, double K, std::optional<double> L,
               std::optional<double> lam) {
  dsl::ParseOptions opts{dsl::Role::Driver, d, lam.has_value()};
  dsl::ExprPtr e = dsl::parse(source, opts);
  DriverF f;
  f.name = source;
  f.eval = [e, lam](double t, double y, std::span<const double> z) {
    return dsl::evaluate(*e, dsl::Bindings{t, y, lam, z, {}});
  };
  f.growth = K;
  f.lipschitz = L;
  f.envelope_below = DriverF::growth_envelope(K);
  f.envelope_above = DriverF::growth_envelope(K);
  f.depends_on_t = dsl::references(*e, dsl::VarKind::T);
  f.depends_on_z = dsl::references(*e, dsl::VarKind::Z);
  f.z_dim = d;
  return f;
}

DriverG expr_g(const std::vector<std::string>& sources, int d, double c, double alpha,
               std::optional<double> lam) {
  if (sources.empty()) throw std::invalid_argument("g: at least one expression required");
  dsl::ParseOptions opts{dsl::Role::Driver, d, lam.has_value()};
  std::vector<dsl::ExprPtr> exprs;
  std::string name;
  for (const auto& s : sources) {
    exprs.push_back(dsl::parse(s, opts));
    name += (name.empty() ? "" : "; ") + s;
  }
  DriverG g;
  g.name = name;
  g.out_dim = static_cast<int>(exprs.size());
  g.eval = [exprs, lam](double t, double y, std::span<const double> z, std::span<double> out) {
    const dsl::Bindings b{t, y, lam, z, {}};
    for (std::size_t j = 0; j < exprs.size(); ++j) out[j] = dsl::evaluate(*exprs[j], b);
  };
  g.c = c;
  g.alpha = alpha;
  g.z_dim = d;
  return g;
}

TerminalCondition expr_xi(const std::string& source, int d, std::optional<double> lam) {
  dsl::ParseOptions opts{dsl::Role::Terminal, d, lam.has_value()};
  dsl::ExprPtr e = dsl::parse(source, opts);
  if (!dsl::references(*e, dsl::VarKind::W)) {
    return TerminalCondition::constant(dsl::evaluate(*e, dsl::Bindings{{}, {}, lam, {}, {}}), source);
  }
  return TerminalCondition::of_terminal_w(
      [e, lam](std::span<const double> w) { return dsl::evaluate(*e, dsl::Bindings{{}, {}, lam, {}, w}); },
      source);
}

}  // namespace bdsde::catalog
