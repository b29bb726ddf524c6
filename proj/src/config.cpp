#include "bdsde/config.hpp"

#include <algorithm>
#include <fstream>

#include "bdsde/dsl.hpp"

namespace bdsde {

namespace {

using nlohmann::json;

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
      throw ConfigError(where + ": unknown key '" + k + "'");
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <class T>
void read(const json& obj, const char* key, std::optional<T>& out, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  T v{};
  read(obj, key, v, where);
  out = v;
}

bool is_catalog(const std::string& name, const std::string& role) {
  std::vector<std::string> names;
  if (role == "f") names = catalog::f_names();
  if (role == "g") names = {"zero", "constant", "linear"};
  if (role == "xi") names = {"constant", "linear", "wT"};
  return std::find(names.begin(), names.end(), name) != names.end();
}

TermSpec parse_term(const json& j, const std::string& role) {
  const std::string where = "problem." + role;
  TermSpec t;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (is_catalog(s, role)) {
      t.catalog = s;
    } else {
      t.exprs = {s};
    }
  } else if (j.is_number()) {
    t.exprs = {j.dump()};
  } else if (j.is_array()) {
    for (const auto& e : j) {
      if (!e.is_string()) throw ConfigError(where + ": expression list must hold strings");
      t.exprs.push_back(e.get<std::string>());
    }
  } else if (j.is_object()) {
    only_keys(j, {"name", "params", "expr"}, where);
    if (j.contains("expr")) {
      if (j.contains("name")) throw ConfigError(where + ": give either 'name' or 'expr'");
      return parse_term(j.at("expr"), role);
    }
    if (!j.contains("name") || !j.at("name").is_string()) throw ConfigError(where + ": missing 'name'");
    t.catalog = j.at("name").get<std::string>();
    if (!is_catalog(t.catalog, role)) throw ConfigError(where + ": unknown catalog entry '" + t.catalog + "'");
    if (j.contains("params")) {
      const auto& p = j.at("params");
      if (!p.is_object()) throw ConfigError(where + ".params: expected an object");
      for (const auto& [k, v] : p.items()) {
        if (!v.is_number()) throw ConfigError(where + ".params." + k + ": expected a number");
        t.params[k] = v.get<double>();
      }
    }
  } else {
    throw ConfigError(where + ": expected a name, expression or object");
  }
  if (t.is_expr() && t.exprs.empty()) throw ConfigError(where + ": empty expression list");
  if (role != "g" && t.exprs.size() > 1) throw ConfigError(where + ": exactly one expression expected");
  return t;
}

std::vector<double> read_list(const json& obj, const char* key, const std::string& where) {
  std::vector<double> out;
  if (!obj.contains(key)) return out;
  const auto& a = obj.at(key);
  if (!a.is_array()) throw ConfigError(where + "." + key + ": expected an array of numbers");
  for (const auto& v : a) {
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

bool is_zero_expression(const std::string& src, int d) {
  const auto e = dsl::parse(src, dsl::ParseOptions{dsl::Role::Driver, d, true});
  for (auto k : {dsl::VarKind::T, dsl::VarKind::Y, dsl::VarKind::Z, dsl::VarKind::Param}) {
    if (dsl::references(*e, k)) return false;
  }
  return dsl::evaluate(*e, dsl::Bindings{}) == 0.0;
}

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig c;
  c.raw = j;
  only_keys(j, {"problem", "paths", "scheme", "regularize", "experiment", "validate"}, "config");

  if (j.contains("problem")) {
    const auto& p = j.at("problem");
    only_keys(p, {"f", "g", "xi", "T", "N", "d", "l", "K", "L", "c", "alpha"}, "problem");
    if (p.contains("f")) c.f = parse_term(p.at("f"), "f");
    if (p.contains("g")) c.g = parse_term(p.at("g"), "g");
    if (p.contains("xi")) c.xi = parse_term(p.at("xi"), "xi");
    read(p, "T", c.T, "problem");
    read(p, "N", c.N, "problem");
    read(p, "d", c.d, "problem");
    read(p, "l", c.l, "problem");
    read(p, "K", c.K, "problem");
    read(p, "L", c.L, "problem");
    read(p, "c", c.c, "problem");
    read(p, "alpha", c.alpha, "problem");
  }
  if (j.contains("paths")) {
    const auto& p = j.at("paths");
    only_keys(p, {"M_B", "M_W", "seed", "memory_budget_mb"}, "paths");
    read(p, "M_B", c.M_B, "paths");
    read(p, "M_W", c.M_W, "paths");
    read(p, "seed", c.seed, "paths");
    read(p, "memory_budget_mb", c.memory_budget_mb, "paths");
  }
  if (j.contains("scheme")) {
    const auto& p = j.at("scheme");
    only_keys(p, {"degree", "picard", "clip", "method"}, "scheme");
    read(p, "degree", c.scheme.degree, "scheme");
    read(p, "picard", c.scheme.picard, "scheme");
    read(p, "clip", c.scheme.clip, "scheme");
    read(p, "method", c.method, "scheme");
  }
  if (j.contains("regularize")) {
    const auto& p = j.at("regularize");
    only_keys(p, {"m", "radius", "spacing", "test_points", "test_box"}, "regularize");
    c.m_schedule = read_list(p, "m", "regularize");
    read(p, "radius", c.lattice.radius, "regularize");
    read(p, "spacing", c.lattice.spacing, "regularize");
    read(p, "test_points", c.test_points, "regularize");
    read(p, "test_box", c.test_box, "regularize");
  }
  if (j.contains("experiment")) {
    const auto& p = j.at("experiment");
    only_keys(p, {"kind", "perturbations", "mode", "anchor", "domain"}, "experiment");
    read(p, "kind", c.kind, "experiment");
    c.perturbations = read_list(p, "perturbations", "experiment");
    read(p, "mode", c.mode, "experiment");
    read(p, "anchor", c.anchor, "experiment");
    const auto dom = read_list(p, "domain", "experiment");
    if (!dom.empty()) {
      if (dom.size() != 2 || !(dom[0] <= dom[1])) throw ConfigError("experiment.domain: expected [lower, upper]");
      c.domain_lower = dom[0];
      c.domain_upper = dom[1];
    }
  }
  if (j.contains("validate")) {
    const auto& p = j.at("validate");
    only_keys(p, {"budget", "y_max", "z_max", "tolerance", "recenter"}, "validate");
    read(p, "budget", c.budget, "validate");
    read(p, "y_max", c.validation.box.y_max, "validate");
    read(p, "z_max", c.validation.box.z_max, "validate");
    read(p, "tolerance", c.validation.tolerance, "validate");
    read(p, "recenter", c.validation.recenter, "validate");
  }

  if (!(c.T > 0.0)) throw ConfigError("problem.T must be positive");
  if (c.N < 1) throw ConfigError("problem.N must be >= 1");
  if (c.d < 1 || c.l < 1) throw ConfigError("problem.d and problem.l must be >= 1");
  if (c.K && !(*c.K > 0.0)) throw ConfigError("problem.K must be positive");
  if (c.L && !(*c.L >= 0.0)) throw ConfigError("problem.L must be nonnegative");
  if (c.M_B < 1 || c.M_W < 1) throw ConfigError("paths.M_B and paths.M_W must be >= 1");
  if (!(c.memory_budget_mb > 0.0)) throw ConfigError("paths.memory_budget_mb must be positive");
  if (c.method != "auto" && c.method != "regression" && c.method != "ode") {
    throw ConfigError("scheme.method must be auto, regression or ode");
  }
  if (c.mode != "shift" && c.mode != "scale") throw ConfigError("experiment.mode must be shift or scale");
  if (!c.kind.empty() && c.kind != "cd" && c.kind != "family" && c.kind != "counterexample" &&
      c.kind != "stability") {
    throw ConfigError("experiment.kind must be cd, family, counterexample or stability");
  }
  if (c.budget < 1) throw ConfigError("validate.budget must be >= 1");
  if (c.test_points < 1) throw ConfigError("regularize.test_points must be >= 1");
  if (!(c.test_box > 0.0)) throw ConfigError("regularize.test_box must be positive");
  try {
    c.scheme.check();
    c.lattice.check();
    const auto problem = build_problem(c, c.kind == "family" ? std::optional<double>(c.anchor) : std::nullopt);
    const auto ms = m_schedule_for(c, problem.f.growth);
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (!(ms[i] >= problem.f.growth)) throw ConfigError("regularize.m: every m must be >= K");
      if (i > 0 && !(ms[i] > ms[i - 1])) throw ConfigError("regularize.m: must be strictly ascending");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

BDSDEProblem build_problem(const RunConfig& c, std::optional<double> lam) {
  DriverF f;
  if (c.f.is_expr()) {
    f = catalog::expr_f(c.f.exprs[0], c.d, c.K.value_or(1.0), c.L, lam);
  } else {
    if (c.L) throw ConfigError("problem.L applies to expression drivers only");
    auto params = c.f.params;
    if (c.K) params["K"] = *c.K;
    f = catalog::make_f(c.f.catalog, params, c.d);
  }

  DriverG g;
  if (c.g.is_expr()) {
    if (static_cast<int>(c.g.exprs.size()) != c.l) {
      throw ConfigError("problem.g: " + std::to_string(c.g.exprs.size()) + " expressions for l = " +
                        std::to_string(c.l));
    }
    const bool zero = std::all_of(c.g.exprs.begin(), c.g.exprs.end(),
                                  [&](const std::string& s) { return is_zero_expression(s, c.d); });
    g = zero ? catalog::zero_g(c.l) : catalog::expr_g(c.g.exprs, c.d, c.c, c.alpha, lam);
    g.c = c.c;
    g.alpha = c.alpha;
  } else {
    g = catalog::make_g(c.g.catalog, c.g.params, c.l);
  }

  TerminalCondition xi = c.xi.is_expr() ? catalog::expr_xi(c.xi.exprs[0], c.d, lam)
                                        : catalog::make_xi(c.xi.catalog, c.xi.params);
  BDSDEProblem p{std::move(f), std::move(g), std::move(xi), TimeGrid(c.T, c.N), c.d, c.l};
  p.check();
  return p;
}

std::vector<double> family_lambdas(const RunConfig& c) {
  return c.perturbations.empty() ? std::vector<double>{1.0, 0.3, 0.1, 0.03} : c.perturbations;
}

ParamFamily build_family(const RunConfig& c) {
  ParamFamily fam;
  double lo = c.anchor, hi = c.anchor;
  for (double v : family_lambdas(c)) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  fam.lower = {c.domain_lower.value_or(lo)};
  fam.upper = {c.domain_upper.value_or(hi)};
  fam.anchor = {c.anchor};
  fam.growth = build_problem(c, c.anchor).f.growth;
  fam.member = [c](std::span<const double> lam) {
    BDSDEProblem p = build_problem(c, lam[0]);
    return FamilyMember{std::move(p.f), std::move(p.g), std::move(p.xi)};
  };
  return fam;
}

std::vector<double> m_schedule_for(const RunConfig& c, double K) {
  return c.m_schedule.empty() ? default_m_schedule(K) : c.m_schedule;
}

}  // namespace bdsde
