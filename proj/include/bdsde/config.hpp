#pragma once

// JSON run configuration. The schema is documented in docs/config.md.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bdsde/catalog.hpp"
#include "bdsde/core.hpp"
#include "bdsde/regularize.hpp"
#include "bdsde/solver.hpp"

namespace bdsde {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A catalog entry with parameters, or one expression per output coordinate.
struct TermSpec {
  std::string catalog;
  catalog::Params params;
  std::vector<std::string> exprs;
  bool is_expr() const { return catalog.empty(); }
};

struct RunConfig {
  nlohmann::json raw;

  TermSpec f{"zero", {}, {}};
  TermSpec g{"zero", {}, {}};
  TermSpec xi{"constant", {}, {}};
  double T = 1.0;
  int N = 50;
  int d = 1;
  int l = 1;
  std::optional<double> K, L;
  double c = 1.0, alpha = 0.5;

  int M_B = 1;
  int M_W = 1000;
  std::uint64_t seed = 1;
  double memory_budget_mb = 4096.0;

  SchemeConfig scheme;
  std::string method = "auto";  // auto | regression | ode

  std::vector<double> m_schedule;  // empty: {K, 2K, 4K, 8K}
  LatticeSpec lattice{10.0, 1e-2};
  std::size_t test_points = 1000;
  double test_box = 2.0;

  std::string kind;
  std::vector<double> perturbations;
  std::string mode = "shift";
  double anchor = 0.0;
  std::optional<double> domain_lower, domain_upper;

  std::size_t budget = 10000;
  ValidationOptions validation;
};

/// Parses and range-checks a configuration; throws ConfigError.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// Builds the problem; `lam` binds the family parameter in expressions.
BDSDEProblem build_problem(const RunConfig& cfg, std::optional<double> lam = {});
/// experiment.perturbations, or {1, 0.3, 0.1, 0.03} when empty.
std::vector<double> family_lambdas(const RunConfig& cfg);
/// Family over lam with the configured anchor and domain. Without an explicit
/// domain, the box spanned by the anchor and family_lambdas(cfg).
ParamFamily build_family(const RunConfig& cfg);
std::vector<double> m_schedule_for(const RunConfig& cfg, double K);

}  // namespace bdsde
