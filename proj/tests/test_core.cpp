#include <cmath>

#include "doctest.h"

#include "bdsde/catalog.hpp"
#include "bdsde/core.hpp"

using namespace bdsde;

namespace {

BDSDEProblem problem_with(DriverF f, DriverG g = catalog::zero_g()) {
  return BDSDEProblem{std::move(f), std::move(g), catalog::constant_xi(0.0), TimeGrid(1.0, 10), 1, 1};
}

}  // namespace

TEST_CASE("time grid") {
  const TimeGrid g(1.0, 3);
  CHECK(g.node(0) == 0.0);
  CHECK(g.node(3) == 1.0);
  CHECK(g.dt() == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(TimeGrid(0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(1.0, 0), std::invalid_argument);
}

TEST_CASE("power23 with K=3 passes validation") {
  const auto rep = validate_problem(problem_with(catalog::power23(3.0)), 10000, 1);
  CHECK(rep.passed());
  for (const auto& c : rep.checks) CHECK(c.samples == 10000);
}

TEST_CASE("analytic growth inequality behind the power23 bound") {
  // u^(2/3) <= 1 + u for u >= 0
  for (double u = 0.0; u < 1e4; u = u * 1.1 + 1e-3) CHECK(std::cbrt(u * u) <= 1.0 + u);
}

TEST_CASE("quadratic driver fails with a witness at large |y|") {
  DriverF f = catalog::expr_f("y^2", 1, 5.0);
  const auto rep = validate_problem(problem_with(f), 10000, 3);
  CHECK_FALSE(rep.passed());
  const auto& growth = rep.checks.front();
  CHECK_FALSE(growth.passed);
  CHECK(growth.worst_ratio > 1.0);
  REQUIRE(growth.witness.size() == 3);
  const double y = growth.witness[1];
  CHECK(y * y > 5.0 * (1.0 + std::abs(y) + std::abs(growth.witness[2])));
}

TEST_CASE("zero g passes") {
  const auto rep = validate_problem(problem_with(catalog::zero_f()), 1000, 1);
  CHECK(rep.passed());
  bool saw_g = false;
  for (const auto& c : rep.checks) {
    if (c.name.find("g") != std::string::npos) {
      saw_g = true;
      CHECK(c.worst_ratio == 0.0);
    }
  }
  CHECK(saw_g);
}

TEST_CASE("validation is deterministic") {
  const auto p = problem_with(catalog::expr_f("y + 0.5*abs(z)", 1, 1.0));
  const auto a = validate_problem(p, 3000, 11);
  const auto b = validate_problem(p, 3000, 11);
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    CHECK(a.checks[i].worst_ratio == b.checks[i].worst_ratio);
    CHECK(a.checks[i].witness == b.checks[i].witness);
  }
}

TEST_CASE("declared Lipschitz constant is checked") {
  auto ok = validate_problem(problem_with(catalog::linear_f(2.0, 0.5)), 2000, 1);
  CHECK(ok.passed());
  DriverF lying = catalog::linear_f(2.0, 0.5);
  lying.lipschitz = 1.0;
  auto bad = validate_problem(problem_with(lying), 2000, 1);
  CHECK_FALSE(bad.passed());
}

TEST_CASE("g contraction violation is caught") {
  DriverG g = catalog::linear_g(2.0, 0.0);
  g.c = 1.0;
  auto rep = validate_problem(problem_with(catalog::zero_f(), g), 2000, 1);
  CHECK_FALSE(rep.passed());
}

TEST_CASE("driver errors carry the point") {
  DriverF f = catalog::expr_f("log(y)", 1, 1.0);
  try {
    validate_problem(problem_with(f), 100, 1);
    FAIL("expected DriverEvaluationError");
  } catch (const DriverEvaluationError& e) {
    CHECK(e.point().size() >= 2);
  }
}

TEST_CASE("problem dimension checks") {
  auto p = problem_with(catalog::zero_f(), catalog::zero_g(2));
  CHECK_THROWS_AS(p.check(), std::invalid_argument);
  p.l = 2;
  CHECK_NOTHROW(p.check());
}

TEST_CASE("terminal condition transforms") {
  const auto xi = catalog::linear_xi(1.0, 2.0);
  std::vector<double> w{0.0, 0.5};
  const PathView pv{w, 1};
  CHECK(xi(pv) == 2.0);
  CHECK(xi.shifted(0.25)(pv) == 2.25);
  CHECK(xi.scaled(1.5)(pv) == 3.0);
  const auto c = catalog::constant_xi(4.0);
  CHECK(c.kind() == TerminalKind::Constant);
  CHECK(c.constant_value().value() == 4.0);
  CHECK(c.shifted(1.0).constant_value().value() == 5.0);
}

TEST_CASE("grid solution from a curve") {
  const TimeGrid g(1.0, 4);
  std::vector<double> y{4, 3, 2, 1, 0};
  const auto s = GridSolution::from_curve(g, y);
  CHECK(s.paths() == 1);
  CHECK(s.y(0, 0, 2) == 2.0);
  const auto est = initial_value(s);
  CHECK(est.mean == 4.0);
  CHECK(est.se == 0.0);
}

TEST_CASE("shift family members") {
  ParamFamily fam;
  fam.lower = {-1.0};
  fam.upper = {1.0};
  fam.anchor = {0.0};
  fam.member = [](std::span<const double> lam) {
    return FamilyMember{catalog::constant_f(lam[0]), catalog::zero_g(), catalog::constant_xi(lam[0])};
  };
  const double z = 0.0;
  CHECK(fam.at(0.5).f(0.0, 0.0, std::span<const double>(&z, 1)) == 0.5);
  CHECK_THROWS_AS(fam.at(2.0), std::invalid_argument);
}
