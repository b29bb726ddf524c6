#include <cmath>

#include "doctest.h"

#include "bdsde/analysis.hpp"
#include "bdsde/catalog.hpp"

using namespace bdsde;

namespace {

BDSDEProblem make(DriverF f, TerminalCondition xi, int N) {
  return BDSDEProblem{std::move(f), catalog::zero_g(), std::move(xi), TimeGrid(1.0, N), 1, 1};
}

}  // namespace

TEST_CASE("sup distance of identical solutions") {
  const auto p = make(catalog::linear_f(0.5), catalog::linear_xi(0.0, 1.0), 8);
  const auto bundle = generate_paths(p.grid, BundleShape{1, 1, 2, 50}, 1);
  const auto s = solve_lipschitz(p, bundle, SchemeConfig{});
  const auto e = sup_sq_distance(s, s);
  CHECK(e.mean == 0.0);
  CHECK(e.se == 0.0);
}

TEST_CASE("sup distance of deterministic curves") {
  const TimeGrid g(1.0, 100);
  std::vector<double> a(101), zero(101, 0.0);
  for (int i = 0; i <= 100; ++i) a[i] = std::pow(1.0 - g.node(i), 3);
  const auto e = sup_sq_distance(GridSolution::from_curve(g, a), GridSolution::from_curve(g, zero));
  CHECK(e.mean == 1.0);
  CHECK(e.se == 0.0);

  std::vector<double> c1(101, 2.0), c2(101, -0.5);
  const auto f = sup_sq_distance(GridSolution::from_curve(g, c1), GridSolution::from_curve(g, c2));
  CHECK(f.mean == 6.25);
  CHECK(f.se == 0.0);
}

TEST_CASE("sup distance is symmetric and shift invariant") {
  const TimeGrid g(1.0, 4);
  std::vector<double> a{1, 2, 3, 4, 5}, b{0, 2.5, 1, 4, 4.5};
  std::vector<double> as(5), bs(5);
  for (int i = 0; i < 5; ++i) {
    as[i] = a[i] + 10.0;
    bs[i] = b[i] + 10.0;
  }
  const auto A = GridSolution::from_curve(g, a), B = GridSolution::from_curve(g, b);
  CHECK(sup_sq_distance(A, B).mean == sup_sq_distance(B, A).mean);
  CHECK(sup_sq_distance(GridSolution::from_curve(g, as), GridSolution::from_curve(g, bs)).mean ==
        sup_sq_distance(A, B).mean);
  CHECK(sup_sq_distance(A, B).mean == 4.0);
}

TEST_CASE("mismatched solutions are rejected") {
  const auto a = GridSolution::from_curve(TimeGrid(1.0, 4), std::vector<double>(5, 0.0));
  const auto b = GridSolution::from_curve(TimeGrid(1.0, 5), std::vector<double>(6, 0.0));
  CHECK_THROWS_AS(sup_sq_distance(a, b), std::invalid_argument);
}

TEST_CASE("stability ratio with f = 0 is one") {
  const auto p = make(catalog::zero_f(), catalog::linear_xi(0.0, 1.0), 10);
  const auto bundle = generate_paths(p.grid, BundleShape{1, 1, 1, 200}, 2);
  const std::vector<double> deltas{1.0, 0.1, 0.0};
  const auto rep = stability_ratio(p, deltas, bundle, SchemeConfig{});
  CHECK(rep.columns == std::vector<std::string>{"delta", "dist", "xi_gap_sq", "ratio"});
  CHECK(rep.cell(0, "ratio").value() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.cell(1, "ratio").value() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(rep.cell(2, "ratio").has_value());
  CHECK(rep.cell(2, "dist").value() == 0.0);
}

TEST_CASE("stability ratio with f = y is e^2") {
  const auto p = make(catalog::linear_f(1.0), catalog::constant_xi(0.5), 200);
  const auto bundle = generate_paths(p.grid, BundleShape{1, 1, 1, 20}, 2);
  const std::vector<double> deltas{1.0, 0.1, 0.01};
  const auto rep = stability_ratio(p, deltas, bundle, SchemeConfig{});
  for (std::size_t r = 0; r < 3; ++r)
    CHECK(std::abs(rep.cell(r, "ratio").value() / std::exp(2.0) - 1.0) <= 0.02);
  CHECK(!rep.diagnostic("empirical_C").empty());
}

TEST_CASE("terminal gap") {
  const auto bundle = generate_paths(TimeGrid(1.0, 4), BundleShape{1, 1, 1, 10}, 3);
  CHECK(terminal_gap_sq(catalog::constant_xi(1.0), catalog::constant_xi(1.5), bundle) == 0.25);
  const auto xi = catalog::linear_xi(0.0, 1.0);
  CHECK(terminal_gap_sq(xi, xi, bundle) == 0.0);
}

TEST_CASE("continuous dependence, Lipschitz driver") {
  const auto p = make(catalog::linear_f(1.0), catalog::linear_xi(0.0, 1.0), 10);
  const auto bundle = generate_paths(p.grid, BundleShape{1, 1, 1, 200}, 5);
  std::vector<SequenceTerm> terms;
  for (double n : {1.0, 2.0, 4.0}) terms.push_back({n, p.xi.shifted(1.0 / n)});
  const std::vector<double> ms{1.0};
  const auto rep = continuous_dependence_experiment(p, terms, bundle, SchemeConfig{}, ms, LatticeSpec{10.0, 1e-2});
  CHECK(rep.columns == std::vector<std::string>{"n", "dist_lower", "dist_upper", "se", "N", "M_B", "M_W"});
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.cell(0, "dist_lower").value() > rep.cell(1, "dist_lower").value());
  CHECK(rep.cell(1, "dist_lower").value() > rep.cell(2, "dist_lower").value());
  CHECK(rep.diagnostic("dist_lower_decreasing") == "true");

  std::vector<SequenceTerm> same{{1.0, p.xi}, {2.0, p.xi}};
  const auto z = continuous_dependence_experiment(p, same, bundle, SchemeConfig{}, ms, LatticeSpec{10.0, 1e-2});
  for (std::size_t r = 0; r < 2; ++r) CHECK(z.cell(r, "dist_lower").value() == 0.0);
}

TEST_CASE("counterexample closed forms") {
  const std::vector<double> ns{1.0, 1e6};
  const auto rep = counterexample_scenario(1.0, ns);
  CHECK(rep.columns == std::vector<std::string>{"n", "Y0", "dist_to_min_sq", "dist_to_max_sq"});
  const double a = std::pow(1.01, 3);
  CHECK(rep.cell(1, "Y0").value() == doctest::Approx(a).epsilon(1e-6));
  CHECK(rep.cell(1, "dist_to_min_sq").value() == doctest::Approx(a * a).epsilon(1e-6));
  CHECK(rep.cell(1, "dist_to_max_sq").value() == doctest::Approx((a - 1) * (a - 1)).epsilon(1e-4));
  CHECK(rep.cell(0, "dist_to_min_sq").value() == doctest::Approx(64.0).epsilon(1e-6));
  CHECK(rep.diagnostic("limit_dist_to_max") == "0");
}

TEST_CASE("family experiment with a shift family") {
  ParamFamily fam;
  fam.lower = {-1.0};
  fam.upper = {1.0};
  fam.anchor = {0.0};
  fam.growth = 2.0;
  fam.member = [](std::span<const double> lam) {
    const double l = lam[0];
    DriverF f = catalog::linear_f(1.0);
    auto base = f.eval;
    f.eval = [base, l](double t, double y, std::span<const double> z) { return base(t, y, z) + l; };
    f.growth = 2.0;
    return FamilyMember{f, catalog::zero_g(), catalog::constant_xi(1.0 + l)};
  };
  const auto bundle = generate_paths(TimeGrid(1.0, 200), BundleShape{1, 1, 1, 20}, 6);
  const std::vector<double> lambdas{1.0, 0.1, 0.0};
  const std::vector<double> ms{2.0};
  const auto rep = family_dependence_experiment(fam, lambdas, bundle, SchemeConfig{}, ms, LatticeSpec{10.0, 1e-2});
  CHECK(rep.columns == std::vector<std::string>{"lambda", "dist", "rhs_eq8", "ratio"});
  CHECK(rep.cell(0, "dist").value() > rep.cell(1, "dist").value());
  CHECK(rep.cell(2, "dist").value() == 0.0);
  // explicit shift solution: Y^l - Y^0 = l (2 e^(1-t) - 1), sup at t = 0
  const double e = std::exp(1.0);
  CHECK(rep.cell(0, "dist").value() == doctest::Approx(std::pow(2 * e - 1, 2)).epsilon(0.02));
}
