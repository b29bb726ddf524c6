#pragma once

// Named drivers with declared growth, Lipschitz and continuity metadata.
// These are the certified set; expression drivers get empirical checks only.

#include <map>
#include <string>
#include <vector>

#include "bdsde/core.hpp"
#include "bdsde/dsl.hpp"

namespace bdsde::catalog {

using Params = std::map<std::string, double>;

/// f = 0.
DriverF zero_f(double K = 1.0);
/// f = c.
DriverF constant_f(double c);
/// f = a*y + b*(z_1 + ... + z_d).
DriverF linear_f(double a, double b = 0.0, int d = 1);
/// f = |y|.
DriverF abs_f(double scale = 1.0);
/// f = coef * |y|^(2/3); continuous, not Lipschitz at 0.
DriverF power23(double coef = 3.0);
/// f = K * (1 + |y| + |z|); meets the linear growth bound with equality.
DriverF norm_growth(double K = 1.0);

/// Builds a catalog driver by name: zero, constant{c}, linear{a,b},
/// abs{scale}, power23{coef}, norm-growth{K}. Throws std::invalid_argument.
DriverF make_f(const std::string& name, const Params& params, int d);
std::vector<std::string> f_names();

DriverG zero_g(int l = 1);
/// g_j = sigma_j.
DriverG constant_g(std::vector<double> sigma);
/// g_j = a*y + b*z_1 for every output coordinate.
DriverG linear_g(double a, double b, int l = 1);
DriverG make_g(const std::string& name, const Params& params, int l);

TerminalCondition constant_xi(double c);
/// xi = a + b * W_T (first coordinate).
TerminalCondition linear_xi(double a, double b);
TerminalCondition make_xi(const std::string& name, const Params& params);

/// DSL source for the power23 driver.
inline constexpr const char* kPower23Source = "3*cbrt(y*y)";

// Expression-backed drivers. Metadata the language cannot infer is passed in.
// When `lam` is set the expression may reference the family parameter `lam`.
DriverF expr_f(const std::string& source, int d, double K, std::optional<double> L = {},
               std::optional<double> lam = {});
DriverG expr_g(const std::vector<std::string>& sources, int d, double c, double alpha,
               std::optional<double> lam = {});
TerminalCondition expr_xi(const std::string& source, int d, std::optional<double> lam = {});

}  // namespace bdsde::catalog
