#pragma once

// Lattice inf/sup-convolutions of a continuous driver:
//   lower_m(p) = min_q f(q) + m*dist(p, q),  upper_m(p) = max_q f(q) - m*dist(p, q),
// with q on a fixed lattice and dist(p, q) = |dy| + |dz|_2.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdsde/core.hpp"

namespace bdsde {

/// Regular grid k*h, |k| <= floor(R/h), in every (y, z) coordinate.
struct LatticeSpec {
  double radius = 10.0;
  double spacing = 1e-3;

  void check() const;
  long half_count() const;
  double node(long k) const noexcept { return static_cast<double>(k) * spacing; }
  /// Largest node coordinate.
  double extent() const { return node(half_count()); }
  bool is_node(double x) const;
};

/// The lattice box does not cover the region where the optimum can lie.
class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, double required_radius);
  double required_radius() const noexcept { return required_; }

 private:
  double required_;
};

enum class Direction { Lower, Upper };

struct RegularizeOptions {
  // Adds the query point to the candidate set: exact lower <= f <= upper
  // everywhere, at the price of the exact m-Lipschitz certificate.
  bool include_query_point = false;
};

class RegularizedDriver {
 public:
  RegularizedDriver(DriverF base, double m, Direction dir, LatticeSpec lattice, int d,
                    RegularizeOptions opts = {});

  double value(double t, double y, std::span<const double> z) const;
  double operator()(double t, double y, std::span<const double> z) const { return value(t, y, z); }

  /// Driver view with L = m (absent when the query point is a candidate).
  DriverF as_driver() const;

  /// omega_f(h sqrt(1+d)) + m h (1+d) when the base modulus is known.
  std::optional<double> certified_error() const;
  /// Certified error, or the lattice term m h (1+d) alone for empirical drivers.
  double lattice_tolerance() const;
  bool certified() const;
  bool lipschitz_exact() const;
  /// False when no growth envelope bounds the search and the whole lattice is scanned.
  bool truncation_certified() const;

  double m() const;
  Direction direction() const;
  const LatticeSpec& lattice() const;
  const DriverF& base() const;
  int dim() const;

  struct State;

 private:
  std::shared_ptr<State> s_;
};

RegularizedDriver lower_regularize(const DriverF& f, double m, const LatticeSpec& lattice, int d = 1,
                                   RegularizeOptions opts = {});
RegularizedDriver upper_regularize(const DriverF& f, double m, const LatticeSpec& lattice, int d = 1,
                                   RegularizeOptions opts = {});

struct QueryPoint {
  double y = 0.0;
  std::vector<double> z;
};

/// dist(p, q) = |dy| + |dz|_2.
double point_distance(const QueryPoint& p, const QueryPoint& q);

/// n lattice points drawn uniformly from the nodes with |coordinate| <= box.
std::vector<QueryPoint> lattice_test_points(const LatticeSpec& lattice, std::size_t n, int d, double box,
                                            std::uint64_t seed);

struct PropertyResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;  // largest observed statistic
  double bound = 0.0;  // what it was compared against
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::string note;
};

struct PropertyReport {
  std::vector<PropertyResult> properties;  // growth, monotone, lipschitz, convergence
  bool certified = false;
  bool include_query_point = false;
  bool passed() const;
  const PropertyResult& get(const std::string& name) const;
};

struct PropertyOptions {
  std::size_t lipschitz_pairs = 1000;
  std::uint64_t seed = 1;
  double t = 0.0;
  RegularizeOptions regularize;
};

/// Growth bound, monotone chains in m, m-Lipschitz modulus and convergence
/// along p_m = p + (1/m)(1, ..., 1) with spacing h * m_0 / m.
PropertyReport check_lemma_properties(const DriverF& f, std::span<const double> m_values,
                                      std::span<const QueryPoint> test_points, const LatticeSpec& lattice,
                                      int d = 1, const PropertyOptions& opts = {});

struct ContinuityRow {
  std::vector<double> lambda;
  double regularized_distance = 0.0;  // sup over points of |reg^lambda - reg^lambda0|
  double base_distance = 0.0;         // sup over points of |f^lambda - f^lambda0|
  double bound = 0.0;                 // base_distance + 2 * lattice tolerance
  bool passed = true;
};

struct FamilyRegularization {
  std::function<RegularizedDriver(std::span<const double>)> lower;
  std::function<RegularizedDriver(std::span<const double>)> upper;
  std::vector<ContinuityRow> rows;
  bool passed() const;
};

FamilyRegularization family_regularize(const ParamFamily& family, double m, const LatticeSpec& lattice, int d,
                                       std::span<const std::vector<double>> lambdas,
                                       std::span<const QueryPoint> test_points, double t = 0.0);

}  // namespace bdsde
