#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdsde {

/// Uniform grid 0 = t_0 < ... < t_N = T.
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps);

  double horizon() const noexcept { return horizon_; }
  int steps() const noexcept { return steps_; }
  double dt() const noexcept { return horizon_ / steps_; }
  /// t_i; t_N is exactly the horizon.
  double node(int i) const noexcept { return i == steps_ ? horizon_ : i * dt(); }

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_;
  int steps_;
};

/// Raised when a driver throws or returns a non-finite value at a sampled point.
class DriverEvaluationError : public std::runtime_error {
 public:
  DriverEvaluationError(const std::string& what, std::vector<double> point);
  const std::vector<double>& point() const noexcept { return point_; }

 private:
  std::vector<double> point_;
};

using DriverFMap = std::function<double(double t, double y, std::span<const double> z)>;
using DriverGMap =
    std::function<void(double t, double y, std::span<const double> z, std::span<double> out)>;

/// Intercept A(B) such that the bound holds with slope B, or nullopt if no
/// bound with that slope is known. Used for truncating inf/sup-convolutions.
using GrowthEnvelope = std::function<std::optional<double>(double slope)>;

/// Drift coefficient f(t, y, z) with its declared constants.
///
/// `growth` is K in |f| <= K(1 + |y| + |z|). `lipschitz`, when present, is L
/// in |f(p) - f(q)| <= L(|dy| + |dz|). `modulus` is a modulus of continuity
/// in the same metric, known for catalog drivers only.
struct DriverF {
  std::string name;
  DriverFMap eval;
  double growth = 1.0;
  std::optional<double> lipschitz;
  std::function<double(double)> modulus;
  // f >= -(A + B(|y|+|z|)) and f <= A + B(|y|+|z|) respectively.
  GrowthEnvelope envelope_below;
  GrowthEnvelope envelope_above;
  bool depends_on_t = true;
  bool depends_on_z = true;
  int z_dim = 0;  // 0: any dimension

  double operator()(double t, double y, std::span<const double> z) const { return eval(t, y, z); }

  /// Envelope from the growth constant alone: valid for every slope >= K.
  static GrowthEnvelope growth_envelope(double K);
};

/// Doubly stochastic coefficient g(t, y, z) in R^l with
/// |g(p) - g(q)|^2 <= c|dy|^2 + alpha|dz|^2.
struct DriverG {
  std::string name;
  DriverGMap eval;
  int out_dim = 1;
  double c = 1.0;
  double alpha = 0.5;
  int z_dim = 0;
  bool vanishes_at_zero_z = false;  // declared g(t, y, 0) = 0

  void operator()(double t, double y, std::span<const double> z, std::span<double> out) const {
    eval(t, y, z, out);
  }
};

/// Read-only view of one W path: values at nodes 0..N, d coordinates each.
struct PathView {
  std::span<const double> values;  // (N+1) * d, node-major
  int dim = 1;

  int nodes() const noexcept { return static_cast<int>(values.size()) / dim; }
  double at(int node, int k) const noexcept { return values[static_cast<std::size_t>(node) * dim + k]; }
  std::span<const double> terminal() const noexcept {
    return values.subspan(values.size() - static_cast<std::size_t>(dim));
  }
};

enum class TerminalKind { Constant, TerminalW, PathFunctional };

/// Terminal value xi as a functional of the W path.
class TerminalCondition {
 public:
  static TerminalCondition constant(double value, std::string name = {});
  static TerminalCondition of_terminal_w(std::function<double(std::span<const double>)> fn,
                                         std::string name);
  static TerminalCondition of_path(std::function<double(const PathView&)> fn, std::string name);

  TerminalKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  std::optional<double> constant_value() const noexcept { return constant_; }
  double operator()(const PathView& w) const { return fn_(w); }

  /// xi + delta (shift) or (1 + delta) * xi (scale).
  TerminalCondition shifted(double delta) const;
  TerminalCondition scaled(double factor) const;

 private:
  TerminalKind kind_ = TerminalKind::Constant;
  std::function<double(const PathView&)> fn_;
  std::optional<double> constant_;
  std::string name_;
};

struct BDSDEProblem {
  DriverF f;
  DriverG g;
  TerminalCondition xi;
  TimeGrid grid;
  int d = 1;
  int l = 1;

  /// Throws std::invalid_argument when dimensions disagree.
  void check() const;
};

/// Driver triple for one parameter value of a family.
struct FamilyMember {
  DriverF f;
  DriverG g;
  TerminalCondition xi;
};

/// lambda -> (f^lambda, g^lambda, xi^lambda) on a box domain D in R^n.
struct ParamFamily {
  std::vector<double> lower, upper;  // D = [lower, upper]
  std::vector<double> anchor;        // lambda_0
  double growth = 1.0;               // lambda-independent K
  std::function<FamilyMember(std::span<const double>)> member;

  bool contains(std::span<const double> lambda) const;
  FamilyMember at(std::span<const double> lambda) const;
  FamilyMember at(double lambda) const { return at(std::span<const double>(&lambda, 1)); }
};

/// Which information a node value was built from: W up to `w_node` and
/// B increments from `b_first_increment` to N-1.
struct NodeFeatures {
  int w_node;
  int b_first_increment;
};

/// Y and Z on every path and grid node.
class GridSolution {
 public:
  GridSolution(TimeGrid grid, int outer, int inner, int d, std::uint64_t bundle_seed);

  /// Deterministic curve broadcast to a single path.
  static GridSolution from_curve(const TimeGrid& grid, std::span<const double> y, int d = 1);

  const TimeGrid& grid() const noexcept { return grid_; }
  int outer() const noexcept { return outer_; }
  int inner() const noexcept { return inner_; }
  int nodes() const noexcept { return grid_.steps() + 1; }
  int d() const noexcept { return d_; }
  std::uint64_t bundle_seed() const noexcept { return seed_; }
  std::size_t paths() const noexcept { return static_cast<std::size_t>(outer_) * inner_; }

  double& y(int b, int w, int i) { return y_[index(b, w, i)]; }
  double y(int b, int w, int i) const { return y_[index(b, w, i)]; }
  double& z(int b, int w, int i, int k) { return z_[index(b, w, i) * d_ + k]; }
  double z(int b, int w, int i, int k) const { return z_[index(b, w, i) * d_ + k]; }
  /// Y along one path (all nodes).
  std::span<const double> y_path(int b, int w) const {
    return std::span<const double>(y_).subspan(index(b, w, 0), static_cast<std::size_t>(nodes()));
  }

  std::vector<NodeFeatures> features;
  std::vector<std::string> warnings;
  /// Per outer path: standard error of Y_0 from the inner sample.
  std::vector<double> y0_se;
  /// Per outer and inner path and z coordinate: time average of the Z
  /// regression targets over nodes 0..N-1.
  std::vector<double> z_target_average;

  bool same_shape(const GridSolution& o) const noexcept;

 private:
  std::size_t index(int b, int w, int i) const noexcept {
    return (static_cast<std::size_t>(b) * inner_ + w) * static_cast<std::size_t>(nodes()) + i;
  }

  TimeGrid grid_;
  int outer_, inner_, d_;
  std::uint64_t seed_;
  std::vector<double> y_, z_;
};

/// Mean and standard error of Y_0 over all paths (between-outer variance
/// included when there is more than one outer path).
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};
Estimate initial_value(const GridSolution& s);

// ---------------------------------------------------------------------------
// Hypothesis validation

struct SamplingBox {
  double y_max = 10.0;
  double z_max = 10.0;  // per coordinate
};

struct ValidationOptions {
  SamplingBox box;
  double tolerance = 0.0;
  bool recenter = false;  // check |f - f(0,0,0)| instead of |f|
};

struct HypothesisCheck {
  std::string name;
  double worst_ratio = 0.0;
  std::vector<double> witness;  // point of the worst ratio
  std::size_t samples = 0;
  bool passed = true;
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;
  bool passed() const;
};

ValidationReport validate_problem(const BDSDEProblem& problem, std::size_t budget,
                                  std::uint64_t seed, const ValidationOptions& opts = {});

/// Euclidean norm.
double norm(std::span<const double> v);

}  // namespace bdsde
