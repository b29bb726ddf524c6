#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bdsde/core.hpp"
#include "bdsde/noise.hpp"
#include "bdsde/regularize.hpp"

namespace bdsde {

struct SchemeConfig {
  int degree = 3;  // total degree of the polynomial basis in W_{t_i} / sqrt(t_i)
  int picard = 1;  // 1: explicit step; k > 1 adds k - 1 sweeps with f at (t_i, Y_i, Z_i)
  std::optional<double> clip;
  int threads = 1;

  void check() const;
};

/// Why the ODE fast path does not apply, or nullopt when it does.
std::optional<std::string> deterministic_obstacle(const BDSDEProblem& problem);

/// -dY/dt = f(t, Y, 0), Y(T) = xi, by classical RK4 at substep dt/10; Y at t_0..t_N.
std::vector<double> solve_deterministic(const BDSDEProblem& problem);

/// Backward regression scheme, conditioned on each outer B path.
GridSolution solve_lipschitz(const BDSDEProblem& problem, const PathBundle& bundle, const SchemeConfig& cfg);

struct BracketResult {
  GridSolution lower;
  GridSolution upper;
  double m = 0.0;
  Estimate lower_y0, upper_y0;
  double width = 0.0;     // upper Y_0 - lower Y_0
  double width_se = 0.0;  // pooled: sqrt(se_lower^2 + se_upper^2)
};

BracketResult bracket_solutions(const BDSDEProblem& problem, double m, const LatticeSpec& lattice,
                                const PathBundle& bundle, const SchemeConfig& cfg);

/// {K, 2K, 4K, 8K}.
std::vector<double> default_m_schedule(double K);
/// Spacing h_0 / m on the same radius.
LatticeSpec scheduled_lattice(const LatticeSpec& base, double m);

struct SequenceReport {
  std::vector<double> m;
  std::vector<double> spacing;
  std::vector<Estimate> lower_y0, upper_y0;
  std::vector<double> width, width_se;
  std::vector<double> lower_diffs, upper_diffs;  // successive Y_0 differences
  std::vector<double> min_node_lower_diff;       // min over paths and nodes of lower_{j+1} - lower_j
  double lower_limit = 0.0, upper_limit = 0.0;   // Aitken extrapolation of the last three terms
  bool lower_monotone = true;                    // each up to 3 pooled standard errors
  bool upper_monotone = true;
  bool width_monotone = true;
  bool node_monotone = true;
  std::optional<BracketResult> last;
};

/// Aitken delta-squared limit of the last three terms (last term when undefined).
double aitken_limit(std::span<const double> seq);

SequenceReport minimal_maximal_estimate(const BDSDEProblem& problem, std::span<const double> m_schedule,
                                        const LatticeSpec& lattice, const PathBundle& bundle,
                                        const SchemeConfig& cfg, bool refine_lattice = true);

}  // namespace bdsde
