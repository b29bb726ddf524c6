#pragma once

#include <span>
#include <vector>

#include "bdsde/core.hpp"
#include "bdsde/noise.hpp"
#include "bdsde/regularize.hpp"
#include "bdsde/report.hpp"
#include "bdsde/solver.hpp"

namespace bdsde {

/// Mean over paths of max_i (Y^a_i - Y^b_i)^2, with its standard error.
Estimate sup_sq_distance(const GridSolution& a, const GridSolution& b);

/// E|xi^1 - xi^2|^2 over the W paths of the bundle.
double terminal_gap_sq(const TerminalCondition& a, const TerminalCondition& b, const PathBundle& bundle);

enum class Perturbation { Shift, Scale };

/// Columns: delta, dist, xi_gap_sq, ratio. Diagnostic "empirical_C" is the max ratio.
ExperimentReport stability_ratio(const BDSDEProblem& problem, std::span<const double> deltas,
                                 const PathBundle& bundle, const SchemeConfig& cfg,
                                 Perturbation mode = Perturbation::Shift);

struct SequenceTerm {
  double n;
  TerminalCondition xi;
};

/// Columns: n, dist_lower, dist_upper, se, N, M_B, M_W. For a non-Lipschitz f
/// each term is solved with the upper regularization at the last m and compared
/// with the lower (minimal) and upper (maximal) base solutions.
ExperimentReport continuous_dependence_experiment(const BDSDEProblem& problem, std::span<const SequenceTerm> terms,
                                                  const PathBundle& bundle, const SchemeConfig& cfg,
                                                  std::span<const double> m_schedule, const LatticeSpec& lattice);

/// f = 3 y^(2/3), g = 0, xi_n = 1/n on the ODE fast path.
/// Columns: n, Y0, dist_to_min_sq, dist_to_max_sq.
ExperimentReport counterexample_scenario(double T, std::span<const double> n_values, int steps = 1000);

/// Columns: lambda, dist, rhs_eq8, ratio. rhs_eq8 is E|xi^l - xi^l0|^2 plus the
/// time integrals of |f^l - f^l0|^2 and |g^l - g^l0|^2 along the anchor solution.
ExperimentReport family_dependence_experiment(const ParamFamily& family, std::span<const double> lambdas,
                                              const PathBundle& bundle, const SchemeConfig& cfg,
                                              std::span<const double> m_schedule, const LatticeSpec& lattice);

}  // namespace bdsde
