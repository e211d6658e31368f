// Minimizes the sum of first Dirichlet eigenvalues over segregated
// partitions: damped inverse-power iteration per component with pointwise
// projection onto the constraint set, L2 renormalization, and backtracking on
// the objective. Includes the stationarity diagnostics (discrete PDE
// residual, differential inequalities of the extremality system).
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "partlab/field_core.hpp"
#include "partlab/grid.hpp"

namespace partlab {

enum class SeedLayout { Voronoi, Random };

struct SolveConfig {
  std::shared_ptr<const Grid> grid;
  int ncomp = 1;
  SeedLayout seed_layout = SeedLayout::Voronoi;
  std::uint64_t seed = 0;
  int max_iters = 400;
  double damping = 1.0;          // blend factor toward the implicit step, in (0, 1]
  double tolerance = 1e-8;       // relative objective change considered converged
  int projection_cadence = 1;    // iterations between pointwise projections
  double tau_factor = 1.0;       // implicit step length in units of 1/lambda
  bool continuation = true;      // solve on coarsened grids first
  int cg_max_iters = 600;
  double cg_tolerance = 1e-8;
};

struct SolveReport {
  int iterations = 0;                     // accepted steps at the final level
  std::vector<double> objective_history;  // objective per accepted step (final level)
  std::vector<double> eigenvalues;
  std::vector<double> residuals;          // per-component PDE residuals
  double wall_time_seconds = 0.0;
  bool converged = false;
  int levels = 1;
  std::vector<int> level_iterations;
};

// Throws std::invalid_argument on degenerate configs (bad counts, damping or
// tolerance out of range, more components than interior nodes). On
// non-convergence the best iterate is returned with `converged == false`.
std::pair<SegregatedField, SolveReport> solve_partition(const SolveConfig& config);

// Total Dirichlet energy of a normalized field by centered-difference
// gradients and cell quadrature. Rejects unnormalized fields.
double objective_energy(const SegregatedField& u);

// Relative discrete residual of -Lap u_k = lambda_k u_k per component, over
// interior support nodes away from the interface.
std::vector<double> pde_residual(const SegregatedField& u);

struct ExtremalityReport {
  // subsolution inequality: -Lap u_k <= lambda_k u_k + tol, every interior node
  std::size_t sub_violations = 0;
  double sub_worst_margin = 0.0;
  // supersolution inequality for u_k minus the sum of the others; stencils
  // straddling two supports are excluded (their +/- kink spikes cancel only
  // in the weak sense, not node by node)
  std::size_t super_violations = 0;
  double super_worst_margin = 0.0;
  std::size_t nodes_checked = 0;
};

ExtremalityReport extremality_check(const SegregatedField& u, double tol);

// Discrete 5/7-point Laplacian stiffness apply on interior nodes with zero
// Dirichlet data; exposed for tests and diagnostics.
void apply_neg_laplacian(const Grid& g, const std::vector<double>& in, std::vector<double>& out);

// Rayleigh quotient of one component under the discrete Laplacian.
double rayleigh_quotient(const Grid& g, const std::vector<double>& comp);

}  // namespace partlab
