// Tube-volume scaling curves, the frequency-drop inductive ball covering
// with Vitali disjointness, the discrete Reifenberg hypothesis integral, and
// the flatness-vs-pinching bound report.
#pragma once

#include <vector>

#include "partlab/field_core.hpp"
#include "partlab/geometry.hpp"
#include "partlab/grid.hpp"
#include "partlab/mean_flatness.hpp"

namespace partlab {

struct MinkowskiCurve {
  std::vector<double> rhos;     // ascending
  std::vector<double> volumes;  // nondecreasing by construction
  double slope = 0.0;
  double intercept = 0.0;
  double confidence = 0.0;  // standard error of the fitted slope
  bool fitted = false;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double confidence = 0.0;
  int samples = 0;
};

// Volume of the rho-neighborhood of S clipped to the grid's domain, by cell
// counting on the grid's cell lattice, for each requested rho (all >= h).
MinkowskiCurve tube_volume_curve(const std::vector<Vec>& S, const Grid& K,
                                 const std::vector<double>& rhos);

// Log-log least squares over the positive-volume samples (needs >= 5).
SlopeFit fit_scaling_exponent(const MinkowskiCurve& curve);

struct CoverBall {
  Vec center{0.0, 0.0, 0.0};
  double radius = 0.0;
  bool terminal_scale = false;     // stopped by radius <= s
  bool frequency_dropped = false;  // stopped by sup frequency <= U - delta
  int generation = 0;
  double sup_freq = 0.0;  // sup of the corrected frequency over covered points
  bool sup_valid = false;
};

struct Covering {
  std::vector<CoverBall> balls;
  double U = 0.0;  // frequency bound anchored over the inputs at radius r
  bool U_valid = false;
  double delta = 0.0;
  double c_exponent = 0.0;  // additive correction constant 3 + A + A^2
  double packing_sum = 0.0;  // sum of radius^(dim-2) over the balls
  bool vitali = false;        // 1/5-shrunk balls pairwise disjoint
  bool covers_input = false;
  bool budget_exceeded = false;
  bool dichotomy_degenerate = false;  // no admissible frequency evaluation
  int generations = 0;
};

// Covers D by generations of balls of radius r / 2^g: greedy 2r_g/5-separated
// centers among the still-active points; a ball becomes terminal when its
// radius reaches s or the sup of I_phi + c(A) rad^2 over its points falls to
// U - delta; points in terminal balls leave the active set.
Covering inductive_cover(const SegregatedField& u, const std::vector<Vec>& D, double r,
                         double s, double delta, double A, int max_balls = 4096);

// Double integral of the k-th mean flatness over scales [s_min, t] (log
// trapezoid, `nodes` points, s_min = quarter of the smallest inter-atom
// distance) and atoms inside B_t(x).
double reifenberg_integral(const PointMeasure& mu, const Vec& x, double t, int k,
                           int nodes = 20);

struct JonesReport {
  double lhs = 0.0;    // mean flatness of the measure at (x, r), k = dim - 2
  double rhs = 0.0;    // r^(2-dim) * sum of w_i * pinching between r and 32 r
  double ratio = 0.0;  // lhs / rhs when the right side is nonzero
  bool ratio_defined = false;
  bool degenerate = false;  // both sides vanished; excluded from statistics
  int atoms_used = 0;
  int atoms_skipped = 0;  // atoms where the 32 r ball is not admissible
  double c_exponent = 0.0;
};

// Empirical constant in the flatness-by-pinching bound.
JonesReport jones_bound_report(const SegregatedField& u, const PointMeasure& mu, const Vec& x,
                               double r, double A = 0.0);

}  // namespace partlab
