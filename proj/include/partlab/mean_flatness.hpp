// Mean flatness of weighted point sets: second-moment barycenter analysis,
// the eigenvalue form of the best-plane deviation D_mu^k, an independent
// brute-force plane search used as a test oracle, quantitative spanning of
// near-degenerate configurations, and tube containment of junction samples.
#pragma once

#include <array>
#include <optional>
#include <vector>

#include "partlab/field_core.hpp"
#include "partlab/geometry.hpp"

namespace partlab {

struct Atom {
  Vec p{0.0, 0.0, 0.0};
  double w = 1.0;
};

struct PointMeasure {
  int dim = 2;
  std::vector<Atom> atoms;
  double total_mass() const;
};

using Mat3 = std::array<std::array<double, 3>, 3>;

// Weighted barycenter and second-moment matrix of the atoms strictly inside
// B_r(x). Throws when the open ball carries no mass.
std::pair<Vec, Mat3> barycenter_moments(const PointMeasure& mu, const Vec& x, double r);

struct FlatnessRecord {
  Vec x{0.0, 0.0, 0.0};
  double r = 0.0;
  int k = 0;
  double mass = 0.0;
  Vec barycenter{0.0, 0.0, 0.0};
  std::array<double, 3> eigenvalues{0.0, 0.0, 0.0};  // descending, dim entries used
  std::array<Vec, 3> eigenvectors{};                 // orthonormal rows of the moment frame
  double D = 0.0;  // r^{-k-2} * sum of the (dim - k) smallest eigenvalues
  Plane plane;     // best k-plane: through the barycenter, top-k eigenvectors
  bool empty = false;  // ball carried no mass; record is all zeros
};

// Deviation of the measure in B_r(x) from the best k-dimensional affine
// plane, computed through the moment eigen-decomposition. 0 <= k < dim.
FlatnessRecord mean_flatness(const PointMeasure& mu, const Vec& x, double r, int k);

// Direct plane search on a parameter grid with local refinement. Slow and
// deliberately independent of the eigenvalue route; intended for tests.
// Requires at most 30 atoms in the ball, dim in {2,3}, k in {0,1}.
double brute_force_flatness(const PointMeasure& mu, const Vec& x, double r, int k);

struct SpanCheckResult {
  bool spans = false;
  Plane plane;              // spanned k-plane, or the fallback (k-1)-plane
  std::vector<Vec> chosen;  // greedy rho*r-independent points (in pick order)
  bool fallback_contains = false;  // all points within rho*r of the fallback
  double fallback_max_dist = 0.0;
};

// Greedy search for k+1 points that are rho*r-linearly independent: each
// pick lies at distance >= rho*r from the affine span of the previous picks.
// Success returns the spanned k-plane; failure returns the best (k-1)-plane
// from the moment frame together with a containment check. k defaults to
// dim - 2 (one point in 2D, a line in 3D needs two).
SpanCheckResult rho_span_check(const std::vector<Vec>& points, const Vec& x, double r,
                               double rho, int dim, int k = -1);

struct SpineTubeReport {
  int samples = 0;
  int violators = 0;
  double worst_dist = 0.0;
  std::vector<Vec> violating_points;
};

// Detects junction candidates inside the region and verifies each lies
// within rho_bar of the spine plane.
SpineTubeReport spine_tube_check(const SegregatedField& u, const Plane& spine,
                                 const BallRegion& region, double rho_bar);

}  // namespace partlab
