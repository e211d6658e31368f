// Discrete segregated vector fields: N nonnegative components with pairwise
// disjoint supports on a grid, together with per-component eigenvalue
// estimates, the projection onto that constraint set, analytic homogeneous
// reference fields, and blowup rescaling.
#pragma once

#include <memory>
#include <span>
#include <vector>

#include "partlab/geometry.hpp"
#include "partlab/grid.hpp"

namespace partlab {

struct SegregatedField {
  std::shared_ptr<const Grid> grid;
  std::vector<std::vector<double>> components;  // [N][node]
  std::vector<double> eigenvalues;              // one per component
  bool normalized = false;                      // unit discrete L2 per component

  int ncomp() const { return static_cast<int>(components.size()); }
  double lambda_max() const;
  double lambda_min() const;

  // Largest component at the node, zero if none is positive. Labels are
  // 1-based; 0 means "no support here".
  int label_at(std::size_t idx) const;

  // Checks the pointwise constraint (at most one strictly positive component
  // per node, all components nonnegative, zero outside the domain and on the
  // Dirichlet layer). Returns the number of offending nodes.
  std::size_t constraint_violations() const;
};

// Parameters of the homogeneous reference field: in polar coordinates of the
// plane of the last two axes about `center`, component k carries
// rho^(m/2) * |cos(m*theta/2)| on the k-th angular sector and vanishes
// elsewhere. In 3D the field is constant along the first axis.
struct OracleSpec {
  int m = 3;
  double rotation = 0.0;
  Vec center{0.0, 0.0, 0.0};
};

// Nearest-point projection onto the union of nonnegative coordinate
// half-axes: clip negatives, keep the largest remaining entry (lowest index
// wins ties), zero the rest. Total and idempotent.
std::vector<double> project_to_sigma(std::span<const double> y);
void project_to_sigma_inplace(std::span<double> y);

SegregatedField make_oracle(std::shared_ptr<const Grid> grid, const OracleSpec& spec);

// Per-component multilinear interpolation followed by projection onto the
// constraint set. Throws std::out_of_range outside the grid bounding box.
std::vector<double> eval_field(const SegregatedField& u, const Vec& x);

// Resamples u around x at scale rho onto a free grid covering the unit ball
// and normalizes so the average squared magnitude over the unit ball is one.
// Eigenvalues are rescaled by rho^2.
SegregatedField blowup_rescale(const SegregatedField& u, const Vec& x, double rho,
                               int nodes_per_axis = 0);

std::vector<double> l2_norms(const SegregatedField& u);

// Scales every component so the discrete L2 norms become one; components with
// vanishing norm are left untouched and reported via the return value.
int normalize_components(SegregatedField& u);

}  // namespace partlab
