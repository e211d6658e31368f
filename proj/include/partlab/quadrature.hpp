// Quadrature and stencil machinery shared by the analysis modules: cell
// walkers for ball/annulus integrals with subsampling near spherical cuts,
// sphere quadrature (trapezoid in 2D, Gauss-Legendre x trapezoid in 3D),
// interpolation, and discrete gradient fields.
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "partlab/field_core.hpp"
#include "partlab/geometry.hpp"
#include "partlab/grid.hpp"

namespace partlab {

// Visits sample points of the region { r_lo <= |y-x| <= r_hi } with volume
// weights. Cells crossing one of `split_radii` (or the region boundary) are
// subsampled with sub^dim midpoints; when `fine_all` is set every cell is.
// The callback receives the sample position and its volume weight; sample
// order is deterministic.
void walk_shell(const Grid& g, const Vec& x, double r_lo, double r_hi,
                std::span<const double> split_radii, int sub, bool fine_all,
                const std::function<void(const Vec&, double)>& fn);

// Shell integral of a point function. Subsampling defaults: 3^dim on cut
// cells, 5^dim everywhere once r_hi/h <= 16.
double shell_integral(const Grid& g, const Vec& x, double r_lo, double r_hi,
                      std::span<const double> split_radii,
                      const std::function<double(const Vec&)>& f);

double ball_integral(const Grid& g, const Vec& x, double r,
                     const std::function<double(const Vec&)>& f);

// Integral over the sphere of radius r about x. 2D: trapezoid rule over
// max(64, ceil(8 pi r / h)) angles. 3D: Gauss-Legendre in the polar cosine
// times trapezoid in azimuth, node counts scaled to r/h.
double sphere_integral(const Grid& g, const Vec& x, double r,
                       const std::function<double(const Vec&)>& f);

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Multilinear interpolation of a nodal array. Out-of-box points are clamped.
double interp_linear(const Grid& g, std::span<const double> nodal, const Vec& p);

// Per-axis three-point Lagrange interpolation (tensor product); used by the
// sphere quadratures where the extra order pays off at small radii.
double interp_quadratic(const Grid& g, std::span<const double> nodal, const Vec& p);

// Per-axis four-point Lagrange interpolation (tensor product), exact on
// cubics; falls back to the quadratic rule when an axis has fewer than four
// nodes. Used for the energy density whose radial growth makes the lower
// order rules the accuracy bottleneck at small radii.
double interp_cubic(const Grid& g, std::span<const double> nodal, const Vec& p);

// Squared gradient magnitude per node for the whole segregated field.
// Each node differences the signed union (owning component minus the rest):
// adjacent components glue into a locally smooth signed function across a
// wall, so centered fourth-order stencils stay accurate there instead of
// degrading to one-sided first order; the node's owner is the component with
// the largest value (strongest face neighbor on the null set).
std::vector<double> grad_sq_nodal(const SegregatedField& u);

// Plain centered-difference gradient of one component (one-sided at the grid
// edge), used for flux integrands where the component value itself weights
// the result.
std::vector<Vec> grad_centered(const Grid& g, std::span<const double> nodal);

// Interpolates a precomputed nodal gradient field to an arbitrary point.
Vec interp_gradient(const Grid& g, std::span<const Vec> grads, const Vec& p);

}  // namespace partlab
