// Uniform Cartesian grids over simple masked domains (box, disk/ball,
// annulus, or a free box without Dirichlet data).
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "partlab/geometry.hpp"

namespace partlab {

enum class DomainKind : std::uint32_t { Box = 0, Disk = 1, Annulus = 2, FreeBox = 3 };

// Analytic description of the domain; the node masks below are derived from
// it and the masks stay authoritative for quadrature, while this record is
// used for exact distance-to-boundary queries and serialization.
struct DomainShape {
  DomainKind kind = DomainKind::FreeBox;
  Vec lo{0.0, 0.0, 0.0};       // bounding box of the grid
  Vec hi{0.0, 0.0, 0.0};
  Vec center{0.0, 0.0, 0.0};   // disk / annulus
  double r_in = 0.0;
  double r_out = 0.0;
};

struct Grid {
  int dim = 2;
  std::array<int, 3> shape{1, 1, 1};  // node counts per axis; shape[2]==1 in 2D
  double h = 0.0;
  Vec origin{0.0, 0.0, 0.0};
  DomainShape domain;
  std::vector<std::uint8_t> domain_mask;    // node belongs to the closed domain
  std::vector<std::uint8_t> boundary_mask;  // node carries zero Dirichlet data

  std::size_t size() const {
    return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
  }
  std::size_t index(int i, int j, int k = 0) const {
    return (static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k;
  }
  bool node_in_bounds(int i, int j, int k = 0) const {
    return i >= 0 && i < shape[0] && j >= 0 && j < shape[1] && k >= 0 && k < shape[2];
  }
  Vec node_pos(int i, int j, int k = 0) const {
    return {origin[0] + h * i, origin[1] + h * j, origin[2] + h * k};
  }
  bool pos_in_bounds(const Vec& p) const;

  // A node is an interior unknown when it sits in the domain but not on the
  // Dirichlet layer.
  bool is_interior(std::size_t idx) const {
    return domain_mask[idx] && !boundary_mask[idx];
  }

  // Exact distance from p to the analytic domain boundary (free boxes use
  // the bounding box faces). Negative when p lies outside.
  double dist_to_boundary(const Vec& p) const;

  // Admissible radius window for ball-based quantities centered at x.
  double min_radius() const { return 4.0 * h; }
  double max_radius(const Vec& x) const { return dist_to_boundary(x) - 2.0 * h; }
};

// Factories. Node counts are derived from the extents, which must be integer
// multiples of h (within rounding slack). `dirichlet` box grids mark the
// outermost node layer as boundary; free boxes carry no boundary layer.
Grid make_box_grid(int dim, const Vec& lo, const Vec& hi, double h, bool dirichlet = true);
Grid make_free_grid(int dim, const Vec& lo, const Vec& hi, double h);
Grid make_disk_grid(int dim, const Vec& center, double radius, double h);
Grid make_annulus_grid(int dim, const Vec& center, double r_in, double r_out, double h);

std::string domain_kind_name(DomainKind k);

}  // namespace partlab
