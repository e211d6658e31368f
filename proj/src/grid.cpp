#include "partlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace partlab {

namespace {

int axis_nodes(double lo, double hi, double h) {
  const double cells = (hi - lo) / h;
  const double rounded = std::round(cells);
  if (rounded < 1.0 || std::abs(cells - rounded) > 1e-9 * std::max(1.0, std::abs(cells))) {
    throw std::invalid_argument("grid extent is not an integer multiple of the spacing");
  }
  return static_cast<int>(rounded) + 1;
}

Grid make_grid_shell(int dim, const Vec& lo, const Vec& hi, double h, DomainKind kind) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("grid dimension must be 2 or 3");
  if (h <= 0.0) throw std::invalid_argument("grid spacing must be positive");
  Grid g;
  g.dim = dim;
  g.h = h;
  g.origin = lo;
  g.domain.kind = kind;
  g.domain.lo = lo;
  g.domain.hi = hi;
  for (int d = 0; d < dim; ++d) g.shape[d] = axis_nodes(lo[d], hi[d], h);
  if (dim == 2) {
    g.shape[2] = 1;
    g.origin[2] = 0.0;
    g.domain.lo[2] = 0.0;
    g.domain.hi[2] = 0.0;
  }
  g.domain_mask.assign(g.size(), 0);
  g.boundary_mask.assign(g.size(), 0);
  return g;
}

// Marks as boundary every domain node adjacent (face neighbors) to a node
// outside the domain or to the grid edge.
void mark_boundary_from_mask(Grid& g) {
  for (int i = 0; i < g.shape[0]; ++i) {
    for (int j = 0; j < g.shape[1]; ++j) {
      for (int k = 0; k < g.shape[2]; ++k) {
        const std::size_t idx = g.index(i, j, k);
        if (!g.domain_mask[idx]) continue;
        bool edge = false;
        const int di[6] = {1, -1, 0, 0, 0, 0};
        const int dj[6] = {0, 0, 1, -1, 0, 0};
        const int dk[6] = {0, 0, 0, 0, 1, -1};
        const int nn = (g.dim == 2) ? 4 : 6;
        for (int n = 0; n < nn && !edge; ++n) {
          const int ii = i + di[n], jj = j + dj[n], kk = k + dk[n];
          if (!g.node_in_bounds(ii, jj, kk) || !g.domain_mask[g.index(ii, jj, kk)]) edge = true;
        }
        if (edge) g.boundary_mask[idx] = 1;
      }
    }
  }
}

}  // namespace

bool Grid::pos_in_bounds(const Vec& p) const {
  for (int d = 0; d < dim; ++d) {
    const double lo = origin[d];
    const double hi = origin[d] + h * (shape[d] - 1);
    if (p[d] < lo - 1e-12 || p[d] > hi + 1e-12) return false;
  }
  return true;
}

double Grid::dist_to_boundary(const Vec& p) const {
  switch (domain.kind) {
    case DomainKind::Box:
    case DomainKind::FreeBox: {
      double m = 1e300;
      for (int d = 0; d < dim; ++d) {
        m = std::min(m, p[d] - domain.lo[d]);
        m = std::min(m, domain.hi[d] - p[d]);
      }
      return m;
    }
    case DomainKind::Disk:
      return domain.r_out - dist(p, domain.center);
    case DomainKind::Annulus: {
      const double d = dist(p, domain.center);
      return std::min(domain.r_out - d, d - domain.r_in);
    }
  }
  return 0.0;
}

Grid make_box_grid(int dim, const Vec& lo, const Vec& hi, double h, bool dirichlet) {
  Grid g = make_grid_shell(dim, lo, hi, h, dirichlet ? DomainKind::Box : DomainKind::FreeBox);
  std::fill(g.domain_mask.begin(), g.domain_mask.end(), 1);
  if (dirichlet) mark_boundary_from_mask(g);
  return g;
}

Grid make_free_grid(int dim, const Vec& lo, const Vec& hi, double h) {
  return make_box_grid(dim, lo, hi, h, false);
}

Grid make_disk_grid(int dim, const Vec& center, double radius, double h) {
  if (radius <= 0.0) throw std::invalid_argument("disk radius must be positive");
  const double pad = 4.0 * h;
  Vec lo = center, hi = center;
  for (int d = 0; d < dim; ++d) {
    lo[d] = center[d] - radius - pad;
    hi[d] = center[d] + radius + pad;
  }
  Grid g = make_grid_shell(dim, lo, hi, h, DomainKind::Disk);
  g.domain.center = center;
  g.domain.r_out = radius;
  for (int i = 0; i < g.shape[0]; ++i)
    for (int j = 0; j < g.shape[1]; ++j)
      for (int k = 0; k < g.shape[2]; ++k) {
        const Vec p = g.node_pos(i, j, k);
        if (dist(p, center) <= radius + 1e-12) g.domain_mask[g.index(i, j, k)] = 1;
      }
  mark_boundary_from_mask(g);
  return g;
}

Grid make_annulus_grid(int dim, const Vec& center, double r_in, double r_out, double h) {
  if (!(0.0 < r_in && r_in < r_out)) throw std::invalid_argument("annulus radii must satisfy 0 < r_in < r_out");
  const double pad = 4.0 * h;
  Vec lo = center, hi = center;
  for (int d = 0; d < dim; ++d) {
    lo[d] = center[d] - r_out - pad;
    hi[d] = center[d] + r_out + pad;
  }
  Grid g = make_grid_shell(dim, lo, hi, h, DomainKind::Annulus);
  g.domain.center = center;
  g.domain.r_in = r_in;
  g.domain.r_out = r_out;
  for (int i = 0; i < g.shape[0]; ++i)
    for (int j = 0; j < g.shape[1]; ++j)
      for (int k = 0; k < g.shape[2]; ++k) {
        const Vec p = g.node_pos(i, j, k);
        const double d = dist(p, center);
        if (d >= r_in - 1e-12 && d <= r_out + 1e-12) g.domain_mask[g.index(i, j, k)] = 1;
      }
  mark_boundary_from_mask(g);
  return g;
}

std::string domain_kind_name(DomainKind k) {
  switch (k) {
    case DomainKind::Box: return "box";
    case DomainKind::Disk: return "disk";
    case DomainKind::Annulus: return "annulus";
    case DomainKind::FreeBox: return "free_box";
  }
  return "unknown";
}

}  // namespace partlab
