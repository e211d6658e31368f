#include "partlab/field_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "partlab/quadrature.hpp"

namespace partlab {

double SegregatedField::lambda_max() const {
  double m = 0.0;
  for (double l : eigenvalues) m = std::max(m, l);
  return m;
}

double SegregatedField::lambda_min() const {
  if (eigenvalues.empty()) return 0.0;
  double m = eigenvalues[0];
  for (double l : eigenvalues) m = std::min(m, l);
  return m;
}

int SegregatedField::label_at(std::size_t idx) const {
  int label = 0;
  double best = 0.0;
  for (int k = 0; k < ncomp(); ++k) {
    const double v = components[k][idx];
    if (v > best) {
      best = v;
      label = k + 1;
    }
  }
  return label;
}

std::size_t SegregatedField::constraint_violations() const {
  const Grid& g = *grid;
  std::size_t bad = 0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    int positive = 0;
    bool negative = false;
    for (const auto& c : components) {
      if (c[idx] > 0.0) ++positive;
      if (c[idx] < 0.0) negative = true;
    }
    const bool outside = !g.domain_mask[idx] || g.boundary_mask[idx];
    if (negative || positive > 1 || (outside && positive > 0)) ++bad;
  }
  return bad;
}

std::vector<double> project_to_sigma(std::span<const double> y) {
  std::vector<double> out(y.begin(), y.end());
  project_to_sigma_inplace(out);
  return out;
}

void project_to_sigma_inplace(std::span<double> y) {
  int best = -1;
  double best_val = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k] < 0.0) y[k] = 0.0;
    if (y[k] > best_val) {
      best_val = y[k];
      best = static_cast<int>(k);
    }
  }
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (static_cast<int>(k) != best) y[k] = 0.0;
  }
}

SegregatedField make_oracle(std::shared_ptr<const Grid> grid, const OracleSpec& spec) {
  if (spec.m < 2) throw std::invalid_argument("oracle degree m must be at least 2");
  const Grid& g = *grid;
  if (!g.pos_in_bounds(spec.center)) throw std::invalid_argument("oracle center outside the grid");

  const int m = spec.m;
  const double alpha = 0.5 * m;
  const double pi = std::numbers::pi;
  const int a0 = g.dim - 2;  // polar plane: last two axes
  const int a1 = g.dim - 1;

  SegregatedField u;
  u.grid = std::move(grid);
  u.components.assign(m, std::vector<double>(g.size(), 0.0));
  u.eigenvalues.assign(m, 0.0);
  u.normalized = false;

  for (int i = 0; i < g.shape[0]; ++i) {
    for (int j = 0; j < g.shape[1]; ++j) {
      for (int k = 0; k < g.shape[2]; ++k) {
        const std::size_t idx = g.index(i, j, k);
        const Vec p = g.node_pos(i, j, k);
        const double px = p[a0] - spec.center[a0];
        const double py = p[a1] - spec.center[a1];
        const double rho = std::hypot(px, py);
        if (rho == 0.0) continue;
        double th = std::atan2(py, px) - spec.rotation;
        const double val = std::pow(rho, alpha) * std::abs(std::cos(0.5 * m * th));
        // sector index: sector j is centered at angle 2*pi*j/m
        int sector = static_cast<int>(std::floor(th * m / (2.0 * pi) + 0.5));
        sector %= m;
        if (sector < 0) sector += m;
        u.components[sector][idx] = val;
      }
    }
  }
  return u;
}

std::vector<double> eval_field(const SegregatedField& u, const Vec& x) {
  const Grid& g = *u.grid;
  if (!g.pos_in_bounds(x)) throw std::out_of_range("evaluation point outside the grid");
  std::vector<double> out(u.ncomp());
  for (int k = 0; k < u.ncomp(); ++k) out[k] = interp_linear(g, u.components[k], x);
  project_to_sigma_inplace(out);
  return out;
}

SegregatedField blowup_rescale(const SegregatedField& u, const Vec& x, double rho,
                               int nodes_per_axis) {
  const Grid& g = *u.grid;
  if (rho < g.min_radius()) throw std::invalid_argument("blowup scale below the resolution floor");
  if (g.dist_to_boundary(x) < rho) throw std::invalid_argument("blowup ball not contained in the domain");

  int n = nodes_per_axis;
  if (n <= 0) {
    n = 2 * static_cast<int>(std::lround(1.1 * rho / g.h)) + 1;
    n = std::clamp(n, 65, 257);
  }
  if (n < 9 || n % 2 == 0) throw std::invalid_argument("blowup grid needs an odd node count of at least 9");

  const double half = 1.1;
  const double hh = 2.0 * half / (n - 1);
  Vec lo{-half, -half, -half}, hi{half, half, half};
  if (g.dim == 2) { lo[2] = 0.0; hi[2] = 0.0; }
  auto out_grid = std::make_shared<Grid>(make_free_grid(g.dim, lo, hi, hh));

  SegregatedField v;
  v.grid = out_grid;
  v.components.assign(u.ncomp(), std::vector<double>(out_grid->size(), 0.0));
  v.eigenvalues.resize(u.ncomp());
  for (int k = 0; k < u.ncomp(); ++k) v.eigenvalues[k] = u.eigenvalues[k] * rho * rho;
  v.normalized = false;

  for (int i = 0; i < out_grid->shape[0]; ++i) {
    for (int j = 0; j < out_grid->shape[1]; ++j) {
      for (int k = 0; k < out_grid->shape[2]; ++k) {
        const Vec y = out_grid->node_pos(i, j, k);
        const Vec p = x + rho * y;
        if (!g.pos_in_bounds(p)) continue;
        const std::vector<double> vals = eval_field(u, p);
        const std::size_t idx = out_grid->index(i, j, k);
        for (int c = 0; c < u.ncomp(); ++c) v.components[c][idx] = vals[c];
      }
    }
  }

  // unit average squared magnitude over the unit ball
  const double vol = (g.dim == 2) ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0;
  const double mass = ball_integral(*out_grid, Vec{0.0, 0.0, 0.0}, 1.0, [&](const Vec& p) {
    double s = 0.0;
    for (const auto& c : v.components) {
      const double val = interp_linear(*out_grid, c, p);
      s += val * val;
    }
    return s;
  });
  const double scale = std::sqrt(mass / vol);
  if (scale > 0.0) {
    for (auto& c : v.components)
      for (double& val : c) val /= scale;
  }
  return v;
}

std::vector<double> l2_norms(const SegregatedField& u) {
  const Grid& g = *u.grid;
  const double w = std::pow(g.h, g.dim);
  std::vector<double> out(u.ncomp(), 0.0);
  for (int k = 0; k < u.ncomp(); ++k) {
    double acc = 0.0;
    for (double v : u.components[k]) acc += v * v;
    out[k] = std::sqrt(acc * w);
  }
  return out;
}

int normalize_components(SegregatedField& u) {
  const std::vector<double> norms = l2_norms(u);
  int skipped = 0;
  for (int k = 0; k < u.ncomp(); ++k) {
    if (norms[k] <= 0.0) {
      ++skipped;
      continue;
    }
    for (double& v : u.components[k]) v /= norms[k];
  }
  if (skipped == 0) u.normalized = true;
  return skipped;
}

}  // namespace partlab
