#include "partlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace partlab {

namespace {

// Distance range from x to the axis-aligned cell [lo, lo+h]^dim.
void cell_dist_range(const Vec& lo, double h, int dim, const Vec& x,
                     double& dmin, double& dmax) {
  double s_min = 0.0, s_max = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double a = lo[d], b = lo[d] + h;
    const double nearest = std::clamp(x[d], a, b) - x[d];
    const double farthest = std::max(std::abs(a - x[d]), std::abs(b - x[d]));
    s_min += nearest * nearest;
    s_max += farthest * farthest;
  }
  dmin = std::sqrt(s_min);
  dmax = std::sqrt(s_max);
}

}  // namespace

void walk_shell(const Grid& g, const Vec& x, double r_lo, double r_hi,
                std::span<const double> split_radii, int sub, bool fine_all,
                const std::function<void(const Vec&, double)>& fn) {
  if (r_hi <= 0.0 || r_hi <= r_lo) return;
  const int dim = g.dim;
  const double h = g.h;

  int c_lo[3] = {0, 0, 0}, c_hi[3] = {0, 0, 0};
  for (int d = 0; d < dim; ++d) {
    c_lo[d] = std::max(0, static_cast<int>(std::floor((x[d] - r_hi - g.origin[d]) / h)));
    c_hi[d] = std::min(g.shape[d] - 2, static_cast<int>(std::floor((x[d] + r_hi - g.origin[d]) / h)));
  }
  if (dim == 2) { c_lo[2] = 0; c_hi[2] = 0; }

  const double cell_vol = std::pow(h, dim);
  const double sub_h = h / sub;
  const double sub_vol = cell_vol / std::pow(sub, dim);

  for (int i = c_lo[0]; i <= c_hi[0]; ++i) {
    for (int j = c_lo[1]; j <= c_hi[1]; ++j) {
      for (int k = c_lo[2]; k <= c_hi[2]; ++k) {
        Vec lo = g.node_pos(i, j, k);
        double dmin, dmax;
        cell_dist_range(lo, h, dim, x, dmin, dmax);
        if (dmin > r_hi || dmax < r_lo) continue;

        bool cut = dmin < r_lo || dmax > r_hi;
        if (!cut) {
          for (double s : split_radii) {
            if (dmin < s && s < dmax) { cut = true; break; }
          }
        }

        if (!cut && !fine_all) {
          Vec c = lo;
          for (int d = 0; d < dim; ++d) c[d] += 0.5 * h;
          fn(c, cell_vol);
          continue;
        }

        const int sk = (dim == 3) ? sub : 1;
        for (int si = 0; si < sub; ++si) {
          for (int sj = 0; sj < sub; ++sj) {
            for (int sq = 0; sq < sk; ++sq) {
              Vec p = lo;
              p[0] += (si + 0.5) * sub_h;
              p[1] += (sj + 0.5) * sub_h;
              if (dim == 3) p[2] += (sq + 0.5) * sub_h;
              const double d = dist(p, x);
              if (d < r_lo || d > r_hi) continue;
              fn(p, sub_vol);
            }
          }
        }
      }
    }
  }
}

double shell_integral(const Grid& g, const Vec& x, double r_lo, double r_hi,
                      std::span<const double> split_radii,
                      const std::function<double(const Vec&)>& f) {
  const bool fine = r_hi / g.h <= 16.0;
  const int sub = fine ? 5 : 3;
  double acc = 0.0;
  walk_shell(g, x, r_lo, r_hi, split_radii, sub, fine,
             [&](const Vec& p, double w) { acc += w * f(p); });
  return acc;
}

double ball_integral(const Grid& g, const Vec& x, double r,
                     const std::function<double(const Vec&)>& f) {
  return shell_integral(g, x, 0.0, r, {}, f);
}

double sphere_integral(const Grid& g, const Vec& x, double r,
                       const std::function<double(const Vec&)>& f) {
  const double pi = std::numbers::pi;
  if (g.dim == 2) {
    const int n = std::max<int>(64, static_cast<int>(std::ceil(8.0 * pi * r / g.h)));
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double th = 2.0 * pi * i / n;
      acc += f({x[0] + r * std::cos(th), x[1] + r * std::sin(th), 0.0});
    }
    return acc * (2.0 * pi * r / n);
  }
  const int npol = std::max<int>(12, static_cast<int>(std::ceil(pi * r / (2.0 * g.h))));
  const int naz = std::max<int>(24, static_cast<int>(std::ceil(4.0 * pi * r / g.h)));
  std::vector<double> cn, cw;
  gauss_legendre(npol, cn, cw);
  double acc = 0.0;
  for (int a = 0; a < npol; ++a) {
    const double c = cn[a];                 // cos(polar angle)
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    double ring = 0.0;
    for (int b = 0; b < naz; ++b) {
      const double th = 2.0 * pi * b / naz;
      ring += f({x[0] + r * s * std::cos(th), x[1] + r * s * std::sin(th), x[2] + r * c});
    }
    acc += cw[a] * ring * (2.0 * pi / naz);
  }
  return acc * r * r;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  const double pi = std::numbers::pi;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

double interp_linear(const Grid& g, std::span<const double> nodal, const Vec& p) {
  int i0[3] = {0, 0, 0};
  double t[3] = {0.0, 0.0, 0.0};
  for (int d = 0; d < g.dim; ++d) {
    double s = (p[d] - g.origin[d]) / g.h;
    s = std::clamp(s, 0.0, static_cast<double>(g.shape[d] - 1));
    i0[d] = std::min(static_cast<int>(s), g.shape[d] - 2);
    if (i0[d] < 0) i0[d] = 0;
    t[d] = s - i0[d];
  }
  if (g.dim == 2) {
    const double v00 = nodal[g.index(i0[0], i0[1])];
    const double v10 = nodal[g.index(i0[0] + 1, i0[1])];
    const double v01 = nodal[g.index(i0[0], i0[1] + 1)];
    const double v11 = nodal[g.index(i0[0] + 1, i0[1] + 1)];
    return (1 - t[0]) * ((1 - t[1]) * v00 + t[1] * v01) + t[0] * ((1 - t[1]) * v10 + t[1] * v11);
  }
  double acc = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        const double w = (a ? t[0] : 1 - t[0]) * (b ? t[1] : 1 - t[1]) * (c ? t[2] : 1 - t[2]);
        acc += w * nodal[g.index(i0[0] + a, i0[1] + b, i0[2] + c)];
      }
  return acc;
}

double interp_quadratic(const Grid& g, std::span<const double> nodal, const Vec& p) {
  int base[3] = {0, 0, 0};
  double w[3][3];
  for (int d = 0; d < g.dim; ++d) {
    if (g.shape[d] < 3) return interp_linear(g, nodal, p);
    double s = (p[d] - g.origin[d]) / g.h;
    s = std::clamp(s, 0.0, static_cast<double>(g.shape[d] - 1));
    int c = static_cast<int>(std::lround(s));
    c = std::clamp(c, 1, g.shape[d] - 2);
    base[d] = c - 1;
    const double t = s - c;  // in [-0.5, 0.5] away from the edges
    w[d][0] = 0.5 * t * (t - 1.0);
    w[d][1] = 1.0 - t * t;
    w[d][2] = 0.5 * t * (t + 1.0);
  }
  if (g.dim == 2) {
    double acc = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        acc += w[0][a] * w[1][b] * nodal[g.index(base[0] + a, base[1] + b)];
    return acc;
  }
  double acc = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        acc += w[0][a] * w[1][b] * w[2][c] * nodal[g.index(base[0] + a, base[1] + b, base[2] + c)];
  return acc;
}

double interp_cubic(const Grid& g, std::span<const double> nodal, const Vec& p) {
  int base[3] = {0, 0, 0};
  double w[3][4];
  for (int d = 0; d < g.dim; ++d) {
    if (g.shape[d] < 4) return interp_quadratic(g, nodal, p);
    double s = (p[d] - g.origin[d]) / g.h;
    s = std::clamp(s, 0.0, static_cast<double>(g.shape[d] - 1));
    int c = std::min(static_cast<int>(s), g.shape[d] - 2);
    c = std::clamp(c, 1, g.shape[d] - 3);
    base[d] = c - 1;
    const double t = s - c;  // nominal range [0, 1] away from the edges
    w[d][0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
    w[d][1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    w[d][2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
    w[d][3] = (t + 1.0) * t * (t - 1.0) / 6.0;
  }
  if (g.dim == 2) {
    double acc = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        acc += w[0][a] * w[1][b] * nodal[g.index(base[0] + a, base[1] + b)];
    return acc;
  }
  double acc = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        acc += w[0][a] * w[1][b] * w[2][c] * nodal[g.index(base[0] + a, base[1] + b, base[2] + c)];
  return acc;
}

std::vector<double> grad_sq_nodal(const SegregatedField& u) {
  const Grid& g = *u.grid;
  const int dim = g.dim;
  const int ncomp = u.ncomp();
  std::vector<double> out(g.size(), 0.0);
  const std::ptrdiff_t stride[3] = {
      static_cast<std::ptrdiff_t>(g.shape[1]) * g.shape[2], g.shape[2], 1};

  // Differencing one component alone degrades to first order wherever the
  // stencil crosses a wall, and those bands dominate small sampling balls. The
  // signed union u_k - sum of the others glues adjacent components into a
  // locally smooth function (gradient magnitudes match across the wall), so
  // full centered stencils stay valid; only junction nodes see several
  // neighbors at once, and those carry vanishing energy weight.
  auto signed_at = [&](std::size_t t, int kstar) {
    double s = 0.0;
    for (int k = 0; k < ncomp; ++k) s += (k == kstar) ? u.components[k][t] : -u.components[k][t];
    return s;
  };

  for (int i = 0; i < g.shape[0]; ++i) {
    for (int j = 0; j < g.shape[1]; ++j) {
      for (int k = 0; k < g.shape[2]; ++k) {
        const std::size_t idx = g.index(i, j, k);
        int kstar = 0;
        double best = u.components[0][idx];
        for (int c = 1; c < ncomp; ++c)
          if (u.components[c][idx] > best) { best = u.components[c][idx]; kstar = c; }
        if (best <= 0.0) {
          // node on the null set: side with the strongest face neighbor
          const int ii0[3] = {i, j, k};
          double nb_best = 0.0;
          for (int d = 0; d < dim; ++d)
            for (int s = -1; s <= 1; s += 2) {
              if (ii0[d] + s < 0 || ii0[d] + s > g.shape[d] - 1) continue;
              const std::size_t t = idx + s * stride[d];
              for (int c = 0; c < ncomp; ++c)
                if (u.components[c][t] > nb_best) { nb_best = u.components[c][t]; kstar = c; }
            }
        }

        double gsq = 0.0;
        const int ii[3] = {i, j, k};
        for (int d = 0; d < dim; ++d) {
          const bool has_m = ii[d] > 0;
          const bool has_p = ii[d] < g.shape[d] - 1;
          double der = 0.0;
          if (has_m && has_p) {
            if (ii[d] > 1 && ii[d] < g.shape[d] - 2) {
              const double um2 = signed_at(idx - 2 * stride[d], kstar);
              const double um = signed_at(idx - stride[d], kstar);
              const double up = signed_at(idx + stride[d], kstar);
              const double up2 = signed_at(idx + 2 * stride[d], kstar);
              der = (um2 - 8.0 * um + 8.0 * up - up2) / (12.0 * g.h);
            } else {
              der = (signed_at(idx + stride[d], kstar) - signed_at(idx - stride[d], kstar)) /
                    (2.0 * g.h);
            }
          } else if (has_p) {
            der = (signed_at(idx + stride[d], kstar) - signed_at(idx, kstar)) / g.h;
          } else if (has_m) {
            der = (signed_at(idx, kstar) - signed_at(idx - stride[d], kstar)) / g.h;
          }
          gsq += der * der;
        }
        out[idx] = gsq;
      }
    }
  }
  return out;
}

std::vector<Vec> grad_centered(const Grid& g, std::span<const double> nodal) {
  std::vector<Vec> out(g.size(), Vec{0.0, 0.0, 0.0});
  const std::ptrdiff_t stride[3] = {
      static_cast<std::ptrdiff_t>(g.shape[1]) * g.shape[2], g.shape[2], 1};
  for (int i = 0; i < g.shape[0]; ++i) {
    for (int j = 0; j < g.shape[1]; ++j) {
      for (int k = 0; k < g.shape[2]; ++k) {
        const std::size_t idx = g.index(i, j, k);
        const int ii[3] = {i, j, k};
        for (int d = 0; d < g.dim; ++d) {
          const bool has_m = ii[d] > 0;
          const bool has_p = ii[d] < g.shape[d] - 1;
          if (has_m && has_p) {
            out[idx][d] = (nodal[idx + stride[d]] - nodal[idx - stride[d]]) / (2.0 * g.h);
          } else if (has_p) {
            out[idx][d] = (nodal[idx + stride[d]] - nodal[idx]) / g.h;
          } else if (has_m) {
            out[idx][d] = (nodal[idx] - nodal[idx - stride[d]]) / g.h;
          }
        }
      }
    }
  }
  return out;
}

Vec interp_gradient(const Grid& g, std::span<const Vec> grads, const Vec& p) {
  // component-wise multilinear interpolation of the vector field
  int i0[3] = {0, 0, 0};
  double t[3] = {0.0, 0.0, 0.0};
  for (int d = 0; d < g.dim; ++d) {
    double s = (p[d] - g.origin[d]) / g.h;
    s = std::clamp(s, 0.0, static_cast<double>(g.shape[d] - 1));
    i0[d] = std::min(static_cast<int>(s), g.shape[d] - 2);
    if (i0[d] < 0) i0[d] = 0;
    t[d] = s - i0[d];
  }
  Vec acc{0.0, 0.0, 0.0};
  const int kmax = (g.dim == 3) ? 2 : 1;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < kmax; ++c) {
        const double w = (a ? t[0] : 1 - t[0]) * (b ? t[1] : 1 - t[1]) *
                         (g.dim == 3 ? (c ? t[2] : 1 - t[2]) : 1.0);
        const Vec& v = grads[g.index(i0[0] + a, i0[1] + b, i0[2] + c)];
        acc = acc + w * v;
      }
  return acc;
}

}  // namespace partlab
