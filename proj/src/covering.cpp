#include "partlab/covering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "partlab/frequency.hpp"

namespace partlab {

namespace {

constexpr double kFar = 1e18;  // squared-distance sentinel for seedless rows

// lower-envelope distance transform along one axis (squared distances in
// index units); f holds the input row, d receives the transformed row
void edt_row(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
             std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -kFar;
  z[1] = kFar;
  for (int q = 1; q < n; ++q) {
    double s = 0.0;
    while (true) {
      s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * (q - v[k]));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kFar;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

MinkowskiCurve tube_volume_curve(const std::vector<Vec>& S, const Grid& K,
                                 const std::vector<double>& rhos) {
  if (S.empty()) throw std::invalid_argument("tube volume: point set is empty");
  if (rhos.empty()) throw std::invalid_argument("tube volume: no radii given");
  for (double rho : rhos)
    if (rho < K.h - 1e-12)
      throw std::invalid_argument("tube volume: radii must be at least the cell size");

  MinkowskiCurve curve;
  curve.rhos = rhos;
  std::sort(curve.rhos.begin(), curve.rhos.end());

  int cells[3] = {1, 1, 1};
  for (int d = 0; d < K.dim; ++d) cells[d] = K.shape[d] - 1;
  const std::size_t ncells =
      static_cast<std::size_t>(cells[0]) * cells[1] * cells[2];
  auto cell_center = [&](int i, int j, int k) {
    Vec p = K.node_pos(i, j, K.dim == 3 ? k : 0);
    for (int d = 0; d < K.dim; ++d) p[d] += 0.5 * K.h;
    return p;
  };

  // squared distance from every cell center to S, in physical units
  std::vector<double> dist2(ncells, kFar);
  if (S.size() <= 64) {
    std::size_t idx = 0;
    for (int i = 0; i < cells[0]; ++i)
      for (int j = 0; j < cells[1]; ++j)
        for (int k = 0; k < cells[2]; ++k, ++idx) {
          const Vec p = cell_center(i, j, k);
          double best = kFar;
          for (const Vec& s : S) {
            double d2 = 0.0;
            for (int d = 0; d < K.dim; ++d) d2 += (p[d] - s[d]) * (p[d] - s[d]);
            best = std::min(best, d2);
          }
          dist2[idx] = best;
        }
  } else {
    // seed the containing cells, then axis-by-axis transforms
    std::fill(dist2.begin(), dist2.end(), kFar);
    for (const Vec& s : S) {
      int ci[3] = {0, 0, 0};
      bool inside = true;
      for (int d = 0; d < K.dim; ++d) {
        ci[d] = static_cast<int>(std::floor((s[d] - K.origin[d]) / K.h));
        if (ci[d] < 0 || ci[d] >= cells[d]) inside = false;
      }
      if (inside)
        dist2[(static_cast<std::size_t>(ci[0]) * cells[1] + ci[1]) * cells[2] + ci[2]] = 0.0;
    }
    const int nmax = *std::max_element(cells, cells + 3);
    std::vector<double> row(nmax), out(nmax), z(nmax + 1);
    std::vector<int> v(nmax);
    const std::size_t stride[3] = {static_cast<std::size_t>(cells[1]) * cells[2],
                                   static_cast<std::size_t>(cells[2]), 1};
    for (int axis = 0; axis < K.dim; ++axis) {
      const int len = cells[axis];
      const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
      for (int b = 0; b < cells[a1]; ++b)
        for (int c = 0; c < cells[a2]; ++c) {
          const std::size_t base = b * stride[a1] + c * stride[a2];
          for (int q = 0; q < len; ++q) row[q] = dist2[base + q * stride[axis]];
          row.resize(len);
          out.resize(len);
          edt_row(row, out, v, z);
          for (int q = 0; q < len; ++q) dist2[base + q * stride[axis]] = out[q];
          row.resize(nmax);
          out.resize(nmax);
        }
    }
    // index units -> physical units
    for (double& d2 : dist2) d2 *= K.h * K.h;
  }

  // restrict to cells whose center lies in the domain region
  std::vector<char> in_domain(ncells, 0);
  {
    std::size_t idx = 0;
    for (int i = 0; i < cells[0]; ++i)
      for (int j = 0; j < cells[1]; ++j)
        for (int k = 0; k < cells[2]; ++k, ++idx)
          in_domain[idx] = K.dist_to_boundary(cell_center(i, j, k)) >= 0.0 ? 1 : 0;
  }

  const double cell_vol = std::pow(K.h, K.dim);
  curve.volumes.assign(curve.rhos.size(), 0.0);
  for (std::size_t ri = 0; ri < curve.rhos.size(); ++ri) {
    const double r2 = curve.rhos[ri] * curve.rhos[ri] * (1.0 + 1e-12);
    std::size_t count = 0;
    for (std::size_t idx = 0; idx < ncells; ++idx)
      if (in_domain[idx] && dist2[idx] <= r2) ++count;
    curve.volumes[ri] = count * cell_vol;
  }

  int positive = 0;
  for (double vol : curve.volumes)
    if (vol > 0.0) ++positive;
  if (positive >= 5) {
    const SlopeFit fit = fit_scaling_exponent(curve);
    curve.slope = fit.slope;
    curve.intercept = fit.intercept;
    curve.confidence = fit.confidence;
    curve.fitted = true;
  }
  return curve;
}

SlopeFit fit_scaling_exponent(const MinkowskiCurve& curve) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < curve.rhos.size() && i < curve.volumes.size(); ++i)
    if (curve.volumes[i] > 0.0) {
      xs.push_back(std::log(curve.rhos[i]));
      ys.push_back(std::log(curve.volumes[i]));
    }
  if (xs.size() < 5)
    throw std::invalid_argument("scaling fit: needs at least 5 positive-volume samples");

  const std::size_t m = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 1e-24) throw std::invalid_argument("scaling fit: degenerate radii");

  SlopeFit fit;
  fit.samples = static_cast<int>(m);
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double p = fit.intercept + fit.slope * xs[i];
    ss_res += (ys[i] - p) * (ys[i] - p);
  }
  fit.confidence = m > 2 ? std::sqrt(ss_res / (m - 2) / sxx) : 0.0;
  return fit;
}

Covering inductive_cover(const SegregatedField& u, const std::vector<Vec>& D, double r,
                         double s, double delta, double A, int max_balls) {
  if (!(s > 0.0) || s >= r)
    throw std::invalid_argument("inductive cover: need 0 < s < r");
  if (!(delta > 0.0)) throw std::invalid_argument("inductive cover: delta must be positive");
  if (max_balls < 1) throw std::invalid_argument("inductive cover: ball budget must be positive");

  const Grid& g = *u.grid;
  const double c = 3.0 + A + A * A;
  Covering cov;
  cov.delta = delta;
  cov.c_exponent = c;
  if (D.empty()) {
    cov.vitali = true;
    cov.covers_input = true;
    return cov;
  }

  FrequencyAnalyzer an(u);
  auto freq_at = [&](const Vec& p, double rad) -> std::optional<double> {
    if (rad < 4.0 * g.h - 1e-12) return std::nullopt;
    if (!g.pos_in_bounds(p) || rad > g.dist_to_boundary(p) - 2.0 * g.h + 1e-12)
      return std::nullopt;
    const FrequencyRecord rec = an.smoothed_at(p, rad, c);
    if (rec.hphi_zero) return std::nullopt;
    return rec.IphiA;
  };

  // the frequency bound is anchored once, at the input radius
  for (const Vec& p : D)
    if (const auto f = freq_at(p, r)) {
      cov.U = cov.U_valid ? std::max(cov.U, *f) : *f;
      cov.U_valid = true;
    }
  cov.dichotomy_degenerate = !cov.U_valid;

  std::vector<Vec> active = D;
  double rad = r;
  int gen = 0;
  while (!active.empty()) {
    if (static_cast<int>(cov.balls.size()) >= max_balls) {
      cov.budget_exceeded = true;
      break;
    }
    // greedy maximal 2 rad / 5 separated centers, in input order
    std::vector<std::size_t> centers;
    for (std::size_t i = 0; i < active.size(); ++i) {
      bool separated = true;
      for (const std::size_t cidx : centers)
        if (dist(active[i], active[cidx]) <= 2.0 * rad / 5.0) {
          separated = false;
          break;
        }
      if (separated) centers.push_back(i);
    }

    std::vector<char> removed(active.size(), 0);
    bool budget_hit = false;
    for (const std::size_t cidx : centers) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < active.size(); ++i)
        if (dist(active[i], active[cidx]) <= rad * (1.0 + 1e-12)) members.push_back(i);

      CoverBall ball;
      ball.center = active[cidx];
      ball.radius = rad;
      ball.generation = gen;
      ball.terminal_scale = rad <= s * (1.0 + 1e-12);
      if (!ball.terminal_scale && cov.U_valid) {
        bool all_evaluated = true;
        double sup = -std::numeric_limits<double>::max();
        for (const std::size_t mi : members) {
          const auto f = freq_at(active[mi], rad);
          if (!f) {
            all_evaluated = false;
            break;
          }
          sup = std::max(sup, *f);
        }
        if (all_evaluated) {
          ball.sup_freq = sup;
          ball.sup_valid = true;
          if (sup <= cov.U - delta) ball.frequency_dropped = true;
        }
      }
      if (ball.terminal_scale || ball.frequency_dropped) {
        if (static_cast<int>(cov.balls.size()) >= max_balls) {
          budget_hit = true;
          break;
        }
        cov.balls.push_back(ball);
        for (const std::size_t mi : members) removed[mi] = 1;
      }
    }
    if (budget_hit) {
      cov.budget_exceeded = true;
      break;
    }

    std::vector<Vec> next;
    for (std::size_t i = 0; i < active.size(); ++i)
      if (!removed[i]) next.push_back(active[i]);
    active.swap(next);
    rad *= 0.5;
    ++gen;
  }
  cov.generations = gen;

  for (const CoverBall& b : cov.balls)
    cov.packing_sum += std::pow(b.radius, g.dim - 2);

  cov.vitali = true;
  for (std::size_t i = 0; i < cov.balls.size() && cov.vitali; ++i)
    for (std::size_t j = i + 1; j < cov.balls.size(); ++j)
      if (dist(cov.balls[i].center, cov.balls[j].center) <
          (cov.balls[i].radius + cov.balls[j].radius) / 5.0 - 1e-12) {
        cov.vitali = false;
        break;
      }

  cov.covers_input = true;
  for (const Vec& p : D) {
    bool inside = false;
    for (const CoverBall& b : cov.balls)
      if (dist(p, b.center) <= b.radius * (1.0 + 1e-12)) {
        inside = true;
        break;
      }
    if (!inside) {
      cov.covers_input = false;
      break;
    }
  }
  return cov;
}

double reifenberg_integral(const PointMeasure& mu, const Vec& x, double t, int k, int nodes) {
  if (k != 0 && k != 1) throw std::invalid_argument("reifenberg integral: k must be 0 or 1");
  if (!(t > 0.0)) throw std::invalid_argument("reifenberg integral: t must be positive");
  if (nodes < 2) throw std::invalid_argument("reifenberg integral: needs at least 2 nodes");
  if (mu.atoms.empty()) return 0.0;

  // truncation scale: below a quarter of the atom separation every small
  // ball holds at most one atom and the flatness vanishes
  double sep = std::numeric_limits<double>::max();
  for (std::size_t i = 0; i < mu.atoms.size(); ++i)
    for (std::size_t j = i + 1; j < mu.atoms.size(); ++j) {
      const double d = dist(mu.atoms[i].p, mu.atoms[j].p);
      if (d > 0.0) sep = std::min(sep, d);
    }
  if (sep == std::numeric_limits<double>::max()) return 0.0;  // one distinct position
  const double s_min = sep / 4.0;
  if (s_min >= t) return 0.0;

  const double dlog = std::log(t / s_min) / (nodes - 1);
  std::vector<double> scales(nodes);
  for (int i = 0; i < nodes; ++i) scales[i] = s_min * std::exp(i * dlog);

  double total = 0.0;
  for (const Atom& a : mu.atoms) {
    if (!(dist(a.p, x) < t) || a.w <= 0.0) continue;
    double inner = 0.0;
    for (int i = 0; i < nodes; ++i) {
      const double f = mean_flatness(mu, a.p, scales[i], k).D;
      inner += (i == 0 || i == nodes - 1) ? 0.5 * f : f;
    }
    total += a.w * inner * dlog;
  }
  return total;
}

JonesReport jones_bound_report(const SegregatedField& u, const PointMeasure& mu, const Vec& x,
                               double r, double A) {
  const Grid& g = *u.grid;
  if (mu.dim != g.dim)
    throw std::invalid_argument("flatness bound: measure and field dimensions differ");
  if (r < 4.0 * g.h - 1e-12)
    throw std::domain_error("flatness bound: radius below the 4h quadrature floor");

  JonesReport rep;
  rep.c_exponent = 3.0 + A + A * A;
  const int k = g.dim - 2;
  rep.lhs = mean_flatness(mu, x, r, k).D;

  FrequencyAnalyzer an(u);
  double sum = 0.0;
  for (const Atom& a : mu.atoms) {
    if (!(dist(a.p, x) < r)) continue;
    const double room = g.pos_in_bounds(a.p) ? g.dist_to_boundary(a.p) - 2.0 * g.h : -1.0;
    if (32.0 * r > room) {
      ++rep.atoms_skipped;
      continue;
    }
    const double w = std::max(0.0, an.pinching(a.p, r, 32.0 * r, rep.c_exponent));
    sum += a.w * w;
    ++rep.atoms_used;
  }
  rep.rhs = std::pow(r, 2.0 - g.dim) * sum;

  const double floor_val = 1e-14;
  if (rep.rhs > floor_val) {
    rep.ratio = rep.lhs / rep.rhs;
    rep.ratio_defined = true;
  } else if (rep.lhs <= floor_val) {
    rep.degenerate = true;
  }
  return rep;
}

}  // namespace partlab
