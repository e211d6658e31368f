#include "partlab/mean_flatness.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "partlab/singular_set.hpp"

namespace partlab {

namespace {

struct BallAtoms {
  std::vector<Atom> atoms;
  double mass = 0.0;
};

// strict open-ball inclusion; ties at |p - x| = r stay out
BallAtoms atoms_in_ball(const PointMeasure& mu, const Vec& x, double r) {
  BallAtoms out;
  for (const Atom& a : mu.atoms) {
    if (a.w < 0.0 || !std::isfinite(a.w))
      throw std::invalid_argument("point measure: weights must be finite and nonnegative");
    if (dist(a.p, x) < r) {
      out.atoms.push_back(a);
      out.mass += a.w;
    }
  }
  return out;
}

void check_dim(int dim) {
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("point measure: dimension must be 2 or 3");
}

struct EigenFrame {
  std::array<double, 3> values{0.0, 0.0, 0.0};
  std::array<Vec, 3> vectors{};
};

// descending eigen-decomposition of the dim x dim block; exactly diagonal
// matrices keep axis eigenvectors and their exact diagonal values
EigenFrame moment_eigen(const Mat3& m, int dim) {
  EigenFrame f;
  bool diagonal = true;
  for (int i = 0; i < dim && diagonal; ++i)
    for (int j = 0; j < dim; ++j)
      if (i != j && m[i][j] != 0.0) diagonal = false;

  std::array<std::pair<double, Vec>, 3> pairs;
  if (diagonal) {
    for (int i = 0; i < dim; ++i) {
      Vec v{0.0, 0.0, 0.0};
      v[i] = 1.0;
      pairs[i] = {m[i][i], v};
    }
  } else {
    Eigen::MatrixXd em(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) em(i, j) = m[i][j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(em);
    for (int i = 0; i < dim; ++i) {
      Vec v{0.0, 0.0, 0.0};
      for (int j = 0; j < dim; ++j) v[j] = solver.eigenvectors()(j, i);
      pairs[i] = {solver.eigenvalues()(i), v};
    }
  }
  std::stable_sort(pairs.begin(), pairs.begin() + dim,
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; i < dim; ++i) {
    f.values[i] = std::max(0.0, pairs[i].first);
    Vec v = pairs[i].second;
    // deterministic sign: largest-magnitude entry positive
    int arg = 0;
    for (int d = 1; d < 3; ++d)
      if (std::abs(v[d]) > std::abs(v[arg])) arg = d;
    if (v[arg] < 0.0) v = -1.0 * v;
    f.vectors[i] = v;
  }
  return f;
}

}  // namespace

double PointMeasure::total_mass() const {
  double m = 0.0;
  for (const Atom& a : atoms) m += a.w;
  return m;
}

std::pair<Vec, Mat3> barycenter_moments(const PointMeasure& mu, const Vec& x, double r) {
  check_dim(mu.dim);
  const BallAtoms ball = atoms_in_ball(mu, x, r);
  if (ball.mass <= 0.0)
    throw std::domain_error("barycenter: the open ball carries no mass");

  Vec bary{0.0, 0.0, 0.0};
  for (const Atom& a : ball.atoms) bary = bary + a.w * a.p;
  bary = (1.0 / ball.mass) * bary;

  Mat3 m{};
  for (const Atom& a : ball.atoms) {
    const Vec d = a.p - bary;
    for (int i = 0; i < mu.dim; ++i)
      for (int j = 0; j < mu.dim; ++j) m[i][j] += a.w * d[i] * d[j];
  }
  return {bary, m};
}

FlatnessRecord mean_flatness(const PointMeasure& mu, const Vec& x, double r, int k) {
  check_dim(mu.dim);
  if (k < 0 || k >= mu.dim)
    throw std::invalid_argument("mean flatness: plane dimension must satisfy 0 <= k < dim");
  if (!(r > 0.0)) throw std::invalid_argument("mean flatness: radius must be positive");

  FlatnessRecord rec;
  rec.x = x;
  rec.r = r;
  rec.k = k;

  const BallAtoms ball = atoms_in_ball(mu, x, r);
  rec.mass = ball.mass;
  if (ball.mass <= 0.0) {
    rec.empty = true;
    rec.barycenter = x;
    rec.plane.point = x;
    for (int i = 0; i < k; ++i) {
      Vec v{0.0, 0.0, 0.0};
      v[i] = 1.0;
      rec.plane.basis.push_back(v);
    }
    return rec;
  }

  const auto [bary, moments] = barycenter_moments(mu, x, r);
  rec.barycenter = bary;
  const EigenFrame frame = moment_eigen(moments, mu.dim);
  rec.eigenvalues = frame.values;
  rec.eigenvectors = frame.vectors;

  double tail = 0.0;
  for (int i = k; i < mu.dim; ++i) tail += frame.values[i];
  rec.D = tail / std::pow(r, k + 2);

  rec.plane.point = bary;
  for (int i = 0; i < k; ++i) rec.plane.basis.push_back(frame.vectors[i]);
  return rec;
}

namespace {

double fit_point_value(const std::vector<Atom>& atoms, const Vec& p, int dim) {
  double acc = 0.0;
  for (const Atom& a : atoms) {
    double d2 = 0.0;
    for (int i = 0; i < dim; ++i) d2 += (a.p[i] - p[i]) * (a.p[i] - p[i]);
    acc += a.w * d2;
  }
  return acc;
}

double brute_point_fit(const std::vector<Atom>& atoms, int dim) {
  Vec lo = atoms[0].p, hi = atoms[0].p;
  for (const Atom& a : atoms)
    for (int i = 0; i < dim; ++i) {
      lo[i] = std::min(lo[i], a.p[i]);
      hi[i] = std::max(hi[i], a.p[i]);
    }
  Vec center = 0.5 * (lo + hi);
  double span = 1e-6;
  for (int i = 0; i < dim; ++i) span = std::max(span, 0.6 * (hi[i] - lo[i]));

  double best = fit_point_value(atoms, center, dim);
  for (int round = 0; round < 30; ++round) {
    Vec round_best = center;
    const int m = 5;
    for (int i = -m; i <= m; ++i)
      for (int j = -m; j <= m; ++j)
        for (int k = (dim == 3 ? -m : 0); k <= (dim == 3 ? m : 0); ++k) {
          Vec p = center;
          p[0] += i * span / m;
          p[1] += j * span / m;
          if (dim == 3) p[2] += k * span / m;
          const double v = fit_point_value(atoms, p, dim);
          if (v < best) {
            best = v;
            round_best = p;
          }
        }
    center = round_best;
    span *= 0.45;
  }
  return best;
}

// squared deviation from the best line with direction d (the offset least
// squares puts the line through the weighted barycenter)
double line_value(const std::vector<Atom>& atoms, const Vec& bary, const Vec& d, int dim) {
  double acc = 0.0;
  for (const Atom& a : atoms) {
    double r2 = 0.0, proj = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double t = a.p[i] - bary[i];
      r2 += t * t;
      proj += t * d[i];
    }
    acc += a.w * (r2 - proj * proj);
  }
  return std::max(0.0, acc);
}

double brute_line_fit(const std::vector<Atom>& atoms, double mass, int dim) {
  Vec bary{0.0, 0.0, 0.0};
  for (const Atom& a : atoms) bary = bary + a.w * a.p;
  bary = (1.0 / mass) * bary;

  const double pi = 3.14159265358979323846;
  if (dim == 2) {
    double best = std::numeric_limits<double>::max(), best_th = 0.0;
    double step = pi / 720.0;
    for (int i = 0; i < 720; ++i) {
      const double th = i * step;
      const double v = line_value(atoms, bary, vec2(std::cos(th), std::sin(th)), 2);
      if (v < best) {
        best = v;
        best_th = th;
      }
    }
    for (int round = 0; round < 9; ++round) {
      const double lo = best_th - 1.5 * step;
      step /= 7.0;
      for (int i = 0; i <= 21; ++i) {
        const double th = lo + i * step;
        const double v = line_value(atoms, bary, vec2(std::cos(th), std::sin(th)), 2);
        if (v < best) {
          best = v;
          best_th = th;
        }
      }
    }
    return best;
  }

  auto dir = [](double th, double ph) {
    return vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
  };
  double best = std::numeric_limits<double>::max(), best_th = 0.0, best_ph = 0.0;
  double sth = pi / 48.0, sph = 2.0 * pi / 96.0;
  for (int i = 0; i <= 48; ++i)
    for (int j = 0; j < 96; ++j) {
      const double v = line_value(atoms, bary, dir(i * sth, j * sph), 3);
      if (v < best) {
        best = v;
        best_th = i * sth;
        best_ph = j * sph;
      }
    }
  for (int round = 0; round < 9; ++round) {
    const double th_lo = best_th - 1.5 * sth, ph_lo = best_ph - 1.5 * sph;
    sth /= 6.0;
    sph /= 6.0;
    for (int i = 0; i <= 18; ++i)
      for (int j = 0; j <= 18; ++j) {
        const double v = line_value(atoms, bary, dir(th_lo + i * sth, ph_lo + j * sph), 3);
        if (v < best) {
          best = v;
          best_th = th_lo + i * sth;
          best_ph = ph_lo + j * sph;
        }
      }
  }
  return best;
}

}  // namespace

double brute_force_flatness(const PointMeasure& mu, const Vec& x, double r, int k) {
  check_dim(mu.dim);
  if (k != 0 && k != 1) throw std::invalid_argument("brute force: k must be 0 or 1");
  if (k >= mu.dim) throw std::invalid_argument("brute force: k must be below the dimension");

  const BallAtoms ball = atoms_in_ball(mu, x, r);
  if (ball.atoms.size() > 30)
    throw std::invalid_argument("brute force: instance too large (more than 30 atoms)");
  if (ball.mass <= 0.0) return 0.0;

  const double raw = k == 0 ? brute_point_fit(ball.atoms, mu.dim)
                            : brute_line_fit(ball.atoms, ball.mass, mu.dim);
  return raw / std::pow(r, k + 2);
}

SpanCheckResult rho_span_check(const std::vector<Vec>& points, const Vec& x, double r,
                               double rho, int dim, int k) {
  check_dim(dim);
  if (points.empty()) throw std::invalid_argument("span check: needs at least one point");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("span check: rho must be in (0,1)");
  if (k < 0) k = dim - 2;
  if (k > dim - 1) throw std::invalid_argument("span check: plane dimension too large");
  for (const Vec& p : points)
    if (dist(p, x) > r * (1.0 + 1e-9))
      throw std::invalid_argument("span check: points must lie in the ball");

  SpanCheckResult res;
  const double gate = rho * r;
  std::vector<Vec> basis;  // orthonormal directions of the affine span
  for (const Vec& p : points) {
    if (res.chosen.empty()) {
      res.chosen.push_back(p);
    } else {
      Vec resid = p - res.chosen.front();
      for (const Vec& b : basis) resid = resid - dot(resid, b) * b;
      const double d = norm(resid);
      if (d < gate) continue;
      basis.push_back((1.0 / d) * resid);
      res.chosen.push_back(p);
    }
    if (static_cast<int>(res.chosen.size()) == k + 1) break;
  }

  if (static_cast<int>(res.chosen.size()) == k + 1) {
    res.spans = true;
    res.plane.point = res.chosen.front();
    res.plane.basis = basis;
    return res;
  }

  // fallback: best (k-1)-plane from the unweighted moment frame
  PointMeasure cloud;
  cloud.dim = dim;
  for (const Vec& p : points) cloud.atoms.push_back({p, 1.0});
  const auto [bary, moments] = barycenter_moments(cloud, x, r * (1.0 + 1e-6));
  const EigenFrame frame = moment_eigen(moments, dim);
  res.plane.point = bary;
  for (int i = 0; i < k - 1; ++i) res.plane.basis.push_back(frame.vectors[i]);
  res.fallback_max_dist = 0.0;
  for (const Vec& p : points)
    res.fallback_max_dist = std::max(res.fallback_max_dist, dist_to_plane(p, res.plane));
  res.fallback_contains = res.fallback_max_dist <= gate;
  return res;
}

SpineTubeReport spine_tube_check(const SegregatedField& u, const Plane& spine,
                                 const BallRegion& region, double rho_bar) {
  if (rho_bar < 0.0) throw std::invalid_argument("spine tube: rho_bar must be nonnegative");
  const double h = u.grid->h;
  SpineTubeReport rep;
  for (const Vec& cand : junction_candidates(u, 3.0 * h)) {
    if (dist(cand, region.center) > region.radius) continue;
    ++rep.samples;
    const double d = dist_to_plane(cand, spine);
    rep.worst_dist = std::max(rep.worst_dist, d);
    if (d > rho_bar) {
      ++rep.violators;
      rep.violating_points.push_back(cand);
    }
  }
  return rep;
}

}  // namespace partlab
