#include "partlab/singular_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace partlab {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// distance from p to the axis-aligned box [lo, hi]
double box_distance(const Vec& p, const Vec& lo, const Vec& hi, int dim) {
  double acc = 0.0;
  for (int d = 0; d < dim; ++d) {
    double t = 0.0;
    if (p[d] < lo[d]) t = lo[d] - p[d];
    else if (p[d] > hi[d]) t = p[d] - hi[d];
    acc += t * t;
  }
  return std::sqrt(acc);
}

double field_sq_at(const SegregatedField& u, const Vec& p) {
  const std::vector<double> vals = eval_field(u, p);
  double acc = 0.0;
  for (double v : vals) acc += v * v;
  return acc;
}

}  // namespace

const char* point_class_name(PointClass c) {
  return c == PointClass::Junction ? "junction" : "wall";
}

std::vector<InterfaceCell> extract_interface(const SegregatedField& u) {
  const Grid& g = *u.grid;
  std::vector<InterfaceCell> out;
  const int kmax = g.dim == 3 ? g.shape[2] - 1 : 1;
  std::vector<int> labels;
  for (int i = 0; i + 1 < g.shape[0]; ++i)
    for (int j = 0; j + 1 < g.shape[1]; ++j)
      for (int k = 0; k < kmax; ++k) {
        labels.clear();
        bool unlabeled = false;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            for (int c = 0; c < (g.dim == 3 ? 2 : 1); ++c) {
              const int lab = u.label_at(g.index(i + a, j + b, g.dim == 3 ? k + c : 0));
              if (lab == 0) unlabeled = true;
              else labels.push_back(lab);
            }
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
        if (labels.size() < 2) continue;
        InterfaceCell cell;
        cell.cell = {i, j, k};
        const Vec corner = g.node_pos(i, j, k);
        cell.center = corner;
        for (int d = 0; d < g.dim; ++d) cell.center[d] += 0.5 * g.h;
        cell.labels = labels;
        cell.has_unlabeled = unlabeled;
        out.push_back(std::move(cell));
      }
  return out;
}

std::vector<int> labels_near(const SegregatedField& u, const Vec& x, double r) {
  const Grid& g = *u.grid;
  std::set<int> found;
  int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  for (int d = 0; d < g.dim; ++d) {
    lo[d] = std::max(0, static_cast<int>(std::ceil((x[d] - r - g.origin[d]) / g.h)));
    hi[d] = std::min(g.shape[d] - 1, static_cast<int>(std::floor((x[d] + r - g.origin[d]) / g.h)));
  }
  for (int i = lo[0]; i <= hi[0]; ++i)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int k = lo[2]; k <= hi[2]; ++k) {
        const Vec p = g.node_pos(i, j, g.dim == 3 ? k : 0);
        if (dist(p, x) > r) continue;
        const int lab = u.label_at(g.index(i, j, g.dim == 3 ? k : 0));
        if (lab != 0) found.insert(lab);
      }
  return std::vector<int>(found.begin(), found.end());
}

std::vector<Vec> junction_candidates(const SegregatedField& u, double r) {
  const Grid& g = *u.grid;
  if (r < 2.0 * g.h - 1e-12)
    throw std::invalid_argument("junction candidates: radius must be at least 2h");

  struct Hit {
    Vec p;
    double w;
  };
  std::vector<Hit> hits;
  for (const InterfaceCell& cell : extract_interface(u)) {
    const std::vector<int> labs = labels_near(u, cell.center, r);
    if (labs.size() >= 3) hits.push_back({cell.center, static_cast<double>(labs.size())});
  }

  const double cluster_r = 3.0 * g.h;
  std::vector<char> used(hits.size(), 0);
  std::vector<Vec> reps;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (used[i]) continue;
    Vec acc{0.0, 0.0, 0.0};
    double wsum = 0.0;
    for (std::size_t j = i; j < hits.size(); ++j) {
      if (used[j] || dist(hits[j].p, hits[i].p) > cluster_r) continue;
      used[j] = 1;
      acc = acc + hits[j].w * hits[j].p;
      wsum += hits[j].w;
    }
    reps.push_back((1.0 / wsum) * acc);
  }
  return reps;
}

Vec snap_to_zero(const SegregatedField& u, const Vec& x, double search_radius) {
  const Grid& g = *u.grid;
  Vec best = x;
  double best_val = std::numeric_limits<double>::max();
  if (g.pos_in_bounds(x)) best_val = field_sq_at(u, x);

  double span = search_radius;
  for (double step = g.h / 4.0; step >= g.h / 64.0 - 1e-15; step /= 4.0) {
    const int m = std::max(1, static_cast<int>(std::ceil(span / step)));
    Vec center = best;
    for (int i = -m; i <= m; ++i)
      for (int j = -m; j <= m; ++j)
        for (int k = (g.dim == 3 ? -m : 0); k <= (g.dim == 3 ? m : 0); ++k) {
          Vec p = center;
          p[0] += i * step;
          p[1] += j * step;
          if (g.dim == 3) p[2] += k * step;
          if (!g.pos_in_bounds(p) || g.dist_to_boundary(p) < g.h) continue;
          const double v = field_sq_at(u, p);
          if (v < best_val - 1e-18 ||
              (v < best_val + 1e-18 && dist(p, x) < dist(best, x) - 1e-15)) {
            best_val = v;
            best = p;
          }
        }
    span = 2.0 * step;
  }
  return best;
}

double vanishing_order(const FrequencyAnalyzer& an, const Vec& x, double lambda_hat) {
  const SegregatedField& u = an.field();
  const Grid& g = *u.grid;
  const double margin = g.dist_to_boundary(x);
  if (margin < 16.0 * g.h - 1e-12)
    throw std::domain_error("vanishing order: point needs a 16h margin from the boundary");

  if (lambda_hat < 0.0) {
    if (u.lambda_max() <= 0.0) {
      lambda_hat = 0.0;
    } else {
      std::vector<double> sweep;
      for (double f : {4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 14.0}) {
        const double r = f * g.h;
        if (r <= margin - 2.0 * g.h + 1e-12) sweep.push_back(r);
      }
      const FrequencyProfile prof = frequency_profile(an, x, sweep);
      lambda_hat = prof.lambda_hat_I;
    }
  }

  std::vector<double> r2, v;
  for (double f : {4.0, 6.0, 8.0}) {
    const double r = f * g.h;
    const FrequencyRecord rec = an.classical_at(x, r);
    if (rec.h_zero || !(rec.I > 0.0) || !std::isfinite(rec.I)) continue;
    r2.push_back(r * r);
    v.push_back(std::exp(lambda_hat * r * r) * rec.I);
  }
  if (v.empty()) return kNan;
  if (v.size() == 1) return v[0];

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    mx += r2[i];
    my += v[i];
  }
  mx /= v.size();
  my /= v.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    sxx += (r2[i] - mx) * (r2[i] - mx);
    sxy += (r2[i] - mx) * (v[i] - my);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return my - slope * mx;
}

double vanishing_order(const SegregatedField& u, const Vec& x, double lambda_hat) {
  FrequencyAnalyzer an(u);
  return vanishing_order(an, x, lambda_hat);
}

double junction_order_threshold(int dim) {
  if (dim < 2 || dim > 3)
    throw std::invalid_argument("order threshold: only dimensions 2 and 3 are supported");
  const double delta = 0.5;
  return 1.0 + delta / 2.0;
}

SingularSample classify_point(const FrequencyAnalyzer& an, const Vec& x, double lambda_hat) {
  const SegregatedField& u = an.field();
  const Grid& g = *u.grid;
  SingularSample s;
  s.location = x;
  s.detection_radius = 8.0 * g.h;
  s.labels = labels_near(u, x, s.detection_radius);
  s.order = vanishing_order(an, x, lambda_hat);
  s.order_flagged = !std::isfinite(s.order);
  s.order_signal = !s.order_flagged && s.order >= junction_order_threshold(g.dim);
  s.label_signal = s.labels.size() >= 3;
  s.classification =
      (s.order_signal || s.label_signal) ? PointClass::Junction : PointClass::Wall;
  return s;
}

SingularSample classify_point(const SegregatedField& u, const Vec& x, double lambda_hat) {
  FrequencyAnalyzer an(u);
  return classify_point(an, x, lambda_hat);
}

ClearingReport clearing_check(const SegregatedField& u, const Vec& x, double r, double eps) {
  const Grid& g = *u.grid;
  ClearingReport rep;
  rep.eps = eps;
  rep.iphi = smoothed_at(u, x, r).Iphi;
  rep.triggered = rep.iphi < eps;

  double nearest = std::numeric_limits<double>::max();
  for (const InterfaceCell& cell : extract_interface(u)) {
    Vec lo = cell.center, hi = cell.center;
    for (int d = 0; d < g.dim; ++d) {
      lo[d] -= 0.5 * g.h;
      hi[d] += 0.5 * g.h;
    }
    nearest = std::min(nearest, box_distance(x, lo, hi, g.dim));
  }
  rep.nearest_interface_dist = nearest == std::numeric_limits<double>::max() ? -1.0 : nearest;
  rep.interface_clear = rep.nearest_interface_dist < 0.0 || rep.nearest_interface_dist > r / 16.0;
  rep.holds = !rep.triggered || rep.interface_clear;
  return rep;
}

}  // namespace partlab
