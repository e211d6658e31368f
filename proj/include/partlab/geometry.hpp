// Small fixed-dimension vector/plane helpers shared across the library.
// Points live in at most three dimensions; 2D data keeps the third
// coordinate at zero so the same storage works everywhere.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace partlab {

using Vec = std::array<double, 3>;

inline Vec vec2(double x, double y) { return {x, y, 0.0}; }
inline Vec vec3(double x, double y, double z) { return {x, y, z}; }

inline Vec operator+(const Vec& a, const Vec& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec operator-(const Vec& a, const Vec& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec operator*(double s, const Vec& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
inline double dot(const Vec& a, const Vec& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }
inline double dist(const Vec& a, const Vec& b) { return norm(a - b); }

// Affine subspace given by a base point and an orthonormal basis of its
// direction space. dim == 0 is a single point.
struct Plane {
  Vec point{0.0, 0.0, 0.0};
  std::vector<Vec> basis;

  int dim() const { return static_cast<int>(basis.size()); }
};

inline double dist_to_plane(const Vec& y, const Plane& L) {
  Vec d = y - L.point;
  for (const Vec& b : L.basis) d = d - dot(d, b) * b;
  return norm(d);
}

struct BallRegion {
  Vec center{0.0, 0.0, 0.0};
  double radius = 0.0;

  bool contains(const Vec& p) const { return dist(p, center) <= radius; }
};

}  // namespace partlab
