#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "partlab/field_core.hpp"
#include "partlab/frequency.hpp"
#include "partlab/grid.hpp"
#include "partlab/singular_set.hpp"

using namespace partlab;

namespace {

constexpr double kPi = std::numbers::pi;

SegregatedField oracle2d(int m, double h, double rot = 0.2) {
  auto g = std::make_shared<Grid>(make_free_grid(2, vec2(-1, -1), vec2(1, 1), h));
  OracleSpec spec;
  spec.m = m;
  spec.rotation = rot;
  return make_oracle(g, spec);
}

Vec on_ray(double angle, double dist) { return vec2(dist * std::cos(angle), dist * std::sin(angle)); }

}  // namespace

TEST_SUITE("singular_set") {

TEST_CASE("two sectors give a wall but no junction candidates") {
  const double h = 1.0 / 64.0;
  const double rot = 0.3;
  const SegregatedField u = oracle2d(2, h, rot);

  const auto cells = extract_interface(u);
  CHECK(cells.size() >= 100);
  const Vec normal = vec2(std::cos(rot), std::sin(rot));
  for (const InterfaceCell& cell : cells) {
    CHECK(std::abs(dot(cell.center, normal)) <= 2.0 * h);
    REQUIRE(cell.labels.size() == 2);
    CHECK(cell.labels[0] == 1);
    CHECK(cell.labels[1] == 2);
  }
  CHECK(junction_candidates(u, 3.0 * h).empty());
}

TEST_CASE("three sectors give junction candidates at the vertex only") {
  const double h = 1.0 / 64.0;
  const SegregatedField u = oracle2d(3, h);

  const auto reps = junction_candidates(u, 3.0 * h);
  REQUIRE(!reps.empty());
  Vec centroid{0.0, 0.0, 0.0};
  for (const Vec& p : reps) {
    CHECK(norm(p) <= 6.0 * h);
    centroid = centroid + (1.0 / reps.size()) * p;
  }
  // the candidate cloud straddles the vertex; its centroid snaps onto it
  CHECK(norm(centroid) <= 3.0 * h);
  const Vec snapped = snap_to_zero(u, centroid, 2.0 * h);
  CHECK(norm(snapped) <= 1.0 * h);
  CHECK_THROWS_AS((void)junction_candidates(u, 1.0 * h), std::invalid_argument);
}

TEST_CASE("orders separate junctions from walls across degrees") {
  const double h = 1.0 / 64.0;
  const double rot = 0.2;

  struct Case {
    int m;
    double order;
  };
  for (const Case c : {Case{3, 1.5}, Case{4, 2.0}, Case{5, 2.5}}) {
    const SegregatedField u = oracle2d(c.m, h, rot);
    const FrequencyAnalyzer an(u);
    const SingularSample s = classify_point(an, vec2(0, 0));
    CHECK(s.classification == PointClass::Junction);
    CHECK(s.order == doctest::Approx(c.order).epsilon(0.04));
    CHECK(s.order_signal);
    CHECK(s.label_signal);
    CHECK(static_cast<int>(s.labels.size()) == c.m);
    CHECK(!s.order_flagged);

    // a point well along a wall ray has order one and two nearby labels
    const double wall_angle = rot + kPi / c.m;
    const SingularSample w = classify_point(an, on_ray(wall_angle, 0.5));
    CHECK(w.classification == PointClass::Wall);
    CHECK(w.order == doctest::Approx(1.0).epsilon(0.05));
    CHECK(!w.order_signal);
    CHECK(!w.label_signal);
    CHECK(w.labels.size() == 2);
  }
}

TEST_CASE("the center of a flat interface is still a wall") {
  const SegregatedField u = oracle2d(2, 1.0 / 64.0);
  const SingularSample s = classify_point(u, vec2(0, 0));
  CHECK(s.classification == PointClass::Wall);
  CHECK(s.order == doctest::Approx(1.0).epsilon(0.05));
  CHECK(s.labels.size() == 2);
}

TEST_CASE("threshold sits in the gap between wall and junction orders") {
  CHECK(junction_order_threshold(2) == doctest::Approx(1.25));
  CHECK(junction_order_threshold(3) == doctest::Approx(1.25));
  CHECK_THROWS_AS((void)junction_order_threshold(4), std::invalid_argument);
}

TEST_CASE("single component fields have no interface") {
  auto g = std::make_shared<Grid>(make_free_grid(2, vec2(-1, -1), vec2(1, 1), 1.0 / 16.0));
  SegregatedField u;
  u.grid = g;
  u.components.assign(1, std::vector<double>(g->size(), 1.0));
  u.eigenvalues = {1.0};
  CHECK(extract_interface(u).empty());
  CHECK(junction_candidates(u, 0.2).empty());
}

TEST_CASE("vanishing order needs a boundary margin") {
  const SegregatedField u = oracle2d(3, 1.0 / 64.0);
  CHECK_THROWS_AS((void)vanishing_order(u, vec2(0.9, 0.0)), std::domain_error);
  CHECK_NOTHROW((void)vanishing_order(u, vec2(0.0, 0.0)));
}

TEST_CASE("snapping pulls a jittered candidate onto the zero set") {
  const double h = 1.0 / 64.0;
  const SegregatedField u = oracle2d(3, h);
  const Vec jittered = vec2(0.7 * h, -0.4 * h);
  const Vec snapped = snap_to_zero(u, jittered, 2.0 * h);
  CHECK(norm(snapped) <= h);
}

TEST_CASE("clearing holds deep inside a support and is vacuous on a wall") {
  const double h = 1.0 / 64.0;
  const double rot = 0.2;
  const SegregatedField u = oracle2d(3, h, rot);

  // deep interior: low frequency, and the interface is far away
  const ClearingReport deep = clearing_check(u, on_ray(rot, 0.6), 0.125, 0.2);
  CHECK(deep.iphi < 0.2);
  CHECK(deep.triggered);
  CHECK(deep.interface_clear);
  CHECK(deep.holds);
  CHECK(deep.nearest_interface_dist > 0.125 / 16.0);

  // on a wall: frequency near one, the claim never fires
  const ClearingReport wall = clearing_check(u, on_ray(rot + kPi / 3.0, 0.5), 0.125, 0.5);
  CHECK(wall.iphi > 0.8);
  CHECK(!wall.triggered);
  CHECK(!wall.interface_clear);
  CHECK(wall.holds);
  CHECK(wall.nearest_interface_dist <= h);
}

TEST_CASE("three dimensional spine keeps candidates along the axis") {
  const double h = 1.0 / 24.0;
  auto g = std::make_shared<Grid>(make_free_grid(3, vec3(-1, -1, -1), vec3(1, 1, 1), h));
  OracleSpec spec;
  spec.m = 3;
  spec.rotation = 0.2;
  const SegregatedField u = make_oracle(g, spec);

  // the sector fan lives in the (y, z) plane; the junction line is the x axis
  const auto reps = junction_candidates(u, 3.0 * h);
  CHECK(reps.size() >= 5);
  double x_min = 1.0, x_max = -1.0;
  for (const Vec& p : reps) {
    CHECK(std::hypot(p[1], p[2]) <= 5.5 * h);
    x_min = std::min(x_min, p[0]);
    x_max = std::max(x_max, p[0]);
  }
  CHECK(x_max - x_min >= 1.0);

  const SingularSample s = classify_point(u, vec3(0.1, 0.0, 0.0));
  CHECK(s.classification == PointClass::Junction);
  CHECK(s.order == doctest::Approx(1.5).epsilon(0.05));
}

TEST_CASE("interface cells flag corners without a positive component") {
  auto g = std::make_shared<Grid>(make_free_grid(2, vec2(0, 0), vec2(1, 1), 0.25));
  SegregatedField u;
  u.grid = g;
  u.components.assign(2, std::vector<double>(g->size(), 0.0));
  u.eigenvalues = {0.0, 0.0};
  // one cell with labels 1 and 2 and one dead corner; the labeled nodes all
  // sit on the boundary of the grid so no second cell sees two labels
  u.components[0][g->index(0, 0)] = 1.0;
  u.components[1][g->index(1, 0)] = 1.0;
  u.components[0][g->index(0, 1)] = 0.5;
  const auto cells = extract_interface(u);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].cell == std::array<int, 3>{0, 0, 0});
  CHECK(cells[0].labels == std::vector<int>{1, 2});
  CHECK(cells[0].has_unlabeled);
}

}  // TEST_SUITE
