#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <numbers>
#include <vector>

#include "partlab/field_core.hpp"
#include "partlab/field_io.hpp"
#include "partlab/grid.hpp"

using namespace partlab;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<Grid> free_square(double half, double h) {
  return std::make_shared<Grid>(
      make_free_grid(2, vec2(-half, -half), vec2(half, half), h));
}

}  // namespace

TEST_SUITE("field_core") {

TEST_CASE("projection keeps the largest entry and clips the rest") {
  {
    std::vector<double> y{0.4, 0.3};
    auto p = project_to_sigma(y);
    CHECK(p[0] == doctest::Approx(0.4));
    CHECK(p[1] == 0.0);
  }
  {
    std::vector<double> y{-0.2, 0.5};
    auto p = project_to_sigma(y);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == doctest::Approx(0.5));
  }
  {
    // exact tie: lowest index wins
    std::vector<double> y{0.5, 0.5};
    auto p = project_to_sigma(y);
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == 0.0);
  }
  {
    std::vector<double> y{-1.0, -2.0, -0.5};
    auto p = project_to_sigma(y);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 0.0);
    CHECK(p[2] == 0.0);
  }
  {
    std::vector<double> y{0.7};
    auto p = project_to_sigma(y);
    CHECK(p[0] == doctest::Approx(0.7));
  }
}

TEST_CASE("projection is idempotent") {
  std::vector<double> y{0.3, -0.1, 0.9, 0.9};
  auto once = project_to_sigma(y);
  auto twice = project_to_sigma(once);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(once[i] == twice[i]);
  // in-place variant agrees
  std::vector<double> z{0.3, -0.1, 0.9, 0.9};
  project_to_sigma_inplace(z);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == once[i]);
}

TEST_CASE("reference field matches its polar closed form at the nodes") {
  auto g = free_square(1.0, 1.0 / 64.0);
  OracleSpec spec;
  spec.m = 3;
  const SegregatedField u = make_oracle(g, spec);
  REQUIRE(u.ncomp() == 3);
  CHECK(u.constraint_violations() == 0);

  const double alpha = 1.5;
  // node on the positive x axis, interior of sector 0
  {
    const std::size_t idx = g->index(96, 64);  // (0.5, 0)
    CHECK(u.components[0][idx] == doctest::Approx(std::pow(0.5, alpha)).epsilon(1e-12));
    CHECK(u.components[1][idx] == 0.0);
    CHECK(u.components[2][idx] == 0.0);
  }
  // generic node: value rho^alpha |cos(m theta / 2)| in exactly one component
  {
    const int i = 80, j = 90;
    const Vec p = g->node_pos(i, j);
    const double rho = std::hypot(p[0], p[1]);
    const double theta = std::atan2(p[1], p[0]);
    const double want = std::pow(rho, alpha) * std::abs(std::cos(1.5 * theta));
    double got = 0.0;
    int positive = 0;
    for (int c = 0; c < 3; ++c)
      if (u.components[c][g->index(i, j)] > 0.0) {
        ++positive;
        got = u.components[c][g->index(i, j)];
      }
    CHECK(positive == 1);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
  // interpolated evaluation off the lattice stays close to the closed form
  {
    const Vec p = vec2(0.31157, -0.20441);
    const double rho = std::hypot(p[0], p[1]);
    const double theta = std::atan2(p[1], p[0]);
    const double want = std::pow(rho, alpha) * std::abs(std::cos(1.5 * theta));
    const auto vals = eval_field(u, p);
    double got = 0.0;
    for (double v : vals) got = std::max(got, v);
    CHECK(got == doctest::Approx(want).epsilon(5e-3));
  }
}

TEST_CASE("labels are one-based and zero off support") {
  auto g = free_square(1.0, 0.25);
  OracleSpec spec;
  spec.m = 2;
  spec.rotation = 0.3;
  const SegregatedField u = make_oracle(g, spec);
  bool saw1 = false, saw2 = false;
  for (std::size_t idx = 0; idx < g->size(); ++idx) {
    const int lab = u.label_at(idx);
    CHECK(lab >= 0);
    CHECK(lab <= 2);
    if (lab == 1) saw1 = true;
    if (lab == 2) saw2 = true;
  }
  CHECK(saw1);
  CHECK(saw2);
  // center node carries no support
  CHECK(u.label_at(g->index(4, 4)) == 0);
}

TEST_CASE("constraint violations counted for overlapping supports") {
  auto g = free_square(1.0, 0.5);
  SegregatedField u;
  u.grid = g;
  u.components.assign(2, std::vector<double>(g->size(), 0.0));
  u.eigenvalues = {0.0, 0.0};
  u.components[0][g->index(1, 1)] = 1.0;
  u.components[1][g->index(1, 1)] = 0.5;  // overlap
  u.components[1][g->index(2, 2)] = -0.1; // negative
  CHECK(u.constraint_violations() == 2);
  u.components[1][g->index(1, 1)] = 0.0;
  u.components[1][g->index(2, 2)] = 0.1;
  CHECK(u.constraint_violations() == 0);
}

TEST_CASE("evaluation outside the bounding box throws") {
  auto g = free_square(1.0, 0.25);
  OracleSpec spec;
  const SegregatedField u = make_oracle(g, spec);
  CHECK_THROWS_AS((void)eval_field(u, vec2(1.5, 0.0)), std::out_of_range);
  CHECK_NOTHROW((void)eval_field(u, vec2(0.999, -0.999)));
}

TEST_CASE("normalization produces unit discrete L2 norms") {
  auto g = free_square(1.0, 1.0 / 32.0);
  OracleSpec spec;
  spec.m = 3;
  SegregatedField u = make_oracle(g, spec);
  CHECK(normalize_components(u) == 0);
  CHECK(u.normalized);
  for (double n : l2_norms(u)) CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
  // a dead component is reported and left alone
  SegregatedField v;
  v.grid = g;
  v.components.assign(2, std::vector<double>(g->size(), 0.0));
  v.eigenvalues = {0.0, 0.0};
  v.components[0][g->index(5, 5)] = 2.0;
  CHECK(normalize_components(v) == 1);
}

TEST_CASE("blowup rescale normalizes the unit-ball average") {
  auto g = free_square(1.0, 1.0 / 64.0);
  OracleSpec spec;
  spec.m = 3;
  SegregatedField u = make_oracle(g, spec);
  u.eigenvalues = {2.0, 2.0, 2.0};
  const double rho = 0.5;
  const SegregatedField b = blowup_rescale(u, vec2(0.0, 0.0), rho);
  REQUIRE(b.ncomp() == 3);
  for (double lam : b.eigenvalues) CHECK(lam == doctest::Approx(2.0 * rho * rho));
  // average of |u|^2 over the unit ball close to one
  const Grid& bg = *b.grid;
  double mass = 0.0, vol = 0.0;
  for (int i = 0; i < bg.shape[0]; ++i)
    for (int j = 0; j < bg.shape[1]; ++j) {
      const Vec p = bg.node_pos(i, j);
      if (norm(p) > 1.0) continue;
      double s = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double val = b.components[c][bg.index(i, j)];
        s += val * val;
      }
      mass += s * bg.h * bg.h;
      vol += bg.h * bg.h;
    }
  CHECK(mass / vol == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("dump and load round trip bit exact") {
  auto g = std::make_shared<Grid>(make_disk_grid(2, vec2(0.1, -0.2), 0.75, 1.0 / 32.0));
  SegregatedField u;
  u.grid = g;
  u.components.assign(2, std::vector<double>(g->size(), 0.0));
  u.eigenvalues = {13.25, 17.5};
  u.normalized = true;
  std::uint64_t state = 88172645463325252ULL;
  auto next = [&state]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  };
  for (std::size_t idx = 0; idx < g->size(); ++idx)
    if (g->is_interior(idx)) u.components[idx % 2][idx] = next();

  const std::string base = (fs::temp_directory_path() / "partlab_roundtrip").string();
  dump_field(u, base);
  const SegregatedField v = load_field(base);

  REQUIRE(v.ncomp() == u.ncomp());
  CHECK(v.normalized == u.normalized);
  CHECK(v.grid->dim == g->dim);
  CHECK(v.grid->h == g->h);
  CHECK(v.grid->shape == g->shape);
  CHECK(v.grid->domain.kind == g->domain.kind);
  CHECK(v.grid->domain_mask == g->domain_mask);
  CHECK(v.grid->boundary_mask == g->boundary_mask);
  for (int c = 0; c < u.ncomp(); ++c) {
    CHECK(v.eigenvalues[c] == u.eigenvalues[c]);
    REQUIRE(v.components[c].size() == u.components[c].size());
    bool same = true;
    for (std::size_t idx = 0; idx < g->size(); ++idx)
      same = same && v.components[c][idx] == u.components[c][idx];
    CHECK(same);
  }
  std::remove((base + ".segf").c_str());
  std::remove((base + ".json").c_str());
}

TEST_CASE("grid factories reject bad extents and report distances") {
  CHECK_THROWS_AS(make_box_grid(2, vec2(0, 0), vec2(1.0003, 1), 0.25), std::invalid_argument);
  const Grid disk = make_disk_grid(2, vec2(0, 0), 1.0, 1.0 / 16.0);
  CHECK(disk.dist_to_boundary(vec2(0, 0)) == doctest::Approx(1.0));
  CHECK(disk.dist_to_boundary(vec2(0.5, 0)) == doctest::Approx(0.5));
  CHECK(disk.dist_to_boundary(vec2(1.5, 0)) < 0.0);
  const Grid box = make_box_grid(2, vec2(0, 0), vec2(2, 1), 1.0 / 8.0);
  CHECK(box.dist_to_boundary(vec2(1.0, 0.5)) == doctest::Approx(0.5));
  const Grid ann = make_annulus_grid(2, vec2(0, 0), 0.25, 1.0, 1.0 / 16.0);
  CHECK(ann.dist_to_boundary(vec2(0.5, 0)) == doctest::Approx(0.25));
  CHECK(ann.max_radius(vec2(0.625, 0)) ==
        doctest::Approx(0.375 - 2.0 / 16.0));
  CHECK(disk.min_radius() == doctest::Approx(4.0 / 16.0));
}

}  // TEST_SUITE
