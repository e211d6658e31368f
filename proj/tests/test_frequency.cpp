#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "partlab/field_core.hpp"
#include "partlab/frequency.hpp"
#include "partlab/grid.hpp"
#include "partlab/quadrature.hpp"

using namespace partlab;

namespace {

constexpr double kPi = std::numbers::pi;

SegregatedField oracle2d(int m, double h, double rot = 0.2, double half = 1.0) {
  auto g = std::make_shared<Grid>(make_free_grid(2, vec2(-half, -half), vec2(half, half), h));
  OracleSpec spec;
  spec.m = m;
  spec.rotation = rot;
  return make_oracle(g, spec);
}

// closed forms for the m-sector reference field about the origin (2D)
double oracle_H(int m, double r) { return kPi * std::pow(r, m + 1.0); }
double oracle_D(int m, double r) { return 0.5 * m * kPi * std::pow(r, static_cast<double>(m)); }
double oracle_Hphi(int m, double r) {
  const double p = m + 1.0;
  return 2.0 * kPi * std::pow(r, p) * (1.0 - std::pow(2.0, -p)) / p;
}
double oracle_Dphi(int m, double r) { return 0.5 * m * oracle_Hphi(m, r) / r; }

}  // namespace

TEST_SUITE("frequency") {

TEST_CASE("quadrature building blocks") {
  const double h = 1.0 / 128.0;
  const Grid g = make_free_grid(2, vec2(-1, -1), vec2(1, 1), h);

  SUBCASE("ball and shell areas") {
    const double area = ball_integral(g, vec2(0, 0), 0.5, [](const Vec&) { return 1.0; });
    CHECK(area == doctest::Approx(kPi * 0.25).epsilon(1e-3));
    const double ann = shell_integral(g, vec2(0.1, -0.05), 0.25, 0.5, {},
                                      [](const Vec&) { return 1.0; });
    CHECK(ann == doctest::Approx(kPi * (0.25 - 0.0625)).epsilon(2e-3));
  }
  SUBCASE("sphere integral of a constant is exact") {
    const double len = sphere_integral(g, vec2(0, 0), 0.3, [](const Vec&) { return 1.0; });
    CHECK(len == doctest::Approx(2.0 * kPi * 0.3).epsilon(1e-12));
    const Grid g3 = make_free_grid(3, vec3(-1, -1, -1), vec3(1, 1, 1), 1.0 / 16.0);
    const double area = sphere_integral(g3, vec3(0, 0, 0), 0.4, [](const Vec&) { return 1.0; });
    CHECK(area == doctest::Approx(4.0 * kPi * 0.16).epsilon(1e-10));
  }
  SUBCASE("gauss-legendre integrates low-degree monomials exactly") {
    std::vector<double> nodes, weights;
    gauss_legendre(5, nodes, weights);
    REQUIRE(nodes.size() == 5);
    for (int p : {0, 2, 4, 6, 8}) {
      double s = 0.0;
      for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * std::pow(nodes[i], p);
      CHECK(s == doctest::Approx(2.0 / (p + 1)).epsilon(1e-13));
    }
    double odd = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) odd += weights[i] * std::pow(nodes[i], 7);
    CHECK(odd == doctest::Approx(0.0).epsilon(1e-13));
  }
  SUBCASE("interpolation reproduces polynomials") {
    std::vector<double> lin(g.size()), quad(g.size());
    for (int i = 0; i < g.shape[0]; ++i)
      for (int j = 0; j < g.shape[1]; ++j) {
        const Vec p = g.node_pos(i, j);
        lin[g.index(i, j)] = 2.0 * p[0] - 3.0 * p[1] + 0.25;
        quad[g.index(i, j)] = p[0] * p[0] - p[0] * p[1] + 2.0 * p[1] * p[1];
      }
    const Vec q = vec2(0.3171, -0.4483);
    CHECK(interp_linear(g, lin, q) ==
          doctest::Approx(2.0 * q[0] - 3.0 * q[1] + 0.25).epsilon(1e-12));
    CHECK(interp_quadratic(g, quad, q) ==
          doctest::Approx(q[0] * q[0] - q[0] * q[1] + 2.0 * q[1] * q[1]).epsilon(1e-10));
  }
}

TEST_CASE("classical quantities match the sector closed forms") {
  const double h = 1.0 / 128.0;
  const SegregatedField u = oracle2d(3, h);
  const FrequencyAnalyzer an(u);

  const double r = 0.75;
  const FrequencyRecord rec = an.classical_at(vec2(0, 0), r);
  CHECK(rec.classical_valid);
  CHECK(!rec.h_zero);
  CHECK(rec.H == doctest::Approx(oracle_H(3, r)).epsilon(5e-3));
  CHECK(rec.D == doctest::Approx(oracle_D(3, r)).epsilon(5e-3));
  CHECK(std::abs(rec.I - 1.5) <= 0.02);
  // lambda = 0 makes the eigenvalue correction vanish identically
  CHECK(rec.P == 0.0);
  CHECK(rec.F == rec.D);
  CHECK(rec.G == doctest::Approx(rec.I + 1.0).epsilon(1e-12));

  // frequency level for the two-sector field at several radii
  const SegregatedField u2 = oracle2d(2, h, 0.37);
  const FrequencyAnalyzer an2(u2);
  for (double rr : {0.1, 0.3, 0.6})
    CHECK(std::abs(an2.classical_at(vec2(0, 0), rr).I - 1.0) <= 0.02);
}

TEST_CASE("smoothed quantities match the cutoff closed forms") {
  const double h = 1.0 / 128.0;
  const SegregatedField u = oracle2d(3, h);
  const FrequencyAnalyzer an(u);

  const double r = 0.75;
  const FrequencyRecord rec = an.smoothed_at(vec2(0, 0), r);
  CHECK(rec.smoothed_valid);
  CHECK(rec.Hphi == doctest::Approx(oracle_Hphi(3, r)).epsilon(5e-3));
  CHECK(rec.Dphi == doctest::Approx(oracle_Dphi(3, r)).epsilon(5e-3));
  CHECK(std::abs(rec.Iphi - 1.5) <= 0.02);
  // E_phi = alpha^2 H_phi for the exactly homogeneous field
  CHECK(rec.Ephi == doctest::Approx(2.25 * rec.Hphi).epsilon(0.03));
  CHECK(rec.Pphi == 0.0);
  CHECK(rec.Fphi == rec.Dphi);

  // homogeneity: smoothed frequency is scale free
  for (double rr : {0.1, 0.25, 0.5})
    CHECK(std::abs(an.smoothed_at(vec2(0, 0), rr).Iphi - 1.5) <= 0.02);
}

TEST_CASE("record assembly identities hold bit for bit") {
  const SegregatedField u = oracle2d(3, 1.0 / 64.0);
  const FrequencyAnalyzer an(u);
  const double A = 0.7, r = 0.4;
  const FrequencyRecord rec = an.record_at(vec2(0.05, -0.1), r, A);
  CHECK(rec.I == rec.r * rec.D / rec.H);
  CHECK(rec.G == (rec.r * rec.F + rec.H) / rec.H);
  CHECK(rec.Iphi == rec.r * rec.Dphi / rec.Hphi);
  CHECK(rec.IphiA == rec.Iphi + A * r * r);
  CHECK(rec.A == A);
  // record_at merges the classical and smoothed passes unchanged
  const FrequencyRecord c = an.classical_at(vec2(0.05, -0.1), r);
  const FrequencyRecord s = an.smoothed_at(vec2(0.05, -0.1), r, A);
  CHECK(rec.D == c.D);
  CHECK(rec.H == c.H);
  CHECK(rec.Dphi == s.Dphi);
  CHECK(rec.Hphi == s.Hphi);
}

TEST_CASE("height sandwich against the annulus mass on shared samples") {
  const double h = 1.0 / 128.0;
  const SegregatedField u = oracle2d(3, h);
  const FrequencyAnalyzer an(u);
  const Grid& g = *u.grid;

  for (double r : {0.2, 0.5}) {
    const FrequencyRecord rec = an.smoothed_at(vec2(0, 0), r);
    // annulus mass with the walker parameters of the smoothed pass
    const double split[1] = {0.5 * r};
    const int sub = (r / g.h <= 16.0) ? 5 : 3;
    const bool fine = r / g.h <= 16.0;
    double mass = 0.0;
    walk_shell(g, vec2(0, 0), 0.0, r, std::span<const double>(split, 1), sub, fine,
               [&](const Vec& p, double w) {
                 const double d = dist(p, vec2(0, 0));
                 if (CutoffProfile::dphi(d / r) == 0.0 || d <= 0.0) return;
                 double m = 0.0;
                 for (int k = 0; k < u.ncomp(); ++k) {
                   const double v = interp_linear(g, u.components[k], p);
                   m += v * v;
                 }
                 mass += w * m;
               });
    CHECK(rec.Hphi >= 2.0 / r * mass * (1.0 - 1e-9));
    CHECK(rec.Hphi <= 4.0 / r * mass * (1.0 + 1e-9));
  }
}

TEST_CASE("identity suite residuals are small and poincare holds") {
  const double h = 1.0 / 128.0;
  const SegregatedField u = oracle2d(3, h);
  const FrequencyAnalyzer an(u);
  const IdentityReport rep = identity_suite(an, vec2(0, 0), 0.3);
  CHECK(rep.res_energy_flux < 4e-2);
  CHECK(rep.res_smoothed_flux < 4e-2);
  CHECK(rep.res_height_derivative < 4e-2);
  CHECK(rep.poincare_holds);
  CHECK(rep.poincare_lhs <= rep.poincare_rhs);
  // off-center ball still passes
  const IdentityReport rep2 = identity_suite(an, vec2(0.2, 0.1), 0.25);
  CHECK(rep2.res_energy_flux < 5e-2);
  CHECK(rep2.res_smoothed_flux < 5e-2);
  CHECK(rep2.poincare_holds);
}

TEST_CASE("energy flux identity tightens under refinement") {
  // r is large enough that both resolutions use the same quadrature mode,
  // so the residuals are discretization-dominated rather than noise-floor
  const Vec x = vec2(0, 0);
  const IdentityReport coarse = identity_suite(oracle2d(3, 1.0 / 64.0), x, 0.45);
  const IdentityReport fine = identity_suite(oracle2d(3, 1.0 / 128.0), x, 0.45);
  CHECK(fine.res_energy_flux < coarse.res_energy_flux);
  CHECK(fine.res_smoothed_flux < coarse.res_smoothed_flux);
}

TEST_CASE("profile of a homogeneous field needs no correction") {
  // the fitted corrections divide pairwise drops by r_{i+1}^2 - r_i^2, so the
  // radii are spaced widely enough that quadrature noise cannot masquerade as
  // a genuine monotonicity defect
  const SegregatedField u = oracle2d(3, 1.0 / 128.0);
  const FrequencyAnalyzer an(u);
  const std::vector<double> radii{0.2, 0.3, 0.45, 0.6, 0.8};
  const FrequencyProfile prof = frequency_profile(an, vec2(0, 0), radii);
  REQUIRE(prof.records.size() == radii.size());
  for (const FrequencyRecord& rec : prof.records) {
    CHECK(std::abs(rec.I - 1.5) <= 0.02);
    CHECK(std::abs(rec.Iphi - 1.5) <= 0.02);
  }
  CHECK(prof.lambda_hat_I <= 0.1);
  CHECK(prof.lambda_hat_Iphi <= 0.1);
  CHECK(prof.a_hat_phi <= 0.1);
}

TEST_CASE("pinching of the homogeneous field is the additive term") {
  const SegregatedField u = oracle2d(3, 1.0 / 128.0);
  const FrequencyAnalyzer an(u);
  CHECK(std::abs(an.pinching(vec2(0, 0), 0.25, 0.5, 0.0)) <= 2e-3);
  CHECK(an.pinching(vec2(0, 0), 0.1, 0.2, 1.0) == doctest::Approx(0.03).epsilon(0.08));
}

TEST_CASE("weiss density vanishes at the homogeneity exponent") {
  const SegregatedField u = oracle2d(3, 1.0 / 128.0);
  const FrequencyAnalyzer an(u);
  for (double r : {0.3, 0.5, 0.7})
    CHECK(std::abs(an.weiss_value(vec2(0, 0), r, 1.5, 0.0)) < 0.05);
  // wrong exponent: positive and increasing (closed form pi r / 2)
  const double w1 = an.weiss_value(vec2(0, 0), 0.3, 1.0, 0.0);
  const double w2 = an.weiss_value(vec2(0, 0), 0.6, 1.0, 0.0);
  CHECK(w1 > 0.0);
  CHECK(w2 > w1);
  CHECK(w1 == doctest::Approx(0.5 * kPi * 0.3).epsilon(0.02));
  CHECK(w2 == doctest::Approx(0.5 * kPi * 0.6).epsilon(0.02));
  // E-term isolation
  const double base = an.weiss_value(vec2(0.1, 0.0), 0.4, 1.2, 0.0);
  const double shifted = an.weiss_value(vec2(0.1, 0.0), 0.4, 1.2, 1.0);
  CHECK(shifted - base == doctest::Approx(0.16).epsilon(1e-9));
}

TEST_CASE("oscillation bound on the homogeneous field") {
  const SegregatedField u = oracle2d(3, 1.0 / 128.0);
  const FrequencyAnalyzer an(u);
  const double ray = 0.2 + kPi / 3.0;  // first zero ray of the rotated fan
  const Vec x2 = vec2(0.04 * std::cos(ray), 0.04 * std::sin(ray));

  // coincident endpoints: left side identically zero
  const OscillationReport same = oscillation_check(an, x2, x2, 0.2);
  CHECK(same.max_ratio <= 1e-12);

  const OscillationReport rep = oscillation_check(an, vec2(0, 0), x2, 0.2);
  CHECK(rep.pairs >= 1);
  CHECK(!rep.bound_degenerate);
  // the off-vertex frequency drifts by O(|x2| / r), which the pinching term
  // absorbs with a wide margin
  CHECK(rep.max_ratio < 0.35);
  CHECK(rep.mean_ratio <= rep.max_ratio + 1e-15);

  // precondition: endpoints too far apart
  CHECK_THROWS_AS((void)oscillation_check(an, vec2(0, 0), vec2(0.2, 0), 0.2),
                  std::domain_error);
}

TEST_CASE("monotonicity fitters recover synthetic constants") {
  std::vector<double> radii{0.1, 0.15, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> dec, inc, add;
  for (double r : radii) {
    dec.push_back(2.0 * std::exp(-2.0 * r * r));
    inc.push_back(1.0 + r);
    add.push_back(1.0 - 3.0 * r * r);
  }
  CHECK(fit_multiplicative_lambda(radii, dec) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(fit_multiplicative_lambda(radii, inc) == 0.0);
  CHECK(fit_additive_constant(radii, add) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(fit_additive_constant(radii, inc) == 0.0);

  std::vector<double> r2{0.1, 0.2};
  std::vector<double> v2{1.0, 0.9};
  CHECK(monotonicity_violation(r2, v2, 0.0) == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(monotonicity_violation(r2, {1.0, 1.1}, 0.0) == 0.0);
  // the multiplicative weight can absorb the drop
  CHECK(monotonicity_violation(r2, v2, 4.0) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("admissibility window is enforced") {
  const SegregatedField u = oracle2d(3, 1.0 / 64.0);
  const FrequencyAnalyzer an(u);
  const Grid& g = *u.grid;
  CHECK_THROWS_AS((void)an.classical_at(vec2(0, 0), 3.0 * g.h), std::domain_error);
  CHECK_THROWS_AS((void)an.smoothed_at(vec2(0.9, 0.9), 0.5), std::domain_error);
  CHECK_NOTHROW((void)an.classical_at(vec2(0, 0), 4.0 * g.h));
  // free wrappers agree with the analyzer
  const FrequencyRecord a = an.classical_at(vec2(0, 0), 0.25);
  const FrequencyRecord b = classical_at(u, vec2(0, 0), 0.25);
  CHECK(a.D == b.D);
  CHECK(a.H == b.H);
  const FrequencyRecord c = smoothed_at(u, vec2(0, 0), 0.25, 0.3);
  CHECK(c.A == 0.3);
  CHECK(c.Iphi == an.smoothed_at(vec2(0, 0), 0.25, 0.3).Iphi);
}

TEST_CASE("vanishing height is flagged rather than thrown") {
  // a single bump far from the probe: H on the probe sphere is identically 0
  auto g = std::make_shared<Grid>(make_free_grid(2, vec2(-1, -1), vec2(1, 1), 1.0 / 32.0));
  SegregatedField u;
  u.grid = g;
  u.components.assign(1, std::vector<double>(g->size(), 0.0));
  u.eigenvalues = {0.0};
  u.components[0][g->index(60, 60)] = 1.0;
  const FrequencyAnalyzer an(u);
  const FrequencyRecord rec = an.classical_at(vec2(-0.5, -0.5), 0.2);
  CHECK(rec.h_zero);
  CHECK(std::isnan(rec.I));
}

TEST_CASE("quadrature error estimate stays small on smooth data") {
  const SegregatedField u = oracle2d(3, 1.0 / 64.0);
  const FrequencyAnalyzer an(u);
  const FrequencyRecord rec = an.record_with_error(vec2(0, 0), 0.4);
  CHECK(rec.quad_err >= 0.0);
  CHECK(rec.quad_err < 1e-2);
}

TEST_CASE("monotone scale bound uses the largest eigenvalue") {
  const double h = 1.0 / 32.0;
  auto g = std::make_shared<Grid>(make_free_grid(2, vec2(-1, -1), vec2(1, 1), h));
  OracleSpec spec;
  SegregatedField u = make_oracle(g, spec);
  u.eigenvalues = {8.0, 2.0, 0.5};
  CHECK(monotone_scale_bound(u) == doctest::Approx(std::sqrt(1.0 / 16.0)).epsilon(1e-12));
}

TEST_CASE("three dimensional sector field has the same frequency") {
  auto g = std::make_shared<Grid>(
      make_free_grid(3, vec3(-1, -1, -1), vec3(1, 1, 1), 1.0 / 24.0));
  OracleSpec spec;
  spec.m = 3;
  spec.rotation = 0.2;
  const SegregatedField u = make_oracle(g, spec);
  const FrequencyAnalyzer an(u);
  const FrequencyRecord rec = an.record_at(vec3(0, 0, 0), 0.5);
  CHECK(rec.H == doctest::Approx(3.0 * kPi * kPi / 8.0 * std::pow(0.5, 5)).epsilon(0.02));
  CHECK(std::abs(rec.I - 1.5) <= 0.04);
  CHECK(std::abs(rec.Iphi - 1.5) <= 0.04);
}

TEST_CASE("blowup rescale preserves the frequency") {
  const SegregatedField u = oracle2d(3, 1.0 / 128.0);
  const SegregatedField b = blowup_rescale(u, vec2(0, 0), 0.5);
  const FrequencyAnalyzer an(b);
  const double r = 0.5;
  CHECK(std::abs(an.classical_at(vec2(0, 0), r).I - 1.5) <= 0.05);
}

}  // TEST_SUITE
