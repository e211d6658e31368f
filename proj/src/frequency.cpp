#include "partlab/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "partlab/quadrature.hpp"

namespace partlab {

namespace {

void require_admissible(const Grid& g, const Vec& x, double r) {
  if (r < g.min_radius() - 1e-12) throw std::domain_error("radius below the 4h resolution floor");
  if (r > g.max_radius(x) + 1e-12) throw std::domain_error("ball leaves the domain margin");
}

double rel_residual(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace

FrequencyAnalyzer::FrequencyAnalyzer(const SegregatedField& u) : u_(u) {
  gradsq_ = grad_sq_nodal(u);
  const Grid& g = *u.grid;
  std::vector<double> total(g.size(), 0.0);
  for (int k = 0; k < u.ncomp(); ++k)
    for (std::size_t i = 0; i < g.size(); ++i) total[i] += u.components[k][i];
  signed_.reserve(u.ncomp());
  comp_grads_.reserve(u.ncomp());
  for (int k = 0; k < u.ncomp(); ++k) {
    std::vector<double> s(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) s[i] = 2.0 * u.components[k][i] - total[i];
    comp_grads_.push_back(grad_centered(g, s));
    signed_.push_back(std::move(s));
  }
}

// The heavy lifting happens here; both classical and smoothed parts reuse the
// shell walker so comparable quantities share their sample sets.
struct FrequencyInternals {
  // component value at p: positive part of the interpolated signed extension
  static double comp_value(const FrequencyAnalyzer& an, int k, const Vec& p) {
    return std::max(0.0, interp_cubic(*an.u_.grid, an.signed_[k], p));
  }

  static FrequencyRecord classical(const FrequencyAnalyzer& an, const Vec& x, double r) {
    const SegregatedField& u = an.u_;
    const Grid& g = *u.grid;
    require_admissible(g, x, r);

    FrequencyRecord rec;
    rec.x = x;
    rec.r = r;

    double D = 0.0, P = 0.0;
    walk_shell(g, x, 0.0, r, {}, pick_sub(g, r), fine(g, r),
               [&](const Vec& p, double w) {
                 // cubic for the energy density: the bilinear error carries a
                 // (2a-2)(2a-3) curvature constant that dominates I at small r/h
                 D += w * std::max(0.0, interp_cubic(g, an.gradsq_, p));
                 if (u.lambda_max() > 0.0) {
                   double m = 0.0;
                   for (int k = 0; k < u.ncomp(); ++k) {
                     const double v = comp_value(an, k, p);
                     m += u.eigenvalues[k] * v * v;
                   }
                   P += w * m;
                 }
               });

    const double H = sphere_integral(g, x, r, [&](const Vec& p) {
      double s = 0.0;
      for (int k = 0; k < u.ncomp(); ++k) {
        const double v = comp_value(an, k, p);
        s += v * v;
      }
      return s;
    });

    rec.D = D;
    rec.P = P;
    rec.F = D - P;
    rec.H = H;
    if (H > 0.0) {
      rec.I = r * rec.D / rec.H;
      rec.G = (r * rec.F + rec.H) / rec.H;
    } else {
      rec.h_zero = true;
      rec.I = std::numeric_limits<double>::quiet_NaN();
      rec.G = std::numeric_limits<double>::quiet_NaN();
    }
    rec.classical_valid = true;
    return rec;
  }

  static FrequencyRecord smoothed(const FrequencyAnalyzer& an, const Vec& x, double r, double A,
                                  int extra_sub = 0) {
    const SegregatedField& u = an.u_;
    const Grid& g = *u.grid;
    require_admissible(g, x, r);

    FrequencyRecord rec;
    rec.x = x;
    rec.r = r;
    rec.A = A;

    const bool has_lambda = u.lambda_max() > 0.0;
    const double split[1] = {0.5 * r};
    double Dphi = 0.0, Pphi = 0.0, Hphi = 0.0, Ephi = 0.0;
    walk_shell(g, x, 0.0, r, std::span<const double>(split, 1), pick_sub(g, r) + extra_sub,
               fine(g, r),
               [&](const Vec& p, double w) {
                 const double d = dist(p, x);
                 const double s = d / r;
                 const double ph = CutoffProfile::phi(s);
                 if (ph > 0.0) {
                   Dphi += w * ph * std::max(0.0, interp_cubic(g, an.gradsq_, p));
                   if (has_lambda) {
                     double m = 0.0;
                     for (int k = 0; k < u.ncomp(); ++k) {
                       const double v = comp_value(an, k, p);
                       m += u.eigenvalues[k] * v * v;
                     }
                     Pphi += w * ph * m;
                   }
                 }
                 const double dph = CutoffProfile::dphi(s);
                 if (dph != 0.0 && d > 0.0) {
                   double m = 0.0, best = 0.0;
                   int owner = -1;
                   const Vec nu = (1.0 / d) * (p - x);
                   for (int k = 0; k < u.ncomp(); ++k) {
                     const double v = comp_value(an, k, p);
                     m += v * v;
                     if (v > best) { best = v; owner = k; }
                   }
                   // the radial derivative belongs to the owning component
                   // alone; the signed gradients of the others mirror it
                   // across the wall and would double count
                   double flux2 = 0.0;
                   if (owner >= 0) {
                     const Vec gr = interp_gradient(g, an.comp_grads_[owner], p);
                     const double dn = dot(gr, nu);
                     flux2 = dn * dn;
                   }
                   Hphi += w * (-dph) * m / d;
                   Ephi += w * (-dph) * flux2 * d;
                 }
               });

    rec.Dphi = Dphi;
    rec.Pphi = Pphi;
    rec.Fphi = Dphi - Pphi;
    rec.Hphi = Hphi;
    rec.Ephi = Ephi;
    if (Hphi > 0.0) {
      rec.Iphi = r * rec.Dphi / rec.Hphi;
      rec.Gphi = (r * rec.Fphi + rec.Hphi) / rec.Hphi;
      rec.IphiA = rec.Iphi + A * r * r;
    } else {
      rec.hphi_zero = true;
      rec.Iphi = std::numeric_limits<double>::quiet_NaN();
      rec.Gphi = std::numeric_limits<double>::quiet_NaN();
      rec.IphiA = std::numeric_limits<double>::quiet_NaN();
    }
    rec.smoothed_valid = true;
    return rec;
  }

  static int pick_sub(const Grid& g, double r) { return (r / g.h <= 16.0) ? 6 : 5; }
  static bool fine(const Grid& g, double r) { return r / g.h <= 24.0; }
};

FrequencyRecord FrequencyAnalyzer::classical_at(const Vec& x, double r) const {
  return FrequencyInternals::classical(*this, x, r);
}

FrequencyRecord FrequencyAnalyzer::smoothed_at(const Vec& x, double r, double A) const {
  return FrequencyInternals::smoothed(*this, x, r, A);
}

FrequencyRecord FrequencyAnalyzer::record_at(const Vec& x, double r, double A) const {
  FrequencyRecord rec = classical_at(x, r);
  const FrequencyRecord sm = smoothed_at(x, r, A);
  rec.Dphi = sm.Dphi;
  rec.Hphi = sm.Hphi;
  rec.Pphi = sm.Pphi;
  rec.Fphi = sm.Fphi;
  rec.Ephi = sm.Ephi;
  rec.Iphi = sm.Iphi;
  rec.Gphi = sm.Gphi;
  rec.A = sm.A;
  rec.IphiA = sm.IphiA;
  rec.hphi_zero = sm.hphi_zero;
  rec.smoothed_valid = true;
  return rec;
}

FrequencyRecord FrequencyAnalyzer::record_with_error(const Vec& x, double r, double A) const {
  FrequencyRecord rec = record_at(x, r, A);
  const FrequencyRecord fine = FrequencyInternals::smoothed(*this, x, r, A, 2);
  const double base = std::max({std::abs(rec.Iphi), std::abs(fine.Iphi), 1e-300});
  rec.quad_err = std::abs(rec.Iphi - fine.Iphi) / base;
  return rec;
}

double FrequencyAnalyzer::pinching(const Vec& x, double s, double t, double c) const {
  if (s > t) throw std::domain_error("pinching scales must satisfy s <= t");
  const FrequencyRecord a = smoothed_at(x, s, c);
  const FrequencyRecord b = smoothed_at(x, t, c);
  return b.IphiA - a.IphiA;
}

double FrequencyAnalyzer::weiss_value(const Vec& x, double r, double alpha, double E) const {
  if (alpha <= 0.0) throw std::domain_error("Weiss exponent must be positive");
  const FrequencyRecord rec = classical_at(x, r);
  const int n = u_.grid->dim;
  return rec.D / std::pow(r, n - 2 + 2 * alpha) - alpha * rec.H / std::pow(r, n - 1 + 2 * alpha) +
         E * r * r;
}

double FrequencyAnalyzer::flux_on_sphere(const Vec& x, double r) const {
  const Grid& g = *u_.grid;
  return sphere_integral(g, x, r, [&](const Vec& p) {
    const Vec nu = (1.0 / r) * (p - x);
    double acc = 0.0;
    for (int k = 0; k < u_.ncomp(); ++k) {
      const double v = FrequencyInternals::comp_value(*this, k, p);
      const Vec gr = interp_gradient(g, comp_grads_[k], p);
      acc += v * dot(gr, nu);
    }
    return acc;
  });
}

double FrequencyAnalyzer::flux_on_annulus(const Vec& x, double r) const {
  const Grid& g = *u_.grid;
  return shell_integral(g, x, 0.5 * r, r, {}, [&](const Vec& p) {
    const double d = dist(p, x);
    if (d <= 0.0) return 0.0;
    const Vec nu = (1.0 / d) * (p - x);
    double acc = 0.0;
    for (int k = 0; k < u_.ncomp(); ++k) {
      const double v = FrequencyInternals::comp_value(*this, k, p);
      const Vec gr = interp_gradient(g, comp_grads_[k], p);
      acc += v * dot(gr, nu);
    }
    return acc;
  });
}

double FrequencyAnalyzer::mass_in_ball(const Vec& x, double r) const {
  const Grid& g = *u_.grid;
  return ball_integral(g, x, r, [&](const Vec& p) {
    double s = 0.0;
    for (int k = 0; k < u_.ncomp(); ++k) {
      const double v = FrequencyInternals::comp_value(*this, k, p);
      s += v * v;
    }
    return s;
  });
}

FrequencyProfile frequency_profile(const FrequencyAnalyzer& an, const Vec& x,
                                   const std::vector<double>& radii, double A) {
  if (!std::is_sorted(radii.begin(), radii.end()))
    throw std::domain_error("radii must be sorted ascending");
  FrequencyProfile prof;
  std::vector<double> rs, is, iphis;
  for (double r : radii) {
    FrequencyRecord rec = an.record_at(x, r, A);
    prof.records.push_back(rec);
    if (!rec.h_zero && rec.I > 0.0 && !rec.hphi_zero && rec.Iphi > 0.0) {
      rs.push_back(r);
      is.push_back(rec.I);
      iphis.push_back(rec.Iphi);
    }
  }
  if (rs.size() >= 2) {
    prof.lambda_hat_I = fit_multiplicative_lambda(rs, is);
    prof.lambda_hat_Iphi = fit_multiplicative_lambda(rs, iphis);
    prof.a_hat_phi = fit_additive_constant(rs, iphis);
  }
  return prof;
}

IdentityReport identity_suite(const FrequencyAnalyzer& an, const Vec& x, double r) {
  const SegregatedField& u = an.field();
  const Grid& g = *u.grid;
  const int n = g.dim;
  IdentityReport rep;

  const FrequencyRecord rec = an.record_at(x, r);

  // energy identity: D equals the boundary flux plus the eigenvalue term
  const double flux = an.flux_on_sphere(x, r);
  rep.res_energy_flux = rel_residual(rec.D, flux + rec.P);

  // smoothed flux identity: Fphi equals the annulus flux scaled by 2/r
  const double aflux = an.flux_on_annulus(x, r);
  rep.res_smoothed_flux = rel_residual(rec.Fphi, 2.0 / r * aflux);

  // radial derivative of Hphi, taken exactly: the height kernel -phi'/|y-x|
  // is piecewise constant in |y-x|/r, so differentiating in r concentrates on
  // the two sphere cuts and dHphi/dr = (2/r) [H(r) - H(r/2)]. (A finite
  // difference in r would divide the cut-cell noise of two nearby Hphi
  // values by the tiny spacing.)
  const double dH = 2.0 / r * (rec.H - an.classical_at(x, 0.5 * r).H);
  rep.res_height_derivative = rel_residual(dH, (n - 1) / r * rec.Hphi + 2.0 * rec.Fphi);

  // Poincare-type inequality for the full vector field
  rep.poincare_lhs = an.mass_in_ball(x, r);
  rep.poincare_rhs = (r * r * rec.D + r * rec.H) / (n - 1);
  rep.poincare_holds = rep.poincare_lhs <= rep.poincare_rhs * (1.0 + 1e-9);
  return rep;
}

OscillationReport oscillation_check(const FrequencyAnalyzer& an, const Vec& x1, const Vec& x2,
                                    double r, std::optional<double> A) {
  const Grid& g = *an.field().grid;
  if (dist(x1, x2) > 0.25 * r + 1e-12)
    throw std::domain_error("oscillation endpoints must satisfy |x1-x2| <= r/4");
  require_admissible(g, x1, 4.0 * r);
  require_admissible(g, x2, 4.0 * r);

  double a = 0.0;
  if (A.has_value()) {
    a = *A;
  } else {
    // calibrate the additive constant over the pinching window at x1
    std::vector<double> radii, vals;
    for (double rr : {r / 8.0, r / 4.0, r / 2.0, r, 2.0 * r, 4.0 * r}) {
      if (rr < g.min_radius()) continue;
      const FrequencyRecord rec = an.smoothed_at(x1, rr);
      if (!rec.hphi_zero && rec.Iphi > 0.0) {
        radii.push_back(rr);
        vals.push_back(rec.Iphi);
      }
    }
    if (radii.size() >= 2) a = fit_additive_constant(radii, vals);
  }
  const double c = 2.0 + a + a * a;

  OscillationReport rep;
  const double s_lo = std::max(r / 8.0, g.min_radius());
  rep.pinch_x1 = std::max(0.0, an.pinching(x1, s_lo, 4.0 * r, c));
  rep.pinch_x2 = std::max(0.0, an.pinching(x2, s_lo, 4.0 * r, c));
  const double bound_factor = std::sqrt(rep.pinch_x1) + std::sqrt(rep.pinch_x2);

  const int samples = 5;
  std::vector<Vec> pts;
  std::vector<double> iphi;
  for (int i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / (samples - 1);
    const Vec y = x1 + t * (x2 - x1);
    const FrequencyRecord rec = an.smoothed_at(y, r);
    if (!rec.hphi_zero) {
      pts.push_back(y);
      iphi.push_back(rec.Iphi);
    }
  }

  if (bound_factor <= 1e-14) {
    rep.bound_degenerate = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        worst = std::max(worst, std::abs(iphi[i] - iphi[j]));
    rep.max_ratio = worst;  // absolute oscillation when the bound is zero
    rep.mean_ratio = worst;
    return rep;
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double gap = dist(pts[i], pts[j]);
      if (gap <= 1e-14) continue;
      const double ratio = std::abs(iphi[i] - iphi[j]) / (bound_factor * gap / r);
      rep.max_ratio = std::max(rep.max_ratio, ratio);
      sum += ratio;
      ++rep.pairs;
    }
  }
  if (rep.pairs > 0) rep.mean_ratio = sum / rep.pairs;
  return rep;
}

double fit_multiplicative_lambda(const std::vector<double>& radii,
                                 const std::vector<double>& values) {
  double lam = 0.0;
  for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
    if (values[i] <= 0.0 || values[i + 1] <= 0.0)
      throw std::domain_error("multiplicative fit needs positive values");
    if (values[i + 1] >= values[i]) continue;
    const double dr2 = radii[i + 1] * radii[i + 1] - radii[i] * radii[i];
    if (dr2 <= 0.0) continue;
    lam = std::max(lam, std::log(values[i] / values[i + 1]) / dr2);
  }
  return lam;
}

double fit_additive_constant(const std::vector<double>& radii, const std::vector<double>& values) {
  double a = 0.0;
  for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
    if (values[i + 1] >= values[i]) continue;
    const double dr2 = radii[i + 1] * radii[i + 1] - radii[i] * radii[i];
    if (dr2 <= 0.0) continue;
    a = std::max(a, (values[i] - values[i + 1]) / dr2);
  }
  return a;
}

double monotonicity_violation(const std::vector<double>& radii, const std::vector<double>& values,
                              double lambda) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
    const double a = std::exp(lambda * radii[i] * radii[i]) * values[i];
    const double b = std::exp(lambda * radii[i + 1] * radii[i + 1]) * values[i + 1];
    if (b < a) worst = std::max(worst, (a - b) / std::max(std::abs(a), 1e-300));
  }
  return worst;
}

double monotone_scale_bound(const SegregatedField& u) {
  const double lm = u.lambda_max();
  if (lm <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt((u.grid->dim - 1) / (2.0 * lm));
}

FrequencyRecord classical_at(const SegregatedField& u, const Vec& x, double r) {
  return FrequencyAnalyzer(u).classical_at(x, r);
}
FrequencyRecord smoothed_at(const SegregatedField& u, const Vec& x, double r, double A) {
  return FrequencyAnalyzer(u).smoothed_at(x, r, A);
}
double pinching(const SegregatedField& u, const Vec& x, double s, double t, double c) {
  return FrequencyAnalyzer(u).pinching(x, s, t, c);
}
double weiss_value(const SegregatedField& u, const Vec& x, double r, double alpha, double E) {
  return FrequencyAnalyzer(u).weiss_value(x, r, alpha, E);
}
IdentityReport identity_suite(const SegregatedField& u, const Vec& x, double r) {
  return identity_suite(FrequencyAnalyzer(u), x, r);
}

}  // namespace partlab
