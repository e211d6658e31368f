// Classical and smoothed frequency-type quantities of a segregated field at
// a center and radius: Dirichlet energy D, boundary height H, the
// eigenvalue-corrected energy F, the frequency I = r D / H and its shifted
// variant G = (r F + H) / H, their cutoff-smoothed counterparts, additive
// corrections, pinching between scales, Weiss-type densities, and residual
// checks of the integral identities tying them together.
#pragma once

#include <optional>
#include <vector>

#include "partlab/field_core.hpp"
#include "partlab/geometry.hpp"

namespace partlab {

// Piecewise-linear radial cutoff: 1 on [0, 1/2], 2 - 2s on (1/2, 1), 0 after.
struct CutoffProfile {
  static double phi(double s) {
    if (s <= 0.5) return 1.0;
    if (s >= 1.0) return 0.0;
    return 2.0 - 2.0 * s;
  }
  static double dphi(double s) { return (s > 0.5 && s < 1.0) ? -2.0 : 0.0; }
};

struct FrequencyRecord {
  Vec x{0.0, 0.0, 0.0};
  double r = 0.0;

  // classical quantities
  double D = 0.0;   // Dirichlet energy on B_r
  double H = 0.0;   // squared boundary height on the sphere
  double P = 0.0;   // eigenvalue term: sum_k lambda_k * mass_k on B_r
  double F = 0.0;   // D - P
  double I = 0.0;   // r D / H
  double G = 0.0;   // (r F + H) / H

  // smoothed quantities
  double Dphi = 0.0;
  double Hphi = 0.0;
  double Pphi = 0.0;
  double Fphi = 0.0;   // Dphi - Pphi
  double Ephi = 0.0;   // radial-derivative weighted annulus energy
  double Iphi = 0.0;   // r Dphi / Hphi
  double Gphi = 0.0;   // (r Fphi + Hphi) / Hphi
  double A = 0.0;      // additive correction applied below
  double IphiA = 0.0;  // Iphi + A r^2

  bool classical_valid = false;
  bool smoothed_valid = false;
  bool h_zero = false;      // H vanished; I and G are meaningless
  bool hphi_zero = false;   // Hphi vanished
  double quad_err = -1.0;   // optional refinement-based error estimate (<0: not computed)
};

// Caches nodal gradient data for one field so radius/center sweeps stay cheap.
class FrequencyAnalyzer {
 public:
  explicit FrequencyAnalyzer(const SegregatedField& u);

  const SegregatedField& field() const { return u_; }

  // Both throw std::domain_error when the ball [x, r] leaves the admissible
  // window (r >= 4h and r <= dist(x, boundary) - 2h). A vanishing H or Hphi
  // is flagged on the record instead of thrown.
  FrequencyRecord classical_at(const Vec& x, double r) const;
  FrequencyRecord smoothed_at(const Vec& x, double r, double A = 0.0) const;
  FrequencyRecord record_at(const Vec& x, double r, double A = 0.0) const;

  double pinching(const Vec& x, double s, double t, double c) const;
  double weiss_value(const Vec& x, double r, double alpha, double E) const;

  // helpers used by identity checks and the E/H consistency tests
  double flux_on_sphere(const Vec& x, double r) const;      // \int <d_nu u, u> over the sphere
  double flux_on_annulus(const Vec& x, double r) const;     // same integrand over B_r \ B_{r/2}
  double mass_in_ball(const Vec& x, double r) const;        // \int |u|^2 over B_r

  // estimates quad_err by refining the cut-cell subdivision
  FrequencyRecord record_with_error(const Vec& x, double r, double A = 0.0) const;

 private:
  const SegregatedField& u_;
  std::vector<double> gradsq_;
  // signed extensions 2 u_k - sum_j u_j: smooth across the wall to the
  // neighboring component, so their interpolants and centered gradients keep
  // full order there; component values are the clipped positive parts
  std::vector<std::vector<double>> signed_;
  std::vector<std::vector<Vec>> comp_grads_;

  friend struct FrequencyInternals;
};

struct FrequencyProfile {
  std::vector<FrequencyRecord> records;
  // smallest Lambda >= 0 with exp(Lambda r^2) * value nondecreasing in r
  double lambda_hat_I = 0.0;
  double lambda_hat_Iphi = 0.0;
  // smallest A >= 0 with value + A r^2 nondecreasing in r
  double a_hat_phi = 0.0;
};

FrequencyProfile frequency_profile(const FrequencyAnalyzer& an, const Vec& x,
                                   const std::vector<double>& radii, double A = 0.0);

struct IdentityReport {
  double res_energy_flux = 0.0;       // D vs sphere flux plus eigenvalue term
  double res_smoothed_flux = 0.0;     // Fphi vs annulus flux
  double res_height_derivative = 0.0; // d/dr Hphi vs (n-1)/r Hphi + 2 Fphi
  double poincare_lhs = 0.0;
  double poincare_rhs = 0.0;
  bool poincare_holds = false;
};

IdentityReport identity_suite(const FrequencyAnalyzer& an, const Vec& x, double r);

struct OscillationReport {
  double max_ratio = 0.0;           // |Iphi(y) - Iphi(z)| over the pinching bound
  double mean_ratio = 0.0;
  double pinch_x1 = 0.0;            // W at the endpoints (clamped at zero)
  double pinch_x2 = 0.0;
  int pairs = 0;
  bool bound_degenerate = false;    // pinching term vanished; ratios skipped
};

OscillationReport oscillation_check(const FrequencyAnalyzer& an, const Vec& x1, const Vec& x2,
                                    double r, std::optional<double> A = std::nullopt);

// Fits the smallest Lambda >= 0 making exp(Lambda r^2) * v nondecreasing
// along the sampled radii; values must be positive.
double fit_multiplicative_lambda(const std::vector<double>& radii, const std::vector<double>& values);

// Fits the smallest A >= 0 making v + A r^2 nondecreasing along the radii.
double fit_additive_constant(const std::vector<double>& radii, const std::vector<double>& values);

// Largest relative drop of exp(Lambda r^2) * v between consecutive radii
// (zero when the sequence is already nondecreasing).
double monotonicity_violation(const std::vector<double>& radii, const std::vector<double>& values,
                              double lambda);

// Scale bound below which the multiplicatively corrected quantities are
// guaranteed monotone in the continuum: sqrt((n-1) / (2 lambda_max)).
double monotone_scale_bound(const SegregatedField& u);

// free-function wrappers for one-shot calls
FrequencyRecord classical_at(const SegregatedField& u, const Vec& x, double r);
FrequencyRecord smoothed_at(const SegregatedField& u, const Vec& x, double r, double A = 0.0);
double pinching(const SegregatedField& u, const Vec& x, double s, double t, double c);
double weiss_value(const SegregatedField& u, const Vec& x, double r, double alpha, double E);
IdentityReport identity_suite(const SegregatedField& u, const Vec& x, double r);

}  // namespace partlab
