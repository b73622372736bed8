#pragma once

#include "kam/action_jet.hpp"
#include "kam/fourier_series.hpp"

namespace kam {

/// Estimate of sup |f| over the strip |Im theta_j| <= s. The maximum sits on
/// the distinguished boundary Im theta_j = +-s; each of the 2^n boundary tori
/// is sampled on a grid of oversample * (2N + 1) points per axis and the best
/// nodes are refined by a local pattern search. Never exceeds
/// majorant_norm(f, s) beyond round-off.
double sup_norm_estimate(const FourierSeries& f, double s, int oversample = 4);

/// Estimate of sup |H| over |Im theta_j| <= s, |r_j| <= t, sampling the
/// actions on the circles |r_j| = t.
double jet_sup_estimate(const ActionJet& h, double s, double t,
                        int oversample = 4);

struct HadamardReport {
  double s = 0.0;
  double sigma = 0.0;
  double sigma_tilde = 0.0;  ///< sigma (1 + 1/s)
  double norm_s = 0.0;       ///< |f|_s
  double norm_mid = 0.0;     ///< |f|_{s+sigma}
  double norm_far = 0.0;     ///< |f|_{s+sigma_tilde}
  double slack = 0.0;        ///< (|f|_s |f|_far - |f|_mid^2) / (|f|_s |f|_far)
  bool holds = false;
};

/// Checks |f|_{s+sigma}^2 <= |f|_s |f|_{s+sigma_tilde} with grid sup
/// estimates; `holds` allows a relative slack of -1e-12.
HadamardReport verify_hadamard(const FourierSeries& f, double s, double sigma,
                               int oversample = 4);
/// Same for a jet, with the polydisc radius equal to the strip width.
HadamardReport verify_hadamard(const ActionJet& h, double s, double sigma,
                               int oversample = 4);

struct MixedDomainReport {
  double s0 = 0.0, s1 = 0.0, t0 = 0.0, t1 = 0.0, rho = 0.0;
  double s = 0.0, t = 0.0;
  double lhs = 0.0;  ///< |f|_{s,t}
  double rhs = 0.0;  ///< |f|_{s0,t0}^{1-rho} |f|_{s1,t1}^rho
  double slack = 0.0;
  bool holds = false;
};

/// Mixed strip/polydisc interpolation with t1 = t0 e^{s1 - s0},
/// s = (1-rho) s0 + rho s1 and t = t0^{1-rho} t1^rho.
MixedDomainReport verify_mixed_domain(const ActionJet& h, double s0, double s1,
                                      double t0, double rho,
                                      int oversample = 4);

inline constexpr double kInterpolationSlack = -1e-12;

}  // namespace kam
