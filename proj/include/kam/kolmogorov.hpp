#pragma once

#include <vector>

#include <Eigen/Core>

#include "kam/newton.hpp"
#include "kam/ode.hpp"

namespace kam {

/// Averaged quadratic part: r^T Q r = avg of the r^2 terms of K.
struct TwistData {
  Eigen::MatrixXd Q;
  double condition = 0.0;  ///< 2-norm condition number of Q
  double symmetry_defect = 0.0;
};

TwistData twist(const ActionJet& k);

struct Flattening {
  ActionJet flat;       ///< exp(ad_W) K
  ActionJet generator;  ///< W = sum_{|m|=2} F_m r^m
  double theta_defect = 0.0;  ///< majorant of the theta-dependent r^2 part of flat
};

/// Removes the theta dependence of the r^2 terms: L_alpha F_m = K_m - avg K_m
/// for |m| = 2, then K_flat = exp(ad_W) K with W = sum F_m r^m.
Flattening flatten_quadratic(const ActionJet& k, const FrequencyVector& alpha);

/// H(theta, R + r), recentred exactly. Throws when |R|_inf exceeds bound.
ActionJet translate_actions(const ActionJet& h, const Eigen::VectorXd& shift,
                            double bound = 0.5);

/// c + alpha . r + [H]_{>=2} with c the average of the r^0 term: the normal
/// form used to start Newton on H.
ActionJet initial_normal_form(const ActionJet& h, const Eigen::VectorXd& alpha);

struct OffsetResult {
  Eigen::VectorXd beta;
  NewtonResult newton;
};

/// beta(R) from run_newton on translate_actions(H, R), started at x0.
OffsetResult offset_map(const ActionJet& h, const FrequencyVector& alpha,
                        const TwistedConjugacy& x0, const Eigen::VectorXd& shift,
                        const NewtonSchedule& schedule, double translation_bound = 0.5);

struct VerificationOptions {
  double T = 10.0;
  int samples = 64;
  OdeOptions ode;
  /// Added to every sample angle; statistics must not depend on it.
  double rotation = 0.0;
  /// Worker threads for the sample integrations; results do not depend on it.
  int threads = 1;
};

struct VerificationReport {
  double T = 0.0;
  int samples = 0;
  double max_dev = 0.0;
  double rms_dev = 0.0;
  double energy_drift = 0.0;
  double validity_radius = 0.0;
  bool inside_validity = true;  ///< false: verification inconclusive
  long steps = 0;
};

struct KolmogorovConfig {
  NewtonSchedule schedule;
  double tol_outer = 1e-10;
  double r_max = 1e-2;        ///< clamp on |Delta R|_inf per outer step
  double translation_bound = 0.5;
  int max_outer = 20;
  int max_shrink = 8;
  double condition_max = 1e8;
  double fd_step = 1e-6;
  bool warm_start = true;
  VerificationOptions verification;
};

struct OuterRecord {
  int k = 0;
  Eigen::VectorXd R;
  Eigen::VectorXd beta;
  int newton_steps = 0;
  NewtonTrace trace;
};

struct InvariantTorusResult {
  Eigen::VectorXd R_star;
  Eigen::VectorXd beta;
  TwistedConjugacy conjugacy;
  ActionJet generator;  ///< flattening generator W; zero when K_2 is constant
  TorusMap phi_inv;
  ExactOneForm rho;
  Eigen::VectorXd alpha;
  TwistData twist;
  std::vector<OuterRecord> outer;
  VerificationReport verification;
  double s = 0.1;  ///< target width; the validity radius is s/2
};

/// Flatten, drive beta(R) to zero by Newton on R, then verify by integration.
/// Throws TwistDegenerate, Divergence or NonConvergence on failure.
InvariantTorusResult solve_invariant_torus(const ActionJet& h,
                                           const FrequencyVector& alpha,
                                           const KolmogorovConfig& config);

/// Gamma(theta): the point of the invariant torus with phase theta, as
/// columns (Theta_1..n, r_1..n).
Eigen::MatrixXd embedding(const InvariantTorusResult& result,
                          const Eigen::MatrixXd& theta, const OdeOptions& ode = {});

/// Weyl-sequence sample angles, one column per sample.
Eigen::MatrixXd sample_angles(int dim, int samples, double rotation);

/// Integrates H from Gamma(theta_i) for time T and compares with
/// Gamma(theta_i + T alpha).
VerificationReport verify_invariance(const InvariantTorusResult& result,
                                     const ActionJet& h,
                                     const VerificationOptions& options);

}  // namespace kam
