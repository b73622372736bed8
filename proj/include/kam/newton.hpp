#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kam/action_jet.hpp"
#include "kam/small_divisors.hpp"
#include "kam/symplectic.hpp"

namespace kam {

/// (K, G, beta) with H = K o G + beta . r; K = c + alpha . r + O(r^2).
struct TwistedConjugacy {
  ActionJet K;
  FiberedSymplectomorphism G;
  Eigen::VectorXd beta;

  /// (K, id, 0).
  static TwistedConjugacy initial(const ActionJet& k);
  int dim() const { return K.dim(); }
  /// Largest deviation of K from c + alpha . r in its r^0 and r^1 parts.
  double normal_form_defect(const Eigen::VectorXd& alpha) const;
};

/// K o G + beta . r
ActionJet assemble(const TwistedConjugacy& x);

/// H - (K o G + beta . r)
ActionJet conjugacy_residual(const ActionJet& h, const TwistedConjugacy& x);

/// jet_norm of the residual at width s.
double defect(const ActionJet& h, const TwistedConjugacy& x, double s);

/// Widths s_0 = s + sigma, s_{k+1} = s_k - 3 sigma_k, sigma_k = (sigma/6) 2^{-k}.
struct NewtonSchedule {
  double s = 0.1;
  double sigma = 0.1;
  int max_iter = 12;
  double defect_floor = 1e-12;

  double width(int k) const;
  double loss(int k) const;
  void validate() const;
};

/// Tangent direction (dK, dphi, dS, dbeta) at a twisted conjugacy.
struct TangentVector {
  ActionJet dK;
  TorusMap dphi;
  FourierSeries dS;
  Eigen::VectorXd dbeta;

  /// max(jet_norm(dK), |dphi|_s, max_j |d_j dS|_s, |dbeta|_inf).
  double norm(double s) const;
};

struct StepReport {
  TangentVector step;
  Eigen::VectorXd delta_beta;
  double delta_c = 0.0;
  double residual_norm = 0.0;   ///< |H - phi(x)|_{G, s + sigma}
  double step_norm = 0.0;       ///< |x_next - x|_s
  double average_defect = 0.0;  ///< largest right-hand side average before solving
  double c_prime = 0.0;         ///< assembled constant, an engineering estimate
  double bound = 0.0;           ///< sigma^{-tau-n-1} C' residual_norm
  bool bound_holds = false;
};

/// One Newton step at widths (s, sigma): the triangular solve of the
/// linearized conjugacy equation, then the update of (K, G, beta).
TwistedConjugacy newton_step(const ActionJet& h, const TwistedConjugacy& x,
                             const FrequencyVector& alpha, double s, double sigma,
                             StepReport* report = nullptr);

struct StepRecord {
  int k = 0;
  double s_k = 0.0;
  double sigma_k = 0.0;
  double defect = 0.0;     ///< |H - phi(x_k)| at width s_k
  double step_norm = 0.0;  ///< |x_{k+1} - x_k|_{s_{k+1}}; 0 on the final row
  Eigen::VectorXd delta_beta;
  double delta_c = 0.0;
  double c_prime = 0.0;
  bool bound_holds = true;
};

struct NewtonTrace {
  std::vector<StepRecord> records;
  /// max d_{k+1} / d_k^2 over consecutive defects above the floor.
  double fitted_c = 0.0;
  /// Smallest such ratio; the spread max/min measures how well one constant
  /// fits the whole trace.
  double fitted_c_min = 0.0;
  int quadratic_pairs = 0;

  int steps() const;
  /// A single constant fits every pair within two decades.
  bool quadratic_signature() const;
  std::string to_csv() const;
};

enum class NewtonStatus { Converged, Diverged, MaxIterations };

std::string to_string(NewtonStatus status);

struct NewtonFailure {
  ErrorCode code;
  std::string stage;
  std::string message;
};

struct NewtonResult {
  TwistedConjugacy x;
  NewtonTrace trace;
  NewtonStatus status = NewtonStatus::MaxIterations;
  double final_defect = 0.0;
  /// Set when a step failed numerically (certificate, aliasing, non-finite
  /// defect); x is then the last iterate computed.
  std::optional<NewtonFailure> failure;
};

/// Iterates newton_step along the schedule until the defect drops below the
/// floor. Two consecutive defect increases, or a numerical failure inside a
/// step, end the run as Diverged. Config and argument errors still throw.
NewtonResult run_newton(const ActionJet& h, const TwistedConjugacy& x0,
                        const FrequencyVector& alpha,
                        const NewtonSchedule& schedule);

/// Fits fitted_c / fitted_c_min / quadratic_pairs from the recorded defects.
void fit_quadratic(NewtonTrace& trace, double floor);

struct RadiusEstimate {
  double c = 0.0;    ///< C' C''
  double tau = 0.0;  ///< tau' + tau''
  double eps_main = 0.0;
  double eps_domain = 0.0;
  double s_opt = 0.0;      ///< S / (1 + 2 tau)
  double sigma_opt = 0.0;  ///< 2 tau s_opt
  double eps_main_at_opt = 0.0;  ///< eps_main at (s_opt, sigma_opt, eta = s_opt)
};

/// eps_main = 2^{-8 tau} C^{-2} sigma^{2 tau} eta and
/// eps_domain = 2^{-12 tau} tau^{-1} C^{-2} S^{3 tau} with S = s + sigma.
RadiusEstimate theoretical_radius(double c_prime, double c_second,
                                  double tau_prime, double tau_second, double s,
                                  double sigma, double eta);

/// Loss exponent of the linear solve: tau + n + 1.
double step_loss_exponent(const FrequencyVector& alpha);

/// C' assembled from the cohomological constant and the sizes of the
/// coefficients entering the triangular solve at x.
double assembled_c_prime(const TwistedConjugacy& x, const FrequencyVector& alpha,
                         double s);

/// phi''(x) . dx (x) dx_hat, pulled back by G^{-1}.
ActionJet second_derivative(const TwistedConjugacy& x, const TangentVector& dx,
                            const TangentVector& dx_hat);

/// |phi''(x) dx dx_hat|_{G,s} sigma / (|dx|_{s+sigma} |dx_hat|_{s+sigma}):
/// an empirical estimate of C''. Zero when either direction vanishes.
double second_derivative_bound(const TwistedConjugacy& x, const TangentVector& dx,
                               const TangentVector& dx_hat, double s, double sigma);

/// Zero tangent vector shaped like x.
TangentVector zero_tangent(const TwistedConjugacy& x);

/// Difference x_hat - x as a tangent vector (additive in every slot).
TangentVector difference(const TwistedConjugacy& x_hat, const TwistedConjugacy& x);

struct LipschitzReport {
  double solution_distance = 0.0;  ///< |x_hat - x|_s
  double data_distance = 0.0;      ///< |H_hat - H|_{s + sigma}
  double ratio = 0.0;
  double bound = 0.0;              ///< 2 C' sigma^{-tau'}
  bool holds = false;
  NewtonStatus status = NewtonStatus::Converged;
  NewtonStatus status_hat = NewtonStatus::Converged;
};

/// Solves for H and H_hat from x0 and compares the distance of the solutions
/// with 2 C' sigma^{-tau'} times the distance of the data.
LipschitzReport lipschitz_check(const ActionJet& h, const ActionJet& h_hat,
                                const TwistedConjugacy& x0,
                                const FrequencyVector& alpha,
                                const NewtonSchedule& schedule, double c_prime,
                                double tau_prime);

}  // namespace kam
