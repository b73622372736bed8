#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "kam/fourier_series.hpp"

namespace kam {

/// Frequency vector with its brute-force Diophantine certificate:
/// |k.alpha| >= gamma |k|_1^{-tau} for 0 < |k|_1 <= k_max.
struct FrequencyVector {
  Eigen::VectorXd alpha;
  double tau = 1.0;
  double gamma = 0.0;
  int k_max = 0;
  std::vector<int> witness;
};

struct DiophantineReport {
  double gamma = 0.0;          ///< min |k.alpha| |k|^tau over 0 < |k| <= k_max
  std::vector<int> witness;    ///< minimizer, first nonzero component positive
  int k_max = 0;
  double gamma_half = 0.0;     ///< same minimum over |k| <= k_max / 2
  double stability_ratio = 0;  ///< gamma / gamma_half, in [0, 1]
  bool resonant = false;       ///< exact resonance found (gamma = 0)
};

/// Brute force over the l1 ball. Resonance is reported, not thrown.
DiophantineReport diophantine_constant(const Eigen::VectorXd& alpha,
                                       double tau, int k_max);

FrequencyVector certify(const Eigen::VectorXd& alpha, double tau, int k_max);

/// Unique zero-average f with L_alpha f = g: f_k = g_k / (i k.alpha).
/// Requires |avg g| <= 1e-12 majorant_norm(g, s).
FourierSeries solve_cohomological(const FourierSeries& g,
                                  const Eigen::VectorXd& alpha, double s = 0.0);

/// C_0(n, tau) = 4^n e^n Gamma(tau + n) / (n - 1)!.
double cohomological_constant(int n, double tau);
/// C_0 gamma^{-1} sigma^{-tau-n}.
double cohomological_bound(int n, double tau, double gamma, double sigma);

/// Small-divisor profile Delta : N+ -> [1, inf).
class ApproximationFunction {
 public:
  enum class Kind { Constant, Power, Diophantine, Exponential, Tabulated };

  static ApproximationFunction constant(double value = 1.0);
  /// scale * l^p
  static ApproximationFunction power(double p, double scale = 1.0);
  /// l^tau (l + n - 1)^{n-1} / gamma
  static ApproximationFunction diophantine(int n, double tau, double gamma);
  /// e^{a l}
  static ApproximationFunction exponential(double a);
  /// Values for l = 1, 2, ...; made nondecreasing and >= 1, then held
  /// constant past the end. Tails of tabulated profiles are never certified.
  static ApproximationFunction tabulated(std::vector<double> values);

  Kind kind() const { return kind_; }
  std::string name() const;
  double operator()(long l) const;
  double log_value(long l) const;
  /// Bound on Delta(m+1)/Delta(m) for all m >= l; negative when unknown.
  double ratio_bound(long l) const;

 private:
  Kind kind_ = Kind::Constant;
  double a_ = 1.0;
  double b_ = 1.0;
  int n_ = 1;
  std::vector<double> table_;
};

struct LaplaceResult {
  double value = 0.0;    ///< partial sum plus tail bound
  double partial = 0.0;
  double tail = 0.0;
  long terms = 0;
  bool tail_certified = false;
};

/// L(sigma) = sum_{l >= 1} Delta(l) e^{-l sigma}, summed until the geometric
/// tail bound drops below 1e-17 of the sum or l_max is reached. Throws
/// Divergence when the ratio bound proves divergence or the sum overflows.
LaplaceResult laplace_transform(const ApproximationFunction& delta,
                                double sigma, long l_max = 10'000'000);

struct CriterionRow {
  int j = 0;
  double sigma = 0.0;    ///< 1 / j^2
  double laplace = 0.0;  ///< L(sigma); +inf when divergent
  double log_bound = 0.0;  ///< c 2^{delta j}
  bool pass = false;
  bool divergent = false;
  bool certified = false;
  double partial_sum = 0.0;  ///< sum_{i <= j} 2^{-i} log L(sigma_i)
};

struct CriterionReport {
  double c = 0.0;
  double delta = 0.0;
  int j_max = 0;
  std::vector<CriterionRow> rows;
  bool passes = false;  ///< every row passes
  /// "passes up to j_max = ..." or "fails at j = ..." -- a finite check is
  /// never a proof of the asymptotic statement.
  std::string verdict;
};

CriterionReport check_convergence_criterion(const ApproximationFunction& delta,
                                            double c, double delta_exponent,
                                            int j_max);

/// C = 2^n e / (n - 1)!.
double generalized_constant(int n);
/// C L(sigma).
double generalized_cohomological_bound(const ApproximationFunction& delta,
                                       int n, double sigma);

struct MembershipReport {
  bool holds = false;
  /// min over 0 < |k| <= k_max of |k.alpha| Delta(|k|) / (|k| + n - 1)^{n-1}
  double margin = 0.0;
  std::vector<int> witness;
};

/// Checks |k.alpha| >= (|k| + n - 1)^{n-1} / Delta(|k|) over a finite box.
MembershipReport check_membership(const Eigen::VectorXd& alpha,
                                  const ApproximationFunction& delta,
                                  int k_max);

}  // namespace kam
