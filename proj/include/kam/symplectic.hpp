#pragma once

#include <vector>

#include <Eigen/Core>

#include "kam/action_jet.hpp"
#include "kam/fourier_series.hpp"

namespace kam {

/// Torus diffeomorphism phi = id + v fixing the origin.
struct TorusMap {
  std::vector<FourierSeries> v;

  static TorusMap identity(int dim, int order);

  int dim() const { return static_cast<int>(v.size()); }
  int order() const;
  /// max_j majorant_norm(v_j, s)
  double norm(double s) const;
  /// max_j |v_j(0)|
  double origin_defect() const;
  /// Entry (i, j) is d v_i / d theta_j.
  std::vector<FourierSeries> derivative() const;
  TorusMap with_order(int order) const;
};

/// Exact one-form rho = dS stored through its zero-average potential S.
struct ExactOneForm {
  FourierSeries potential;

  static ExactOneForm zero(int dim, int order);
  FourierSeries component(int j) const { return partial_derivative(potential, j); }
  /// max_{i,j} majorant_norm(d_i rho_j - d_j rho_i, 0); zero up to round-off
  /// by construction.
  double curl_defect() const;
};

/// G(theta, r) = (phi(theta), tphi'(theta)^{-1} (r + rho(theta))).
struct FiberedSymplectomorphism {
  TorusMap phi;
  ExactOneForm rho;

  static FiberedSymplectomorphism identity(int dim, int order);
  int dim() const { return phi.dim(); }
  int order() const;
};

/// phi(theta) at the columns of `points`.
Eigen::MatrixXd apply_torus_map(const TorusMap& phi, const Eigen::MatrixXd& points);

/// Pointwise action of G on (theta, r) pairs given as columns.
void apply(const FiberedSymplectomorphism& g, const Eigen::MatrixXd& theta,
           const Eigen::MatrixXd& r, Eigen::MatrixXd& theta_out,
           Eigen::MatrixXd& r_out);

struct PointInversion {
  Eigen::MatrixXd points;  ///< x with x + v(x) = y
  int iterations = 0;
  double residual = 0.0;   ///< max |x + v(x) - y|
};

/// Solves x + v(x) = y for each column y by the fixed-point iteration
/// x <- y - v(x).
PointInversion invert_points(const TorusMap& phi, const Eigen::MatrixXd& targets,
                             double tol = 1e-14, int max_iter = 500);

struct InversionReport {
  int iterations = 0;
  double residual = 0.0;            ///< max |phi(psi(theta)) - theta| on the grid
  double tail_ratio = 0.0;
  double v_norm_mid = 0.0;          ///< |v|_{s+sigma}
  double v_norm_far = 0.0;          ///< |v|_{s+2 sigma}
  double displacement = 0.0;        ///< |psi - id|_s
  double derivative = 0.0;          ///< |psi' - id|_s, max row sum of majorants
  double derivative_bound = 0.0;    ///< 2 |v|_{s+2 sigma} / sigma
  bool derivative_proviso = false;  ///< derivative_bound <= 1
  bool displacement_ok = false;
  bool derivative_ok = false;
};

/// psi = phi^{-1}, sampled on the oversampled grid and re-expanded.
/// Requires the certificate |v|_{s+2 sigma} < sigma.
TorusMap invert_torus_map(const TorusMap& phi, double s, double sigma,
                          double tol = 1e-12, InversionReport* report = nullptr);

/// f_j o phi^{-1} for each series, sampled on the oversampled grid and
/// re-expanded at `order`.
std::vector<FourierSeries> compose_with_inverse(const std::vector<FourierSeries>& f,
                                                const TorusMap& phi, int order);

/// (phi2 o phi1)(theta) = theta + v1(theta) + v2(theta + v1(theta)).
TorusMap compose_torus_maps(const TorusMap& phi2, const TorusMap& phi1);

/// G2 o G1 (G1 applied first) = (phi2 o phi1, S1 + S2 o phi1 - mean).
FiberedSymplectomorphism group_compose(const FiberedSymplectomorphism& g2,
                                       const FiberedSymplectomorphism& g1,
                                       double* removed_mean = nullptr);

/// H o G, computed node by node on the oversampled grid and re-expanded.
ActionJet pullback_jet(const ActionJet& h, const FiberedSymplectomorphism& g,
                       double* tail_ratio = nullptr);

/// H o G^{-1}(theta, r) = H(psi(theta), tphi'(psi(theta)) r - rho(psi(theta))).
/// The tail check is relative to the larger of the energy of H and
/// `reference_energy`; residuals near round-off pass the energy of the data
/// they were computed from.
ActionJet pullback_by_inverse(const ActionJet& h,
                              const FiberedSymplectomorphism& g,
                              double* tail_ratio = nullptr,
                              double reference_energy = 0.0);

/// True when phi = id and S = 0 exactly.
bool is_identity(const FiberedSymplectomorphism& g);

/// Largest squared l2 norm of the coefficients over the components of h.
double energy(const ActionJet& h);

/// |H|_{G,s} = jet_norm(H o G^{-1}, s).
double pulled_norm(const ActionJet& h, const FiberedSymplectomorphism& g,
                   double s);

/// exp(ad_W) H = sum_j ad_W^j H / j! with ad_W H = {W, H}; equals H o Phi_W^1
/// where Phi_W^t is the flow of W. W must be O(r^2).
ActionJet lie_transform(const ActionJet& h, const ActionJet& w, int degree);

/// Smallest det(I + v'(theta)) over the oversampled grid.
double min_jacobian_determinant(const TorusMap& phi);

}  // namespace kam
