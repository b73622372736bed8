#pragma once

#include <functional>

#include <Eigen/Core>

#include "kam/action_jet.hpp"

namespace kam {

struct OdeOptions {
  double rtol = 1e-12;
  double atol = 1e-12;
  double initial_step = 1e-2;
  long max_steps = 1'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

using VectorField = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy)>;
/// Called after every accepted step; returning false stops the integration.
using StepObserver = std::function<bool(double t, const Eigen::VectorXd& y)>;

/// Dormand-Prince 5(4) with standard step-size control. Returns y(t1), or
/// the state where the observer stopped the run.
Eigen::VectorXd integrate(const VectorField& f, Eigen::VectorXd y0, double t0,
                          double t1, const OdeOptions& options = {},
                          OdeStats* stats = nullptr,
                          const StepObserver& observer = nullptr);

/// Fast evaluation of a real jet and its phase-space gradient at real points.
/// Phase-space state is (theta_1..n, r_1..n).
class HamiltonianField {
 public:
  explicit HamiltonianField(const ActionJet& h);

  int dim() const { return dim_; }
  double value(const Eigen::VectorXd& z) const;
  /// (d_theta H, d_r H) at z.
  void gradient(const Eigen::VectorXd& z, Eigen::VectorXd& d_theta,
                Eigen::VectorXd& d_r) const;
  /// theta' = d_r H, r' = -d_theta H.
  void field(const Eigen::VectorXd& z, Eigen::VectorXd& dz) const;
  VectorField as_field() const;

 private:
  struct Term {
    int monomial;
    std::vector<int> k;
    Complex c;
  };
  void tables(const Eigen::VectorXd& z) const;

  int dim_ = 0;
  int order_ = 0;
  std::vector<std::vector<int>> exponents_;
  std::vector<Term> terms_;
  mutable Eigen::MatrixXcd table_;  // (2N+1) x n: e^{i m theta_j}; not thread-safe
};

}  // namespace kam
