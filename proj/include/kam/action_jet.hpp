#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "kam/fourier_series.hpp"

namespace kam {

/// Multi-indices m in N^n with |m|_1 <= d in graded order: degree 0 first,
/// then the units e_0..e_{n-1}, then degree 2, and so on.
class MonomialSet {
 public:
  static std::shared_ptr<const MonomialSet> get(int dim, int degree);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  Index size() const { return static_cast<Index>(degrees_.size()); }

  std::span<const int> exponent(Index i) const {
    return {&exponents_[static_cast<std::size_t>(i * dim_)],
            static_cast<std::size_t>(dim_)};
  }
  int degree_of(Index i) const { return degrees_[static_cast<std::size_t>(i)]; }
  /// Index of m, or -1 when |m| exceeds the degree.
  Index index(std::span<const int> m) const;
  /// Index of m_i + m_j, or -1 when it exceeds the degree.
  Index sum(Index i, Index j) const {
    return sums_[static_cast<std::size_t>(i * size() + j)];
  }
  /// Index of the unit monomial r_axis.
  Index unit(int axis) const { return 1 + axis; }
  /// Index of r_a r_b.
  Index pair(int a, int b) const { return sum(unit(a), unit(b)); }
  /// [first(k), first(k+1)) holds the monomials of degree k.
  Index first(int k) const { return starts_[static_cast<std::size_t>(k)]; }

  MonomialSet(int dim, int degree);

 private:
  int dim_;
  int degree_;
  std::vector<int> exponents_;
  std::vector<int> degrees_;
  std::vector<Index> starts_;
  std::vector<Index> sums_;
};

/// Hamiltonian germ H(theta, r) = sum_{|m| <= d} H_m(theta) r^m with Fourier
/// coefficients sharing one dimension and truncation order.
class ActionJet {
 public:
  ActionJet() = default;
  ActionJet(int dim, int degree, int order);

  static ActionJet constant(int dim, int degree, int order, double value);
  /// alpha . r
  static ActionJet linear(const Eigen::VectorXd& alpha, int degree, int order);
  /// r^T Q r for symmetric Q.
  static ActionJet quadratic(const Eigen::MatrixXd& q, int degree, int order);

  int dim() const { return monomials_ ? monomials_->dim() : 0; }
  int degree() const { return monomials_ ? monomials_->degree() : 0; }
  int order() const { return order_; }
  bool empty() const { return !monomials_; }
  const MonomialSet& monomials() const { return *monomials_; }
  Index size() const { return static_cast<Index>(components_.size()); }

  FourierSeries& operator[](Index i) { return components_[static_cast<std::size_t>(i)]; }
  const FourierSeries& operator[](Index i) const {
    return components_[static_cast<std::size_t>(i)];
  }
  FourierSeries& component(std::span<const int> m);
  const FourierSeries& component(std::span<const int> m) const;

  bool is_real() const;
  bool is_zero() const;

  /// Zero padding or truncation of every component.
  ActionJet with_order(int order) const;
  /// Same jet in a container of another degree (dropping |m| > degree).
  ActionJet with_degree(int degree) const;

  ActionJet& operator+=(const ActionJet& other);
  ActionJet& operator-=(const ActionJet& other);
  ActionJet& operator*=(double factor);

 private:
  std::shared_ptr<const MonomialSet> monomials_;
  int order_ = 0;
  std::vector<FourierSeries> components_;
};

ActionJet operator+(ActionJet a, const ActionJet& b);
ActionJet operator-(ActionJet a, const ActionJet& b);
ActionJet operator-(ActionJet a);
ActionJet operator*(double factor, ActionJet a);

/// Product truncated to r-degree `degree` and Fourier order `order`
/// (negative values select the larger of the two inputs).
ActionJet multiply(const ActionJet& a, const ActionJet& b, int degree = -1,
                   int order = -1);

/// Keeps only the monomials with lo <= |m| <= hi.
ActionJet degree_range(const ActionJet& h, int lo, int hi);

ActionJet d_theta(const ActionJet& h, int axis);
ActionJet d_r(const ActionJet& h, int axis);

/// {F, G} = sum_j dF/dr_j dG/dtheta_j - dF/dtheta_j dG/dr_j, so that {H, f}
/// is the derivative of f along the Hamiltonian vector field of H and
/// {alpha.r, f} = L_alpha f. The result has the larger of the two degrees and
/// the given Fourier order (negative: the larger input order).
ActionJet poisson_bracket(const ActionJet& f, const ActionJet& g,
                          int order = -1);

/// sum_m majorant_norm(H_m, s) s^{|m|}: a bound for sup |H| over
/// |Im theta_j| <= s, |r_j| <= s.
double jet_norm(const ActionJet& h, double s);

Complex evaluate(const ActionJet& h, std::span<const Complex> theta,
                 std::span<const Complex> r);
double evaluate(const ActionJet& h, std::span<const double> theta,
                std::span<const double> r);

/// Averages of the linear coefficients, avg H_{e_j}.
Eigen::VectorXd linear_average(const ActionJet& h);
/// Q with r^T Q r equal to the averaged quadratic part of h.
Eigen::MatrixXd quadratic_average(const ActionJet& h);

void check_same_shape(const ActionJet& a, const ActionJet& b, const char* stage);

}  // namespace kam
