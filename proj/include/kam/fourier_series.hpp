#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "kam/error.hpp"

namespace kam {

using Complex = std::complex<double>;
using Eigen::Index;

/// The index box [-N, N]^n of retained Fourier modes.
///
/// Modes are stored with axis 0 varying fastest, so the linear index of a
/// mode k is sum_j (k_j + N) (2N + 1)^j and the index of -k is size-1-i.
class Box {
 public:
  static std::shared_ptr<const Box> get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  int side() const { return 2 * order_ + 1; }
  Index size() const { return size_; }

  bool contains(std::span<const int> k) const;
  Index index(std::span<const int> k) const;
  Index negated(Index i) const { return size_ - 1 - i; }
  Index center() const { return size_ / 2; }

  /// k_j of the mode stored at linear index i.
  int mode(Index i, int axis) const { return modes_(axis, i); }
  auto mode(Index i) const { return modes_.col(i); }
  int l1(Index i) const { return l1_[static_cast<std::size_t>(i)]; }

  Box(int dim, int order);

 private:
  int dim_;
  int order_;
  Index size_;
  Eigen::MatrixXi modes_;
  std::vector<int> l1_;
};

/// Truncated Fourier series on the n-torus, f(theta) = sum_k c_k e^{i k.theta}
/// with k in the box [-N, N]^n. `is_real()` records that c_{-k} = conj(c_k).
class FourierSeries {
 public:
  FourierSeries() = default;
  FourierSeries(int dim, int order, bool real = true);

  static FourierSeries constant(int dim, int order, Complex value);
  /// amplitude * e^{i k.theta}; complex unless k = 0 and amplitude is real.
  static FourierSeries exponential(int dim, int order, std::span<const int> k,
                                   Complex amplitude = 1.0);
  static FourierSeries cosine(int dim, int order, std::span<const int> k,
                              double amplitude = 1.0);
  static FourierSeries sine(int dim, int order, std::span<const int> k,
                            double amplitude = 1.0);

  int dim() const { return box_ ? box_->dim() : 0; }
  int order() const { return box_ ? box_->order() : 0; }
  bool empty() const { return !box_; }
  const Box& box() const { return *box_; }
  std::shared_ptr<const Box> box_ptr() const { return box_; }

  bool is_real() const { return real_; }
  void set_real(bool real) { real_ = real; }

  const Eigen::VectorXcd& coeffs() const { return coeffs_; }
  Eigen::VectorXcd& coeffs() { return coeffs_; }

  Complex coeff(std::span<const int> k) const;
  void set_coeff(std::span<const int> k, Complex value);
  Complex& operator[](Index i) { return coeffs_[i]; }
  Complex operator[](Index i) const { return coeffs_[i]; }

  Complex average() const { return coeffs_[box_->center()]; }
  Index nonzeros() const;
  bool is_zero() const { return nonzeros() == 0; }

  /// max |c_{-k} - conj(c_k)|.
  double symmetry_defect() const;
  /// Projects onto conjugate-symmetric series and marks the result real.
  void symmetrize();

  /// Same series in the box of a different order (zero padding or
  /// truncation).
  FourierSeries with_order(int order) const;

  FourierSeries& operator+=(const FourierSeries& other);
  FourierSeries& operator-=(const FourierSeries& other);
  FourierSeries& operator*=(Complex factor);
  FourierSeries& operator*=(double factor);

 private:
  std::shared_ptr<const Box> box_;
  Eigen::VectorXcd coeffs_;
  bool real_ = true;
};

FourierSeries operator+(FourierSeries a, const FourierSeries& b);
FourierSeries operator-(FourierSeries a, const FourierSeries& b);
FourierSeries operator-(FourierSeries a);
FourierSeries operator*(double factor, FourierSeries a);
FourierSeries operator*(Complex factor, FourierSeries a);

/// Exact product by convolution; the result has order a.order + b.order.
FourierSeries multiply(const FourierSeries& a, const FourierSeries& b);
/// Product truncated to `order`.
FourierSeries multiply(const FourierSeries& a, const FourierSeries& b,
                       int order);
/// Average of a*b, i.e. sum_k a_k b_{-k}; exact and cheap.
Complex average_of_product(const FourierSeries& a, const FourierSeries& b);

/// d f / d theta_axis (axis counted from 0).
FourierSeries partial_derivative(const FourierSeries& f, int axis);
/// L_alpha f = sum_j alpha_j d f / d theta_j.
FourierSeries lie_derivative(const FourierSeries& f,
                             const Eigen::VectorXd& alpha);

/// Weighted l1 norm sum_k |c_k| e^{|k|_1 s}; dominates the sup norm on the
/// strip |Im theta_j| <= s and is submultiplicative.
double majorant_norm(const FourierSeries& f, double s);

/// Zeroes coefficients of modulus <= tol.
void chop(FourierSeries& f, double tol);

/// Value at a complex point of the complexified torus.
Complex evaluate(const FourierSeries& f, std::span<const Complex> theta);
double evaluate(const FourierSeries& f, std::span<const double> theta);

/// Values of real series at real points; points are the columns of
/// `points` (dim x P). Returns a P x series.size() matrix.
Eigen::MatrixXd evaluate_real(std::span<const FourierSeries* const> series,
                              const Eigen::MatrixXd& points);

void check_same_dim(const FourierSeries& a, const FourierSeries& b,
                    const char* stage);

}  // namespace kam
