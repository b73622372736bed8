#include "kam/ode.hpp"

#include <algorithm>
#include <cmath>

namespace kam {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Eigen::VectorXd integrate(const VectorField& f, Eigen::VectorXd y, double t0,
                          double t1, const OdeOptions& options, OdeStats* stats,
                          const StepObserver& observer) {
  require(options.rtol > 0.0 && options.atol > 0.0, ErrorCode::InvalidArgument,
          "integrate", "tolerances must be positive");
  OdeStats local;
  OdeStats& st = stats ? *stats : local;
  const double direction = t1 >= t0 ? 1.0 : -1.0;
  double t = t0;
  double h = direction * std::min(options.initial_step, std::abs(t1 - t0));
  const Index n = y.size();
  Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), next(n);
  f(t, y, k1);
  ++st.evaluations;
  long steps = 0;
  while (direction * (t1 - t) > 0.0) {
    require(++steps <= options.max_steps, ErrorCode::NonConvergence, "integrate",
            "step limit reached");
    if (direction * (t + h - t1) > 0.0) h = t1 - t;
    tmp = y + h * a21 * k1;
    f(t + c2 * h, tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h, tmp, k6);
    next = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + h, next, k7);
    st.evaluations += 6;

    const Eigen::VectorXd err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double norm = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double scale = options.atol + options.rtol * std::max(std::abs(y[i]), std::abs(next[i]));
      norm += (err[i] / scale) * (err[i] / scale);
    }
    norm = std::sqrt(norm / static_cast<double>(n));
    require(std::isfinite(norm), ErrorCode::Divergence, "integrate",
            "non-finite state during integration");
    const double factor =
        norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
    if (norm <= 1.0) {
      t += h;
      y = next;
      k1 = k7;
      ++st.accepted;
      if (observer && !observer(t, y)) return y;
      h *= factor;
    } else {
      ++st.rejected;
      h *= std::min(factor, 1.0);
    }
    require(std::abs(h) > 1e-14 * std::max(1.0, std::abs(t)), ErrorCode::NonConvergence,
            "integrate", "step size underflow");
  }
  return y;
}

HamiltonianField::HamiltonianField(const ActionJet& h)
    : dim_(h.dim()), order_(h.order()) {
  const MonomialSet& mono = h.monomials();
  for (Index i = 0; i < h.size(); ++i) {
    const auto e = mono.exponent(i);
    exponents_.emplace_back(e.begin(), e.end());
    const FourierSeries& f = h[i];
    for (Index j = 0; j < f.coeffs().size(); ++j) {
      if (f[j] == 0.0) continue;
      Term t{static_cast<int>(i), std::vector<int>(static_cast<std::size_t>(dim_)), f[j]};
      for (int a = 0; a < dim_; ++a) t.k[static_cast<std::size_t>(a)] = f.box().mode(j, a);
      terms_.push_back(std::move(t));
    }
  }
  table_.resize(2 * order_ + 1, dim_);
}

void HamiltonianField::tables(const Eigen::VectorXd& z) const {
  for (int a = 0; a < dim_; ++a) {
    const Complex step = std::polar(1.0, z[a]);
    table_(order_, a) = 1.0;
    Complex up = 1.0;
    for (int m = 1; m <= order_; ++m) {
      up = m % 16 == 0 ? std::polar(1.0, m * z[a]) : up * step;
      table_(order_ + m, a) = up;
      table_(order_ - m, a) = std::conj(up);
    }
  }
}

double HamiltonianField::value(const Eigen::VectorXd& z) const {
  tables(z);
  double sum = 0.0;
  for (const Term& t : terms_) {
    Complex e = t.c;
    for (int a = 0; a < dim_; ++a) e *= table_(order_ + t.k[static_cast<std::size_t>(a)], a);
    double mono = 1.0;
    const auto& ex = exponents_[static_cast<std::size_t>(t.monomial)];
    for (int a = 0; a < dim_; ++a) mono *= std::pow(z[dim_ + a], ex[static_cast<std::size_t>(a)]);
    sum += e.real() * mono;
  }
  return sum;
}

void HamiltonianField::gradient(const Eigen::VectorXd& z, Eigen::VectorXd& d_theta,
                                Eigen::VectorXd& d_r) const {
  tables(z);
  d_theta = Eigen::VectorXd::Zero(dim_);
  d_r = Eigen::VectorXd::Zero(dim_);
  std::vector<double> powers(static_cast<std::size_t>(dim_));
  for (const Term& t : terms_) {
    Complex e = t.c;
    for (int a = 0; a < dim_; ++a) e *= table_(order_ + t.k[static_cast<std::size_t>(a)], a);
    const auto& ex = exponents_[static_cast<std::size_t>(t.monomial)];
    double mono = 1.0;
    for (int a = 0; a < dim_; ++a) mono *= std::pow(z[dim_ + a], ex[static_cast<std::size_t>(a)]);
    // d/d theta_a of c e^{ik.theta} = i k_a c e^{ik.theta}; real part is -k_a Im.
    for (int a = 0; a < dim_; ++a) {
      d_theta[a] -= t.k[static_cast<std::size_t>(a)] * e.imag() * mono;
    }
    for (int a = 0; a < dim_; ++a) {
      const int p = ex[static_cast<std::size_t>(a)];
      if (p == 0) continue;
      double m = p * std::pow(z[dim_ + a], p - 1);
      for (int b = 0; b < dim_; ++b) {
        if (b != a) m *= std::pow(z[dim_ + b], ex[static_cast<std::size_t>(b)]);
      }
      d_r[a] += e.real() * m;
    }
  }
}

void HamiltonianField::field(const Eigen::VectorXd& z, Eigen::VectorXd& dz) const {
  Eigen::VectorXd dt, dr;
  gradient(z, dt, dr);
  dz.resize(2 * dim_);
  dz.head(dim_) = dr;
  dz.tail(dim_) = -dt;
}

VectorField HamiltonianField::as_field() const {
  return [this](double, const Eigen::VectorXd& z, Eigen::VectorXd& dz) { field(z, dz); };
}

}  // namespace kam
