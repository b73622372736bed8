#include "kam/fourier_series.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "kam/grid.hpp"

namespace kam {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::Aliasing: return "aliasing";
    case ErrorCode::Resonance: return "resonance";
    case ErrorCode::NonZeroAverage: return "nonzero_average";
    case ErrorCode::Certificate: return "certificate";
    case ErrorCode::NonConvergence: return "non_convergence";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::Undersampled: return "undersampled";
    case ErrorCode::SingularJacobian: return "singular_jacobian";
    case ErrorCode::TwistDegenerate: return "twist_degenerate";
    case ErrorCode::Config: return "config";
    case ErrorCode::PropertyFailure: return "property_failure";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Box

Box::Box(int dim, int order) : dim_(dim), order_(order) {
  size_ = 1;
  for (int j = 0; j < dim; ++j) size_ *= side();
  modes_.resize(dim, size_);
  l1_.resize(static_cast<std::size_t>(size_));
  for (Index i = 0; i < size_; ++i) {
    Index rest = i;
    int l1 = 0;
    for (int j = 0; j < dim; ++j) {
      const int k = static_cast<int>(rest % side()) - order;
      rest /= side();
      modes_(j, i) = k;
      l1 += std::abs(k);
    }
    l1_[static_cast<std::size_t>(i)] = l1;
  }
}

std::shared_ptr<const Box> Box::get(int dim, int order) {
  require(dim >= 1 && dim <= 6, ErrorCode::InvalidArgument, "box",
          "dimension must be in [1, 6]");
  require(order >= 0, ErrorCode::InvalidArgument, "box",
          "truncation order must be nonnegative");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const Box>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{dim, order}];
  if (!slot) slot = std::make_shared<const Box>(dim, order);
  return slot;
}

bool Box::contains(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != dim_) return false;
  return std::all_of(k.begin(), k.end(),
                     [&](int kj) { return std::abs(kj) <= order_; });
}

Index Box::index(std::span<const int> k) const {
  require(contains(k), ErrorCode::InvalidArgument, "box",
          "mode outside the truncation box");
  Index i = 0;
  Index stride = 1;
  for (int j = 0; j < dim_; ++j) {
    i += (k[j] + order_) * stride;
    stride *= side();
  }
  return i;
}

// ---------------------------------------------------------------------------
// FourierSeries

FourierSeries::FourierSeries(int dim, int order, bool real)
    : box_(Box::get(dim, order)),
      coeffs_(Eigen::VectorXcd::Zero(box_->size())),
      real_(real) {}

FourierSeries FourierSeries::constant(int dim, int order, Complex value) {
  FourierSeries f(dim, order, value.imag() == 0.0);
  f.coeffs_[f.box_->center()] = value;
  return f;
}

FourierSeries FourierSeries::exponential(int dim, int order,
                                         std::span<const int> k,
                                         Complex amplitude) {
  const bool zero_mode =
      std::all_of(k.begin(), k.end(), [](int kj) { return kj == 0; });
  FourierSeries f(dim, order, zero_mode && amplitude.imag() == 0.0);
  f.set_coeff(k, amplitude);
  return f;
}

FourierSeries FourierSeries::cosine(int dim, int order, std::span<const int> k,
                                    double amplitude) {
  FourierSeries f(dim, order, true);
  const Index i = f.box_->index(k);
  f.coeffs_[i] += 0.5 * amplitude;
  f.coeffs_[f.box_->negated(i)] += 0.5 * amplitude;
  return f;
}

FourierSeries FourierSeries::sine(int dim, int order, std::span<const int> k,
                                  double amplitude) {
  FourierSeries f(dim, order, true);
  const Index i = f.box_->index(k);
  if (i == f.box_->center()) return f;
  f.coeffs_[i] += Complex(0.0, -0.5 * amplitude);
  f.coeffs_[f.box_->negated(i)] += Complex(0.0, 0.5 * amplitude);
  return f;
}

Complex FourierSeries::coeff(std::span<const int> k) const {
  if (!box_->contains(k)) return 0.0;
  return coeffs_[box_->index(k)];
}

void FourierSeries::set_coeff(std::span<const int> k, Complex value) {
  coeffs_[box_->index(k)] = value;
}

Index FourierSeries::nonzeros() const {
  Index count = 0;
  for (Index i = 0; i < coeffs_.size(); ++i) count += coeffs_[i] != 0.0;
  return count;
}

double FourierSeries::symmetry_defect() const {
  double defect = 0.0;
  for (Index i = 0; i < coeffs_.size(); ++i) {
    defect = std::max(
        defect, std::abs(coeffs_[box_->negated(i)] - std::conj(coeffs_[i])));
  }
  return defect;
}

void FourierSeries::symmetrize() {
  const Index size = coeffs_.size();
  for (Index i = 0; i <= size / 2; ++i) {
    const Index j = box_->negated(i);
    const Complex c = 0.5 * (coeffs_[i] + std::conj(coeffs_[j]));
    coeffs_[i] = c;
    coeffs_[j] = std::conj(c);
  }
  real_ = true;
}

FourierSeries FourierSeries::with_order(int order) const {
  if (order == this->order()) return *this;
  FourierSeries out(dim(), order, real_);
  const int common = std::min(order, this->order());
  std::vector<int> k(static_cast<std::size_t>(dim()));
  for (Index i = 0; i < coeffs_.size(); ++i) {
    if (coeffs_[i] == 0.0) continue;
    bool inside = true;
    for (int j = 0; j < dim(); ++j) {
      k[static_cast<std::size_t>(j)] = box_->mode(i, j);
      inside = inside && std::abs(box_->mode(i, j)) <= common;
    }
    if (inside) out.coeffs_[out.box_->index(k)] = coeffs_[i];
  }
  return out;
}

void check_same_dim(const FourierSeries& a, const FourierSeries& b,
                    const char* stage) {
  require(a.dim() == b.dim(), ErrorCode::DimensionMismatch, stage,
          "Fourier series of different dimensions");
}

FourierSeries& FourierSeries::operator+=(const FourierSeries& other) {
  check_same_dim(*this, other, "add");
  if (other.order() > order()) *this = with_order(other.order());
  if (other.order() == order()) {
    coeffs_ += other.coeffs_;
  } else {
    *this += other.with_order(order());
  }
  real_ = real_ && other.real_;
  return *this;
}

FourierSeries& FourierSeries::operator-=(const FourierSeries& other) {
  return *this += -other;
}

FourierSeries& FourierSeries::operator*=(Complex factor) {
  coeffs_ *= factor;
  real_ = real_ && factor.imag() == 0.0;
  return *this;
}

FourierSeries& FourierSeries::operator*=(double factor) {
  coeffs_ *= factor;
  return *this;
}

FourierSeries operator+(FourierSeries a, const FourierSeries& b) {
  return a += b;
}
FourierSeries operator-(FourierSeries a, const FourierSeries& b) {
  return a -= b;
}
FourierSeries operator-(FourierSeries a) {
  a.coeffs() = -a.coeffs();
  return a;
}
FourierSeries operator*(double factor, FourierSeries a) { return a *= factor; }
FourierSeries operator*(Complex factor, FourierSeries a) { return a *= factor; }

// ---------------------------------------------------------------------------
// Products

namespace {

struct Term {
  Index index;
  Complex value;
};

std::vector<Term> nonzero_terms(const FourierSeries& f) {
  std::vector<Term> terms;
  for (Index i = 0; i < f.coeffs().size(); ++i) {
    if (f[i] != 0.0) terms.push_back({i, f[i]});
  }
  return terms;
}

FourierSeries multiply_direct(const FourierSeries& a, const FourierSeries& b,
                              int order) {
  const int dim = a.dim();
  FourierSeries out(dim, order, a.is_real() && b.is_real());
  const auto ta = nonzero_terms(a);
  const auto tb = nonzero_terms(b);
  const Box& ba = a.box();
  const Box& bb = b.box();
  const int side = out.box().side();
  for (const Term& x : ta) {
    for (const Term& y : tb) {
      Index index = 0;
      Index stride = 1;
      bool inside = true;
      for (int j = 0; j < dim; ++j) {
        const int k = ba.mode(x.index, j) + bb.mode(y.index, j);
        if (std::abs(k) > order) {
          inside = false;
          break;
        }
        index += (k + order) * stride;
        stride *= side;
      }
      if (inside) out[index] += x.value * y.value;
    }
  }
  return out;
}

int smooth_at_least(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5}) {
      while (r % p == 0) r /= p;
    }
    if (r == 1) return m;
  }
}

}  // namespace

FourierSeries multiply(const FourierSeries& a, const FourierSeries& b,
                       int order) {
  check_same_dim(a, b, "multiply");
  const int full = a.order() + b.order();
  const int dim = a.dim();
  const int side = smooth_at_least(2 * full + 1);
  double grid_size = 1.0;
  for (int j = 0; j < dim; ++j) grid_size *= side;
  const double direct_cost =
      static_cast<double>(a.nonzeros()) * static_cast<double>(b.nonzeros());
  if (direct_cost <= 4.0 * grid_size * (std::log2(grid_size) + 1.0)) {
    return multiply_direct(a, b, order);
  }
  const Eigen::VectorXcd product = (to_grid(a.with_order(full), side).array() *
                                    to_grid(b.with_order(full), side).array())
                                       .matrix();
  const bool real = a.is_real() && b.is_real();
  FourierSeries out = from_grid(product, dim, side, std::min(order, full), real);
  chop(out, kChopRelative * product.cwiseAbs().maxCoeff());
  return out.with_order(order);
}

FourierSeries multiply(const FourierSeries& a, const FourierSeries& b) {
  return multiply(a, b, a.order() + b.order());
}

Complex average_of_product(const FourierSeries& a, const FourierSeries& b) {
  check_same_dim(a, b, "average_of_product");
  const int order = std::min(a.order(), b.order());
  const FourierSeries x = a.with_order(order);
  const FourierSeries y = b.with_order(order);
  Complex sum = 0.0;
  for (Index i = 0; i < x.coeffs().size(); ++i) {
    sum += x[i] * y[x.box().negated(i)];
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Derivatives and norms

FourierSeries partial_derivative(const FourierSeries& f, int axis) {
  require(axis >= 0 && axis < f.dim(), ErrorCode::InvalidArgument,
          "partial_derivative", "axis out of range");
  FourierSeries out = f;
  for (Index i = 0; i < out.coeffs().size(); ++i) {
    out[i] *= Complex(0.0, f.box().mode(i, axis));
  }
  return out;
}

FourierSeries lie_derivative(const FourierSeries& f,
                             const Eigen::VectorXd& alpha) {
  require(alpha.size() == f.dim(), ErrorCode::DimensionMismatch,
          "lie_derivative", "frequency vector has wrong dimension");
  FourierSeries out = f;
  for (Index i = 0; i < out.coeffs().size(); ++i) {
    double k_dot_alpha = 0.0;
    for (int j = 0; j < f.dim(); ++j) k_dot_alpha += f.box().mode(i, j) * alpha[j];
    out[i] *= Complex(0.0, k_dot_alpha);
  }
  return out;
}

double majorant_norm(const FourierSeries& f, double s) {
  double sum = 0.0;
  for (Index i = 0; i < f.coeffs().size(); ++i) {
    if (f[i] != 0.0) sum += std::abs(f[i]) * std::exp(f.box().l1(i) * s);
  }
  return sum;
}

void chop(FourierSeries& f, double tol) {
  for (Index i = 0; i < f.coeffs().size(); ++i) {
    if (std::abs(f[i]) <= tol) f[i] = 0.0;
  }
}

// ---------------------------------------------------------------------------
// Point evaluation

Complex evaluate(const FourierSeries& f, std::span<const Complex> theta) {
  require(static_cast<int>(theta.size()) == f.dim(),
          ErrorCode::DimensionMismatch, "evaluate", "point has wrong dimension");
  Complex sum = 0.0;
  for (Index i = 0; i < f.coeffs().size(); ++i) {
    if (f[i] == 0.0) continue;
    Complex phase = 0.0;
    for (int j = 0; j < f.dim(); ++j) {
      phase += static_cast<double>(f.box().mode(i, j)) * theta[j];
    }
    sum += f[i] * std::exp(Complex(0.0, 1.0) * phase);
  }
  return sum;
}

double evaluate(const FourierSeries& f, std::span<const double> theta) {
  std::vector<Complex> z(theta.begin(), theta.end());
  const Complex value = evaluate(f, z);
  return value.real();
}

namespace {

// exp(i k x) for k = -order..order, written to row[-order..order].
void exponential_row(double x, int order, Complex* row) {
  const Complex step = std::polar(1.0, x);
  row[0] = 1.0;
  for (int k = 1; k <= order; ++k) {
    // Re-anchor every 16 powers to keep the recurrence error flat.
    row[k] = (k % 16 == 0) ? std::polar(1.0, k * x) : row[k - 1] * step;
    row[-k] = std::conj(row[k]);
  }
}

// Each real series is c_0 + 2 Re sum_{k in upper half} c_k e^{ik.theta}.
Eigen::MatrixXd evaluate_sparse(std::span<const FourierSeries* const> series,
                                const Eigen::MatrixXd& points, int order) {
  const Index count = static_cast<Index>(series.size());
  const int dim = static_cast<int>(points.rows());
  Eigen::MatrixXd out(points.cols(), count);
  struct HalfTerm {
    std::vector<int> k;
    Complex c;
  };
  std::vector<std::vector<HalfTerm>> halves(static_cast<std::size_t>(count));
  std::vector<double> constants(static_cast<std::size_t>(count), 0.0);
  for (Index s = 0; s < count; ++s) {
    const FourierSeries& f = *series[static_cast<std::size_t>(s)];
    const Box& box = f.box();
    constants[static_cast<std::size_t>(s)] = f[box.center()].real();
    for (Index i = box.center() + 1; i < box.size(); ++i) {
      if (f[i] == 0.0) continue;
      HalfTerm t;
      t.c = 2.0 * f[i];
      for (int j = 0; j < dim; ++j) t.k.push_back(box.mode(i, j));
      halves[static_cast<std::size_t>(s)].push_back(std::move(t));
    }
  }

  const int side = 2 * order + 1;
  std::vector<Complex> table(static_cast<std::size_t>(dim * side));
  for (Index p = 0; p < points.cols(); ++p) {
    for (int j = 0; j < dim; ++j) {
      exponential_row(points(j, p), order, &table[static_cast<std::size_t>(j * side + order)]);
    }
    for (Index s = 0; s < count; ++s) {
      double value = constants[static_cast<std::size_t>(s)];
      for (const HalfTerm& t : halves[static_cast<std::size_t>(s)]) {
        Complex e = table[static_cast<std::size_t>(t.k[0] + order)];
        for (int j = 1; j < dim; ++j) {
          e *= table[static_cast<std::size_t>(j * side + t.k[static_cast<std::size_t>(j)] + order)];
        }
        value += t.c.real() * e.real() - t.c.imag() * e.imag();
      }
      out(p, s) = value;
    }
  }
  return out;
}

// Dense boxes: the sum over axis 0 is one matrix product for all points and
// series; the remaining axes (last axis >= 0, by conjugate symmetry) are
// finished point by point.
Eigen::MatrixXd evaluate_dense(std::span<const FourierSeries* const> series,
                               const Eigen::MatrixXd& points, int order) {
  const Index count = static_cast<Index>(series.size());
  const int dim = static_cast<int>(points.rows());
  const int side = 2 * order + 1;

  // Remaining modes (k_1, ..., k_{n-1}) with k_{n-1} >= 0.
  Index rest = 1;
  for (int j = 1; j < dim - 1; ++j) rest *= side;
  if (dim > 1) rest *= order + 1;
  Eigen::MatrixXi rest_modes(std::max(dim - 1, 1), rest);
  Eigen::VectorXd weights(rest);
  for (Index r = 0; r < rest; ++r) {
    Index q = r;
    for (int j = 1; j < dim; ++j) {
      const int span = j == dim - 1 ? order + 1 : side;
      const int k = static_cast<int>(q % span) - (j == dim - 1 ? 0 : order);
      q /= span;
      rest_modes(j - 1, r) = k;
    }
    weights[r] = dim > 1 && rest_modes(dim - 2, r) > 0 ? 2.0 : 1.0;
  }

  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(side, count * rest);
  for (Index s = 0; s < count; ++s) {
    const FourierSeries f = series[static_cast<std::size_t>(s)]->with_order(order);
    const Box& box = f.box();
    for (Index i = 0; i < box.size(); ++i) {
      if (f[i] == 0.0) continue;
      Index r = 0;
      Index stride = 1;
      bool upper = true;
      for (int j = 1; j < dim; ++j) {
        const int k = box.mode(i, j);
        if (j == dim - 1) {
          upper = k >= 0;
          r += k * stride;
        } else {
          r += (k + order) * stride;
          stride *= side;
        }
      }
      if (upper) c(box.mode(i, 0) + order, s * rest + r) = f[i];
    }
  }

  Eigen::MatrixXd out(points.cols(), count);
  constexpr Index kBlock = 1024;
  std::vector<Complex> table(static_cast<std::size_t>(dim * side));
  Eigen::MatrixXcd e0;
  Eigen::VectorXcd phase(rest);
  for (Index start = 0; start < points.cols(); start += kBlock) {
    const Index len = std::min(kBlock, points.cols() - start);
    e0.resize(len, side);
    for (Index p = 0; p < len; ++p) {
      exponential_row(points(0, start + p), order, &table[static_cast<std::size_t>(order)]);
      for (int k = 0; k < side; ++k) e0(p, k) = table[static_cast<std::size_t>(k)];
    }
    const Eigen::MatrixXcd m = e0 * c;
    for (Index p = 0; p < len; ++p) {
      for (int j = 1; j < dim; ++j) {
        exponential_row(points(j, start + p), order, &table[static_cast<std::size_t>(j * side + order)]);
      }
      for (Index r = 0; r < rest; ++r) {
        Complex e = 1.0;
        for (int j = 1; j < dim; ++j) {
          e *= table[static_cast<std::size_t>(j * side + rest_modes(j - 1, r) + order)];
        }
        phase[r] = weights[r] * e;
      }
      for (Index s = 0; s < count; ++s) {
        double value = 0.0;
        for (Index r = 0; r < rest; ++r) {
          const Complex a = m(p, s * rest + r);
          value += a.real() * phase[r].real() - a.imag() * phase[r].imag();
        }
        out(start + p, s) = value;
      }
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd evaluate_real(std::span<const FourierSeries* const> series,
                              const Eigen::MatrixXd& points) {
  const Index count = static_cast<Index>(series.size());
  if (count == 0) return Eigen::MatrixXd::Zero(points.cols(), 0);
  const int dim = series[0]->dim();
  int order = 0;
  double nonzeros = 0.0;
  for (const FourierSeries* f : series) {
    require(f->dim() == dim, ErrorCode::DimensionMismatch, "evaluate_real",
            "series of different dimensions");
    require(f->is_real(), ErrorCode::InvalidArgument, "evaluate_real",
            "series is not real");
    order = std::max(order, f->order());
    nonzeros += static_cast<double>(f->nonzeros());
  }
  require(points.rows() == dim, ErrorCode::DimensionMismatch, "evaluate_real",
          "points have wrong dimension");
  // Per-point costs: half the nonzero terms for the sparse sum; the matrix
  // product runs several times faster per multiply-add than the scalar loop.
  const double side = 2.0 * order + 1.0;
  const double dense_cols = static_cast<double>(count) * std::pow(side, dim - 1) / 2.0;
  const double dense_cost = side * dense_cols / 4.0 + dense_cols * dim;
  if (dim <= 3 && dense_cost < 0.5 * nonzeros) {
    return evaluate_dense(series, points, order);
  }
  return evaluate_sparse(series, points, order);
}

}  // namespace kam
