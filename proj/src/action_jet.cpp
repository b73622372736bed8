#include "kam/action_jet.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace kam {

// ---------------------------------------------------------------------------
// MonomialSet

namespace {

void append_degree(int dim, int remaining, int axis, std::vector<int>& current,
                   std::vector<int>& out) {
  if (axis == dim - 1) {
    current[static_cast<std::size_t>(axis)] = remaining;
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[static_cast<std::size_t>(axis)] = e;
    append_degree(dim, remaining - e, axis + 1, current, out);
  }
}

}  // namespace

MonomialSet::MonomialSet(int dim, int degree) : dim_(dim), degree_(degree) {
  std::vector<int> current(static_cast<std::size_t>(dim), 0);
  for (int k = 0; k <= degree; ++k) {
    starts_.push_back(static_cast<Index>(exponents_.size()) / dim);
    append_degree(dim, k, 0, current, exponents_);
  }
  const Index count = static_cast<Index>(exponents_.size()) / dim;
  starts_.push_back(count);
  for (int k = 0; k <= degree; ++k) {
    for (Index i = starts_[static_cast<std::size_t>(k)];
         i < starts_[static_cast<std::size_t>(k) + 1]; ++i) {
      degrees_.push_back(k);
    }
  }
  sums_.assign(static_cast<std::size_t>(count * count), -1);
  std::vector<int> m(static_cast<std::size_t>(dim));
  for (Index i = 0; i < count; ++i) {
    for (Index j = 0; j < count; ++j) {
      for (int a = 0; a < dim; ++a) m[static_cast<std::size_t>(a)] = exponent(i)[a] + exponent(j)[a];
      sums_[static_cast<std::size_t>(i * count + j)] = index(m);
    }
  }
}

std::shared_ptr<const MonomialSet> MonomialSet::get(int dim, int degree) {
  require(dim >= 1 && dim <= 6, ErrorCode::InvalidArgument, "monomials",
          "dimension must be in [1, 6]");
  require(degree >= 0 && degree <= 12, ErrorCode::InvalidArgument,
          "monomials", "jet degree must be in [0, 12]");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const MonomialSet>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{dim, degree}];
  if (!slot) slot = std::make_shared<const MonomialSet>(dim, degree);
  return slot;
}

Index MonomialSet::index(std::span<const int> m) const {
  if (static_cast<int>(m.size()) != dim_) return -1;
  int total = 0;
  for (int e : m) {
    if (e < 0) return -1;
    total += e;
  }
  if (total > degree_) return -1;
  for (Index i = starts_[static_cast<std::size_t>(total)];
       i < starts_[static_cast<std::size_t>(total) + 1]; ++i) {
    if (std::equal(m.begin(), m.end(), exponent(i).begin())) return i;
  }
  return -1;
}

// ---------------------------------------------------------------------------
// ActionJet

ActionJet::ActionJet(int dim, int degree, int order)
    : monomials_(MonomialSet::get(dim, degree)), order_(order) {
  components_.assign(static_cast<std::size_t>(monomials_->size()),
                     FourierSeries(dim, order));
}

ActionJet ActionJet::constant(int dim, int degree, int order, double value) {
  ActionJet h(dim, degree, order);
  h[0] = FourierSeries::constant(dim, order, value);
  return h;
}

ActionJet ActionJet::linear(const Eigen::VectorXd& alpha, int degree,
                            int order) {
  const int dim = static_cast<int>(alpha.size());
  ActionJet h(dim, std::max(degree, 1), order);
  for (int j = 0; j < dim; ++j) {
    h[h.monomials().unit(j)] = FourierSeries::constant(dim, order, alpha[j]);
  }
  return h;
}

ActionJet ActionJet::quadratic(const Eigen::MatrixXd& q, int degree,
                               int order) {
  const int dim = static_cast<int>(q.rows());
  require(q.cols() == dim, ErrorCode::DimensionMismatch, "quadratic",
          "matrix is not square");
  ActionJet h(dim, std::max(degree, 2), order);
  for (int a = 0; a < dim; ++a) {
    for (int b = a; b < dim; ++b) {
      const double c = a == b ? q(a, a) : q(a, b) + q(b, a);
      h[h.monomials().pair(a, b)] = FourierSeries::constant(dim, order, c);
    }
  }
  return h;
}

FourierSeries& ActionJet::component(std::span<const int> m) {
  const Index i = monomials_->index(m);
  require(i >= 0, ErrorCode::InvalidArgument, "jet", "monomial out of range");
  return (*this)[i];
}

const FourierSeries& ActionJet::component(std::span<const int> m) const {
  const Index i = monomials_->index(m);
  require(i >= 0, ErrorCode::InvalidArgument, "jet", "monomial out of range");
  return (*this)[i];
}

bool ActionJet::is_real() const {
  for (const FourierSeries& f : components_) {
    if (!f.is_real()) return false;
  }
  return true;
}

bool ActionJet::is_zero() const {
  for (const FourierSeries& f : components_) {
    if (!f.is_zero()) return false;
  }
  return true;
}

ActionJet ActionJet::with_order(int order) const {
  ActionJet out = *this;
  out.order_ = order;
  for (FourierSeries& f : out.components_) f = f.with_order(order);
  return out;
}

ActionJet ActionJet::with_degree(int degree) const {
  if (degree == this->degree()) return *this;
  ActionJet out(dim(), degree, order_);
  for (Index i = 0; i < out.size(); ++i) {
    const Index j = monomials_->index(out.monomials().exponent(i));
    if (j >= 0) out[i] = (*this)[j];
  }
  return out;
}

void check_same_shape(const ActionJet& a, const ActionJet& b,
                      const char* stage) {
  require(a.dim() == b.dim(), ErrorCode::DimensionMismatch, stage,
          "jets of different dimensions");
}

ActionJet& ActionJet::operator+=(const ActionJet& other) {
  check_same_shape(*this, other, "jet_add");
  if (other.degree() > degree()) *this = with_degree(other.degree());
  if (other.order() > order_) *this = with_order(other.order());
  for (Index i = 0; i < other.size(); ++i) {
    if (!other[i].is_zero()) (*this)[i] += other[i];
  }
  return *this;
}

ActionJet& ActionJet::operator-=(const ActionJet& other) {
  return *this += -other;
}

ActionJet& ActionJet::operator*=(double factor) {
  for (FourierSeries& f : components_) f *= factor;
  return *this;
}

ActionJet operator+(ActionJet a, const ActionJet& b) { return a += b; }
ActionJet operator-(ActionJet a, const ActionJet& b) { return a -= b; }
ActionJet operator-(ActionJet a) { return a *= -1.0; }
ActionJet operator*(double factor, ActionJet a) { return a *= factor; }

// ---------------------------------------------------------------------------
// Algebra

ActionJet multiply(const ActionJet& a, const ActionJet& b, int degree,
                   int order) {
  check_same_shape(a, b, "jet_multiply");
  if (degree < 0) degree = std::max(a.degree(), b.degree());
  if (order < 0) order = std::max(a.order(), b.order());
  ActionJet out(a.dim(), degree, order);
  const auto big = MonomialSet::get(a.dim(), a.degree() + b.degree());
  const MonomialSet& target = out.monomials();
  std::vector<bool> zero_b(static_cast<std::size_t>(b.size()));
  for (Index j = 0; j < b.size(); ++j) zero_b[static_cast<std::size_t>(j)] = b[j].is_zero();
  for (Index i = 0; i < a.size(); ++i) {
    if (a[i].is_zero()) continue;
    const Index ia = big->index(a.monomials().exponent(i));
    for (Index j = 0; j < b.size(); ++j) {
      if (zero_b[static_cast<std::size_t>(j)]) continue;
      const Index ib = big->index(b.monomials().exponent(j));
      const Index m = target.index(big->exponent(big->sum(ia, ib)));
      if (m < 0) continue;
      out[m] += multiply(a[i], b[j], order);
    }
  }
  return out;
}

ActionJet degree_range(const ActionJet& h, int lo, int hi) {
  ActionJet out = h;
  for (Index i = 0; i < out.size(); ++i) {
    const int k = out.monomials().degree_of(i);
    if (k < lo || k > hi) out[i] = FourierSeries(h.dim(), h.order());
  }
  return out;
}

ActionJet d_theta(const ActionJet& h, int axis) {
  ActionJet out = h;
  for (Index i = 0; i < out.size(); ++i) out[i] = partial_derivative(h[i], axis);
  return out;
}

ActionJet d_r(const ActionJet& h, int axis) {
  require(axis >= 0 && axis < h.dim(), ErrorCode::InvalidArgument, "d_r",
          "axis out of range");
  ActionJet out(h.dim(), h.degree(), h.order());
  std::vector<int> m(static_cast<std::size_t>(h.dim()));
  for (Index i = 0; i < h.size(); ++i) {
    const auto e = h.monomials().exponent(i);
    if (e[axis] == 0 || h[i].is_zero()) continue;
    std::copy(e.begin(), e.end(), m.begin());
    m[static_cast<std::size_t>(axis)] -= 1;
    out.component(m) = static_cast<double>(e[axis]) * h[i];
  }
  return out;
}

ActionJet poisson_bracket(const ActionJet& f, const ActionJet& g, int order) {
  check_same_shape(f, g, "poisson_bracket");
  const int degree = std::max(f.degree(), g.degree());
  if (order < 0) order = std::max(f.order(), g.order());
  ActionJet out(f.dim(), degree, order);
  for (int j = 0; j < f.dim(); ++j) {
    out += multiply(d_r(f, j), d_theta(g, j), degree, order);
    out -= multiply(d_theta(f, j), d_r(g, j), degree, order);
  }
  return out;
}

double jet_norm(const ActionJet& h, double s) {
  double sum = 0.0;
  for (Index i = 0; i < h.size(); ++i) {
    sum += majorant_norm(h[i], s) * std::pow(s, h.monomials().degree_of(i));
  }
  return sum;
}

Complex evaluate(const ActionJet& h, std::span<const Complex> theta,
                 std::span<const Complex> r) {
  require(static_cast<int>(r.size()) == h.dim(), ErrorCode::DimensionMismatch,
          "jet_evaluate", "action point has wrong dimension");
  Complex sum = 0.0;
  for (Index i = 0; i < h.size(); ++i) {
    if (h[i].is_zero()) continue;
    Complex monomial = 1.0;
    const auto e = h.monomials().exponent(i);
    for (int j = 0; j < h.dim(); ++j) monomial *= std::pow(r[j], e[j]);
    sum += evaluate(h[i], theta) * monomial;
  }
  return sum;
}

double evaluate(const ActionJet& h, std::span<const double> theta,
                std::span<const double> r) {
  std::vector<Complex> zt(theta.begin(), theta.end());
  std::vector<Complex> zr(r.begin(), r.end());
  return evaluate(h, zt, zr).real();
}

Eigen::VectorXd linear_average(const ActionJet& h) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(h.dim());
  if (h.degree() < 1) return out;
  for (int j = 0; j < h.dim(); ++j) {
    out[j] = h[h.monomials().unit(j)].average().real();
  }
  return out;
}

Eigen::MatrixXd quadratic_average(const ActionJet& h) {
  const int n = h.dim();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  if (h.degree() < 2) return q;
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      const double c = h[h.monomials().pair(a, b)].average().real();
      q(a, b) = a == b ? c : 0.5 * c;
      q(b, a) = q(a, b);
    }
  }
  return q;
}

}  // namespace kam
