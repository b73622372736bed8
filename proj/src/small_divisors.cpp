#include "kam/small_divisors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace kam {

namespace {

struct Search {
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> witness;
  bool resonant = false;
};

// Primitive representative with first nonzero component positive.
void canonicalize(std::vector<int>& k) {
  int g = 0;
  for (int v : k) g = std::gcd(g, std::abs(v));
  if (g > 1) {
    for (int& v : k) v /= g;
  }
  for (int v : k) {
    if (v == 0) continue;
    if (v < 0) {
      for (int& x : k) x = -x;
    }
    return;
  }
}

double resonance_threshold(const Eigen::VectorXd& alpha, int l1) {
  return 1e-13 * std::max(1, l1) * alpha.cwiseAbs().maxCoeff();
}

// Calls visit(p, |p|_1) for every integer vector p of the given length with
// |p|_1 <= budget.
void for_each_in_ball(int length, int budget,
                      const std::function<void(std::vector<int>&, int)>& visit) {
  std::vector<int> p(static_cast<std::size_t>(length), 0);
  std::function<void(int, int)> rec = [&](int axis, int used) {
    if (axis == length) {
      visit(p, used);
      return;
    }
    const int room = budget - used;
    for (int v = -room; v <= room; ++v) {
      p[static_cast<std::size_t>(axis)] = v;
      rec(axis + 1, used + std::abs(v));
    }
    p[static_cast<std::size_t>(axis)] = 0;
  };
  rec(0, 0);
}

// Minimum of |k.alpha| |k|^tau over 0 < |k|_1 <= k_max. Only k with
// |k.alpha| below the running minimum can improve it, so the coordinate with
// the largest frequency is restricted to a short interval.
Search search(const Eigen::VectorXd& alpha, double tau, int k_max) {
  const int n = static_cast<int>(alpha.size());
  Search out;
  int solved = 0;
  for (int j = 1; j < n; ++j) {
    if (std::abs(alpha[j]) > std::abs(alpha[solved])) solved = j;
  }
  const double a = alpha[solved];
  require(a != 0.0, ErrorCode::InvalidArgument, "diophantine_constant",
          "frequency vector is zero");

  for (int j = 0; j < n; ++j) {
    const double v = std::abs(alpha[j]);
    if (v < out.best) {
      out.best = v;
      out.witness.assign(static_cast<std::size_t>(n), 0);
      out.witness[static_cast<std::size_t>(j)] = 1;
    }
  }
  if (k_max < 1) return out;

  std::vector<int> k(static_cast<std::size_t>(n));
  for_each_in_ball(n - 1, k_max, [&](std::vector<int>& p, int used) {
    if (out.resonant) return;
    double c = 0.0;
    for (int j = 0, q = 0; j < n; ++j) {
      if (j == solved) continue;
      k[static_cast<std::size_t>(j)] = p[static_cast<std::size_t>(q)];
      c += p[static_cast<std::size_t>(q)] * alpha[j];
      ++q;
    }
    const int room = k_max - used;
    double lo = (-c - out.best) / a;
    double hi = (-c + out.best) / a;
    if (lo > hi) std::swap(lo, hi);
    const int first = std::max(-room, static_cast<int>(std::ceil(lo)));
    const int last = std::min(room, static_cast<int>(std::floor(hi)));
    for (int m = first; m <= last; ++m) {
      const int l1 = used + std::abs(m);
      if (l1 == 0) continue;
      const double dot = std::abs(c + m * a);
      k[static_cast<std::size_t>(solved)] = m;
      if (dot <= resonance_threshold(alpha, l1)) {
        out.resonant = true;
        out.best = 0.0;
        out.witness = k;
        canonicalize(out.witness);
        return;
      }
      const double v = dot * std::pow(static_cast<double>(l1), tau);
      if (v < out.best) {
        out.best = v;
        out.witness = k;
      }
    }
  });
  canonicalize(out.witness);
  return out;
}

}  // namespace

DiophantineReport diophantine_constant(const Eigen::VectorXd& alpha,
                                       double tau, int k_max) {
  require(alpha.size() >= 1, ErrorCode::InvalidArgument,
          "diophantine_constant", "empty frequency vector");
  require(k_max >= 1, ErrorCode::InvalidArgument, "diophantine_constant",
          "search bound must be positive");
  const Search full = search(alpha, tau, k_max);
  const Search half = search(alpha, tau, std::max(1, k_max / 2));
  DiophantineReport r;
  r.gamma = full.best;
  r.witness = full.witness;
  r.k_max = k_max;
  r.gamma_half = half.best;
  r.resonant = full.resonant;
  r.stability_ratio = half.best > 0.0 ? full.best / half.best : 0.0;
  return r;
}

FrequencyVector certify(const Eigen::VectorXd& alpha, double tau, int k_max) {
  const DiophantineReport r = diophantine_constant(alpha, tau, k_max);
  if (r.resonant) {
    std::ostringstream msg;
    msg << "frequency vector is resonant, witness k = (";
    for (std::size_t j = 0; j < r.witness.size(); ++j) {
      msg << (j ? ", " : "") << r.witness[j];
    }
    msg << ")";
    throw Error(ErrorCode::Resonance, "diophantine_constant", msg.str());
  }
  return {alpha, tau, r.gamma, k_max, r.witness};
}

FourierSeries solve_cohomological(const FourierSeries& g,
                                  const Eigen::VectorXd& alpha, double s) {
  require(alpha.size() == g.dim(), ErrorCode::DimensionMismatch,
          "solve_cohomological", "frequency vector has wrong dimension");
  require(std::abs(g.average()) <= 1e-12 * majorant_norm(g, s),
          ErrorCode::NonZeroAverage, "solve_cohomological",
          "right-hand side has nonzero average");
  FourierSeries f = g;
  const Box& box = g.box();
  for (Index i = 0; i < f.coeffs().size(); ++i) {
    if (i == box.center()) {
      f[i] = 0.0;
      continue;
    }
    if (f[i] == 0.0) continue;
    double dot = 0.0;
    for (int j = 0; j < g.dim(); ++j) dot += box.mode(i, j) * alpha[j];
    require(std::abs(dot) > resonance_threshold(alpha, box.l1(i)),
            ErrorCode::Resonance, "solve_cohomological",
            "resonant mode in the right-hand side");
    f[i] /= Complex(0.0, dot);
  }
  return f;
}

double cohomological_constant(int n, double tau) {
  return std::pow(4.0 * std::exp(1.0), n) * std::tgamma(tau + n) /
         std::tgamma(static_cast<double>(n));
}

double cohomological_bound(int n, double tau, double gamma, double sigma) {
  require(sigma > 0.0 && sigma <= 1.0, ErrorCode::InvalidArgument,
          "cohomological_bound", "sigma must lie in (0, 1]");
  require(gamma > 0.0, ErrorCode::InvalidArgument, "cohomological_bound",
          "gamma must be positive");
  return cohomological_constant(n, tau) / gamma * std::pow(sigma, -tau - n);
}

// ---------------------------------------------------------------------------
// Approximation functions

ApproximationFunction ApproximationFunction::constant(double value) {
  ApproximationFunction d;
  d.kind_ = Kind::Constant;
  d.a_ = value;
  return d;
}

ApproximationFunction ApproximationFunction::power(double p, double scale) {
  ApproximationFunction d;
  d.kind_ = Kind::Power;
  d.a_ = p;
  d.b_ = scale;
  return d;
}

ApproximationFunction ApproximationFunction::diophantine(int n, double tau,
                                                         double gamma) {
  require(gamma > 0.0 && n >= 1, ErrorCode::InvalidArgument,
          "approximation_function", "need gamma > 0 and n >= 1");
  ApproximationFunction d;
  d.kind_ = Kind::Diophantine;
  d.a_ = tau;
  d.b_ = gamma;
  d.n_ = n;
  return d;
}

ApproximationFunction ApproximationFunction::exponential(double a) {
  ApproximationFunction d;
  d.kind_ = Kind::Exponential;
  d.a_ = a;
  return d;
}

ApproximationFunction ApproximationFunction::tabulated(std::vector<double> values) {
  require(!values.empty(), ErrorCode::InvalidArgument,
          "approximation_function", "empty table");
  double running = 1.0;
  for (double& v : values) {
    running = std::max(running, v);
    v = running;
  }
  ApproximationFunction d;
  d.kind_ = Kind::Tabulated;
  d.table_ = std::move(values);
  return d;
}

std::string ApproximationFunction::name() const {
  std::ostringstream s;
  switch (kind_) {
    case Kind::Constant: s << "constant(" << a_ << ")"; break;
    case Kind::Power: s << b_ << "*l^" << a_; break;
    case Kind::Diophantine:
      s << "l^" << a_ << "(l+" << n_ - 1 << ")^" << n_ - 1 << "/" << b_;
      break;
    case Kind::Exponential: s << "exp(" << a_ << "*l)"; break;
    case Kind::Tabulated: s << "table[" << table_.size() << "]"; break;
  }
  return s.str();
}

double ApproximationFunction::log_value(long l) const {
  const double x = static_cast<double>(l);
  switch (kind_) {
    case Kind::Constant: return std::log(a_);
    case Kind::Power: return std::log(b_) + a_ * std::log(x);
    case Kind::Diophantine:
      return a_ * std::log(x) + (n_ - 1) * std::log(x + n_ - 1) - std::log(b_);
    case Kind::Exponential: return a_ * x;
    case Kind::Tabulated: {
      const std::size_t i = std::min(static_cast<std::size_t>(l - 1), table_.size() - 1);
      return std::log(table_[i]);
    }
  }
  return 0.0;
}

double ApproximationFunction::operator()(long l) const {
  return std::exp(log_value(l));
}

double ApproximationFunction::ratio_bound(long l) const {
  const double x = static_cast<double>(l);
  switch (kind_) {
    case Kind::Constant: return 1.0;
    case Kind::Power: return a_ >= 0 ? std::pow(1.0 + 1.0 / x, a_) : 1.0;
    case Kind::Diophantine:
      return std::pow(1.0 + 1.0 / x, a_) *
             std::pow(1.0 + 1.0 / (x + n_ - 1), n_ - 1);
    case Kind::Exponential: return std::exp(a_);
    case Kind::Tabulated:
      return l >= static_cast<long>(table_.size()) ? 1.0 : -1.0;
  }
  return -1.0;
}

LaplaceResult laplace_transform(const ApproximationFunction& delta,
                                double sigma, long l_max) {
  require(sigma > 0.0, ErrorCode::InvalidArgument, "laplace_transform",
          "sigma must be positive");
  const double decay = std::exp(-sigma);
  if (delta.kind() == ApproximationFunction::Kind::Exponential &&
      delta.ratio_bound(1) * decay >= 1.0) {
    throw Error(ErrorCode::Divergence, "laplace_transform",
                "terms do not decay: Delta grows at least like e^{l sigma}");
  }
  LaplaceResult r;
  double term = 0.0;
  for (long l = 1; l <= l_max; ++l) {
    term = std::exp(delta.log_value(l) - l * sigma);
    r.partial += term;
    r.terms = l;
    if (!std::isfinite(r.partial) || r.partial > 1e300) {
      throw Error(ErrorCode::Divergence, "laplace_transform",
                  "partial sums overflow");
    }
    // The declared envelope is exact for closed forms; tabulated profiles are
    // only trusted to stay constant past the table.
    const double ratio = delta.ratio_bound(l);
    if (ratio < 0.0) continue;
    if (delta.kind() == ApproximationFunction::Kind::Tabulated) break;
    const double q = ratio * decay;
    if (q >= 1.0) continue;
    const double tail = term * q / (1.0 - q);
    if (tail <= 1e-17 * r.partial || l == l_max) {
      r.tail = tail;
      r.tail_certified = true;
      break;
    }
  }
  if (!r.tail_certified && delta.kind() == ApproximationFunction::Kind::Tabulated) {
    // Past the table Delta is constant, so the remaining sum is geometric.
    r.tail = term * decay / (1.0 - decay);
  }
  r.value = r.partial + r.tail;
  return r;
}

CriterionReport check_convergence_criterion(const ApproximationFunction& delta,
                                            double c, double delta_exponent,
                                            int j_max) {
  require(delta_exponent > 0.0 && delta_exponent < 1.0,
          ErrorCode::InvalidArgument, "check_convergence_criterion",
          "delta must lie in (0, 1)");
  require(c > 0.0 && j_max >= 1, ErrorCode::InvalidArgument,
          "check_convergence_criterion", "need c > 0 and j_max >= 1");
  CriterionReport report;
  report.c = c;
  report.delta = delta_exponent;
  report.j_max = j_max;
  report.passes = true;
  double partial = 0.0;
  int first_failure = 0;
  for (int j = 1; j <= j_max; ++j) {
    CriterionRow row;
    row.j = j;
    row.sigma = 1.0 / (static_cast<double>(j) * j);
    row.log_bound = c * std::pow(2.0, delta_exponent * j);
    try {
      const LaplaceResult l = laplace_transform(delta, row.sigma);
      row.laplace = l.value;
      row.certified = l.tail_certified;
      row.pass = std::log(l.value) <= row.log_bound;
      partial += std::ldexp(std::log(l.value), -j);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Divergence) throw;
      row.laplace = std::numeric_limits<double>::infinity();
      row.divergent = true;
      row.pass = false;
      partial = std::numeric_limits<double>::infinity();
    }
    row.partial_sum = partial;
    if (!row.pass && first_failure == 0) first_failure = j;
    report.passes = report.passes && row.pass;
    report.rows.push_back(row);
  }
  std::ostringstream v;
  if (report.passes) {
    v << "passes up to j_max = " << j_max;
  } else {
    v << "fails at j = " << first_failure;
    if (report.rows[static_cast<std::size_t>(first_failure - 1)].divergent) {
      v << " (divergent Laplace transform)";
    }
  }
  report.verdict = v.str();
  return report;
}

double generalized_constant(int n) {
  return std::pow(2.0, n) * std::exp(1.0) / std::tgamma(static_cast<double>(n));
}

double generalized_cohomological_bound(const ApproximationFunction& delta,
                                       int n, double sigma) {
  return generalized_constant(n) * laplace_transform(delta, sigma).value;
}

MembershipReport check_membership(const Eigen::VectorXd& alpha,
                                  const ApproximationFunction& delta,
                                  int k_max) {
  const int n = static_cast<int>(alpha.size());
  MembershipReport r;
  r.margin = std::numeric_limits<double>::infinity();
  for_each_in_ball(n, k_max, [&](std::vector<int>& k, int l1) {
    if (l1 == 0) return;
    double dot = 0.0;
    for (int j = 0; j < n; ++j) dot += k[static_cast<std::size_t>(j)] * alpha[j];
    const double m = std::abs(dot) * delta(l1) / std::pow(l1 + n - 1.0, n - 1);
    if (m < r.margin) {
      r.margin = m;
      r.witness = k;
    }
  });
  canonicalize(r.witness);
  r.holds = r.margin >= 1.0;
  return r;
}

}  // namespace kam
