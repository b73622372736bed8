#include "kam/norms.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "kam/grid.hpp"

namespace kam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Candidate {
  double value = 0.0;
  Eigen::VectorXd x;  // real parts of theta
  Eigen::VectorXd y;  // imaginary parts of theta
};

// Coordinate pattern search for a local maximum of `value`.
double refine(const std::function<double(const Eigen::VectorXd&)>& value,
              Eigen::VectorXd& point, double step) {
  double best = value(point);
  while (step > 1e-10) {
    bool improved = false;
    for (Index j = 0; j < point.size(); ++j) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd trial = point;
        trial[j] += sign * step;
        const double v = value(trial);
        if (v > best) {
          best = v;
          point = trial;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

// Largest |f| over the grid nodes of all 2^n boundary tori; keeps the best
// few nodes for refinement.
void boundary_samples(const FourierSeries& f, double s, int oversample,
                      std::vector<Candidate>& top, std::size_t keep) {
  const int dim = f.dim();
  const int side = std::max(oversample * (2 * f.order() + 1), 4);
  for (int signs = 0; signs < (1 << dim); ++signs) {
    Eigen::VectorXd y(dim);
    for (int j = 0; j < dim; ++j) y[j] = (signs >> j) & 1 ? -s : s;
    FourierSeries g = f;
    g.set_real(false);
    for (Index i = 0; i < g.coeffs().size(); ++i) {
      if (g[i] == 0.0) continue;
      double ky = 0.0;
      for (int j = 0; j < dim; ++j) ky += f.box().mode(i, j) * y[j];
      g[i] *= std::exp(-ky);
    }
    const Eigen::VectorXcd values = to_grid(g, side);
    for (Index p = 0; p < values.size(); ++p) {
      const double v = std::abs(values[p]);
      if (top.size() == keep && v <= top.back().value) continue;
      Candidate c{v, Eigen::VectorXd(dim), y};
      Index rest = p;
      for (int j = 0; j < dim; ++j) {
        c.x[j] = kTwoPi * static_cast<double>(rest % side) / side;
        rest /= side;
      }
      top.push_back(std::move(c));
      std::sort(top.begin(), top.end(),
                [](const Candidate& a, const Candidate& b) { return a.value > b.value; });
      if (top.size() > keep) top.pop_back();
    }
  }
}

double strip_value(const FourierSeries& f, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
  std::vector<Complex> theta(static_cast<std::size_t>(x.size()));
  for (Index j = 0; j < x.size(); ++j) theta[static_cast<std::size_t>(j)] = Complex(x[j], y[j]);
  return std::abs(evaluate(f, theta));
}

}  // namespace

double sup_norm_estimate(const FourierSeries& f, double s, int oversample) {
  require(oversample >= 2, ErrorCode::InvalidArgument, "sup_norm_estimate",
          "oversampling factor must be at least 2");
  require(s >= 0.0, ErrorCode::InvalidArgument, "sup_norm_estimate",
          "strip width must be nonnegative");
  if (f.is_zero()) return 0.0;
  std::vector<Candidate> top;
  boundary_samples(f, s, oversample, top, 3);
  const int side = std::max(oversample * (2 * f.order() + 1), 4);
  double best = 0.0;
  for (Candidate& c : top) {
    const Eigen::VectorXd y = c.y;
    const double v = refine(
        [&](const Eigen::VectorXd& x) { return strip_value(f, x, y); }, c.x,
        kTwoPi / side);
    best = std::max(best, std::max(v, c.value));
  }
  return best;
}

double jet_sup_estimate(const ActionJet& h, double s, double t,
                        int oversample) {
  require(oversample >= 2, ErrorCode::InvalidArgument, "jet_sup_estimate",
          "oversampling factor must be at least 2");
  const int dim = h.dim();
  const int per_axis = std::max(8, oversample * (h.degree() + 1));
  Index combos = 1;
  for (int j = 0; j < dim; ++j) combos *= per_axis;

  // Best sample over theta boundary tori and action circles.
  Candidate best;
  Eigen::VectorXd best_nu = Eigen::VectorXd::Zero(dim);
  std::vector<Complex> r(static_cast<std::size_t>(dim));
  for (Index c = 0; c < combos; ++c) {
    Eigen::VectorXd nu(dim);
    Index rest = c;
    for (int j = 0; j < dim; ++j) {
      nu[j] = kTwoPi * static_cast<double>(rest % per_axis) / per_axis;
      rest /= per_axis;
      r[static_cast<std::size_t>(j)] = std::polar(t, nu[j]);
    }
    FourierSeries g(dim, h.order(), false);
    for (Index i = 0; i < h.size(); ++i) {
      if (h[i].is_zero()) continue;
      Complex monomial = 1.0;
      const auto e = h.monomials().exponent(i);
      for (int j = 0; j < dim; ++j) monomial *= std::pow(r[static_cast<std::size_t>(j)], e[j]);
      g += monomial * h[i];
    }
    g.set_real(false);
    std::vector<Candidate> top;
    boundary_samples(g, s, oversample, top, 1);
    if (!top.empty() && top[0].value > best.value) {
      best = top[0];
      best_nu = nu;
    }
  }
  if (best.value == 0.0) return 0.0;

  Eigen::VectorXd point(2 * dim);
  point << best.x, best_nu;
  const Eigen::VectorXd y = best.y;
  std::vector<Complex> theta(static_cast<std::size_t>(dim));
  const double refined = refine(
      [&](const Eigen::VectorXd& p) {
        for (int j = 0; j < dim; ++j) {
          theta[static_cast<std::size_t>(j)] = Complex(p[j], y[j]);
          r[static_cast<std::size_t>(j)] = std::polar(t, p[dim + j]);
        }
        return std::abs(evaluate(h, theta, r));
      },
      point, kTwoPi / (oversample * (2 * h.order() + 1)));
  return std::max(refined, best.value);
}

namespace {

HadamardReport hadamard(const std::function<double(double)>& norm, double s,
                        double sigma) {
  require(s > 0.0 && sigma > 0.0, ErrorCode::InvalidArgument,
          "verify_hadamard", "widths must be positive");
  HadamardReport r;
  r.s = s;
  r.sigma = sigma;
  r.sigma_tilde = sigma * (1.0 + 1.0 / s);
  require(s + r.sigma_tilde <= 1.0 + 1e-15, ErrorCode::InvalidArgument,
          "verify_hadamard", "s + sigma (1 + 1/s) must not exceed 1");
  r.norm_s = norm(s);
  r.norm_mid = norm(s + sigma);
  r.norm_far = norm(s + r.sigma_tilde);
  const double rhs = r.norm_s * r.norm_far;
  const double lhs = r.norm_mid * r.norm_mid;
  r.slack = rhs > 0.0 ? (rhs - lhs) / rhs : 0.0;
  r.holds = r.slack >= kInterpolationSlack;
  return r;
}

}  // namespace

HadamardReport verify_hadamard(const FourierSeries& f, double s, double sigma,
                               int oversample) {
  return hadamard(
      [&](double w) { return sup_norm_estimate(f, w, oversample); }, s, sigma);
}

HadamardReport verify_hadamard(const ActionJet& h, double s, double sigma,
                               int oversample) {
  return hadamard(
      [&](double w) { return jet_sup_estimate(h, w, w, oversample); }, s,
      sigma);
}

MixedDomainReport verify_mixed_domain(const ActionJet& h, double s0, double s1,
                                      double t0, double rho, int oversample) {
  require(0.0 < s0 && s0 <= s1 && t0 > 0.0 && rho >= 0.0 && rho <= 1.0,
          ErrorCode::InvalidArgument, "verify_mixed_domain",
          "need 0 < s0 <= s1, t0 > 0 and rho in [0, 1]");
  MixedDomainReport r;
  r.s0 = s0;
  r.s1 = s1;
  r.t0 = t0;
  r.t1 = t0 * std::exp(s1 - s0);
  r.rho = rho;
  r.s = (1.0 - rho) * s0 + rho * s1;
  r.t = std::pow(t0, 1.0 - rho) * std::pow(r.t1, rho);
  r.lhs = jet_sup_estimate(h, r.s, r.t, oversample);
  r.rhs = std::pow(jet_sup_estimate(h, s0, t0, oversample), 1.0 - rho) *
          std::pow(jet_sup_estimate(h, s1, r.t1, oversample), rho);
  r.slack = r.rhs > 0.0 ? (r.rhs - r.lhs) / r.rhs : 0.0;
  r.holds = r.slack >= kInterpolationSlack;
  return r;
}

}  // namespace kam
