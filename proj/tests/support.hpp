#pragma once

#include <cmath>
#include <random>

#include "kam/action_jet.hpp"
#include "kam/fourier_series.hpp"

namespace kam::testing {

using Rng = std::mt19937_64;

/// Real series with c_k ~ N(0,1)(1+i) e^{-decay |k|_1} on modes |k_j| <= active.
inline FourierSeries random_series(Rng& rng, int dim, int order, double decay,
                                   int active = -1, bool zero_average = false,
                                   double scale = 1.0) {
  if (active < 0) active = order;
  std::normal_distribution<double> normal;
  FourierSeries f(dim, order);
  const Box& box = f.box();
  for (Index i = 0; i < box.size(); ++i) {
    bool inside = true;
    for (int j = 0; j < dim; ++j) inside = inside && std::abs(box.mode(i, j)) <= active;
    if (!inside) continue;
    const double w = scale * std::exp(-decay * box.l1(i));
    f[i] = Complex(normal(rng), normal(rng)) * w;
  }
  f.symmetrize();
  if (zero_average) f[box.center()] = 0.0;
  return f;
}

inline ActionJet random_jet(Rng& rng, int dim, int degree, int order,
                            double decay, int active = -1, double scale = 1.0) {
  ActionJet h(dim, degree, order);
  for (Index i = 0; i < h.size(); ++i) {
    h[i] = random_series(rng, dim, order, decay, active, false, scale);
  }
  return h;
}

/// Textbook convolution over every pair of coefficients.
inline FourierSeries naive_product(const FourierSeries& a, const FourierSeries& b) {
  const int dim = a.dim();
  FourierSeries out(dim, a.order() + b.order(), a.is_real() && b.is_real());
  std::vector<int> k(static_cast<std::size_t>(dim));
  for (Index i = 0; i < a.box().size(); ++i) {
    for (Index j = 0; j < b.box().size(); ++j) {
      for (int t = 0; t < dim; ++t) {
        k[static_cast<std::size_t>(t)] = a.box().mode(i, t) + b.box().mode(j, t);
      }
      out[out.box().index(k)] += a[i] * b[j];
    }
  }
  return out;
}

inline double max_abs_diff(const FourierSeries& a, const FourierSeries& b) {
  const int order = std::max(a.order(), b.order());
  return (a.with_order(order).coeffs() - b.with_order(order).coeffs())
      .cwiseAbs()
      .maxCoeff();
}

inline double jet_max_diff(const ActionJet& a, const ActionJet& b) {
  const ActionJet d = a - b;
  double m = 0.0;
  for (Index i = 0; i < d.size(); ++i) {
    if (d[i].coeffs().size() > 0) m = std::max(m, d[i].coeffs().cwiseAbs().maxCoeff());
  }
  return m;
}

}  // namespace kam::testing
