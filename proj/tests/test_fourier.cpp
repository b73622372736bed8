#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "kam/action_jet.hpp"
#include "kam/grid.hpp"
#include "support.hpp"

using namespace kam;
using kam::testing::Rng;

namespace {

constexpr std::array<int, 1> k1{1};
constexpr std::array<int, 1> k2{2};
constexpr std::array<int, 1> k0{0};

}  // namespace

TEST_CASE("product of cosines reduces to a sum") {
  const auto c = FourierSeries::cosine(1, 3, k1);
  const auto p = multiply(c, c);
  CHECK(p.order() == 6);
  CHECK(std::abs(p.coeff(k0) - 0.5) < 1e-15);
  CHECK(std::abs(p.coeff(k2) - 0.25) < 1e-15);
  CHECK(std::abs(p.coeff(std::array{-2}) - 0.25) < 1e-15);
  CHECK(p.is_real());
  CHECK(p.nonzeros() == 3);
}

TEST_CASE("product with zero and of exponentials") {
  Rng rng(1);
  const auto f = kam::testing::random_series(rng, 2, 4, 0.3);
  CHECK(multiply(f, FourierSeries(2, 4)).is_zero());

  const auto e1 = FourierSeries::exponential(2, 2, std::array{1, 0});
  const auto e2 = FourierSeries::exponential(2, 2, std::array{0, 1});
  const auto p = multiply(e1, e2);
  CHECK(p.nonzeros() == 1);
  CHECK(std::abs(p.coeff(std::array{1, 1}) - 1.0) < 1e-15);
}

TEST_CASE("products match the textbook convolution on both paths") {
  Rng rng(7);
  for (int dim : {1, 2}) {
    for (int order : {3, 12}) {
      const auto a = kam::testing::random_series(rng, dim, order, 0.1);
      const auto b = kam::testing::random_series(rng, dim, order + 1, 0.1);
      const auto fast = multiply(a, b);
      const auto slow = kam::testing::naive_product(a, b);
      const double scale = slow.coeffs().cwiseAbs().maxCoeff();
      CHECK(kam::testing::max_abs_diff(fast, slow) <= 1e-12 * scale);
      CHECK(fast.symmetry_defect() < 1e-14 * scale);
    }
  }
}

TEST_CASE("truncated product drops high modes") {
  const auto c = FourierSeries::cosine(1, 3, k1);
  const auto p = multiply(c, c, 1);
  CHECK(p.order() == 1);
  CHECK(std::abs(p.coeff(k0) - 0.5) < 1e-15);
  CHECK(std::abs(p.coeff(k1)) == 0.0);
}

TEST_CASE("partial derivatives") {
  const auto s = FourierSeries::sine(1, 2, k1);
  const auto c = FourierSeries::cosine(1, 2, k1);
  CHECK(kam::testing::max_abs_diff(partial_derivative(s, 0), c) < 1e-16);
  CHECK(partial_derivative(FourierSeries::constant(1, 2, 3.0), 0).is_zero());

  const std::array<int, 2> k{1, -1};
  const auto d = partial_derivative(FourierSeries::cosine(2, 2, k), 1);
  CHECK(kam::testing::max_abs_diff(d, FourierSeries::sine(2, 2, k)) < 1e-16);
  CHECK_THROWS_AS(partial_derivative(s, 1), Error);

  Rng rng(3);
  const auto f = kam::testing::random_series(rng, 2, 5, 0.2);
  CHECK(partial_derivative(f, 0).average() == 0.0);
  CHECK(partial_derivative(f, 1).symmetry_defect() < 1e-15);
}

TEST_CASE("Lie derivatives") {
  Eigen::VectorXd a1(1);
  a1 << 0.7;
  const auto l = lie_derivative(FourierSeries::sine(1, 2, k1), a1);
  CHECK(kam::testing::max_abs_diff(l, 0.7 * FourierSeries::cosine(1, 2, k1)) < 1e-16);
  CHECK(lie_derivative(FourierSeries::constant(1, 2, 1.0), a1).is_zero());

  Eigen::VectorXd a2(2);
  a2 << 1.0, 2.0;
  const std::array<int, 2> k{1, -1};
  const auto e = lie_derivative(FourierSeries::exponential(2, 2, k), a2);
  CHECK(std::abs(e.coeff(k) - Complex(0.0, -1.0)) < 1e-16);
}

TEST_CASE("majorant norm") {
  const auto e = FourierSeries::exponential(1, 2, k1);
  CHECK(majorant_norm(e, 0.4) == doctest::Approx(std::exp(0.4)).epsilon(1e-15));
  CHECK(majorant_norm(FourierSeries(2, 3), 0.4) == 0.0);
  CHECK(majorant_norm(FourierSeries::cosine(1, 2, k1), 0.5) ==
        doctest::Approx(1.6487212707001282).epsilon(1e-14));

  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = kam::testing::random_series(rng, 2, 4, 0.2);
    const auto g = kam::testing::random_series(rng, 2, 4, 0.2);
    double last = 0.0;
    for (double s : {0.0, 0.1, 0.3, 0.7, 1.0}) {
      const double v = majorant_norm(f, s);
      CHECK(v >= last);
      last = v;
      CHECK(majorant_norm(multiply(f, g), s) <=
            majorant_norm(f, s) * majorant_norm(g, s) * (1 + 1e-14));
    }
  }
}

TEST_CASE("grid round trip and aliasing guard") {
  Rng rng(5);
  for (int dim : {1, 2, 3}) {
    const int order = dim == 3 ? 3 : 8;
    const auto f = kam::testing::random_series(rng, dim, order, 0.1);
    const int side = oversampled_side(order);
    const auto g = from_grid(to_grid(f, side), dim, side, order);
    CHECK(kam::testing::max_abs_diff(f, g) <=
          1e-13 * f.coeffs().cwiseAbs().maxCoeff());
    CHECK_THROWS_AS(to_grid(f, 2 * order), Error);
  }
  CHECK(to_grid(FourierSeries(2, 4), 9).isZero(0.0));
  CHECK(oversampled_side(32) == 135);
}

TEST_CASE("grid samples agree with pointwise evaluation") {
  Rng rng(9);
  const auto f = kam::testing::random_series(rng, 2, 5, 0.2);
  const int side = 12;
  const auto values = to_grid(f, side);
  const Grid grid{2, side};
  const Eigen::MatrixXd nodes = grid.nodes();
  const FourierSeries* list[] = {&f};
  const Eigen::MatrixXd direct = evaluate_real(list, nodes);
  for (Index p = 0; p < nodes.cols(); ++p) {
    const double theta[] = {nodes(0, p), nodes(1, p)};
    CHECK(std::abs(values[p].real() - evaluate(f, theta)) < 1e-12);
    CHECK(std::abs(values[p].real() - direct(p, 0)) < 1e-12);
  }
}

TEST_CASE("re-expansion reports the tail") {
  // 1/(1 - 0.5 e^{i theta}) has coefficients 0.5^k for k >= 0.
  const int side = 64;
  Eigen::VectorXcd values(side);
  for (int i = 0; i < side; ++i) {
    const double t = 2 * std::numbers::pi * i / side;
    values[i] = 1.0 / (1.0 - 0.5 * std::polar(1.0, t));
  }
  const auto r = reexpand(values, 1, side, 8, false);
  CHECK(std::abs(r.series.coeff(std::array{5}) - std::pow(0.5, 5)) < 1e-14);
  const double tail = std::pow(0.25, 9) / (1 - 0.25);
  CHECK(r.tail_energy == doctest::Approx(tail).epsilon(1e-6));
}

TEST_CASE("jet norm") {
  Eigen::VectorXd a(1);
  a << -1.5;
  CHECK(jet_norm(ActionJet::linear(a, 2, 2), 0.3) == doctest::Approx(0.45));
  CHECK(jet_norm(ActionJet::constant(1, 2, 2, 1.0), 0.3) == doctest::Approx(1.0));
  ActionJet h(1, 2, 2);
  h[2] = FourierSeries::cosine(1, 2, k1);
  CHECK(jet_norm(h, 0.5) == doctest::Approx(0.25 * std::exp(0.5)).epsilon(1e-15));

  Rng rng(12);
  const auto j = kam::testing::random_jet(rng, 2, 3, 4, 0.3);
  CHECK(jet_norm(j, 0.2) <= jet_norm(j, 0.25));
}

TEST_CASE("Poisson bracket examples") {
  Eigen::VectorXd a(1);
  a << 0.7;
  ActionJet f(1, 2, 3);
  f[0] = FourierSeries::sine(1, 3, k1);
  const auto b = poisson_bracket(ActionJet::linear(a, 2, 3), f);
  CHECK(kam::testing::max_abs_diff(b[0], 0.7 * FourierSeries::cosine(1, 3, k1)) < 1e-16);

  Rng rng(13);
  const auto g = kam::testing::random_jet(rng, 2, 3, 3, 0.3, 2);
  double m = 0.0;
  const auto gg = poisson_bracket(g, g);
  for (Index i = 0; i < gg.size(); ++i) m = std::max(m, majorant_norm(gg[i], 0.0));
  CHECK(m < 1e-13);

  Eigen::MatrixXd q(1, 1);
  q << 0.5;
  ActionJet c(1, 2, 3);
  c[0] = FourierSeries::cosine(1, 3, k1);
  const auto rb = poisson_bracket(ActionJet::quadratic(q, 2, 3), c);
  CHECK(kam::testing::max_abs_diff(rb[1], -1.0 * FourierSeries::sine(1, 3, k1)) < 1e-16);
  CHECK(rb[0].is_zero());
}

TEST_CASE("Poisson bracket is the derivative along the flow") {
  // {F, G}(z) = d/dt G(Phi_F^t z) at t = 0, with the vector field
  // theta' = dF/dr, r' = -dF/dtheta, all derivatives by central differences.
  Rng rng(17);
  const auto f = kam::testing::random_jet(rng, 2, 2, 3, 0.4, 2);
  const auto g = kam::testing::random_jet(rng, 2, 2, 3, 0.4, 2);
  const auto fg = poisson_bracket(f.with_degree(4), g.with_degree(4), 6);
  std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> action(-0.3, 0.3);
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    std::array<double, 4> z{angle(rng), angle(rng), action(rng), action(rng)};
    auto eval = [](const ActionJet& j, const std::array<double, 4>& p) {
      return evaluate(j, std::span(p.data(), 2), std::span(p.data() + 2, 2));
    };
    std::array<double, 4> field{};
    for (int a = 0; a < 4; ++a) {
      auto zp = z, zm = z;
      zp[a] += h;
      zm[a] -= h;
      const double d = (eval(f, zp) - eval(f, zm)) / (2 * h);
      // theta' = dF/dr, r' = -dF/dtheta
      if (a < 2) field[a + 2] = -d; else field[a - 2] = d;
    }
    auto zp = z, zm = z;
    for (int a = 0; a < 4; ++a) {
      zp[a] += h * field[a];
      zm[a] -= h * field[a];
    }
    const double oracle = (eval(g, zp) - eval(g, zm)) / (2 * h);
    CHECK(std::abs(eval(fg, z) - oracle) < 1e-7);
  }
}

TEST_CASE("Poisson bracket satisfies the Jacobi identity") {
  Rng rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    // Degree-2 jets with low modes, held in a container large enough that no
    // truncation happens along the way.
    const auto f = kam::testing::random_jet(rng, 2, 2, 2, 0.3).with_degree(4).with_order(8);
    const auto g = kam::testing::random_jet(rng, 2, 2, 2, 0.3).with_degree(4).with_order(8);
    const auto h = kam::testing::random_jet(rng, 2, 2, 2, 0.3).with_degree(4).with_order(8);
    const auto sum = poisson_bracket(f, poisson_bracket(g, h)) +
                     poisson_bracket(g, poisson_bracket(h, f)) +
                     poisson_bracket(h, poisson_bracket(f, g));
    CHECK(jet_norm(sum, 0.0) < 1e-11);
  }
}

TEST_CASE("reality closure of jet operations") {
  Rng rng(23);
  const auto f = kam::testing::random_jet(rng, 2, 3, 4, 0.3);
  const auto g = kam::testing::random_jet(rng, 2, 3, 4, 0.3);
  const auto b = poisson_bracket(f, g);
  const auto p = multiply(f, g);
  for (Index i = 0; i < b.size(); ++i) {
    CHECK(b[i].is_real());
    CHECK(b[i].symmetry_defect() < 1e-14 * (1 + b[i].coeffs().cwiseAbs().maxCoeff()));
    CHECK(p[i].symmetry_defect() < 1e-14 * (1 + p[i].coeffs().cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("monomial bookkeeping") {
  const auto m = MonomialSet::get(2, 3);
  CHECK(m->size() == 10);
  CHECK(m->first(2) == 3);
  CHECK(m->degree_of(m->pair(0, 1)) == 2);
  CHECK(m->sum(m->pair(0, 0), m->pair(1, 1)) == -1);
  const std::array<int, 2> e{1, 2};
  CHECK(m->exponent(m->index(e))[1] == 2);
}

TEST_CASE("batched real evaluation matches pointwise sums") {
  Rng rng(29);
  std::uniform_real_distribution<double> angle(-1.0, 7.0);
  for (int dim : {1, 2, 3}) {
    const int order = dim == 3 ? 4 : 12;
    // Dense series take the matrix-product path, sparse ones the term loop.
    const auto dense = kam::testing::random_series(rng, dim, order, 0.1);
    const auto sparse = FourierSeries::cosine(dim, order, std::vector<int>(dim, 1), 0.3);
    const auto lower = kam::testing::random_series(rng, dim, order / 2, 0.1);
    Eigen::MatrixXd points(dim, 40);
    for (Index p = 0; p < points.cols(); ++p) {
      for (int j = 0; j < dim; ++j) points(j, p) = angle(rng);
    }
    const FourierSeries* list[] = {&dense, &sparse, &lower};
    const Eigen::MatrixXd values = evaluate_real(list, points);
    for (Index p = 0; p < points.cols(); ++p) {
      std::vector<double> theta(points.col(p).data(), points.col(p).data() + dim);
      for (int s = 0; s < 3; ++s) {
        CHECK(std::abs(values(p, s) - evaluate(*list[s], theta)) < 1e-12);
      }
    }
  }
}
