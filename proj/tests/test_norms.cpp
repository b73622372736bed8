#include <doctest.h>

#include <array>
#include <cmath>

#include "kam/norms.hpp"
#include "support.hpp"

using namespace kam;
using kam::testing::Rng;

TEST_CASE("sup estimate of a single exponential") {
  const auto e = FourierSeries::exponential(1, 3, std::array{1});
  for (double s : {0.1, 0.3, 0.7}) {
    CHECK(std::abs(sup_norm_estimate(e, s) - std::exp(s)) < 1e-12);
  }
  const auto c = FourierSeries::constant(2, 2, Complex(0.0, -2.5));
  CHECK(sup_norm_estimate(c, 0.4) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(sup_norm_estimate(FourierSeries(2, 2), 0.4) == 0.0);
}

TEST_CASE("sup estimate never exceeds the majorant") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 1 + trial % 2;
    const auto f = kam::testing::random_series(rng, dim, 4, 0.3);
    const double s = 0.1 + 0.005 * trial;
    const double sup = sup_norm_estimate(f, s);
    CHECK(sup <= majorant_norm(f, s) * (1 + 1e-12));
    CHECK(sup >= sup_norm_estimate(f, 0.0) * (1 - 1e-12));
  }
}

TEST_CASE("jet sup estimate") {
  ActionJet h(1, 2, 2);
  h[2] = FourierSeries::exponential(1, 2, std::array{-1});
  CHECK(jet_sup_estimate(h, 0.3, 0.5) ==
        doctest::Approx(0.25 * std::exp(0.3)).epsilon(1e-12));
  Rng rng(37);
  const auto j = kam::testing::random_jet(rng, 2, 2, 2, 0.3);
  CHECK(jet_sup_estimate(j, 0.2, 0.2) <= jet_norm(j, 0.2) * (1 + 1e-12));
}

TEST_CASE("Hadamard inequality on exact cases") {
  const auto e = FourierSeries::exponential(1, 2, std::array{1});
  const auto r = verify_hadamard(e, 0.3, 0.1);
  CHECK(r.holds);
  CHECK(r.sigma_tilde == doctest::Approx(0.1 * (1 + 1 / 0.3)));
  // e^{2(s+sigma)} <= e^{s} e^{s+sigma_tilde}
  CHECK(r.slack == doctest::Approx(1 - std::exp(2 * 0.1 - r.sigma_tilde)).epsilon(1e-9));

  const auto c = FourierSeries::constant(2, 2, 3.0);
  const auto rc = verify_hadamard(c, 0.3, 0.1);
  CHECK(rc.holds);
  CHECK(std::abs(rc.slack) < 1e-15);
  CHECK_THROWS_AS(verify_hadamard(e, 0.5, 0.3), Error);
}

TEST_CASE("Hadamard inequality on random polynomials and jets") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = kam::testing::random_series(rng, 1 + trial % 2, 3, 0.2);
    CHECK(verify_hadamard(f, 0.3, 0.05).holds);
  }
  const auto j = kam::testing::random_jet(rng, 1, 2, 2, 0.2);
  CHECK(verify_hadamard(j, 0.4, 0.05).holds);
}

TEST_CASE("mixed strip and polydisc interpolation") {
  Rng rng(43);
  for (int trial = 0; trial < 5; ++trial) {
    const auto j = kam::testing::random_jet(rng, 1, 3, 3, 0.2);
    const auto r = verify_mixed_domain(j, 0.1, 0.5, 0.2, 0.3 + 0.1 * trial);
    CHECK(r.t1 == doctest::Approx(0.2 * std::exp(0.4)));
    CHECK(r.holds);
  }
}
