#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "kam/kolmogorov.hpp"
#include "support.hpp"

using namespace kam;
using namespace kam::testing;

namespace {

FrequencyVector golden() {
  Eigen::VectorXd a(2);
  a << 1.0, std::numbers::phi;
  return certify(a, 1.0, 200);
}

ActionJet quadratic_model(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& q,
                          double c, int degree, int order) {
  ActionJet k = ActionJet::linear(alpha, degree, order) + ActionJet::quadratic(q, degree, order);
  k[0] = FourierSeries::constant(static_cast<int>(alpha.size()), order, c);
  return k;
}

Eigen::MatrixXd twist_matrix() {
  Eigen::MatrixXd q(2, 2);
  q << 0.5, 0.1, 0.1, 0.7;
  return q;
}

}  // namespace

TEST_CASE("DOPRI5 on the harmonic oscillator") {
  const VectorField f = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy.resize(2);
    dy << y[1], -y[0];
  };
  Eigen::VectorXd y0(2);
  y0 << 1.0, 0.0;
  OdeStats stats;
  const Eigen::VectorXd y = integrate(f, y0, 0.0, 10.0, {}, &stats);
  CHECK(std::abs(y[0] - std::cos(10.0)) < 1e-10);
  CHECK(std::abs(y[1] + std::sin(10.0)) < 1e-10);
  CHECK(stats.accepted > 0);

  // Backward integration returns to the start.
  const Eigen::VectorXd back = integrate(f, y, 10.0, 0.0);
  CHECK((back - y0).cwiseAbs().maxCoeff() < 1e-10);

  // Looser tolerance takes fewer steps.
  OdeStats loose;
  integrate(f, y0, 0.0, 10.0, {1e-6, 1e-6, 1e-2, 1'000'000}, &loose);
  CHECK(loose.accepted < stats.accepted);
}

TEST_CASE("Hamiltonian field matches jet derivatives") {
  Rng rng(21);
  const ActionJet h = random_jet(rng, 2, 3, 6, 0.7);
  const HamiltonianField field(h);
  const int n = 2;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd z(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 4; ++i) z[i] = u(rng) * (i < 2 ? 3.0 : 0.5);
    std::vector<double> th{z[0], z[1]}, r{z[2], z[3]};
    CHECK(field.value(z) == doctest::Approx(evaluate(h, th, r)).epsilon(1e-12));
    Eigen::VectorXd dt, dr;
    field.gradient(z, dt, dr);
    for (int j = 0; j < n; ++j) {
      CHECK(dt[j] == doctest::Approx(evaluate(d_theta(h, j), th, r)).epsilon(1e-12));
      CHECK(dr[j] == doctest::Approx(evaluate(d_r(h, j), th, r)).epsilon(1e-12));
    }
  }
}

TEST_CASE("twist matrix of a quadratic model") {
  Eigen::VectorXd a(2);
  a << 1.0, std::numbers::phi;
  const ActionJet k = quadratic_model(a, twist_matrix(), 0.0, 3, 4);
  const TwistData t = twist(k);
  CHECK((t.Q - twist_matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(t.symmetry_defect < 1e-13);
  CHECK(t.condition > 1.0);
  CHECK_THROWS_AS(twist(ActionJet::linear(a, 1, 4)), Error);
}

TEST_CASE("flattening the quadratic part") {
  SUBCASE("constant K2 leaves K unchanged") {
    const auto alpha = golden();
    const ActionJet k = quadratic_model(alpha.alpha, twist_matrix(), 0.3, 3, 6);
    const Flattening f = flatten_quadratic(k, alpha);
    CHECK(f.generator.is_zero());
    CHECK(jet_max_diff(f.flat, k) == 0.0);
  }
  SUBCASE("one harmonic in one dimension") {
    Eigen::VectorXd a(1);
    a << 0.8;
    const FrequencyVector alpha = certify(a, 1.0, 10);
    const double eps = 0.1;
    const int order = 8;
    ActionJet k = ActionJet::linear(a, 3, order);
    k[2] = FourierSeries::constant(1, order, 0.5) +
           (eps / 2.0) * FourierSeries::cosine(1, order, std::vector<int>{1});
    const Flattening f = flatten_quadratic(k, alpha);
    const FourierSeries expected = (eps / (2.0 * 0.8)) * FourierSeries::sine(1, order, std::vector<int>{1});
    CHECK(max_abs_diff(f.generator[2], expected) < 1e-16);
    CHECK(f.theta_defect < 1e-11);
    CHECK(std::abs(f.flat[2].average() - 0.5) < 1e-15);
    CHECK(max_abs_diff(f.flat[1], FourierSeries::constant(1, order, 0.8)) < 1e-15);
    CHECK(f.flat[0].is_zero());
  }
  SUBCASE("random theta-dependent K2") {
    const auto alpha = golden();
    Rng rng(22);
    ActionJet k = quadratic_model(alpha.alpha, twist_matrix(), 0.0, 4, 16);
    const MonomialSet& mono = k.monomials();
    for (Index i = mono.first(2); i < mono.first(3); ++i) {
      k[i] += random_series(rng, 2, 16, 1.0, 2, true, 0.05);
    }
    for (Index i = mono.first(3); i < k.size(); ++i) {
      k[i] += random_series(rng, 2, 16, 1.0, 2, false, 0.05);
    }
    const Flattening f = flatten_quadratic(k, alpha);
    CHECK(f.theta_defect <= 1e-11);
    CHECK((twist(f.flat).Q - twist_matrix()).cwiseAbs().maxCoeff() < 1e-12);
    // Affine part untouched.
    CHECK(jet_max_diff(degree_range(f.flat, 0, 1), degree_range(k, 0, 1)) == 0.0);
  }
}

TEST_CASE("translation of actions") {
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  ActionJet h = ActionJet::quadratic(0.5 * Eigen::MatrixXd::Identity(1, 1), 2, 2);
  CHECK(jet_max_diff(translate_actions(h, zero), h) == 0.0);

  Eigen::VectorXd r0(1);
  r0 << 0.3;
  const ActionJet t = translate_actions(h, r0);
  CHECK(t[0].average().real() == doctest::Approx(0.045));
  CHECK(t[1].average().real() == doctest::Approx(0.3));
  CHECK(t[2].average().real() == doctest::Approx(0.5));

  Rng rng(23);
  const ActionJet g = random_jet(rng, 2, 4, 5, 0.5);
  Eigen::VectorXd r(2);
  r << 0.02, -0.03;
  CHECK(jet_max_diff(translate_actions(translate_actions(g, r), -r), g) < 1e-13);
  Eigen::VectorXd far = Eigen::VectorXd::Constant(2, 2.0);
  CHECK_THROWS_AS(translate_actions(g, far, 0.5), Error);
}

TEST_CASE("exact quadratic model: beta(R) = 2 Q R") {
  const auto alpha = golden();
  const ActionJet k = quadratic_model(alpha.alpha, twist_matrix(), 0.2, 3, 8);
  const auto x0 = TwistedConjugacy::initial(k);
  double worst = 0.0;
  for (double scale : {1e-3, -5e-4, 2e-4}) {
    Eigen::VectorXd r(2);
    r << scale, -0.7 * scale;
    const OffsetResult o = offset_map(k, alpha, x0, r, {});
    CHECK(o.newton.status == NewtonStatus::Converged);
    worst = std::max(worst, (o.beta - 2.0 * twist_matrix() * r).cwiseAbs().maxCoeff());
  }
  CHECK(worst <= 1e-9);
  const OffsetResult zero = offset_map(k, alpha, x0, Eigen::VectorXd::Zero(2), {});
  CHECK(zero.beta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("invariant torus of a pure offset") {
  const auto alpha = golden();
  const ActionJet k = quadratic_model(alpha.alpha, twist_matrix(), 0.0, 3, 8);
  Eigen::VectorXd beta0(2);
  beta0 << 1e-4, -2e-4;
  const ActionJet h = k + ActionJet::linear(beta0, 3, 8);
  KolmogorovConfig config;
  config.verification.samples = 8;
  const InvariantTorusResult res = solve_invariant_torus(h, alpha, config);
  const Eigen::VectorXd expected = -(2.0 * twist_matrix()).inverse() * beta0;
  CHECK((res.R_star - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(res.beta.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(res.verification.inside_validity);
  CHECK(res.verification.max_dev < 1e-9);
}

TEST_CASE("zero section of a normal form is invariant") {
  const auto alpha = golden();
  const ActionJet k = quadratic_model(alpha.alpha, twist_matrix(), 0.0, 3, 8);
  KolmogorovConfig config;
  config.verification.samples = 16;
  const InvariantTorusResult res = solve_invariant_torus(k, alpha, config);
  CHECK(res.R_star.cwiseAbs().maxCoeff() == 0.0);
  CHECK(res.outer.size() == 1);
  CHECK(res.verification.max_dev <= 1e-10);
  CHECK(res.verification.energy_drift <= 1e-9);

  VerificationOptions rotated = config.verification;
  rotated.rotation = 0.37;
  const VerificationReport other = verify_invariance(res, k, rotated);
  CHECK(other.max_dev <= 1e-10);
  CHECK(other.samples == res.verification.samples);
}

TEST_CASE("perturbed torus at low resolution") {
  const auto alpha = golden();
  const int order = 12;
  ActionJet h = ActionJet::linear(alpha.alpha, 3, order) +
                ActionJet::quadratic(0.5 * Eigen::MatrixXd::Identity(2, 2), 3, order);
  h[0] += 1e-3 * (FourierSeries::cosine(2, order, std::vector<int>{1, 0}) +
                  FourierSeries::cosine(2, order, std::vector<int>{1, 1}));
  KolmogorovConfig config;
  config.verification.samples = 8;
  const InvariantTorusResult res = solve_invariant_torus(h, alpha, config);
  MESSAGE("R* = " << res.R_star.transpose() << " outer " << res.outer.size()
                  << " dev " << res.verification.max_dev);
  CHECK(res.beta.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(res.verification.inside_validity);
  CHECK(res.verification.max_dev <= 1e-6);
  CHECK(res.verification.energy_drift <= 1e-9);
  CHECK(min_jacobian_determinant(res.phi_inv) > 0.5);

  // Warm starts do not change the answer.
  config.warm_start = false;
  const InvariantTorusResult cold = solve_invariant_torus(h, alpha, config);
  CHECK((cold.R_star - res.R_star).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("flattened torus maps back through the generator flow") {
  const auto alpha = golden();
  const int order = 12;
  ActionJet h = ActionJet::linear(alpha.alpha, 3, order) +
                ActionJet::quadratic(0.5 * Eigen::MatrixXd::Identity(2, 2), 3, order);
  h[0] += 1e-3 * FourierSeries::cosine(2, order, std::vector<int>{1, 0});
  h[h.monomials().pair(0, 0)] += 0.02 * FourierSeries::cosine(2, order, std::vector<int>{1, 1});
  h[h.monomials().pair(0, 1)] += 0.02 * FourierSeries::sine(2, order, std::vector<int>{0, 1});
  KolmogorovConfig config;
  config.verification.samples = 12;
  config.verification.threads = 3;
  const InvariantTorusResult res = solve_invariant_torus(h, alpha, config);
  CHECK_FALSE(res.generator.is_zero());
  CHECK(res.verification.inside_validity);
  CHECK(res.verification.max_dev <= 1e-9);

  // Thread count does not change the report.
  VerificationOptions serial = config.verification;
  serial.threads = 1;
  const VerificationReport again = verify_invariance(res, h, serial);
  CHECK(again.max_dev == res.verification.max_dev);
  CHECK(again.energy_drift == res.verification.energy_drift);
}
