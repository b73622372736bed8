#include <doctest.h>

#include <cmath>
#include <numbers>

#include "kam/newton.hpp"
#include "support.hpp"

using namespace kam;
using namespace kam::testing;

namespace {

FrequencyVector golden() {
  Eigen::VectorXd a(2);
  a << 1.0, std::numbers::phi;
  return certify(a, 1.0, 200);
}

// alpha . r + |r|^2 / 2
ActionJet integrable(const FrequencyVector& alpha, int degree, int order) {
  const int n = static_cast<int>(alpha.alpha.size());
  return ActionJet::linear(alpha.alpha, degree, order) +
         ActionJet::quadratic(0.5 * Eigen::MatrixXd::Identity(n, n), degree, order);
}

FiberedSymplectomorphism small_map(Rng& rng, int n, int order, double scale) {
  FiberedSymplectomorphism g = FiberedSymplectomorphism::identity(n, order);
  for (int j = 0; j < n; ++j) {
    FourierSeries v = random_series(rng, n, order, 1.0, 3, false, scale);
    v[v.box().center()] -= v.coeffs().sum();
    g.phi.v[static_cast<std::size_t>(j)] = v;
  }
  g.rho.potential = random_series(rng, n, order, 1.0, 3, true, scale);
  return g;
}

// Normal-form jet: alpha . r + |r|^2/2 plus small theta-dependent terms of
// degree >= 2.
ActionJet perturbed_normal_form(Rng& rng, const FrequencyVector& alpha, int degree,
                                int order, double scale) {
  ActionJet k = integrable(alpha, degree, order);
  for (Index i = k.monomials().first(2); i < k.size(); ++i) {
    k[i] += random_series(rng, 2, order, 1.0, 2, false, scale);
  }
  return k;
}

}  // namespace

TEST_CASE("defect vanishes on exact conjugacies") {
  const auto alpha = golden();
  const ActionJet k = integrable(alpha, 3, 8);
  auto x = TwistedConjugacy::initial(k);
  CHECK(defect(k, x, 0.3) == 0.0);
  CHECK(x.normal_form_defect(alpha.alpha) == 0.0);

  Eigen::VectorXd beta(2);
  beta << 1e-3, -2e-3;
  x.beta = beta;
  CHECK(defect(k + ActionJet::linear(beta, 3, 8), x, 0.3) < 1e-18);

  Rng rng(1);
  TwistedConjugacy y{perturbed_normal_form(rng, alpha, 3, 16, 1e-2), small_map(rng, 2, 16, 1e-3), beta};
  const ActionJet h = assemble(y);
  CHECK(defect(h, y, 0.3) < 1e-12);
}

TEST_CASE("pure offset is absorbed in one step") {
  const auto alpha = golden();
  const ActionJet k = integrable(alpha, 3, 8);
  Eigen::VectorXd beta(2);
  beta << 3e-4, -1e-4;
  const ActionJet h = k + ActionJet::linear(beta, 3, 8);
  StepReport report;
  const auto next = newton_step(h, TwistedConjugacy::initial(k), alpha, 0.3, 0.2, &report);
  // (alpha + beta) - alpha rounds, so "exact" means to one ulp of alpha.
  CHECK((report.delta_beta - beta).cwiseAbs().maxCoeff() < 1e-16);
  CHECK(report.delta_c == 0.0);
  CHECK(report.step.dS.is_zero());
  CHECK(report.step.dphi.norm(0.0) == 0.0);
  CHECK(report.step.dK.is_zero());
  CHECK(defect(h, next, 0.3) == 0.0);
}

TEST_CASE("single harmonic order-0 residual") {
  // n = 1, K = c + alpha r + r^2/2, H = K + eps cos(theta)
  Eigen::VectorXd a(1);
  a << 0.7;
  const FrequencyVector alpha = certify(a, 1.0, 10);
  const int order = 6;
  ActionJet k = ActionJet::linear(a, 2, order) +
                ActionJet::quadratic(0.5 * Eigen::MatrixXd::Identity(1, 1), 2, order);
  k[0] = FourierSeries::constant(1, order, 0.25);
  const double eps = 1e-3;
  ActionJet h = k;
  h[0] += eps * FourierSeries::cosine(1, order, std::vector<int>{1});

  StepReport report;
  newton_step(h, TwistedConjugacy::initial(k), alpha, 0.3, 0.2, &report);
  CHECK(std::abs(report.delta_beta[0]) < 1e-16);
  CHECK(std::abs(report.delta_c) < 1e-16);
  const FourierSeries expected = (eps / 0.7) * FourierSeries::sine(1, order, std::vector<int>{1});
  CHECK(max_abs_diff(report.step.dS, expected) < 1e-16);
  // order 1: L phi = T rho = 2 (1/2) (eps/alpha) cos(theta) ... normalized phi(0) = 0
  FourierSeries phi = (eps / (0.7 * 0.7)) * FourierSeries::sine(1, order, std::vector<int>{1});
  CHECK(max_abs_diff(report.step.dphi.v[0], phi) < 1e-16);
}

TEST_CASE("linearized residual after one step is quadratic") {
  const auto alpha = golden();
  Rng rng(2);
  const int order = 16;
  const ActionJet k = integrable(alpha, 3, order);
  const TwistedConjugacy x0 = TwistedConjugacy::initial(k);
  double prev_ratio = 0.0;
  for (double scale : {1e-3, 1e-4}) {
    Rng local(3);
    TwistedConjugacy star{perturbed_normal_form(local, alpha, 3, order, scale),
                          small_map(local, 2, order, scale), Eigen::VectorXd::Constant(2, scale)};
    const ActionJet h = assemble(star);
    const double d0 = defect(h, x0, 0.4);
    const auto x1 = newton_step(h, x0, alpha, 0.35, 0.05);
    const double d1 = defect(h, x1, 0.35);
    const double ratio = d1 / (d0 * d0);
    MESSAGE("scale " << scale << " d0 " << d0 << " d1 " << d1);
    CHECK(d1 < d0 * 1e-1);
    if (prev_ratio > 0.0) CHECK(ratio < 10.0 * prev_ratio);
    prev_ratio = ratio;
  }
}

TEST_CASE("manufactured conjugacy is recovered") {
  const auto alpha = golden();
  Rng rng(4);
  const int order = 16, degree = 3;
  TwistedConjugacy star{perturbed_normal_form(rng, alpha, degree, order, 1e-3),
                        small_map(rng, 2, order, 1e-3), Eigen::VectorXd::Zero(2)};
  star.beta << 1e-3, -5e-4;
  const ActionJet h = assemble(star);
  const NewtonSchedule schedule{0.1, 0.1, 10, 1e-12};
  const NewtonResult result =
      run_newton(h, TwistedConjugacy::initial(integrable(alpha, degree, order)), alpha, schedule);
  CHECK(result.status == NewtonStatus::Converged);
  CHECK(result.trace.steps() <= 8);
  CHECK((result.x.beta - star.beta).cwiseAbs().maxCoeff() < 1e-9);
  for (int j = 0; j < 2; ++j) {
    CHECK(max_abs_diff(result.x.G.phi.v[static_cast<std::size_t>(j)],
                       star.G.phi.v[static_cast<std::size_t>(j)]) < 1e-8);
  }
  CHECK(max_abs_diff(result.x.G.rho.potential, star.G.rho.potential) < 1e-8);
  CHECK(jet_max_diff(result.x.K, star.K) < 1e-8);
  CHECK(result.trace.quadratic_signature());
  for (const StepRecord& r : result.trace.records) CHECK(r.bound_holds);
  const std::string csv = result.trace.to_csv();
  CHECK(csv.rfind("k,s_k,sigma_k,defect,step_norm,delta_beta_1,delta_beta_2,delta_c\n", 0) == 0);
}

TEST_CASE("unperturbed input converges in zero steps") {
  const auto alpha = golden();
  const ActionJet k = integrable(alpha, 3, 8);
  const NewtonResult result = run_newton(k, TwistedConjugacy::initial(k), alpha, {});
  CHECK(result.status == NewtonStatus::Converged);
  CHECK(result.trace.steps() == 0);
}

TEST_CASE("large perturbation is reported as divergence") {
  const auto alpha = golden();
  const int order = 12;
  const ActionJet k = integrable(alpha, 3, order);
  ActionJet h = k;
  h[0] += 1.0 * FourierSeries::cosine(2, order, std::vector<int>{1, 0});
  h[0] += 1.0 * FourierSeries::cosine(2, order, std::vector<int>{1, 1});
  const NewtonResult r = run_newton(h, TwistedConjugacy::initial(k), alpha, {0.3, 0.2, 12, 1e-12});
  CHECK(r.status == NewtonStatus::Diverged);
  CHECK_FALSE(r.trace.records.empty());
  CHECK(std::isfinite(r.trace.records.front().defect));
  // A failed step (certificate, aliasing) keeps its reason.
  if (r.failure) {
    CHECK_FALSE(r.failure->message.empty());
  }
}

TEST_CASE("offset linearity") {
  const auto alpha = golden();
  Rng rng(5);
  const int order = 16;
  TwistedConjugacy star{perturbed_normal_form(rng, alpha, 3, order, 1e-3),
                        small_map(rng, 2, order, 1e-3), Eigen::VectorXd::Zero(2)};
  const ActionJet h = assemble(star);
  Eigen::VectorXd extra(2);
  extra << 2e-5, -3e-5;
  const ActionJet hb = h + ActionJet::linear(extra, 3, order);
  const auto x0 = TwistedConjugacy::initial(integrable(alpha, 3, order));
  const NewtonResult a = run_newton(h, x0, alpha, {});
  const NewtonResult b = run_newton(hb, x0, alpha, {});
  REQUIRE(a.status == NewtonStatus::Converged);
  REQUIRE(b.status == NewtonStatus::Converged);
  CHECK((b.x.beta - a.x.beta - extra).cwiseAbs().maxCoeff() <= 1e-11);
  CHECK(jet_max_diff(a.x.K, b.x.K) <= 1e-11);
  CHECK(difference(b.x, a.x).dphi.norm(0.0) <= 1e-11);
}

TEST_CASE("radius formulas") {
  const RadiusEstimate r = theoretical_radius(1.0, 1.0, 1.0, 1.0, 0.3, 0.5, 0.1);
  CHECK(r.eps_main == doctest::Approx(std::exp2(-16.0) * std::pow(0.5, 4.0) * 0.1).epsilon(1e-14));
  const RadiusEstimate r2 = theoretical_radius(2.0, 1.0, 1.0, 1.0, 0.3, 0.5, 0.1);
  CHECK(r2.eps_main == doctest::Approx(r.eps_main / 4.0).epsilon(1e-14));
  CHECK(r.eps_domain == doctest::Approx(std::exp2(-24.0) / 2.0 * std::pow(0.8, 6.0)).epsilon(1e-14));
  CHECK(r.eps_domain <= r.eps_main_at_opt);
  CHECK(r.sigma_opt + r.s_opt == doctest::Approx(0.8));
  CHECK_THROWS_AS(theoretical_radius(0.5, 1.0, 1.0, 1.0, 0.3, 0.5, 0.1), Error);
  CHECK_THROWS_AS(theoretical_radius(1.0, 1.0, 1.0, 1.0, 0.3, 0.5, 0.4), Error);
}

TEST_CASE("second derivative vanishes off the G directions") {
  const auto alpha = golden();
  Rng rng(6);
  const int order = 10;
  TwistedConjugacy x{perturbed_normal_form(rng, alpha, 3, order, 1e-2),
                     small_map(rng, 2, order, 1e-3), Eigen::VectorXd::Zero(2)};
  TangentVector zero = zero_tangent(x);
  TangentVector dk = zero_tangent(x);
  dk.dK = random_jet(rng, 2, 3, order, 1.0, 2, 1e-2);
  dk.dbeta = Eigen::VectorXd::Constant(2, 1e-3);
  CHECK(second_derivative_bound(x, zero, dk, 0.3, 0.1) == 0.0);
  CHECK(second_derivative(x, dk, dk).is_zero());

  TangentVector dg = zero_tangent(x);
  dg.dphi = small_map(rng, 2, order, 1e-3).phi;
  dg.dS = random_series(rng, 2, order, 1.0, 2, true, 1e-3);
  const double c2 = second_derivative_bound(x, dg, dg, 0.3, 0.1);
  CHECK(c2 > 0.0);
  CHECK(std::isfinite(c2));

  // Bilinearity.
  TangentVector dg2 = dg;
  dg2.dphi.v[0] *= 2.0;
  dg2.dphi.v[1] *= 2.0;
  dg2.dS *= 2.0;
  CHECK(jet_max_diff(second_derivative(x, dg2, dk), 2.0 * second_derivative(x, dg, dk)) < 1e-15);
}

TEST_CASE("schedule widths") {
  const NewtonSchedule sc{0.3, 0.2, 10, 1e-12};
  CHECK(sc.width(0) == doctest::Approx(0.5));
  double s = sc.width(0);
  for (int k = 0; k < 20; ++k) {
    CHECK(sc.width(k + 1) == doctest::Approx(s - 3.0 * sc.loss(k)).epsilon(1e-14));
    s = sc.width(k + 1);
    CHECK(s > 0.3);
  }
  CHECK_THROWS_AS((NewtonSchedule{0.6, 0.5, 10, 1e-12}.validate()), Error);
}
