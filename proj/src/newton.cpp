#include "kam/newton.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

namespace kam {

namespace {

constexpr double kAverageTolerance = 1e-10;

double max_majorant(const std::vector<FourierSeries>& list, double s) {
  double m = 0.0;
  for (const FourierSeries& f : list) m = std::max(m, majorant_norm(f, s));
  return m;
}

// Zeroes the mean of g after checking it is negligible.
void drop_average(FourierSeries& g, const char* what, double& worst) {
  const double avg = std::abs(g.average());
  const double scale = std::max(1.0, majorant_norm(g, 0.0));
  worst = std::max(worst, avg / scale);
  if (avg > kAverageTolerance * scale) {
    std::ostringstream msg;
    msg << what << " has average " << avg << " after the offset solve";
    throw Error(ErrorCode::NonZeroAverage, "newton_step", msg.str());
  }
  g[g.box().center()] = 0.0;
}

ActionJet series_jet(const FourierSeries& f, int degree) {
  ActionJet j(f.dim(), degree, f.order());
  j[0] = f;
  return j;
}

// Infinitesimal generator of (id + dphi, dS) pulled back by G^{-1}:
// X_theta = dphi, X_r = d(dS) - t(dphi') r.
struct VectorField {
  std::vector<ActionJet> theta;
  std::vector<ActionJet> r;
};

VectorField vector_field(const TangentVector& t, int degree, int order) {
  const int n = t.dphi.dim();
  VectorField x;
  for (int i = 0; i < n; ++i) {
    x.theta.push_back(series_jet(t.dphi.v[static_cast<std::size_t>(i)].with_order(order), degree));
    ActionJet xr = series_jet(partial_derivative(t.dS, i).with_order(order), degree);
    if (degree >= 1) {
      for (int j = 0; j < n; ++j) {
        xr[xr.monomials().unit(j)] =
            -partial_derivative(t.dphi.v[static_cast<std::size_t>(j)], i).with_order(order);
      }
    }
    x.r.push_back(std::move(xr));
  }
  return x;
}

// J' . X
ActionJet along(const ActionJet& j, const VectorField& x) {
  const int n = j.dim();
  ActionJet out(n, j.degree(), j.order());
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out += multiply(d_theta(j, i), x.theta[k], j.degree(), j.order());
    out += multiply(d_r(j, i), x.r[k], j.degree(), j.order());
  }
  return out;
}

// Partial derivative along phase-space coordinate a (theta_0.., then r_0..).
ActionJet partial(const ActionJet& j, int a) {
  const int n = j.dim();
  return a < n ? d_theta(j, a) : d_r(j, a - n);
}

const ActionJet& component(const VectorField& x, int a) {
  const int n = static_cast<int>(x.theta.size());
  return a < n ? x.theta[static_cast<std::size_t>(a)] : x.r[static_cast<std::size_t>(a - n)];
}

}  // namespace

// ---------------------------------------------------------------------------
// Conjugacies

TwistedConjugacy TwistedConjugacy::initial(const ActionJet& k) {
  return {k, FiberedSymplectomorphism::identity(k.dim(), k.order()),
          Eigen::VectorXd::Zero(k.dim())};
}

double TwistedConjugacy::normal_form_defect(const Eigen::VectorXd& alpha) const {
  double d = 0.0;
  FourierSeries c = K[0];
  c[c.box().center()] = 0.0;
  d = std::max(d, majorant_norm(c, 0.0));
  for (int j = 0; j < dim() && K.degree() >= 1; ++j) {
    FourierSeries l = K[K.monomials().unit(j)];
    l[l.box().center()] -= alpha[j];
    d = std::max(d, majorant_norm(l, 0.0));
  }
  return d;
}

ActionJet assemble(const TwistedConjugacy& x) {
  ActionJet out = pullback_jet(x.K, x.G);
  if (x.K.degree() >= 1) out += ActionJet::linear(x.beta, x.K.degree(), out.order());
  return out;
}

ActionJet conjugacy_residual(const ActionJet& h, const TwistedConjugacy& x) {
  return (h - assemble(x)).with_order(h.order()).with_degree(h.degree());
}

double defect(const ActionJet& h, const TwistedConjugacy& x, double s) {
  return jet_norm(conjugacy_residual(h, x), s);
}

// ---------------------------------------------------------------------------
// Schedule and tangent vectors

double NewtonSchedule::loss(int k) const { return sigma / 6.0 * std::ldexp(1.0, -k); }

double NewtonSchedule::width(int k) const {
  // s_k = s + sigma - 3 sum_{j<k} sigma_j = s + sigma 2^{-k}
  return s + sigma * std::ldexp(1.0, -k);
}

void NewtonSchedule::validate() const {
  require(s > 0.0 && sigma > 0.0 && s + sigma <= 1.0, ErrorCode::Config,
          "newton_schedule", "need s > 0, sigma > 0 and s + sigma <= 1");
  require(max_iter >= 0, ErrorCode::Config, "newton_schedule",
          "max_iter must be nonnegative");
  require(defect_floor > 0.0, ErrorCode::Config, "newton_schedule",
          "defect_floor must be positive");
}

double TangentVector::norm(double s) const {
  double m = dK.empty() ? 0.0 : jet_norm(dK, s);
  m = std::max(m, dphi.norm(s));
  for (int j = 0; j < dS.dim(); ++j) m = std::max(m, majorant_norm(partial_derivative(dS, j), s));
  if (dbeta.size() > 0) m = std::max(m, dbeta.cwiseAbs().maxCoeff());
  return m;
}

TangentVector zero_tangent(const TwistedConjugacy& x) {
  const int n = x.dim();
  const int order = x.K.order();
  return {ActionJet(n, x.K.degree(), order), TorusMap::identity(n, order),
          FourierSeries(n, order), Eigen::VectorXd::Zero(n)};
}

TangentVector difference(const TwistedConjugacy& x_hat, const TwistedConjugacy& x) {
  const int n = x.dim();
  TangentVector t;
  t.dK = x_hat.K - x.K;
  t.dphi = TorusMap::identity(n, t.dK.order());
  for (int j = 0; j < n; ++j) {
    t.dphi.v[static_cast<std::size_t>(j)] =
        x_hat.G.phi.v[static_cast<std::size_t>(j)] - x.G.phi.v[static_cast<std::size_t>(j)];
  }
  t.dS = x_hat.G.rho.potential - x.G.rho.potential;
  t.dbeta = x_hat.beta - x.beta;
  return t;
}

// ---------------------------------------------------------------------------
// Newton step

double step_loss_exponent(const FrequencyVector& alpha) {
  return alpha.tau + static_cast<double>(alpha.alpha.size()) + 1.0;
}

namespace {

struct Coefficients {
  std::vector<FourierSeries> a;  // n x n, row-major: (phi' o psi)_{ij}
  std::vector<FourierSeries> p;  // rho o psi
  std::vector<FourierSeries> t;  // n x n: K_{e_i + e_j} (1 + delta_ij)
};

Coefficients coefficients(const TwistedConjugacy& x, int order) {
  const int n = x.dim();
  Coefficients c;
  std::vector<FourierSeries> list = x.G.phi.derivative();
  for (int j = 0; j < n; ++j) list.push_back(x.G.rho.component(j));
  auto composed = compose_with_inverse(list, x.G.phi, order);
  for (int i = 0; i < n * n; ++i) c.a.push_back(composed[static_cast<std::size_t>(i)]);
  for (int i = 0; i < n; ++i) c.a[static_cast<std::size_t>(i * n + i)] += FourierSeries::constant(n, order, 1.0);
  for (int j = 0; j < n; ++j) c.p.push_back(composed[static_cast<std::size_t>(n * n + j)]);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (x.K.degree() < 2) {
        c.t.emplace_back(n, order);
        continue;
      }
      FourierSeries k = x.K[x.K.monomials().pair(i, j)].with_order(order);
      if (i == j) k *= 2.0;
      c.t.push_back(std::move(k));
    }
  }
  return c;
}

double assembled_from(const Coefficients& c, const Eigen::MatrixXd& m_inverse,
                      const FrequencyVector& alpha, double s) {
  const int n = static_cast<int>(alpha.alpha.size());
  const double c0 = cohomological_constant(n, alpha.tau) / alpha.gamma;
  const double inv = m_inverse.cwiseAbs().rowwise().sum().maxCoeff();
  const double cp = c0 * (1.0 + inv) * (1.0 + max_majorant(c.p, s)) *
                    (1.0 + max_majorant(c.a, s) + c0 * max_majorant(c.t, s));
  return std::max(1.0, cp);
}

}  // namespace

TwistedConjugacy newton_step(const ActionJet& h, const TwistedConjugacy& x,
                             const FrequencyVector& alpha, double s, double sigma,
                             StepReport* report) {
  const int n = h.dim();
  const int degree = h.degree();
  const int order = h.order();
  require(x.dim() == n && alpha.alpha.size() == n, ErrorCode::DimensionMismatch,
          "newton_step", "dimension mismatch between H, x and alpha");
  require(degree >= 1, ErrorCode::InvalidArgument, "newton_step",
          "jets must contain the linear part");
  const Eigen::VectorXd& a = alpha.alpha;

  // (a) residual transported by G^{-1}
  const ActionJet residual = conjugacy_residual(h, x);
  const ActionJet hdot =
      pullback_by_inverse(residual, x.G, nullptr, energy(h)).with_order(order).with_degree(degree);
  const FourierSeries& h0 = hdot[0];
  std::vector<FourierSeries> h1;
  for (int j = 0; j < n; ++j) h1.push_back(hdot[hdot.monomials().unit(j)]);

  const Coefficients c = coefficients(x, order);

  // (b) offset: averaged first-order equation, coupled to the order-0 solve
  // through T grad S.
  auto t_grad = [&](const FourierSeries& f) {
    std::vector<FourierSeries> grad;
    for (int l = 0; l < n; ++l) grad.push_back(partial_derivative(f, l));
    std::vector<FourierSeries> out;
    for (int i = 0; i < n; ++i) {
      FourierSeries sum(n, order);
      for (int l = 0; l < n; ++l) {
        const FourierSeries& t = c.t[static_cast<std::size_t>(i * n + l)];
        if (!t.is_zero()) sum += multiply(t, grad[static_cast<std::size_t>(l)], order);
      }
      out.push_back(std::move(sum));
    }
    return out;
  };
  auto centered = [](FourierSeries f) {
    f[f.box().center()] = 0.0;
    return f;
  };
  const FourierSeries s_a = solve_cohomological(centered(h0), a);
  const auto tg_a = t_grad(s_a);
  Eigen::MatrixXd m(n, n);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    rhs[i] = h1[static_cast<std::size_t>(i)].average().real() -
             tg_a[static_cast<std::size_t>(i)].average().real();
    for (int j = 0; j < n; ++j) m(i, j) = c.a[static_cast<std::size_t>(i * n + j)].average().real();
  }
  for (int j = 0; j < n; ++j) {
    const FourierSeries s_b = solve_cohomological(centered(c.p[static_cast<std::size_t>(j)]), a);
    const auto tg_b = t_grad(s_b);
    for (int i = 0; i < n; ++i) m(i, j) += tg_b[static_cast<std::size_t>(i)].average().real();
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  require(lu.isInvertible() && lu.rcond() > 1e-12, ErrorCode::SingularJacobian,
          "newton_step", "averaged Jacobian of the offset equation is singular");
  const Eigen::VectorXd dbeta = lu.solve(rhs);
  const Eigen::MatrixXd m_inverse = lu.inverse();

  // (c) constant
  double dc = h0.average().real();
  for (int j = 0; j < n; ++j) dc += c.p[static_cast<std::size_t>(j)].average().real() * dbeta[j];

  // (d) order 0: L_alpha S = H0 - dc + P . dbeta
  double worst = 0.0;
  FourierSeries g0 = h0;
  g0[g0.box().center()] -= dc;
  for (int j = 0; j < n; ++j) g0 += dbeta[j] * c.p[static_cast<std::size_t>(j)];
  drop_average(g0, "order-0 right-hand side", worst);
  const FourierSeries sdot = solve_cohomological(g0, a);

  // (e) order 1: L_alpha phi = A dbeta + T rho - H1, normalized phi(0) = 0
  const auto tg = t_grad(sdot);
  TorusMap phidot;
  for (int i = 0; i < n; ++i) {
    FourierSeries g1 = tg[static_cast<std::size_t>(i)] - h1[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) g1 += dbeta[j] * c.a[static_cast<std::size_t>(i * n + j)];
    drop_average(g1, "order-1 right-hand side", worst);
    FourierSeries v = solve_cohomological(g1, a);
    v[v.box().center()] -= v.coeffs().sum();
    phidot.v.push_back(std::move(v));
  }

  // (f) remaining terms of order >= 2, plus dc
  TangentVector step{ActionJet(n, degree, order), phidot, sdot, dbeta};
  const VectorField field = vector_field(step, degree, order);
  ActionJet dk = degree_range(hdot - along(x.K.with_order(order).with_degree(degree), field), 2, degree)
                     .with_order(order)
                     .with_degree(degree);
  dk[0] = FourierSeries::constant(n, order, dc);
  step.dK = dk;

  // (g) update
  TwistedConjugacy next;
  next.K = (x.K + dk).with_order(order);
  next.beta = x.beta + dbeta;
  const FiberedSymplectomorphism increment{phidot, {sdot}};
  next.G = group_compose(increment, x.G);

  if (report) {
    StepReport& r = *report;
    r.step = step;
    r.delta_beta = dbeta;
    r.delta_c = dc;
    r.residual_norm = jet_norm(hdot, s + sigma);
    r.step_norm = step.norm(s);
    r.average_defect = worst;
    r.c_prime = assembled_from(c, m_inverse, alpha, s + sigma);
    r.bound = std::pow(sigma, -step_loss_exponent(alpha)) * r.c_prime * r.residual_norm;
    r.bound_holds = r.step_norm <= r.bound;
  }
  return next;
}

double assembled_c_prime(const TwistedConjugacy& x, const FrequencyVector& alpha,
                         double s) {
  const int n = x.dim();
  const Coefficients c = coefficients(x, x.K.order());
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = c.a[static_cast<std::size_t>(i * n + j)].average().real();
  }
  return assembled_from(c, m.inverse(), alpha, s);
}

// ---------------------------------------------------------------------------
// Iteration

int NewtonTrace::steps() const {
  return records.empty() ? 0 : static_cast<int>(records.size()) - 1;
}

bool NewtonTrace::quadratic_signature() const {
  if (quadratic_pairs == 0) return true;
  return fitted_c <= 100.0 * fitted_c_min;
}

std::string NewtonTrace::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(17);
  const Index n = records.empty() ? 0 : records.front().delta_beta.size();
  out << "k,s_k,sigma_k,defect,step_norm";
  for (Index j = 0; j < n; ++j) out << ",delta_beta_" << j + 1;
  out << ",delta_c\n";
  for (const StepRecord& r : records) {
    out << r.k << ',' << r.s_k << ',' << r.sigma_k << ',' << r.defect << ','
        << r.step_norm;
    for (Index j = 0; j < n; ++j) out << ',' << (j < r.delta_beta.size() ? r.delta_beta[j] : 0.0);
    out << ',' << r.delta_c << '\n';
  }
  return out.str();
}

std::string to_string(NewtonStatus status) {
  switch (status) {
    case NewtonStatus::Converged: return "converged";
    case NewtonStatus::Diverged: return "diverged";
    case NewtonStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

void fit_quadratic(NewtonTrace& trace, double floor) {
  trace.fitted_c = 0.0;
  trace.fitted_c_min = std::numeric_limits<double>::infinity();
  trace.quadratic_pairs = 0;
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const double d0 = trace.records[k].defect;
    const double d1 = trace.records[k + 1].defect;
    if (d0 <= floor || d1 <= floor) continue;
    const double ratio = d1 / (d0 * d0);
    trace.fitted_c = std::max(trace.fitted_c, ratio);
    trace.fitted_c_min = std::min(trace.fitted_c_min, ratio);
    ++trace.quadratic_pairs;
  }
  if (trace.quadratic_pairs == 0) trace.fitted_c_min = 0.0;
}

NewtonResult run_newton(const ActionJet& h, const TwistedConjugacy& x0,
                        const FrequencyVector& alpha,
                        const NewtonSchedule& schedule) {
  schedule.validate();
  NewtonResult result;
  result.x = x0;
  const int n = h.dim();
  int increases = 0;
  double last = std::numeric_limits<double>::infinity();
  for (int k = 0;; ++k) {
    StepRecord rec;
    rec.k = k;
    rec.s_k = schedule.width(k);
    rec.sigma_k = schedule.loss(k);
    rec.delta_beta = Eigen::VectorXd::Zero(n);
    try {
      rec.defect = defect(h, result.x, rec.s_k);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Config || e.code() == ErrorCode::InvalidArgument) throw;
      // The previous step produced an iterate the grid cannot represent.
      result.status = NewtonStatus::Diverged;
      result.final_defect = std::numeric_limits<double>::infinity();
      result.failure = NewtonFailure{e.code(), e.stage(), e.what()};
      break;
    }
    if (!std::isfinite(rec.defect)) {
      result.status = NewtonStatus::Diverged;
      result.final_defect = rec.defect;
      result.failure = NewtonFailure{ErrorCode::Divergence, "run_newton", "defect is not finite"};
      break;
    }
    increases = rec.defect > last ? increases + 1 : 0;
    last = rec.defect;
    const bool done = rec.defect <= schedule.defect_floor;
    const bool diverged = increases >= 2;
    const bool exhausted = k >= schedule.max_iter;
    if (done || diverged || exhausted) {
      result.trace.records.push_back(rec);
      result.status = done       ? NewtonStatus::Converged
                      : diverged ? NewtonStatus::Diverged
                                 : NewtonStatus::MaxIterations;
      result.final_defect = rec.defect;
      break;
    }
    StepReport report;
    try {
      result.x = newton_step(h, result.x, alpha, schedule.width(k + 1), 3.0 * rec.sigma_k,
                             &report);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Config || e.code() == ErrorCode::InvalidArgument) throw;
      result.trace.records.push_back(rec);
      result.status = NewtonStatus::Diverged;
      result.final_defect = rec.defect;
      result.failure = NewtonFailure{e.code(), e.stage(), e.what()};
      break;
    }
    rec.step_norm = report.step_norm;
    rec.delta_beta = report.delta_beta;
    rec.delta_c = report.delta_c;
    rec.c_prime = report.c_prime;
    rec.bound_holds = report.bound_holds;
    result.trace.records.push_back(rec);
  }
  fit_quadratic(result.trace, schedule.defect_floor);
  return result;
}

// ---------------------------------------------------------------------------
// Quantitative estimates

RadiusEstimate theoretical_radius(double c_prime, double c_second,
                                  double tau_prime, double tau_second, double s,
                                  double sigma, double eta) {
  require(c_prime >= 1.0 && c_second >= 1.0 && tau_prime >= 1.0 && tau_second >= 1.0,
          ErrorCode::InvalidArgument, "theoretical_radius",
          "constants and exponents must be at least 1");
  require(0.0 < eta && eta < s && s < 1.0 && 0.0 < sigma && sigma < 1.0,
          ErrorCode::InvalidArgument, "theoretical_radius",
          "need 0 < eta < s < 1 and 0 < sigma < 1");
  RadiusEstimate r;
  r.c = c_prime * c_second;
  r.tau = tau_prime + tau_second;
  auto main = [&](double sg, double et) {
    return std::exp2(-8.0 * r.tau) * std::pow(r.c, -2.0) * std::pow(sg, 2.0 * r.tau) * et;
  };
  r.eps_main = main(sigma, eta);
  const double big_s = s + sigma;
  r.eps_domain = std::exp2(-12.0 * r.tau) / r.tau * std::pow(r.c, -2.0) *
                 std::pow(big_s, 3.0 * r.tau);
  r.s_opt = big_s / (1.0 + 2.0 * r.tau);
  r.sigma_opt = 2.0 * r.tau * r.s_opt;
  r.eps_main_at_opt = main(r.sigma_opt, r.s_opt);
  return r;
}

ActionJet second_derivative(const TwistedConjugacy& x, const TangentVector& dx,
                            const TangentVector& dx_hat) {
  const int n = x.dim();
  const int degree = x.K.degree();
  const int order = x.K.order();
  const VectorField f = vector_field(dx, degree, order);
  const VectorField g = vector_field(dx_hat, degree, order);
  ActionJet out = along(dx.dK, g) + along(dx_hat.dK, f);
  for (int a = 0; a < 2 * n; ++a) {
    const ActionJet ka = partial(x.K, a);
    for (int b = 0; b < 2 * n; ++b) {
      const ActionJet kab = partial(ka, b);
      if (kab.is_zero()) continue;
      out += multiply(multiply(kab, component(f, a), degree, order), component(g, b),
                      degree, order);
    }
  }
  return out.with_degree(degree).with_order(order);
}

double second_derivative_bound(const TwistedConjugacy& x, const TangentVector& dx,
                               const TangentVector& dx_hat, double s, double sigma) {
  const double a = dx.norm(s + sigma);
  const double b = dx_hat.norm(s + sigma);
  if (a == 0.0 || b == 0.0) return 0.0;
  return jet_norm(second_derivative(x, dx, dx_hat), s) * sigma / (a * b);
}

LipschitzReport lipschitz_check(const ActionJet& h, const ActionJet& h_hat,
                                const TwistedConjugacy& x0,
                                const FrequencyVector& alpha,
                                const NewtonSchedule& schedule, double c_prime,
                                double tau_prime) {
  const NewtonResult a = run_newton(h, x0, alpha, schedule);
  const NewtonResult b = run_newton(h_hat, x0, alpha, schedule);
  LipschitzReport r;
  r.status = a.status;
  r.status_hat = b.status;
  require(a.status == NewtonStatus::Converged && b.status == NewtonStatus::Converged,
          ErrorCode::NonConvergence, "lipschitz_check",
          "one of the two solves did not converge");
  r.solution_distance = difference(b.x, a.x).norm(schedule.s);
  r.data_distance = jet_norm(h_hat - h, schedule.s + schedule.sigma);
  r.bound = 2.0 * c_prime * std::pow(schedule.sigma, -tau_prime);
  r.ratio = r.data_distance > 0.0 ? r.solution_distance / r.data_distance : 0.0;
  r.holds = r.solution_distance <= r.bound * r.data_distance;
  return r;
}

}  // namespace kam
