#include "kam/kolmogorov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "kam/parallel.hpp"

namespace kam {

TwistData twist(const ActionJet& k) {
  require(k.degree() >= 2, ErrorCode::TwistDegenerate, "twist",
          "jet has no quadratic part");
  TwistData t;
  t.Q = quadratic_average(k);
  t.symmetry_defect = (t.Q - t.Q.transpose()).cwiseAbs().maxCoeff();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(t.Q);
  const auto sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  t.condition = smallest > 0.0 ? sv[0] / smallest : std::numeric_limits<double>::infinity();
  return t;
}

Flattening flatten_quadratic(const ActionJet& k, const FrequencyVector& alpha) {
  const int n = k.dim();
  require(alpha.alpha.size() == n, ErrorCode::DimensionMismatch,
          "flatten_quadratic", "frequency vector has wrong dimension");
  Flattening out;
  out.generator = ActionJet(n, k.degree(), k.order());
  if (k.degree() < 2) {
    out.flat = k;
    return out;
  }
  const MonomialSet& mono = k.monomials();
  bool trivial = true;
  for (Index i = mono.first(2); i < (k.degree() >= 3 ? mono.first(3) : mono.size()); ++i) {
    FourierSeries g = k[i];
    g[g.box().center()] = 0.0;
    if (g.is_zero()) continue;
    out.generator[i] = solve_cohomological(g, alpha.alpha);
    trivial = false;
  }
  out.flat = trivial ? k : lie_transform(k, out.generator, k.degree());
  for (Index i = mono.first(2); i < (k.degree() >= 3 ? mono.first(3) : mono.size()); ++i) {
    FourierSeries g = out.flat[i];
    g[g.box().center()] = 0.0;
    out.theta_defect = std::max(out.theta_defect, majorant_norm(g, 0.0));
  }
  return out;
}

ActionJet translate_actions(const ActionJet& h, const Eigen::VectorXd& shift,
                            double bound) {
  const int n = h.dim();
  require(shift.size() == n, ErrorCode::DimensionMismatch, "translate_actions",
          "translation has wrong dimension");
  require(shift.cwiseAbs().maxCoeff() <= bound, ErrorCode::InvalidArgument,
          "translate_actions", "translation exceeds the configured bound");
  ActionJet out(n, h.degree(), h.order());
  const MonomialSet& mono = h.monomials();
  std::vector<int> a(static_cast<std::size_t>(n));
  for (Index i = 0; i < h.size(); ++i) {
    if (h[i].is_zero()) continue;
    const auto m = mono.exponent(i);
    // Enumerate sub-exponents a <= m; (R + r)^m = sum C(m, a) R^{m-a} r^a.
    std::fill(a.begin(), a.end(), 0);
    while (true) {
      double weight = 1.0;
      for (int j = 0; j < n; ++j) {
        const int mj = m[static_cast<std::size_t>(j)];
        const int aj = a[static_cast<std::size_t>(j)];
        weight *= std::tgamma(mj + 1.0) / (std::tgamma(aj + 1.0) * std::tgamma(mj - aj + 1.0)) *
                  std::pow(shift[j], mj - aj);
      }
      if (weight != 0.0) out[mono.index(a)] += weight * h[i];
      int j = 0;
      while (j < n && a[static_cast<std::size_t>(j)] == m[static_cast<std::size_t>(j)]) {
        a[static_cast<std::size_t>(j)] = 0;
        ++j;
      }
      if (j == n) break;
      ++a[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

ActionJet initial_normal_form(const ActionJet& h, const Eigen::VectorXd& alpha) {
  ActionJet k = degree_range(h, 2, h.degree()).with_degree(h.degree()).with_order(h.order());
  k[0] = FourierSeries::constant(h.dim(), h.order(), h[0].average().real());
  for (int j = 0; j < h.dim(); ++j) {
    k[k.monomials().unit(j)] = FourierSeries::constant(h.dim(), h.order(), alpha[j]);
  }
  return k;
}

OffsetResult offset_map(const ActionJet& h, const FrequencyVector& alpha,
                        const TwistedConjugacy& x0, const Eigen::VectorXd& shift,
                        const NewtonSchedule& schedule, double translation_bound) {
  OffsetResult out;
  out.newton = run_newton(translate_actions(h, shift, translation_bound), x0, alpha, schedule);
  out.beta = out.newton.x.beta;
  return out;
}

namespace {

double sup(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double wrap(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  x = std::fmod(x, two_pi);
  if (x > std::numbers::pi) x -= two_pi;
  if (x <= -std::numbers::pi) x += two_pi;
  return x;
}

}  // namespace

InvariantTorusResult solve_invariant_torus(const ActionJet& h,
                                           const FrequencyVector& alpha,
                                           const KolmogorovConfig& config) {
  const int n = h.dim();
  config.schedule.validate();
  require(config.tol_outer > 0.0 && config.r_max > 0.0, ErrorCode::Config,
          "solve_invariant_torus", "tolerances must be positive");

  InvariantTorusResult result;
  result.alpha = alpha.alpha;
  result.s = config.schedule.s;
  const Flattening flat = flatten_quadratic(h, alpha);
  result.generator = flat.generator;
  const ActionJet& hf = flat.flat;
  const ActionJet k_init = initial_normal_form(hf, alpha.alpha);
  result.twist = twist(k_init);
  if (!(result.twist.condition < config.condition_max)) {
    std::ostringstream msg;
    msg << "averaged Hessian has condition number " << result.twist.condition;
    throw Error(ErrorCode::TwistDegenerate, "solve_invariant_torus", msg.str());
  }
  Eigen::MatrixXd jac = 2.0 * result.twist.Q;

  const TwistedConjugacy cold = TwistedConjugacy::initial(k_init);
  auto evaluate = [&](const Eigen::VectorXd& r, const TwistedConjugacy& start) {
    return offset_map(hf, alpha, config.warm_start ? start : cold, r, config.schedule,
                      config.translation_bound);
  };
  auto record = [&](const Eigen::VectorXd& r, const OffsetResult& o) {
    OuterRecord rec;
    rec.k = static_cast<int>(result.outer.size());
    rec.R = r;
    rec.beta = o.beta;
    rec.newton_steps = o.newton.trace.steps();
    rec.trace = o.newton.trace;
    result.outer.push_back(std::move(rec));
  };
  auto converged = [](const OffsetResult& o) {
    return o.newton.status == NewtonStatus::Converged;
  };

  Eigen::VectorXd R = Eigen::VectorXd::Zero(n);
  OffsetResult current = evaluate(R, cold);
  record(R, current);
  if (!converged(current)) {
    const auto& failure = current.newton.failure;
    throw Error(failure ? failure->code : ErrorCode::Divergence, "solve_invariant_torus",
                "Newton did not converge at R = 0 (" + to_string(current.newton.status) +
                    (failure ? ": " + failure->message : std::string()) + ")");
  }

  for (int k = 0; sup(current.beta) > config.tol_outer; ++k) {
    require(k < config.max_outer, ErrorCode::NonConvergence, "solve_invariant_torus",
            "outer iteration limit reached");
    Eigen::VectorXd step = -jac.fullPivLu().solve(current.beta);
    const double size = sup(step);
    if (size > config.r_max) step *= config.r_max / size;

    bool accepted = false;
    OffsetResult trial;
    Eigen::VectorXd r_trial;
    for (int shrink = 0; shrink <= config.max_shrink; ++shrink) {
      r_trial = R + step;
      try {
        trial = evaluate(r_trial, current.newton.x);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::Config) throw;
        step *= 0.5;
        continue;
      }
      record(r_trial, trial);
      if (converged(trial) && sup(trial.beta) < sup(current.beta)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    require(accepted, ErrorCode::Divergence, "solve_invariant_torus",
            "outer step could not reduce |beta|");

    const bool slow = sup(trial.beta) > 0.1 * sup(current.beta);
    R = r_trial;
    current = trial;
    if (slow && sup(current.beta) > config.tol_outer) {
      // Refresh the Jacobian by forward differences.
      for (int j = 0; j < n; ++j) {
        Eigen::VectorXd rj = R;
        rj[j] += config.fd_step;
        const OffsetResult fd = evaluate(rj, current.newton.x);
        require(converged(fd), ErrorCode::Divergence, "solve_invariant_torus",
                "Newton diverged during the Jacobian refresh");
        jac.col(j) = (fd.beta - current.beta) / config.fd_step;
      }
    }
  }

  result.R_star = R;
  result.beta = current.beta;
  result.conjugacy = current.newton.x;
  result.rho = result.conjugacy.G.rho;
  result.phi_inv = invert_torus_map(result.conjugacy.G.phi, config.schedule.s,
                                    config.schedule.sigma);
  result.verification = verify_invariance(result, h, config.verification);
  return result;
}

Eigen::MatrixXd embedding(const InvariantTorusResult& result,
                          const Eigen::MatrixXd& theta, const OdeOptions& ode) {
  const int n = static_cast<int>(theta.rows());
  const FiberedSymplectomorphism& g = result.conjugacy.G;
  const PointInversion inv = invert_points(g.phi, theta);
  std::vector<FourierSeries> grad;
  for (int j = 0; j < n; ++j) grad.push_back(g.rho.component(j));
  std::vector<const FourierSeries*> ptrs;
  for (const FourierSeries& f : grad) ptrs.push_back(&f);
  const Eigen::MatrixXd rho = evaluate_real(ptrs, inv.points);

  Eigen::MatrixXd out(2 * n, theta.cols());
  out.topRows(n) = inv.points;
  for (Index p = 0; p < theta.cols(); ++p) {
    out.col(p).tail(n) = result.R_star - rho.row(p).transpose();
  }
  if (!result.generator.empty() && !result.generator.is_zero()) {
    const HamiltonianField w(result.generator);
    const VectorField f = w.as_field();
    for (Index p = 0; p < out.cols(); ++p) {
      out.col(p) = integrate(f, out.col(p), 0.0, 1.0, ode);
    }
  }
  return out;
}

Eigen::MatrixXd sample_angles(int dim, int samples, double rotation) {
  static constexpr double kPrimes[] = {2, 3, 5, 7, 11, 13};
  Eigen::MatrixXd out(dim, samples);
  for (int i = 0; i < samples; ++i) {
    for (int j = 0; j < dim; ++j) {
      const double g = std::sqrt(kPrimes[j]);
      const double frac = (i + 0.5) * g - std::floor((i + 0.5) * g);
      out(j, i) = 2.0 * std::numbers::pi * frac + rotation;
    }
  }
  return out;
}

VerificationReport verify_invariance(const InvariantTorusResult& result,
                                     const ActionJet& h,
                                     const VerificationOptions& options) {
  const int n = h.dim();
  require(options.T > 0.0 && options.samples > 0, ErrorCode::Config,
          "verify_invariance", "T and samples must be positive");
  VerificationReport rep;
  rep.T = options.T;
  rep.samples = options.samples;
  rep.validity_radius = result.s / 2.0;

  const Eigen::MatrixXd theta = sample_angles(n, options.samples, options.rotation);
  Eigen::MatrixXd shifted = theta;
  for (Index p = 0; p < theta.cols(); ++p) shifted.col(p) += options.T * result.alpha;
  const Eigen::MatrixXd start = embedding(result, theta, options.ode);
  const Eigen::MatrixXd target = embedding(result, shifted, options.ode);

  const HamiltonianField shared(h);
  struct Sample {
    double dev = 0.0;
    double drift = 0.0;
    long steps = 0;
    bool inside = true;
  };
  std::vector<Sample> samples(static_cast<std::size_t>(theta.cols()));
  const auto run = [&](Index p) {
    Sample& out = samples[static_cast<std::size_t>(p)];
    // The field caches per-point tables; each sample needs its own copy.
    const HamiltonianField field = shared;
    const VectorField f = field.as_field();
    const Eigen::VectorXd z0 = start.col(p);
    const double e0 = field.value(z0);
    OdeStats stats;
    const auto observer = [&](double, const Eigen::VectorXd& z) {
      out.drift = std::max(out.drift, std::abs(field.value(z) - e0));
      if (sup(z.tail(n) - result.R_star) > rep.validity_radius) {
        out.inside = false;
        return false;
      }
      return true;
    };
    const Eigen::VectorXd z = integrate(f, z0, 0.0, options.T, options.ode, &stats, observer);
    out.steps = stats.accepted;
    if (!out.inside) return;
    for (int j = 0; j < n; ++j) {
      out.dev = std::max(out.dev, std::abs(wrap(z[j] - target(j, p))));
      out.dev = std::max(out.dev, std::abs(z[n + j] - target(n + j, p)));
    }
  };
  parallel_for(theta.cols(), options.threads, run);

  double sum_sq = 0.0;
  for (const Sample& s : samples) {
    rep.energy_drift = std::max(rep.energy_drift, s.drift);
    rep.steps += s.steps;
    if (!s.inside) {
      rep.inside_validity = false;
      continue;
    }
    rep.max_dev = std::max(rep.max_dev, s.dev);
    sum_sq += s.dev * s.dev;
  }
  rep.rms_dev = std::sqrt(sum_sq / static_cast<double>(theta.cols()));
  return rep;
}

}  // namespace kam
