#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "kam/cli.hpp"
#include "kam/norms.hpp"
#include "kam/parallel.hpp"

namespace kam::cli {

namespace {

using Rng = std::mt19937_64;

// Independent stream per (seed, suite, case): results do not depend on the
// order in which cases run.
Rng stream(std::uint64_t seed, int suite, Index index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(suite), static_cast<std::uint32_t>(index)};
  return Rng(seq);
}

FourierSeries random_series(Rng& rng, int dim, int order, double decay, int active,
                            bool zero_average) {
  std::normal_distribution<double> normal;
  FourierSeries f(dim, order);
  const Box& box = f.box();
  for (Index i = 0; i < box.size(); ++i) {
    bool inside = true;
    for (int j = 0; j < dim; ++j) inside = inside && std::abs(box.mode(i, j)) <= active;
    if (!inside) continue;
    const double x = normal(rng);
    const double y = normal(rng);
    f[i] = Complex(x, y) * std::exp(-decay * box.l1(i));
  }
  f.symmetrize();
  if (zero_average) f[box.center()] = 0.0;
  return f;
}

ActionJet random_jet(Rng& rng, int dim, int degree, int order, double decay) {
  ActionJet h(dim, degree, order);
  for (Index i = 0; i < h.size(); ++i) h[i] = random_series(rng, dim, order, decay, order, false);
  return h;
}

// id + v with v(0) = 0 and max_j |v_j|_s = size.
TorusMap random_torus_map(Rng& rng, int dim, int order, int active, double s, double size) {
  TorusMap phi = TorusMap::identity(dim, order);
  for (FourierSeries& v : phi.v) {
    v = random_series(rng, dim, order, 1.0, active, false);
    v[v.box().center()] -= v.coeffs().sum();
  }
  const double scale = size / phi.norm(s);
  for (FourierSeries& v : phi.v) v *= scale;
  return phi;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

double sup(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double coeff_diff(const FourierSeries& a, const FourierSeries& b) {
  const int order = std::max(a.order(), b.order());
  return (a.with_order(order).coeffs() - b.with_order(order).coeffs()).cwiseAbs().maxCoeff();
}

double jet_diff(const ActionJet& a, const ActionJet& b) {
  double m = 0.0;
  for (Index i = 0; i < a.size(); ++i) m = std::max(m, coeff_diff(a[i], b[i]));
  return m;
}

void write(const RunContext& ctx, const std::string& name, const std::string& content) {
  write_atomic(ctx.out / name, content);
}

Json error_json(const Error& e) {
  return Json{{"code", to_string(e.code())}, {"stage", e.stage()}, {"message", e.what()}};
}

std::string numbered(const char* prefix, int k, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%02d%s", prefix, k, suffix);
  return buf;
}

}  // namespace

CommandResult cmd_solve(const ExperimentConfig& config, const RunContext& ctx) {
  const ProblemSpec& p = require_problem(config, "solve");
  const FrequencyVector alpha = certify(p.alpha, p.tau, p.k_max);
  const ActionJet h = build_hamiltonian(p, ctx.seed);

  KolmogorovConfig kc;
  kc.schedule = config.schedule;
  kc.tol_outer = config.tol_outer;
  kc.r_max = config.r_max;
  kc.max_outer = config.max_outer;
  kc.verification = config.verification;
  kc.verification.threads = ctx.threads;
  const InvariantTorusResult res = solve_invariant_torus(h, alpha, kc);

  write(ctx, "torus.json", dump(to_json(res)));
  std::ostringstream defects;
  defects << "outer,k,s_k,defect\n";
  int newton_steps = 0;
  for (const OuterRecord& o : res.outer) {
    write(ctx, numbered("trace_R", o.k, ".csv"), o.trace.to_csv());
    newton_steps += o.newton_steps;
    for (const StepRecord& r : o.trace.records) {
      defects << o.k << ',' << r.k << ',' << format_double(r.s_k) << ','
              << format_double(r.defect) << '\n';
    }
  }
  write(ctx, "defect.csv", defects.str());
  const Eigen::MatrixXd theta = sample_angles(p.n, config.verification.samples, 0.0);
  write(ctx, "embedding.csv",
        embedding_csv(theta, embedding(res, theta, config.verification.ode)));

  Json report;
  report["command"] = "solve";
  report["status"] = res.verification.inside_validity ? "converged" : "converged_unverified";
  report["gamma"] = alpha.gamma;
  report["R_star"] = vector_json(res.R_star);
  report["beta"] = vector_json(res.beta);
  report["beta_norm"] = sup(res.beta);
  report["outer_iterations"] = static_cast<int>(res.outer.size()) - 1;
  report["newton_steps"] = newton_steps;
  report["twist_condition"] = res.twist.condition;
  report["flattened"] = !res.generator.is_zero();
  report["verification"] = to_json(res.verification);
  return {report, kSuccess};
}

CommandResult cmd_herman(const ExperimentConfig& config, const RunContext& ctx) {
  const ProblemSpec& p = require_problem(config, "herman");
  const FrequencyVector alpha = certify(p.alpha, p.tau, p.k_max);
  ActionJet h = build_hamiltonian(p, ctx.seed);
  std::optional<TwistedConjugacy> truth;
  if (config.manufactured) {
    const ManufacturedSpec& m = *config.manufactured;
    Rng rng = stream(ctx.seed, 100, 0);
    TwistedConjugacy x;
    x.K = initial_normal_form(h, alpha.alpha);
    x.G = FiberedSymplectomorphism::identity(p.n, p.N);
    x.G.phi = random_torus_map(rng, p.n, p.N, m.active, config.schedule.s, m.amplitude);
    FourierSeries s = random_series(rng, p.n, p.N, 1.0, m.active, true);
    double grad = 0.0;
    for (int j = 0; j < p.n; ++j) {
      grad = std::max(grad, majorant_norm(partial_derivative(s, j), config.schedule.s));
    }
    x.G.rho.potential = (m.amplitude / grad) * s;
    x.beta = m.beta.size() ? m.beta : Eigen::VectorXd::Zero(p.n);
    h = assemble(x);
    truth = x;
  }
  const TwistedConjugacy x0 = TwistedConjugacy::initial(initial_normal_form(h, alpha.alpha));
  NewtonResult r = run_newton(h, x0, alpha, config.schedule);
  write(ctx, "trace.csv", r.trace.to_csv());

  Json report;
  report["command"] = "herman";
  report["status"] = to_string(r.status);
  report["steps"] = r.trace.steps();
  report["final_defect"] = r.final_defect;
  report["beta"] = vector_json(r.x.beta);
  report["quadratic"] = Json{{"fitted_c", r.trace.fitted_c},
                             {"fitted_c_min", r.trace.fitted_c_min},
                             {"pairs", r.trace.quadratic_pairs},
                             {"signature", r.trace.quadratic_signature()}};
  if (r.status != NewtonStatus::Converged) {
    std::string message = "Newton iteration " + to_string(r.status) + " after " +
                          std::to_string(r.trace.steps()) + " steps; see trace.csv";
    if (r.failure) {
      message += "; last step failed in " + r.failure->stage + " (" +
                 to_string(r.failure->code) + "): " + r.failure->message;
    }
    const Error e(ErrorCode::Divergence, "run_newton", message);
    report["error"] = error_json(e);
    return {report, kNumericalError};
  }
  write(ctx, "conjugacy.json", dump(to_json(r.x)));
  if (truth) {
    double phi_err = 0.0;
    for (int j = 0; j < p.n; ++j) {
      phi_err = std::max(phi_err, coeff_diff(r.x.G.phi.v[static_cast<std::size_t>(j)],
                                             truth->G.phi.v[static_cast<std::size_t>(j)]));
    }
    report["recovery"] = Json{{"beta", sup(r.x.beta - truth->beta)},
                              {"phi", phi_err},
                              {"S", coeff_diff(r.x.G.rho.potential, truth->G.rho.potential)},
                              {"K", jet_diff(r.x.K, truth->K)}};
  }
  return {report, kSuccess};
}

CommandResult cmd_cohomology(const ExperimentConfig& config, const RunContext& ctx) {
  const ProblemSpec& p = require_problem(config, "cohomology");
  const CohomologySpec& spec = config.cohomology;
  const FrequencyVector alpha = certify(p.alpha, p.tau, p.k_max);
  const double factor = cohomological_bound(p.n, p.tau, alpha.gamma, spec.sigma);
  struct Row {
    double error = 0.0, norm_f = 0.0, norm_g = 0.0, bound = 0.0;
  };
  std::vector<Row> rows(static_cast<std::size_t>(spec.instances));
  parallel_for(spec.instances, ctx.threads, [&](Index i) {
    Rng rng = stream(ctx.seed, 1, i);
    const FourierSeries f = random_series(rng, p.n, p.N, spec.decay, p.N, true);
    const FourierSeries g = lie_derivative(f, alpha.alpha);
    const FourierSeries back = solve_cohomological(g, alpha.alpha, spec.s);
    Row& row = rows[static_cast<std::size_t>(i)];
    row.norm_f = majorant_norm(back, spec.s);
    row.error = majorant_norm(back - f, spec.s) / majorant_norm(f, spec.s);
    row.norm_g = majorant_norm(g, spec.s + spec.sigma);
    row.bound = factor * row.norm_g;
  });

  std::ostringstream csv;
  csv << "instance,rel_error,norm_f,norm_g,bound,holds\n";
  double worst = 0.0;
  int failures = 0, violations = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const bool holds = r.norm_f <= r.bound;
    csv << i << ',' << format_double(r.error) << ',' << format_double(r.norm_f) << ','
        << format_double(r.norm_g) << ',' << format_double(r.bound) << ',' << holds << '\n';
    worst = std::max(worst, r.error);
    failures += r.error > spec.tolerance;
    violations += !holds;
  }
  write(ctx, "cohomology.csv", csv.str());

  Json report;
  report["command"] = "cohomology";
  report["instances"] = spec.instances;
  report["s"] = spec.s;
  report["sigma"] = spec.sigma;
  report["gamma"] = alpha.gamma;
  report["C0"] = cohomological_constant(p.n, p.tau);
  report["max_rel_error"] = worst;
  report["round_trip_failures"] = failures;
  report["bound_violations"] = violations;
  report["passed"] = failures == 0 && violations == 0;
  return {report, failures == 0 && violations == 0 ? kSuccess : kPropertyFailure};
}

CommandResult cmd_diophantine(const ExperimentConfig& config, const RunContext& ctx) {
  const ProblemSpec& p = require_problem(config, "diophantine");
  const DiophantineReport r = diophantine_constant(p.alpha, p.tau, p.k_max);
  std::ostringstream csv;
  csv << "k_max,gamma";
  for (int j = 0; j < p.n; ++j) csv << ",witness_" << j + 1;
  csv << '\n';
  std::vector<int> sizes;
  for (int k = 4; k < p.k_max; k *= 2) sizes.push_back(k);
  sizes.push_back(p.k_max);
  for (int k : sizes) {
    const DiophantineReport partial = k == p.k_max ? r : diophantine_constant(p.alpha, p.tau, k);
    csv << k << ',' << format_double(partial.gamma);
    for (int w : partial.witness) csv << ',' << w;
    csv << '\n';
  }
  write(ctx, "diophantine.csv", csv.str());

  Json report = to_json(r);
  report["command"] = "diophantine";
  report["alpha"] = vector_json(p.alpha);
  report["tau"] = p.tau;
  if (r.resonant) {
    report["error"] = Json{{"code", to_string(ErrorCode::Resonance)},
                           {"stage", "diophantine_constant"},
                           {"message", "frequency vector is resonant"}};
    return {report, kNumericalError};
  }
  return {report, kSuccess};
}

CommandResult cmd_arithmetics(const ExperimentConfig& config, const RunContext& ctx) {
  const ArithmeticsSpec& spec = config.arithmetics;
  if (!(spec.delta < 1.0)) {
    throw Error(ErrorCode::Config, "config", "arithmetics.delta: must lie in (0, 1)");
  }
  std::vector<ProfileSpec> profiles = spec.profiles;
  if (profiles.empty()) {
    ProfileSpec dio;
    dio.kind = "diophantine";
    if (config.problem) {
      dio.n = config.problem->n;
      dio.tau = config.problem->tau;
    }
    ProfileSpec expo;
    expo.kind = "exponential";
    profiles = {dio, expo, ProfileSpec{}};
  }
  // Sum over j of c 2^{(delta - 1) j}: bounds the partial sums of passing profiles.
  const double sum_bound = spec.c / (std::pow(2.0, 1.0 - spec.delta) - 1.0);

  Json list = Json::array();
  bool closed_ok = true;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const ApproximationFunction delta = profiles[i].build();
    const CriterionReport r = check_convergence_criterion(delta, spec.c, spec.delta, spec.j_max);
    write(ctx, "criterion_" + std::to_string(i) + "_" + profiles[i].kind + ".csv",
          criterion_csv(r));
    bool monotone = true;
    for (std::size_t j = 1; j < r.rows.size(); ++j) {
      monotone = monotone && r.rows[j].partial_sum >= r.rows[j - 1].partial_sum;
    }
    const double last = r.rows.empty() ? 0.0 : r.rows.back().partial_sum;
    Json entry;
    entry["profile"] = delta.name();
    entry["passes"] = r.passes;
    entry["verdict"] = r.verdict;
    entry["partial_sum"] = std::isfinite(last) ? Json(last) : Json("inf");
    entry["partial_sums_monotone"] = monotone;
    entry["partial_sums_bounded"] = std::isfinite(last) && last <= sum_bound;
    if (profiles[i].kind == "constant") {
      Json checks = Json::array();
      for (double sigma : spec.closed_form_sigmas) {
        const double closed = profiles[i].value / std::expm1(sigma);
        const double value = laplace_transform(delta, sigma).value;
        const double err = std::abs(value - closed) / std::max(1.0, std::abs(closed));
        closed_ok = closed_ok && err <= spec.closed_form_tolerance;
        checks.push_back(Json{{"sigma", sigma}, {"laplace", value}, {"closed_form", closed},
                              {"error", err}});
      }
      entry["closed_form"] = std::move(checks);
    }
    list.push_back(std::move(entry));
  }
  Json report;
  report["command"] = "arithmetics";
  report["c"] = spec.c;
  report["delta"] = spec.delta;
  report["j_max"] = spec.j_max;
  report["partial_sum_bound"] = sum_bound;
  report["profiles"] = std::move(list);
  report["closed_form_ok"] = closed_ok;
  return {report, closed_ok ? kSuccess : kPropertyFailure};
}

CommandResult cmd_verify(const ExperimentConfig& config, const RunContext& ctx) {
  const int cases = config.verify.cases;
  const int order = config.verify.inversion_order;
  Eigen::VectorXd golden(2);
  golden << 1.0, std::numbers::phi;
  const FrequencyVector alpha = certify(golden, 1.0, 200);

  struct Suite {
    const char* name;
    const char* measure;
    std::function<std::pair<double, bool>(Rng&, Index)> run;
  };
  const std::vector<Suite> suites = {
      {"interpolation", "min relative slack",
       [](Rng& rng, Index i) {
         const int n = 1 + static_cast<int>(i % 2);
         const FourierSeries f = random_series(rng, n, 3, 0.2, 3, false);
         double slack = 1.0;
         for (const auto& [s, sigma] : {std::pair{0.1, 0.02}, {0.2, 0.05}, {0.3, 0.1}}) {
           slack = std::min(slack, verify_hadamard(f, s, sigma).slack);
         }
         return std::pair{slack, slack >= kInterpolationSlack};
       }},
      {"inversion", "composition residual",
       [order](Rng& rng, Index) {
         const double s = 0.1, sigma = 0.1;
         const TorusMap phi = random_torus_map(rng, 2, order, 3, s + 2 * sigma, 0.8 * sigma);
         InversionReport rep;
         invert_torus_map(phi, s, sigma, 1e-10, &rep);
         return std::pair{rep.residual,
                          rep.residual <= 1e-10 && rep.displacement_ok && rep.derivative_ok};
       }},
      {"cohomology", "relative round-trip error",
       [&alpha](Rng& rng, Index) {
         const FourierSeries f = random_series(rng, 2, 16, 0.5, 16, true);
         const FourierSeries back = solve_cohomological(lie_derivative(f, alpha.alpha), alpha.alpha);
         const double err = majorant_norm(back - f, 0.0) / majorant_norm(f, 0.0);
         return std::pair{err, err <= 1e-10};
       }},
      {"jacobi", "relative Jacobi defect",
       [](Rng& rng, Index) {
         const ActionJet f = random_jet(rng, 2, 1, 2, 0.5);
         const ActionJet g = random_jet(rng, 2, 1, 2, 0.5);
         const ActionJet h = random_jet(rng, 2, 1, 2, 0.5);
         const auto br = [](const ActionJet& a, const ActionJet& b) {
           return poisson_bracket(a, b, a.order() + b.order());
         };
         const ActionJet j = br(f, br(g, h)).with_order(6) + br(g, br(h, f)).with_order(6) +
                             br(h, br(f, g)).with_order(6);
         const double scale = jet_norm(f, 0.0) * jet_norm(g, 0.0) * jet_norm(h, 0.0);
         const double defect = jet_norm(j, 0.0) / scale;
         return std::pair{defect, defect <= 1e-12};
       }},
  };

  std::ostringstream csv;
  csv << "suite,case,value,pass\n";
  Json list = Json::array();
  bool all = true;
  for (std::size_t s = 0; s < suites.size(); ++s) {
    std::vector<std::pair<double, bool>> out(static_cast<std::size_t>(cases));
    std::vector<std::string> errors(static_cast<std::size_t>(cases));
    parallel_for(cases, ctx.threads, [&](Index i) {
      Rng rng = stream(ctx.seed, static_cast<int>(s) + 1, i);
      try {
        out[static_cast<std::size_t>(i)] = suites[s].run(rng, i);
      } catch (const Error& e) {
        out[static_cast<std::size_t>(i)] = {std::nan(""), false};
        errors[static_cast<std::size_t>(i)] = std::string(to_string(e.code())) + ": " + e.what();
      }
    });
    int failures = 0;
    double worst_value = 0.0;
    bool have = false;
    Json failed = Json::array();
    for (int i = 0; i < cases; ++i) {
      const auto& [value, pass] = out[static_cast<std::size_t>(i)];
      csv << suites[s].name << ',' << i << ',' << format_double(value) << ',' << pass << '\n';
      if (!pass) {
        ++failures;
        Json f{{"case", i}, {"value", std::isfinite(value) ? Json(value) : Json(nullptr)}};
        if (!errors[static_cast<std::size_t>(i)].empty()) f["error"] = errors[static_cast<std::size_t>(i)];
        failed.push_back(std::move(f));
      }
      if (std::isfinite(value)) {
        // Worst means smallest slack for interpolation, largest error otherwise.
        worst_value = !have ? value
                      : s == 0 ? std::min(worst_value, value)
                               : std::max(worst_value, value);
        have = true;
      }
    }
    all = all && failures == 0;
    list.push_back(Json{{"name", suites[s].name},
                        {"measure", suites[s].measure},
                        {"cases", cases},
                        {"failures", failures},
                        {"worst", worst_value},
                        {"failed", std::move(failed)}});
  }
  write(ctx, "verify.csv", csv.str());
  Json report;
  report["command"] = "verify";
  report["seed"] = ctx.seed;
  report["suites"] = std::move(list);
  report["passed"] = all;
  return {report, all ? kSuccess : kPropertyFailure};
}

namespace {

void flatten(const Json& j, const std::string& prefix, std::ostringstream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
    }
  } else if (j.is_number_float()) {
    out << prefix << ',' << format_double(j.get<double>()) << '\n';
  } else if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const bool quote = s.find_first_of(",\"\n") != std::string::npos;
    std::string escaped;
    for (char c : s) {
      if (c == '"') escaped += '"';
      escaped += c;
    }
    out << prefix << ',' << (quote ? "\"" + escaped + "\"" : s) << '\n';
  } else {
    out << prefix << ',' << j.dump() << '\n';
  }
}

}  // namespace

std::string report_csv(const Json& report) {
  std::ostringstream out;
  out << "key,value\n";
  flatten(report, "", out);
  return out.str();
}

}  // namespace kam::cli
