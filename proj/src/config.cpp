#include <cmath>
#include <random>
#include <set>

#include "kam/cli.hpp"

namespace kam::cli {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::Io:
      return kConfigError;
    case ErrorCode::PropertyFailure:
      return kPropertyFailure;
    default:
      return kNumericalError;
  }
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Config, "config", path + ": " + what);
}

// Reads one object of the key tree and remembers which keys were consumed.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const Json& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  double number(const char* key, double fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_number()) fail(name(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(name(key), "must be finite");
    return x;
  }

  double positive(const char* key, double fallback) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) fail(name(key), "must be positive");
    return x;
  }

  int integer(const char* key, int fallback, int lo) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_number_integer()) fail(name(key), "expected an integer");
    const auto x = v.get<long long>();
    if (x < lo || x > 1'000'000'000) fail(name(key), "out of range");
    return static_cast<int>(x);
  }

  std::string string(const char* key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_string()) fail(name(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key) {
    const Json& v = raw(key);
    if (!v.is_array()) fail(name(key), "expected an array of numbers");
    std::vector<double> out;
    for (const Json& x : v) {
      if (!x.is_number()) fail(name(key), "expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<int> integers(const char* key) {
    const Json& v = raw(key);
    if (!v.is_array()) fail(name(key), "expected an array of integers");
    std::vector<int> out;
    for (const Json& x : v) {
      if (!x.is_number_integer()) fail(name(key), "expected an array of integers");
      out.push_back(x.get<int>());
    }
    return out;
  }

  Section child(const char* key) { return Section(raw(key), name(key)); }

  std::string name(const char* key) const {
    return path_.empty() ? std::string(key) : path_ + "." + key;
  }

  /// Rejects every key that was not read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(name(it.key().c_str()), "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

Term parse_term(Section s, int n) {
  Term t;
  t.m = s.has("m") ? s.integers("m") : std::vector<int>(static_cast<std::size_t>(n), 0);
  t.k = s.has("k") ? s.integers("k") : std::vector<int>(static_cast<std::size_t>(n), 0);
  t.c = Complex(s.number("re", 0.0), s.number("im", 0.0));
  s.finish();
  if (static_cast<int>(t.m.size()) != n || static_cast<int>(t.k.size()) != n) {
    fail(s.name("m"), "term exponents and modes need n entries");
  }
  for (int x : t.m) {
    if (x < 0) fail(s.name("m"), "exponents must be nonnegative");
  }
  return t;
}

PerturbationSpec parse_perturbation(Section s, int n) {
  PerturbationSpec p;
  p.epsilon = s.number("epsilon", 0.0);
  p.family = s.string("family", "none");
  if (p.family != "none" && p.family != "cosine_pair" && p.family != "random") {
    fail(s.name("family"), "expected none, cosine_pair or random");
  }
  p.decay = s.positive("decay", p.decay);
  p.active = s.integer("active", p.active, 0);
  if (s.has("terms")) {
    const Json& list = s.raw("terms");
    if (!list.is_array()) fail(s.name("terms"), "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = s.name("terms") + "[" + std::to_string(i) + "]";
      p.terms.push_back(parse_term(Section(list[i], path), n));
    }
  }
  s.finish();
  return p;
}

ProblemSpec parse_problem(Section s) {
  ProblemSpec p;
  p.n = s.integer("n", p.n, 1);
  if (p.n > 6) fail(s.name("n"), "at most 6 degrees of freedom");
  p.N = s.integer("N", p.N, 1);
  p.d = s.integer("d", p.d, 2);
  if (!s.has("alpha")) fail(s.name("alpha"), "required");
  p.alpha = to_vector(s.numbers("alpha"));
  if (p.alpha.size() != p.n) fail(s.name("alpha"), "needs n entries");
  p.tau = s.positive("tau", p.tau);
  p.k_max = s.integer("k_max", p.k_max, 1);
  p.twist = 0.5 * Eigen::MatrixXd::Identity(p.n, p.n);
  if (s.has("twist")) {
    const Json& q = s.raw("twist");
    if (!q.is_array() || static_cast<int>(q.size()) != p.n) {
      fail(s.name("twist"), "expected an n x n array");
    }
    for (int a = 0; a < p.n; ++a) {
      const Json& row = q[static_cast<std::size_t>(a)];
      if (!row.is_array() || static_cast<int>(row.size()) != p.n) {
        fail(s.name("twist"), "expected an n x n array");
      }
      for (int b = 0; b < p.n; ++b) {
        const Json& x = row[static_cast<std::size_t>(b)];
        if (!x.is_number()) fail(s.name("twist"), "entries must be numbers");
        p.twist(a, b) = x.get<double>();
      }
    }
  }
  if (s.has("perturbation")) p.perturbation = parse_perturbation(s.child("perturbation"), p.n);
  for (const Term& t : p.perturbation.terms) {
    int degree = 0;
    for (int x : t.m) degree += x;
    if (degree > p.d) fail(s.name("perturbation"), "term degree exceeds d");
    for (int x : t.k) {
      if (std::abs(x) > p.N) fail(s.name("perturbation"), "term mode exceeds N");
    }
  }
  s.finish();
  return p;
}

ProfileSpec parse_profile(Section s) {
  ProfileSpec p;
  p.kind = s.string("kind", p.kind);
  if (p.kind == "constant") {
    p.value = s.number("value", 1.0);
  } else if (p.kind == "power") {
    p.exponent = s.number("p", 1.0);
    p.value = s.positive("scale", 1.0);
  } else if (p.kind == "diophantine") {
    p.n = s.integer("n", 2, 1);
    p.tau = s.positive("tau", 1.0);
    p.gamma = s.positive("gamma", 1.0);
  } else if (p.kind == "exponential") {
    p.exponent = s.positive("a", 1.0);
  } else if (p.kind == "tabulated") {
    p.values = s.numbers("values");
    if (p.values.empty()) fail(s.name("values"), "must not be empty");
  } else {
    fail(s.name("kind"), "expected constant, power, diophantine, exponential or tabulated");
  }
  s.finish();
  return p;
}

double binomial(int a, int b) {
  double out = 1.0;
  for (int i = 1; i <= b; ++i) out = out * (a - b + i) / i;
  return out;
}

}  // namespace

ApproximationFunction ProfileSpec::build() const {
  if (kind == "power") return ApproximationFunction::power(exponent, value);
  if (kind == "diophantine") return ApproximationFunction::diophantine(n, tau, gamma);
  if (kind == "exponential") return ApproximationFunction::exponential(exponent);
  if (kind == "tabulated") return ApproximationFunction::tabulated(values);
  return ApproximationFunction::constant(value);
}

ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig c;
  Section root(j, "");
  if (root.has("problem")) c.problem = parse_problem(root.child("problem"));
  if (root.has("widths")) {
    Section s = root.child("widths");
    c.schedule.s = s.positive("s", c.schedule.s);
    c.schedule.sigma = s.positive("sigma", c.schedule.sigma);
    s.finish();
  }
  if (root.has("schedule")) {
    Section s = root.child("schedule");
    c.schedule.max_iter = s.integer("max_iter", c.schedule.max_iter, 0);
    c.schedule.defect_floor = s.positive("defect_floor", c.schedule.defect_floor);
    s.finish();
  }
  if (root.has("outer")) {
    Section s = root.child("outer");
    c.tol_outer = s.positive("tol_outer", c.tol_outer);
    c.r_max = s.positive("R_max", c.r_max);
    c.max_outer = s.integer("max_outer", c.max_outer, 1);
    s.finish();
  }
  if (root.has("verification")) {
    Section s = root.child("verification");
    c.verification.T = s.positive("T", c.verification.T);
    c.verification.samples = s.integer("samples", c.verification.samples, 1);
    const double tol = s.positive("ode_tol", c.verification.ode.rtol);
    c.verification.ode.rtol = c.verification.ode.atol = tol;
    s.finish();
  }
  if (root.has("manufactured")) {
    Section s = root.child("manufactured");
    ManufacturedSpec m;
    m.amplitude = s.positive("amplitude", m.amplitude);
    m.active = s.integer("active", m.active, 1);
    if (s.has("beta")) m.beta = to_vector(s.numbers("beta"));
    s.finish();
    c.manufactured = m;
  }
  if (root.has("cohomology")) {
    Section s = root.child("cohomology");
    c.cohomology.instances = s.integer("instances", c.cohomology.instances, 1);
    c.cohomology.decay = s.positive("decay", c.cohomology.decay);
    c.cohomology.s = s.positive("s", c.cohomology.s);
    c.cohomology.sigma = s.positive("sigma", c.cohomology.sigma);
    c.cohomology.tolerance = s.positive("tolerance", c.cohomology.tolerance);
    s.finish();
  }
  if (root.has("arithmetics")) {
    Section s = root.child("arithmetics");
    ArithmeticsSpec& a = c.arithmetics;
    if (s.has("profiles")) {
      const Json& list = s.raw("profiles");
      if (!list.is_array()) fail(s.name("profiles"), "expected an array");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = s.name("profiles") + "[" + std::to_string(i) + "]";
        a.profiles.push_back(parse_profile(Section(list[i], path)));
      }
    }
    a.c = s.positive("c", a.c);
    a.delta = s.positive("delta", a.delta);
    a.j_max = s.integer("j_max", a.j_max, 1);
    if (s.has("closed_form_sigmas")) a.closed_form_sigmas = s.numbers("closed_form_sigmas");
    for (double x : a.closed_form_sigmas) {
      if (!(x > 0.0)) fail(s.name("closed_form_sigmas"), "must be positive");
    }
    a.closed_form_tolerance = s.positive("closed_form_tolerance", a.closed_form_tolerance);
    s.finish();
  }
  if (root.has("verify")) {
    Section s = root.child("verify");
    c.verify.cases = s.integer("cases", c.verify.cases, 1);
    c.verify.inversion_order = s.integer("inversion_order", c.verify.inversion_order, 4);
    s.finish();
  }
  if (root.has("seed")) {
    const Json& v = root.raw("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail("seed", "expected a nonnegative integer");
    }
    c.seed = v.get<std::uint64_t>();
  }
  if (root.has("output")) {
    Section s = root.child("output");
    c.output_dir = s.string("directory", c.output_dir);
    c.format = s.string("format", c.format);
    s.finish();
  }
  if (root.has("limits")) {
    Section s = root.child("limits");
    c.max_coefficients = s.positive("max_coefficients", c.max_coefficients);
    s.finish();
  }
  root.finish();

  if (c.format != "json" && c.format != "csv") fail("output.format", "expected json or csv");
  if (c.schedule.s + c.schedule.sigma > 1.0) fail("widths", "s + sigma must not exceed 1");
  if (c.problem) {
    const ProblemSpec& p = *c.problem;
    const double size = p.n * std::pow(2.0 * p.N + 1.0, p.n) * binomial(p.n + p.d, p.d);
    if (size > c.max_coefficients) {
      fail("problem", "n (2N+1)^n C(n+d, d) = " + std::to_string(size) +
                          " exceeds limits.max_coefficients");
    }
    if (c.manufactured && c.manufactured->beta.size() != 0 && c.manufactured->beta.size() != p.n) {
      fail("manufactured.beta", "needs n entries");
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Config, "config", path.string() + ": " + e.what());
  }
  return parse_config(j);
}

const ProblemSpec& require_problem(const ExperimentConfig& config, const char* command) {
  if (!config.problem) fail("problem", std::string("section required by '") + command + "'");
  return *config.problem;
}

ActionJet build_hamiltonian(const ProblemSpec& p, std::uint64_t seed) {
  ActionJet h = ActionJet::linear(p.alpha, p.d, p.N) + ActionJet::quadratic(p.twist, p.d, p.N);
  const PerturbationSpec& pert = p.perturbation;
  ActionJet extra(p.n, p.d, p.N);
  if (pert.family == "cosine_pair") {
    std::vector<int> k(static_cast<std::size_t>(p.n), 0);
    k[0] = 1;
    extra[0] += FourierSeries::cosine(p.n, p.N, k);
    std::fill(k.begin(), k.end(), 1);
    extra[0] += FourierSeries::cosine(p.n, p.N, k);
  } else if (pert.family == "random") {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (Index i = 0; i < extra.size(); ++i) {
      FourierSeries& f = extra[i];
      const Box& box = f.box();
      for (Index b = 0; b < box.size(); ++b) {
        bool inside = true;
        for (int a = 0; a < p.n; ++a) inside = inside && std::abs(box.mode(b, a)) <= pert.active;
        if (!inside) continue;
        const double x = normal(rng);
        const double y = normal(rng);
        f[b] = Complex(x, y) * std::exp(-pert.decay * box.l1(b));
      }
      f.symmetrize();
    }
  }
  for (const Term& t : pert.terms) {
    FourierSeries& f = extra.component(t.m);
    const Box& box = f.box();
    std::vector<int> neg(t.k.size());
    for (std::size_t a = 0; a < neg.size(); ++a) neg[a] = -t.k[a];
    if (neg == t.k) {
      f[box.index(t.k)] += t.c.real();
    } else {
      f[box.index(t.k)] += t.c;
      f[box.index(neg)] += std::conj(t.c);
    }
  }
  h += pert.epsilon * extra;
  return h;
}

}  // namespace kam::cli
