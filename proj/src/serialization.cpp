#include "kam/serialization.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <system_error>

namespace kam {

namespace {

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorCode::Config, "deserialize", what);
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                const char* what) {
  if (!j.is_object()) bad(std::string(what) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) bad(std::string("unknown key '") + it.key() + "' in " + what);
  }
}

int get_int(const Json& j, const char* key, const char* what) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    bad(std::string(what) + " needs integer '" + key + "'");
  }
  return j.at(key).get<int>();
}

std::vector<int> get_ints(const Json& j, const char* key, std::size_t size) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != size) {
    bad(std::string("entry needs '") + key + "' of length " + std::to_string(size));
  }
  std::vector<int> out;
  for (const Json& v : j.at(key)) {
    if (!v.is_number_integer()) bad(std::string("'") + key + "' must hold integers");
    out.push_back(v.get<int>());
  }
  return out;
}

double get_double(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    bad(std::string("entry needs number '") + key + "'");
  }
  return j.at(key).get<double>();
}

Json vector_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json modes(const Box& box, Index i) {
  Json k = Json::array();
  for (int a = 0; a < box.dim(); ++a) k.push_back(box.mode(i, a));
  return k;
}

void append_entries(Json& entries, const FourierSeries& f, const Json* m) {
  const Box& box = f.box();
  for (Index i = 0; i < box.size(); ++i) {
    const Complex c = f[i];
    if (std::abs(c) < kSerializationCutoff) continue;
    Json e;
    if (m) e["m"] = *m;
    e["k"] = modes(box, i);
    e["re"] = c.real();
    e["im"] = c.imag();
    entries.push_back(std::move(e));
  }
}

}  // namespace

Json to_json(const FourierSeries& f) {
  Json j;
  j["dim"] = f.dim();
  j["order"] = f.order();
  if (!f.is_real()) j["real"] = false;
  j["entries"] = Json::array();
  append_entries(j["entries"], f, nullptr);
  return j;
}

Json to_json(const ActionJet& h) {
  Json j;
  j["dim"] = h.dim();
  j["order"] = h.order();
  j["degree"] = h.degree();
  j["entries"] = Json::array();
  for (Index i = 0; i < h.size(); ++i) {
    const auto e = h.monomials().exponent(i);
    const Json m(std::vector<int>(e.begin(), e.end()));
    append_entries(j["entries"], h[i], &m);
  }
  return j;
}

Json to_json(const TorusMap& phi) {
  Json v = Json::array();
  for (const FourierSeries& f : phi.v) v.push_back(to_json(f));
  return Json{{"v", v}};
}

Json to_json(const ExactOneForm& rho) { return Json{{"S", to_json(rho.potential)}}; }

Json to_json(const FiberedSymplectomorphism& g) {
  return Json{{"phi", to_json(g.phi)}, {"S", to_json(g.rho.potential)}};
}

Json to_json(const TwistedConjugacy& x) {
  return Json{{"K", to_json(x.K)}, {"G", to_json(x.G)}, {"beta", vector_json(x.beta)}};
}

Json to_json(const DiophantineReport& r) {
  Json j;
  j["gamma"] = r.gamma;
  j["witness_k"] = r.witness;
  j["k_max"] = r.k_max;
  j["gamma_half"] = r.gamma_half;
  j["stability_ratio"] = r.stability_ratio;
  j["resonant"] = r.resonant;
  return j;
}

Json to_json(const CriterionReport& r) {
  Json rows = Json::array();
  for (const CriterionRow& row : r.rows) {
    Json e;
    e["j"] = row.j;
    e["sigma"] = row.sigma;
    e["laplace"] = std::isfinite(row.laplace) ? Json(row.laplace) : Json("inf");
    e["log_bound"] = row.log_bound;
    e["partial_sum"] = std::isfinite(row.partial_sum) ? Json(row.partial_sum) : Json("inf");
    e["pass"] = row.pass;
    e["divergent"] = row.divergent;
    e["certified"] = row.certified;
    rows.push_back(std::move(e));
  }
  Json j;
  j["c"] = r.c;
  j["delta"] = r.delta;
  j["j_max"] = r.j_max;
  j["passes"] = r.passes;
  j["verdict"] = r.verdict;
  j["rows"] = std::move(rows);
  return j;
}

Json to_json(const VerificationReport& r) {
  Json j;
  j["T"] = r.T;
  j["samples"] = r.samples;
  j["max_dev"] = r.max_dev;
  j["rms_dev"] = r.rms_dev;
  j["energy_drift"] = r.energy_drift;
  j["validity_radius"] = r.validity_radius;
  j["inside_validity"] = r.inside_validity;
  j["steps"] = r.steps;
  return j;
}

Json to_json(const InvariantTorusResult& r) {
  Json j;
  j["R_star"] = vector_json(r.R_star);
  j["beta"] = vector_json(r.beta);
  j["alpha"] = vector_json(r.alpha);
  j["embedding"] = Json{{"phi_inv", to_json(r.phi_inv)}, {"rho", to_json(r.rho)}};
  j["verification"] = to_json(r.verification);
  Json twist;
  Json q = Json::array();
  for (Index a = 0; a < r.twist.Q.rows(); ++a) {
    q.push_back(vector_json(r.twist.Q.row(a).transpose()));
  }
  twist["Q"] = std::move(q);
  twist["condition"] = r.twist.condition;
  j["twist"] = std::move(twist);
  Json outer = Json::array();
  for (const OuterRecord& o : r.outer) {
    outer.push_back(Json{{"k", o.k},
                         {"R", vector_json(o.R)},
                         {"beta", vector_json(o.beta)},
                         {"newton_steps", o.newton_steps}});
  }
  j["outer"] = std::move(outer);
  j["generator"] = to_json(r.generator);
  return j;
}

FourierSeries series_from_json(const Json& j) {
  check_keys(j, {"dim", "order", "real", "entries"}, "series");
  const int dim = get_int(j, "dim", "series");
  const int order = get_int(j, "order", "series");
  if (dim < 1 || order < 0) bad("series needs dim >= 1 and order >= 0");
  bool real = true;
  if (j.contains("real")) {
    if (!j.at("real").is_boolean()) bad("'real' must be a boolean");
    real = j.at("real").get<bool>();
  }
  FourierSeries f(dim, order, real);
  if (!j.contains("entries") || !j.at("entries").is_array()) bad("series needs 'entries'");
  for (const Json& e : j.at("entries")) {
    check_keys(e, {"k", "re", "im"}, "series entry");
    const std::vector<int> k = get_ints(e, "k", static_cast<std::size_t>(dim));
    if (!f.box().contains(k)) bad("series entry outside the truncation box");
    f[f.box().index(k)] = Complex(get_double(e, "re"), get_double(e, "im"));
  }
  return f;
}

ActionJet jet_from_json(const Json& j) {
  check_keys(j, {"dim", "order", "degree", "entries"}, "jet");
  const int dim = get_int(j, "dim", "jet");
  const int order = get_int(j, "order", "jet");
  const int degree = get_int(j, "degree", "jet");
  if (dim < 1 || order < 0 || degree < 0) bad("jet needs dim >= 1, order, degree >= 0");
  ActionJet h(dim, degree, order);
  if (!j.contains("entries") || !j.at("entries").is_array()) bad("jet needs 'entries'");
  const auto n = static_cast<std::size_t>(dim);
  for (const Json& e : j.at("entries")) {
    check_keys(e, {"m", "k", "re", "im"}, "jet entry");
    const std::vector<int> m = get_ints(e, "m", n);
    const std::vector<int> k = get_ints(e, "k", n);
    int total = 0;
    for (int x : m) {
      if (x < 0) bad("negative monomial exponent");
      total += x;
    }
    if (total > degree) bad("jet entry above the jet degree");
    FourierSeries& f = h.component(m);
    if (!f.box().contains(k)) bad("jet entry outside the truncation box");
    f[f.box().index(k)] = Complex(get_double(e, "re"), get_double(e, "im"));
  }
  return h;
}

TorusMap torus_map_from_json(const Json& j) {
  check_keys(j, {"v"}, "torus map");
  if (!j.contains("v") || !j.at("v").is_array()) bad("torus map needs 'v'");
  TorusMap phi;
  for (const Json& f : j.at("v")) phi.v.push_back(series_from_json(f));
  for (const FourierSeries& f : phi.v) {
    if (f.dim() != phi.dim() || f.order() != phi.v.front().order()) {
      bad("torus map components disagree in shape");
    }
  }
  return phi;
}

ExactOneForm one_form_from_json(const Json& j) {
  check_keys(j, {"S"}, "one-form");
  if (!j.contains("S")) bad("one-form needs 'S'");
  return {series_from_json(j.at("S"))};
}

FiberedSymplectomorphism symplecto_from_json(const Json& j) {
  check_keys(j, {"phi", "S"}, "symplectomorphism");
  if (!j.contains("phi") || !j.contains("S")) bad("symplectomorphism needs 'phi' and 'S'");
  FiberedSymplectomorphism g{torus_map_from_json(j.at("phi")), {series_from_json(j.at("S"))}};
  if (g.rho.potential.dim() != g.dim()) bad("symplectomorphism parts disagree in dimension");
  return g;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::string trace_csv(const NewtonTrace& trace) { return trace.to_csv(); }

std::string embedding_csv(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& points) {
  const Index n = theta.rows();
  std::ostringstream out;
  for (Index j = 0; j < n; ++j) out << (j ? "," : "") << "theta_" << j + 1;
  for (Index j = 0; j < n; ++j) out << ",Theta_" << j + 1;
  for (Index j = 0; j < n; ++j) out << ",r_" << j + 1;
  out << '\n';
  for (Index p = 0; p < theta.cols(); ++p) {
    for (Index j = 0; j < n; ++j) out << (j ? "," : "") << format_double(theta(j, p));
    for (Index j = 0; j < 2 * n; ++j) out << ',' << format_double(points(j, p));
    out << '\n';
  }
  return out.str();
}

std::string criterion_csv(const CriterionReport& r) {
  std::ostringstream out;
  out << "j,sigma,laplace,log_bound,partial_sum,pass,divergent,certified\n";
  for (const CriterionRow& row : r.rows) {
    out << row.j << ',' << format_double(row.sigma) << ',' << format_double(row.laplace)
        << ',' << format_double(row.log_bound) << ',' << format_double(row.partial_sum)
        << ',' << row.pass << ',' << row.divergent << ',' << row.certified << '\n';
  }
  return out.str();
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    require(static_cast<bool>(out), ErrorCode::Io, "write_atomic",
            "cannot write " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  require(!ec, ErrorCode::Io, "write_atomic",
          "cannot rename onto " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "read_file", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace kam
