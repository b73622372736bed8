#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "kam/cli.hpp"

using namespace kam;
using namespace kam::cli;

namespace {

Json problem(double eps = 0.0) {
  return Json{{"n", 2},
              {"N", 8},
              {"d", 3},
              {"alpha", {1.0, 1.618033988749895}},
              {"perturbation", {{"epsilon", eps}, {"family", "cosine_pair"}}}};
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("kam_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int run_config(const Json& config, const std::string& command, const std::filesystem::path& dir,
               std::string* out_text = nullptr, std::string* err_text = nullptr) {
  write_atomic(dir / "config.json", config.dump());
  Options o;
  o.command = command;
  o.config = (dir / "config.json").string();
  o.out = (dir / "out").string();
  std::ostringstream out, err;
  const int code = run(o, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("config parsing is strict") {
  CHECK_NOTHROW(parse_config(Json{{"problem", problem()}}));
  CHECK_THROWS_AS(parse_config(Json{{"problme", problem()}}), Error);

  Json typo{{"problem", problem()}, {"schedule", {{"defect_flor", 1e-12}}}};
  try {
    parse_config(typo);
    FAIL("typo accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    CHECK(std::string(e.what()).find("schedule.defect_flor") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(Json{{"widths", {{"s", -0.1}}}}), Error);
  CHECK_THROWS_AS(parse_config(Json{{"verification", {{"ode_tol", 0.0}}}}), Error);
  CHECK_THROWS_AS(parse_config(Json{{"schedule", {{"max_iter", 1.5}}}}), Error);

  Json wrong_alpha = problem();
  wrong_alpha["alpha"] = {1.0};
  CHECK_THROWS_AS(parse_config(Json{{"problem", wrong_alpha}}), Error);
}

TEST_CASE("resource cap guards huge runs") {
  Json big = problem();
  big["N"] = 400;
  CHECK_THROWS_AS(parse_config(Json{{"problem", big}}), Error);
  CHECK_NOTHROW(parse_config(Json{{"problem", big}, {"limits", {{"max_coefficients", 1e8}}}}));
}

TEST_CASE("hamiltonian from config") {
  Json p = problem(1e-3);
  p["perturbation"]["terms"] = Json::array(
      {Json{{"m", {1, 0}}, {"k", {0, 0}}, {"re", 2e-4}}, Json{{"m", {0, 0}}, {"k", {0, 1}}, {"re", 0.5}}});
  const ExperimentConfig c = parse_config(Json{{"problem", p}});
  const ActionJet h = build_hamiltonian(*c.problem, 0);
  const std::vector<double> theta{0.3, -1.1}, r{0.01, 0.02};
  const double expected = 1.0 * 0.01 + 1.618033988749895 * 0.02 + 0.5 * (0.01 * 0.01 + 0.02 * 0.02) +
                          1e-3 * (std::cos(0.3) + std::cos(0.3 - 1.1) + 2e-4 * 0.01 + std::cos(-1.1));
  CHECK(evaluate(h, theta, r) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("exit codes and structured errors") {
  const auto dir = scratch("errors");
  std::string out, err;

  Json resonant{{"problem", problem(1e-3)}};
  resonant["problem"]["alpha"] = {1.0, 2.0};
  CHECK(run_config(resonant, "solve", dir, &out, &err) == kNumericalError);
  const Json e = Json::parse(err);
  CHECK(e.at("error").at("code") == "resonance");
  CHECK(e.at("exit_code") == 3);
  CHECK(std::filesystem::exists(dir / "out" / "error.json"));
  CHECK(std::filesystem::exists(dir / "out" / "run.json"));

  CHECK(run_config(Json{{"bogus", 1}}, "verify", dir, &out, &err) == kConfigError);
  CHECK(Json::parse(err).at("error").at("code") == "config");
  CHECK(run_config(Json::object(), "solve", dir, &out, &err) == kConfigError);

  Options missing;
  missing.command = "verify";
  missing.config = (dir / "nope.json").string();
  std::ostringstream o2, e2;
  CHECK(run(missing, o2, e2) == kConfigError);
}

TEST_CASE("unperturbed solve succeeds immediately") {
  const auto dir = scratch("integrable");
  std::string out;
  Json config{{"problem", problem(0.0)}, {"verification", {{"samples", 4}}}};
  REQUIRE(run_config(config, "solve", dir, &out) == kSuccess);
  const Json report = Json::parse(out);
  CHECK(report.at("outer_iterations") == 0);
  CHECK(report.at("newton_steps") == 0);
  CHECK(report.at("beta_norm") == 0.0);
  for (const char* f : {"torus.json", "defect.csv", "embedding.csv", "trace_R00.csv", "report.json"}) {
    CHECK(std::filesystem::exists(dir / "out" / f));
  }
  const Json torus = Json::parse(read_file(dir / "out" / "torus.json"));
  for (const char* k : {"R_star", "beta", "embedding", "verification"}) CHECK(torus.contains(k));
  CHECK(torus.at("embedding").contains("phi_inv"));
  CHECK(torus.at("embedding").contains("rho"));
}

TEST_CASE("offset-only herman run returns the offset") {
  const auto dir = scratch("offset");
  Json p = problem();
  p["perturbation"] = {{"epsilon", 1.0},
                       {"terms", Json::array({Json{{"m", {1, 0}}, {"re", 2e-4}},
                                              Json{{"m", {0, 1}}, {"re", -5e-4}}})}};
  std::string out;
  REQUIRE(run_config(Json{{"problem", p}}, "herman", dir, &out) == kSuccess);
  const Json report = Json::parse(out);
  CHECK(report.at("beta")[0].get<double>() == doctest::Approx(2e-4).epsilon(1e-12));
  CHECK(report.at("beta")[1].get<double>() == doctest::Approx(-5e-4).epsilon(1e-12));
  CHECK(report.at("steps") == 1);
}

TEST_CASE("over-radius herman run leaves a divergence trace") {
  const auto dir = scratch("over");
  std::string out, err;
  CHECK(run_config(Json{{"problem", problem(0.3)}}, "herman", dir, &out, &err) == kNumericalError);
  CHECK(Json::parse(err).at("error").at("code") == "divergence");
  CHECK(std::filesystem::exists(dir / "out" / "trace.csv"));
  CHECK(Json::parse(out).at("status") == "diverged");
}

TEST_CASE("csv report format") {
  const Json r{{"a", 1}, {"b", {{"c", 0.5}, {"d", {1.0, 2.0}}}}, {"s", "x,y"}};
  CHECK(report_csv(r) == "key,value\na,1\nb.c,0.5\nb.d[0],1\nb.d[1],2\ns,\"x,y\"\n");
}

TEST_CASE("verify is deterministic and thread independent") {
  const auto dir = scratch("verify");
  const Json config{{"verify", {{"cases", 3}, {"inversion_order", 16}}}, {"seed", 42}};
  write_atomic(dir / "config.json", config.dump());
  std::string reports[3];
  for (int i = 0; i < 3; ++i) {
    Options o;
    o.command = "verify";
    o.config = (dir / "config.json").string();
    o.out = (dir / ("out" + std::to_string(i))).string();
    o.threads = i == 2 ? 3 : 1;
    std::ostringstream out, err;
    CHECK(run(o, out, err) == kSuccess);
    reports[i] = read_file(std::filesystem::path(o.out) / "report.json") +
                 read_file(std::filesystem::path(o.out) / "verify.csv");
  }
  CHECK(reports[0] == reports[1]);
  CHECK(reports[0] == reports[2]);
}
