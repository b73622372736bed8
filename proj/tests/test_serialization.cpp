#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>

#include "kam/serialization.hpp"
#include "support.hpp"

using namespace kam;
using namespace kam::testing;

namespace {

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Signed zeros are not preserved once an entry is dropped.
bool same_value(double a, double b) { return (a == 0.0 && b == 0.0) || bit_equal(a, b); }

bool same_series(const FourierSeries& a, const FourierSeries& b) {
  if (a.dim() != b.dim() || a.order() != b.order() || a.is_real() != b.is_real()) return false;
  for (Index i = 0; i < a.coeffs().size(); ++i) {
    if (!same_value(a[i].real(), b[i].real()) || !same_value(a[i].imag(), b[i].imag())) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("series round trip is bit exact") {
  Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    FourierSeries f = random_series(rng, 1 + trial % 3, 4, 0.3);
    f *= std::pow(10.0, -trial % 7);
    const Json j = to_json(f);
    const FourierSeries back = series_from_json(Json::parse(j.dump()));
    CHECK(same_series(f, back));
  }
  FourierSeries c(2, 3, false);
  c[5] = Complex(1.0 / 3.0, -std::numbers::pi);
  CHECK(to_json(c).at("real") == false);
  CHECK(same_series(series_from_json(to_json(c)), c));
}

TEST_CASE("tiny coefficients are omitted") {
  FourierSeries f(1, 2);
  f[f.box().index(std::vector<int>{1})] = 1e-17;
  f[f.box().index(std::vector<int>{2})] = 0.5;
  const Json j = to_json(f);
  CHECK(j.at("entries").size() == 1);
  CHECK(j.at("entries")[0].at("k") == Json::array({2}));
}

TEST_CASE("jet and symplectomorphism round trips") {
  Rng rng(62);
  const ActionJet h = random_jet(rng, 2, 3, 3, 0.5);
  const ActionJet back = jet_from_json(Json::parse(to_json(h).dump()));
  REQUIRE(back.size() == h.size());
  for (Index i = 0; i < h.size(); ++i) CHECK(same_series(back[i], h[i]));

  FiberedSymplectomorphism g = FiberedSymplectomorphism::identity(2, 4);
  g.phi.v[0] = random_series(rng, 2, 4, 1.0, 2, false, 1e-3);
  g.rho.potential = random_series(rng, 2, 4, 1.0, 2, true, 1e-3);
  const Json j = to_json(g);
  CHECK(j.contains("phi"));
  CHECK(j.at("phi").contains("v"));
  CHECK(j.contains("S"));
  const FiberedSymplectomorphism gb = symplecto_from_json(j);
  CHECK(same_series(gb.phi.v[0], g.phi.v[0]));
  CHECK(same_series(gb.phi.v[1], g.phi.v[1]));
  CHECK(same_series(gb.rho.potential, g.rho.potential));
}

TEST_CASE("malformed documents are rejected") {
  Json j = to_json(FourierSeries::constant(1, 2, 1.0));
  j["extra"] = 1;
  CHECK_THROWS_AS(series_from_json(j), Error);

  Json k = to_json(FourierSeries::constant(1, 2, 1.0));
  k["entries"][0]["k"] = Json::array({5});
  CHECK_THROWS_AS(series_from_json(k), Error);

  Json m = to_json(ActionJet::constant(1, 1, 2, 1.0));
  m["entries"][0]["m"] = Json::array({3});
  CHECK_THROWS_AS(jet_from_json(m), Error);
  CHECK_THROWS_AS(torus_map_from_json(Json{{"v", 3}}), Error);
}

TEST_CASE("shortest decimal formatting") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23}) {
    CHECK(bit_equal(std::stod(format_double(x)), x));
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("csv tables") {
  Eigen::MatrixXd theta(2, 2), pts(4, 2);
  theta << 0.0, 1.0, 0.5, 2.0;
  pts.setConstant(0.25);
  const std::string csv = embedding_csv(theta, pts);
  CHECK(csv.rfind("theta_1,theta_2,Theta_1,Theta_2,r_1,r_2\n", 0) == 0);
  CHECK(csv.find("1,2,0.25,0.25,0.25,0.25\n") != std::string::npos);
}

TEST_CASE("atomic write replaces the file") {
  const auto dir = std::filesystem::temp_directory_path() / "kam_atomic_test";
  std::filesystem::remove_all(dir);
  write_atomic(dir / "a.txt", "first");
  write_atomic(dir / "a.txt", "second");
  CHECK(read_file(dir / "a.txt") == "second");
  CHECK_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
  std::filesystem::remove_all(dir);
}
