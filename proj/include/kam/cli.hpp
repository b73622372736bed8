#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kam/kolmogorov.hpp"
#include "kam/serialization.hpp"

namespace kam::cli {

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kNumericalError = 3,
  kPropertyFailure = 4,
};

int exit_code(ErrorCode code);

/// c e^{i k.theta} r^m, added together with its conjugate partner.
struct Term {
  std::vector<int> m;
  std::vector<int> k;
  Complex c;
};

struct PerturbationSpec {
  double epsilon = 0.0;
  /// "none"; "cosine_pair": cos theta_1 + cos(theta_1 + ... + theta_n);
  /// "random": seeded random jet with e^{-decay |k|} coefficients.
  std::string family = "none";
  double decay = 1.0;
  int active = 3;  ///< random family: modes |k_j| <= active
  std::vector<Term> terms;
};

struct ProblemSpec {
  int n = 2;
  int N = 32;  ///< Fourier order
  int d = 3;   ///< r-degree of the jets
  Eigen::VectorXd alpha;
  double tau = 1.0;
  int k_max = 200;
  Eigen::MatrixXd twist;  ///< Q in r^T Q r; defaults to I/2
  PerturbationSpec perturbation;
};

/// H := K* o G* + beta* . r with a random G* of the given amplitude.
struct ManufacturedSpec {
  double amplitude = 1e-3;
  int active = 3;
  Eigen::VectorXd beta;
};

struct CohomologySpec {
  int instances = 100;
  double decay = 0.5;
  double s = 0.3;
  double sigma = 0.2;
  double tolerance = 1e-10;
};

struct ProfileSpec {
  std::string kind = "constant";  ///< constant, power, diophantine, exponential, tabulated
  double value = 1.0;             ///< constant value, power scale
  double exponent = 1.0;          ///< power p, exponential a
  int n = 2;
  double tau = 1.0;
  double gamma = 1.0;
  std::vector<double> values;

  ApproximationFunction build() const;
};

struct ArithmeticsSpec {
  std::vector<ProfileSpec> profiles;
  double c = 10.0;
  double delta = 0.5;
  int j_max = 20;
  std::vector<double> closed_form_sigmas{0.05, 0.1, 0.5, 1.0, 2.0};
  double closed_form_tolerance = 1e-10;
};

struct VerifySpec {
  int cases = 20;
  int inversion_order = 24;
};

struct ExperimentConfig {
  std::optional<ProblemSpec> problem;
  NewtonSchedule schedule;
  double tol_outer = 1e-10;
  double r_max = 1e-2;
  int max_outer = 20;
  VerificationOptions verification;
  std::optional<ManufacturedSpec> manufactured;
  CohomologySpec cohomology;
  ArithmeticsSpec arithmetics;
  VerifySpec verify;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::string format = "json";
  double max_coefficients = 4e6;
};

/// Strict parse: unknown keys, wrong types and non-positive tolerances throw
/// ErrorCode::Config with the offending key path.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

const ProblemSpec& require_problem(const ExperimentConfig& config, const char* command);

/// alpha . r + r^T Q r + epsilon (family + terms), at degree d and order N.
ActionJet build_hamiltonian(const ProblemSpec& problem, std::uint64_t seed);

struct RunContext {
  std::filesystem::path out;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string format = "json";
};

/// Result of a command: the summary report (deterministic) and the exit code.
struct CommandResult {
  Json report;
  int exit_code = kSuccess;
};

CommandResult cmd_solve(const ExperimentConfig& config, const RunContext& ctx);
CommandResult cmd_herman(const ExperimentConfig& config, const RunContext& ctx);
CommandResult cmd_cohomology(const ExperimentConfig& config, const RunContext& ctx);
CommandResult cmd_diophantine(const ExperimentConfig& config, const RunContext& ctx);
CommandResult cmd_arithmetics(const ExperimentConfig& config, const RunContext& ctx);
CommandResult cmd_verify(const ExperimentConfig& config, const RunContext& ctx);

/// Flattens a report into "key,value" lines with dotted key paths.
std::string report_csv(const Json& report);

struct Options {
  std::string command;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string format;
};

/// Loads the config, runs the command, writes the report and run metadata.
/// Anticipated failures become a structured error on `err` and in
/// <out>/error.json.
int run(const Options& options, std::ostream& out, std::ostream& err);

/// argv front end.
int main(int argc, char** argv);

}  // namespace kam::cli
