#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "kam/kolmogorov.hpp"
#include "kam/newton.hpp"
#include "kam/small_divisors.hpp"

namespace kam {

using Json = nlohmann::ordered_json;

/// Coefficients with modulus below this are not written.
inline constexpr double kSerializationCutoff = 1e-16;

/// { dim, order, entries: [{ k, re, im }] }; "real": false only for complex series.
Json to_json(const FourierSeries& f);
/// { dim, order, degree, entries: [{ m, k, re, im }] }
Json to_json(const ActionJet& h);
/// { v: [series...] }
Json to_json(const TorusMap& phi);
/// { S: series }
Json to_json(const ExactOneForm& rho);
/// { phi: { v: [...] }, S: series }
Json to_json(const FiberedSymplectomorphism& g);
/// { K, G, beta }
Json to_json(const TwistedConjugacy& x);
Json to_json(const DiophantineReport& r);
Json to_json(const CriterionReport& r);
Json to_json(const VerificationReport& r);
/// { R_star, beta, embedding: { phi_inv, rho }, verification, ... }
Json to_json(const InvariantTorusResult& r);

// Readers reject unknown keys and malformed entries with ErrorCode::Config.
FourierSeries series_from_json(const Json& j);
ActionJet jet_from_json(const Json& j);
TorusMap torus_map_from_json(const Json& j);
ExactOneForm one_form_from_json(const Json& j);
FiberedSymplectomorphism symplecto_from_json(const Json& j);

/// Shortest decimal that reads back to the same double.
std::string format_double(double x);

/// Header k,s_k,sigma_k,defect,step_norm,delta_beta_1..n,delta_c.
std::string trace_csv(const NewtonTrace& trace);
/// Header theta_1..n,Theta_1..n,r_1..n; one row per column of theta.
std::string embedding_csv(const Eigen::MatrixXd& theta, const Eigen::MatrixXd& points);
/// Header j,sigma,laplace,log_bound,partial_sum,pass,divergent,certified.
std::string criterion_csv(const CriterionReport& r);

/// Two-space indented dump with a trailing newline.
std::string dump(const Json& j);

/// Writes to a temporary sibling, then renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace kam
