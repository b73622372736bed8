#include <chrono>
#include <ctime>
#include <iostream>

#include <CLI11.hpp>

#include "kam/cli.hpp"

namespace kam::cli {

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

CommandResult dispatch(const std::string& command, const ExperimentConfig& config,
                       const RunContext& ctx) {
  if (command == "solve") return cmd_solve(config, ctx);
  if (command == "herman") return cmd_herman(config, ctx);
  if (command == "cohomology") return cmd_cohomology(config, ctx);
  if (command == "diophantine") return cmd_diophantine(config, ctx);
  if (command == "arithmetics") return cmd_arithmetics(config, ctx);
  if (command == "verify") return cmd_verify(config, ctx);
  throw Error(ErrorCode::Config, "cli", "unknown command '" + command + "'");
}

}  // namespace

int run(const Options& options, std::ostream& out, std::ostream& err) {
  namespace fs = std::filesystem;
  const std::string started = utc_now();
  const auto clock = std::chrono::steady_clock::now();
  fs::path dir = options.out;
  RunContext ctx;
  Json error;
  int code = kSuccess;
  try {
    require(!options.config.empty(), ErrorCode::Config, "cli", "--config is required");
    require(options.threads >= 1, ErrorCode::Config, "cli", "--threads must be at least 1");
    const ExperimentConfig config = load_config(options.config);
    if (dir.empty()) dir = config.output_dir;
    ctx.out = dir;
    ctx.seed = options.seed.value_or(config.seed);
    ctx.threads = options.threads;
    ctx.format = options.format.empty() ? config.format : options.format;
    require(ctx.format == "json" || ctx.format == "csv", ErrorCode::Config, "cli",
            "--format must be json or csv");
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorCode::Io, "cli", "cannot create " + dir.string() + ": " + ec.message());
    fs::remove(dir / "error.json", ec);

    const CommandResult result = dispatch(options.command, config, ctx);
    const std::string text = ctx.format == "json" ? dump(result.report) : report_csv(result.report);
    write_atomic(dir / ("report." + ctx.format), text);
    out << text;
    code = result.exit_code;
    if (result.report.contains("error")) error = result.report["error"];
  } catch (const Error& e) {
    error = Json{{"code", to_string(e.code())}, {"stage", e.stage()}, {"message", e.what()}};
    code = exit_code(e.code());
  } catch (const std::exception& e) {
    error = Json{{"code", "internal"}, {"stage", options.command}, {"message", e.what()}};
    code = kNumericalError;
  }

  if (!error.is_null()) {
    const Json doc{{"error", error}, {"exit_code", code}};
    err << doc.dump() << '\n';
    if (!dir.empty()) {
      try {
        write_atomic(dir / "error.json", dump(doc));
      } catch (const Error&) {
        // The error already went to stderr.
      }
    }
  }
  if (!dir.empty()) {
    Json meta;
    meta["command"] = options.command;
    meta["config"] = options.config;
    meta["seed"] = ctx.seed;
    meta["threads"] = options.threads;
    meta["format"] = ctx.format;
    meta["started_at"] = started;
    meta["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock).count();
    meta["exit_code"] = code;
    try {
      write_atomic(dir / "run.json", dump(meta));
    } catch (const Error&) {
    }
  }
  return code;
}

int main(int argc, char** argv) {
  CLI::App app{"Invariant tori of near-integrable Hamiltonians by Newton iteration"};
  app.require_subcommand(1);
  Options options;
  std::uint64_t seed = 0;
  app.add_option("--config", options.config, "Experiment config (JSON)");
  app.add_option("--out", options.out, "Output directory (overrides output.directory)");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for random suites (overrides the config)");
  app.add_option("--threads", options.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--format", options.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}));
  const std::pair<const char*, const char*> commands[] = {
      {"solve", "Invariant torus: flatten, outer Newton on R, flow verification"},
      {"herman", "Twisted conjugacy H = K o G + beta . r only"},
      {"cohomology", "Cohomological equation round trip and bound"},
      {"diophantine", "Brute-force Diophantine constant"},
      {"arithmetics", "Laplace-transform convergence criterion tables"},
      {"verify", "Seeded property suites"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const Json doc{{"error", {{"code", "config"}, {"stage", "cli"}, {"message", e.what()}}},
                   {"exit_code", kConfigError}};
    std::cerr << doc.dump() << '\n';
    return kConfigError;
  }
  options.command = app.get_subcommands().front()->get_name();
  if (*seed_opt) options.seed = seed;
  return run(options, std::cout, std::cerr);
}

}  // namespace kam::cli
