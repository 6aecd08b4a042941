// bohmlab command-line front end: run / list / describe.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bohmlab/errors.hpp"
#include "bohmlab/parallel.hpp"
#include "bohmlab/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitChecksFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

fs::path output_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("BOHMLAB_OUT"); env && *env) return env;
  return "bohmlab_out";
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

int run(const std::string& config, const std::string& out_flag, std::size_t threads, std::optional<std::uint64_t> seed) {
  bohmlab::Scenario scenario;
  try {
    scenario = bohmlab::load_scenario(bohmlab::resolve_scenario(config));
    if (seed) scenario = bohmlab::with_seed(std::move(scenario), *seed);
  } catch (const bohmlab::Error& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  }
  bohmlab::set_thread_count(threads);
  const fs::path out = output_root(out_flag) / scenario.config.value("output", scenario.name);
  const auto start = std::chrono::steady_clock::now();
  bohmlab::RunResult result;
  try {
    result = bohmlab::run_scenario(scenario, out);
  } catch (const bohmlab::Error& e) {
    std::cerr << "runtime error [" << bohmlab::to_string(e.kind()) << "] in " << bohmlab::to_string(scenario.pipeline)
              << ": " << e.what() << '\n';
    return e.kind() == bohmlab::ErrorKind::Validation ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "runtime error in " << bohmlab::to_string(scenario.pipeline) << ": " << e.what() << '\n';
    return kExitRuntime;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream(out / "run_meta.json") << json{{"scenario", scenario.name},
                                               {"source", scenario.source.string()},
                                               {"started_utc", utc_now()},
                                               {"seconds", seconds},
                                               {"threads", bohmlab::thread_count()}}
                                              .dump(2)
                                       << '\n';

  std::cout << scenario.name << " (" << bohmlab::to_string(scenario.pipeline) << ")  -> " << out.string() << '\n';
  for (const auto& c : result.checks) {
    std::cout << "  " << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  measured=" << c.measured
              << "  tolerance=" << c.tolerance << '\n';
  }
  std::cout << (result.pass ? "all checks passed" : "some checks FAILED") << '\n';
  return result.pass ? 0 : kExitChecksFailed;
}

int list() {
  try {
    for (const auto& e : bohmlab::list_scenarios(bohmlab::scenario_directory())) {
      std::cout << e.name << "  [" << e.pipeline << "]  " << e.description << '\n';
    }
  } catch (const bohmlab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}

int describe(const std::string& name) {
  try {
    const bohmlab::Scenario s = bohmlab::load_scenario(bohmlab::resolve_scenario(name));
    std::cout << "name:        " << s.name << '\n'
              << "pipeline:    " << bohmlab::to_string(s.pipeline) << '\n'
              << "file:        " << s.source.string() << '\n'
              << "config hash: " << bohmlab::config_hash(s.config) << '\n'
              << "description: " << s.description << '\n'
              << s.config.dump(2) << '\n';
  } catch (const bohmlab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bohmlab: Bohmian trajectories, weak actual values and their checks"};
  app.require_subcommand(1);

  std::string config, out;
  std::size_t threads = 0;
  std::optional<std::uint64_t> seed;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario file or bundled scenario");
  run_cmd->add_option("config", config, "Scenario JSON path or bundled name")->required();
  run_cmd->add_option("--out", out, "Output root (default $BOHMLAB_OUT or ./bohmlab_out)");
  run_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  run_cmd->add_option("--seed", seed, "Override the scenario seed");

  app.add_subcommand("list", "List bundled scenarios");

  std::string name;
  auto* describe_cmd = app.add_subcommand("describe", "Show a bundled scenario");
  describe_cmd->add_option("scenario", name, "Scenario name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  if (run_cmd->parsed()) return run(config, out, threads, seed);
  if (describe_cmd->parsed()) return describe(name);
  return list();
}
