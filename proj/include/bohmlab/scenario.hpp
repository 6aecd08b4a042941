#pragma once

// Scenario documents and the five pipelines behind `bohmlab run`.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bohmlab {

enum class Pipeline { Evolve, Trajectories, Ensemble, Verify, Waveguide };
std::string_view to_string(Pipeline p);
Pipeline parse_pipeline(std::string_view name);

struct Scenario {
  std::string name;
  std::string description;
  Pipeline pipeline = Pipeline::Evolve;
  nlohmann::json config;  // the effective document, seed override applied
  std::filesystem::path source;
};

/// Parses and validates; every problem is a validation error naming the key.
Scenario parse_scenario(nlohmann::json config, std::filesystem::path source = {});
Scenario load_scenario(const std::filesystem::path& path);
Scenario with_seed(Scenario s, std::uint64_t seed);

/// FNV-1a 64 of the compact dump (keys are sorted by the JSON library).
std::string config_hash(const nlohmann::json& config);

struct Check {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct RunResult {
  nlohmann::json report;  // deterministic: no timings or thread counts
  std::vector<Check> checks;
  bool pass = false;
};

/// Runs the pipeline and writes artifacts plus report.json under `out_dir`.
RunResult run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir);

/// Directory holding the bundled scenarios: BOHMLAB_SCENARIOS, else the build-time default.
std::filesystem::path scenario_directory();

struct ScenarioEntry {
  std::string name;
  std::string pipeline;
  std::string description;
  std::filesystem::path path;
};

/// Every *.json in `dir`, sorted by name. Names must be unique.
std::vector<ScenarioEntry> list_scenarios(const std::filesystem::path& dir);
/// A path to an existing file, or the name of a bundled scenario.
std::filesystem::path resolve_scenario(const std::string& name_or_path);

}  // namespace bohmlab
