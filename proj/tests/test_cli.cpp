#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "bohmlab/errors.hpp"
#include "bohmlab/scenario.hpp"

using namespace bohmlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_ensemble() {
  return json::parse(R"({
    "name": "tiny_ensemble",
    "pipeline": "ensemble",
    "grid": {"axes": [{"min": -12.0, "max": 12.0, "points": 256}], "boundary": "periodic"},
    "potential": {"kind": "harmonic", "omega": 1.0},
    "state": {"name": "ho_ground", "params": {"omega": 1.0}},
    "observables": [{"kind": "hamiltonian"}, {"kind": "position", "axis": 0}],
    "ensemble": {"mode": "average", "samples": 2000, "seed": 4}
  })");
}

std::string validation_message(json doc) {
  try {
    (void)parse_scenario(std::move(doc));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    return e.what();
  }
  FAIL("expected a validation error");
  return {};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + BOHMLAB_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("a valid document parses") {
  const Scenario s = parse_scenario(small_ensemble());
  CHECK(s.name == "tiny_ensemble");
  CHECK(s.pipeline == Pipeline::Ensemble);
  CHECK(to_string(parse_pipeline("waveguide")) == "waveguide");
}

TEST_CASE("validation errors name the offending key") {
  auto doc = small_ensemble();
  doc.erase("grid");
  CHECK(validation_message(doc).find("grid") != std::string::npos);

  doc = small_ensemble();
  doc["pipeline"] = "teleport";
  CHECK(validation_message(doc).find("pipeline") != std::string::npos);

  doc = small_ensemble();
  doc["colour"] = "blue";
  CHECK(validation_message(doc).find("colour") != std::string::npos);

  doc = small_ensemble();
  doc["ensemble"]["samples"] = "many";
  CHECK(validation_message(doc).find("samples") != std::string::npos);

  doc = small_ensemble();
  doc["ensemble"]["mode"] = "guess";
  CHECK(validation_message(doc).find("ensemble.mode") != std::string::npos);

  doc = small_ensemble();
  doc["potential"]["kind"] = "quartic";
  CHECK(validation_message(doc).find("potential.kind") != std::string::npos);

  doc = small_ensemble();
  doc["physics"] = {{"mass", -1.0}, {"hbar", 1.0}};
  CHECK(validation_message(doc).find("physics") != std::string::npos);

  CHECK(validation_message(json::parse(R"({"name": "v", "pipeline": "verify", "verify": {"cases": ["nope"]}})"))
            .find("verify.cases") != std::string::npos);
  CHECK(validation_message(json::array()).find("scenario") != std::string::npos);
}

TEST_CASE("seed override and config hash") {
  const Scenario s = parse_scenario(small_ensemble());
  const Scenario t = with_seed(s, 99);
  CHECK(t.config["ensemble"]["seed"] == 99);
  CHECK(config_hash(s.config) == config_hash(parse_scenario(small_ensemble()).config));
  CHECK(config_hash(s.config) != config_hash(t.config));
  CHECK(config_hash(s.config).size() == 16);
}

TEST_CASE("bundled scenarios are listed with unique names") {
  const auto entries = list_scenarios(scenario_directory());
  CHECK(entries.size() >= 12);
  std::set<std::string> names, pipelines;
  for (const auto& e : entries) {
    names.insert(e.name);
    pipelines.insert(e.pipeline);
    CHECK_FALSE(e.description.empty());
    CHECK(fs::exists(e.path));
    // every bundled file parses
    CHECK_NOTHROW(load_scenario(e.path));
  }
  CHECK(names.size() == entries.size());
  CHECK(pipelines.size() == 5);
  CHECK(resolve_scenario("waveguide_identity") == entries[0].path.parent_path() / "waveguide_identity.json");
  CHECK_THROWS_AS(resolve_scenario("no_such_scenario"), Error);
}

TEST_CASE("run_scenario is deterministic and writes a report") {
  TempDir dir("bohmlab_test_run");
  const Scenario s = parse_scenario(small_ensemble());
  const RunResult a = run_scenario(s, dir.path / "a");
  const RunResult b = run_scenario(s, dir.path / "b");
  CHECK(a.report.dump() == b.report.dump());
  CHECK(slurp(dir.path / "a" / "report.json") == slurp(dir.path / "b" / "report.json"));
  CHECK_FALSE(a.checks.empty());
  CHECK(a.pass);
}

TEST_CASE("malformed config exits 2 and writes nothing") {
  TempDir dir("bohmlab_test_cli_bad");
  auto doc = small_ensemble();
  doc.erase("grid");
  std::ofstream(dir.path / "bad.json") << doc.dump(2);
  const fs::path out = dir.path / "out";
  CHECK(cli("run \"" + (dir.path / "bad.json").string() + "\" --out \"" + out.string() + "\"", dir.path / "log") == 2);
  CHECK_FALSE(fs::exists(out));
  CHECK(slurp(dir.path / "log").find("grid") != std::string::npos);

  CHECK(cli("run no_such_scenario --out \"" + out.string() + "\"", dir.path / "log") == 2);
  CHECK(cli("frobnicate", dir.path / "log") == 2);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("cli list and describe") {
  TempDir dir("bohmlab_test_cli_list");
  REQUIRE(cli("list", dir.path / "log") == 0);
  const std::string listing = slurp(dir.path / "log");
  CHECK(listing.find("born_rule_two_branch") != std::string::npos);
  CHECK(listing.find("[waveguide]") != std::string::npos);

  REQUIRE(cli("describe plane_wave_momentum", dir.path / "log") == 0);
  const std::string text = slurp(dir.path / "log");
  CHECK(text.find("pipeline:    verify") != std::string::npos);
  CHECK(text.find("config hash: ") != std::string::npos);
  CHECK(cli("describe nothing_here", dir.path / "log") == 2);
}

TEST_CASE("cli run is reproducible across thread counts") {
  TempDir dir("bohmlab_test_cli_run");
  std::ofstream(dir.path / "tiny.json") << small_ensemble().dump(2);
  const std::string cfg = "\"" + (dir.path / "tiny.json").string() + "\"";
  REQUIRE(cli("run " + cfg + " --threads 1 --out \"" + (dir.path / "t1").string() + "\"", dir.path / "log") == 0);
  CHECK(slurp(dir.path / "log").find("all checks passed") != std::string::npos);
  REQUIRE(cli("run " + cfg + " --threads 3 --out \"" + (dir.path / "t3").string() + "\"", dir.path / "log") == 0);
  const std::string r1 = slurp(dir.path / "t1" / "tiny_ensemble" / "report.json");
  CHECK_FALSE(r1.empty());
  CHECK(r1 == slurp(dir.path / "t3" / "tiny_ensemble" / "report.json"));
  CHECK(fs::exists(dir.path / "t1" / "tiny_ensemble" / "run_meta.json"));

  REQUIRE(cli("run " + cfg + " --seed 5 --out \"" + (dir.path / "s5").string() + "\"", dir.path / "log") == 0);
  CHECK(r1 != slurp(dir.path / "s5" / "tiny_ensemble" / "report.json"));
}
