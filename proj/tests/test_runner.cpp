#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "codim2/runner.hpp"

using namespace codim2;
using namespace codim2::runner;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json sphere_config() {
  return json::parse(R"({
    "name": "s",
    "spacetime": {"family": "schwarzschild", "m": 1.0},
    "surface": {"family": "sphere", "r0": 5.0},
    "resolutions": [16],
    "identities": ["flux_invariant"]
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("codim2_runner_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("unknown keys are rejected at every level") {
  auto c = sphere_config();
  c["colour"] = 1;
  CHECK_THROWS_AS(parse_config(c), ConfigError);
  c = sphere_config();
  c["spacetime"]["mass"] = 1.0;
  CHECK_THROWS_AS(parse_config(c), ConfigError);
  c = sphere_config();
  c["surface"]["radius"] = 1.0;
  CHECK_THROWS_AS(parse_config(c), ConfigError);
  c = sphere_config();
  c["identities"] = json::array({json{{"id", "heintze_karcher"}, {"sides", "both"}}});
  CHECK_THROWS_AS(parse_config(c), ConfigError);
  c = sphere_config();
  c["identities"] = json::array({"not_an_identity"});
  CHECK_THROWS_AS(parse_config(c), ConfigError);
}

TEST_CASE("schema violations are config errors") {
  auto c = sphere_config();
  c["spacetime"]["m"] = -1.0;
  CHECK_THROWS_AS(parse_config(c), ConfigError);
  c = sphere_config();
  c["spacetime"]["n"] = 4;
  CHECK_THROWS_AS(parse_config(c), ConfigError);
  c = sphere_config();
  c["spacetime"] = json{{"family", "desitter"}, {"kappa", -0.1}};
  CHECK_THROWS_AS(parse_config(c), ConfigError);
  c = sphere_config();
  c["surface"]["family"] = "torus";
  CHECK_THROWS_AS(parse_config(c), ConfigError);
  c = sphere_config();
  c["resolutions"] = json::array({2});
  CHECK_THROWS_AS(parse_config(c), ConfigError);
  c = sphere_config();
  c["gauge"] = "flow";
  CHECK_THROWS_AS(parse_config(c), ConfigError);
  c = sphere_config();
  c.erase("surface");
  CHECK_THROWS_AS(parse_config(c), ConfigError);
}

TEST_CASE("negative mass exits with status 1 through the tool path") {
  const fs::path dir = scratch("neg");
  fs::create_directories(dir);
  auto c = sphere_config();
  c["spacetime"]["m"] = -0.5;
  std::ofstream(dir / "neg.json") << c.dump();
  CHECK_THROWS_AS(load_config((dir / "neg.json").string()), ConfigError);
  CHECK_THROWS_AS(load_config("no-such-scenario-anywhere"), ConfigError);
}

TEST_CASE("config hash ignores the output directory and tracks overrides") {
  const auto a = parse_config(sphere_config());
  auto c = sphere_config();
  c["output"] = "elsewhere";
  const auto b = parse_config(c);
  CHECK(a.hash == b.hash);
  CHECK(b.output_dir == "elsewhere");
  Overrides ov;
  ov.seed = 7;
  CHECK(parse_config(sphere_config(), ov).hash != a.hash);
  ov = {};
  ov.tol_scale = 2.0;
  const auto d = parse_config(sphere_config(), ov);
  CHECK(d.hash != a.hash);
  CHECK(d.tol_scale == 2.0);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("bundled scenarios are discoverable and parse") {
  const auto names = bundled_scenarios();
  CHECK(names.size() >= 10);
  for (const auto& n : names) CHECK_NOTHROW(load_config(n));
}

TEST_CASE("a same-named file in the working directory does not shadow a bundled scenario") {
  const fs::path dir = scratch("shadow");
  fs::create_directories(dir);
  std::ofstream(dir / "quadrature-only") << "not json";
  const fs::path old = fs::current_path();
  fs::current_path(dir);
  CHECK_NOTHROW(load_config("quadrature-only"));
  CHECK_THROWS_AS(load_config("./quadrature-only"), ConfigError);
  fs::current_path(old);
}

TEST_CASE("bundled Schwarzschild sphere passes and writes its outputs") {
  Overrides ov;
  ov.output_dir = scratch("sphere").string();
  const auto cfg = load_config("schwarzschild-sphere", ov);
  const auto res = run(cfg);
  CHECK(res.exit_code == 0);
  CHECK(res.scenarios.at(0).errors.empty());
  CHECK(res.scenarios.at(0).reports.size() >= 5);
  const fs::path root(*ov.output_dir);
  CHECK(fs::exists(root / "report.json"));
  CHECK(fs::exists(root / "schwarzschild-sphere" / "flux_invariant.csv"));
  const auto rep = json::parse(slurp(root / "report.json"));
  CHECK(rep["schema_version"] == 1);
  CHECK(rep["config_hash"] == cfg.hash);
  CHECK(rep["reports"].size() == res.scenarios[0].reports.size());
}

TEST_CASE("failed hypotheses give not-applicable reports and exit 0") {
  Overrides ov;
  ov.output_dir = scratch("na").string();
  const auto res = run(load_config("hypothesis-violation", ov));
  CHECK(res.exit_code == 0);
  REQUIRE(res.scenarios.at(0).reports.size() == 2);
  for (const auto& r : res.scenarios[0].reports) {
    CHECK(r.verdict == verify::Verdict::not_applicable);
    CHECK(!r.warnings.empty());
  }
}

TEST_CASE("a failing verdict exits 2") {
  // The reduced identity needs a torsion-free frame; the boosted sphere has torsion.
  auto c = json::parse(R"({
    "name": "boost",
    "spacetime": {"family": "minkowski"},
    "surface": {"family": "boosted-sphere", "r0": 2.0, "beta": 0.3},
    "resolutions": [16],
    "identities": ["minkowski_k1_reduced"]
  })");
  const auto res = run(parse_config(c), false);
  CHECK(res.exit_code == 2);
}

TEST_CASE("runtime errors inside a scenario exit 1") {
  // A sphere inside the horizon leaves the domain.
  auto c = sphere_config();
  c["surface"]["r0"] = 1.0;
  const auto res = run(parse_config(c), false);
  CHECK(res.exit_code == 1);
  CHECK(!res.scenarios.at(0).errors.empty());
}

TEST_CASE("convergence mode writes orders and plots") {
  Overrides ov;
  ov.output_dir = scratch("conv").string();
  const auto res = convergence(load_config("quadrature-only", ov));
  const fs::path dir = fs::path(*ov.output_dir) / "quadrature-only";
  CHECK(fs::exists(dir / "orders.csv"));
  CHECK(fs::exists(dir / "residuals.svg"));
  CHECK(slurp(dir / "residuals.svg").rfind("<svg", 0) == 0);
  REQUIRE(res.orders.size() == 1);
  CHECK(res.exit_code == 0);
}

TEST_CASE("report bodies are reproducible") {
  auto c = sphere_config();
  c["identities"] = json::array({"schwarzschild_mass_formula", "heintze_karcher"});
  const auto cfg = parse_config(c);
  CHECK(report_body(run(cfg, false)) == report_body(run(cfg, false)));
}

TEST_CASE("null flow scenarios write a trace and an F plot") {
  auto c = json::parse(R"({
    "name": "flow",
    "spacetime": {"family": "schwarzschild", "m": 1.0},
    "surface": {"family": "sphere", "r0": 6.0},
    "resolutions": [12],
    "identities": [{"id": "null_flow", "n_steps": 4}]
  })");
  Overrides ov;
  ov.output_dir = scratch("flow").string();
  const auto res = run(parse_config(c, ov));
  CHECK(res.exit_code == 0);
  const fs::path dir = fs::path(*ov.output_dir) / "flow";
  CHECK(fs::exists(dir / "flow_trace_12.csv"));
  CHECK(fs::exists(dir / "flow_F_12.svg"));
  CHECK(slurp(dir / "flow_trace_12.csv").rfind("s,F,min_H_Lbar,area", 0) == 0);
}
