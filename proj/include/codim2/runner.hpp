#pragma once

// Configuration-driven runner behind the command-line tool: parses scenario configs,
// evaluates identity suites over resolution lists and writes report.json, CSV tables
// and SVG plots.

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "codim2/nullflow.hpp"
#include "codim2/surface.hpp"
#include "codim2/verify.hpp"

namespace codim2::runner {

struct IdentitySpec {
  std::string id;
  nlohmann::json params = nlohmann::json::object();
  double declared_order = 0.0;  // convergence requirement; 0 = not checked
};

struct ScenarioConfig {
  std::string name;
  spacetime::StaticParameters spacetime;
  std::string surface_family;
  surface::FamilyParams surface;
  surface::GaugeSpec gauge;
  std::vector<int> resolutions;  // n_theta; n_phi = 2 n_theta
  double step_factor = 0.25;
  std::vector<IdentitySpec> identities;
  double tolerance = 0.0;  // <= 0: resolution default
  double torsion_threshold = 1e-8;
};

struct RunConfig {
  std::vector<ScenarioConfig> scenarios;
  std::string output_dir = "codim2-out";
  std::uint64_t seed = 1;
  double tol_scale = 1.0;
  std::string hash;  // FNV-1a of the canonical config (output directory excluded)
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<double> tol_scale;
};

// Throws ConfigError on schema violations (unknown keys, wrong types, negative mass,
// unsupported dimension, unknown identities or families).
RunConfig parse_config(const nlohmann::json& config, const Overrides& overrides = {});
// Reads a file, or a bundled scenario by name when no such file exists.
RunConfig load_config(const std::string& path_or_name, const Overrides& overrides = {});

std::string fnv1a_hex(const std::string& bytes);

std::string scenario_directory();
std::vector<std::string> bundled_scenarios();

struct ScenarioResult {
  std::string name;
  std::vector<verify::IdentityReport> reports;
  std::vector<std::string> errors;
  std::vector<nullflow::FlowResult> flows;  // one per null_flow identity and resolution
};

struct OrderRow {
  std::string scenario, id;
  std::vector<int> resolutions;
  std::vector<double> residuals;
  std::optional<double> order;  // empty: roundoff floor or too few levels
  std::string note;
  double declared = 0.0;
  bool ok = true;
};

struct RunResult {
  std::vector<ScenarioResult> scenarios;
  std::vector<OrderRow> orders;  // convergence mode only
  nlohmann::json report;
  int exit_code = 0;  // 0 all pass, 2 a verdict failed (or an order fell short), 1 error
};

// Evaluates every scenario; when write_outputs is set, writes report.json and the
// per-scenario tables and plots under the output directory.
RunResult run(const RunConfig& config, bool write_outputs = true);
// As run, plus a fitted decay order per report id across the resolution list.
RunResult convergence(const RunConfig& config, bool write_outputs = true);

// Serialized report body (what run writes to report.json).
std::string report_body(const RunResult& result);

}  // namespace codim2::runner
