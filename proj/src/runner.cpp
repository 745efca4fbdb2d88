#include "codim2/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "codim2/parallel.hpp"
#include "codim2/quadrature.hpp"
#include "codim2/svg.hpp"

#ifndef CODIM2_SCENARIO_DIR
#define CODIM2_SCENARIO_DIR "scenarios"
#endif

namespace codim2::runner {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Schema helpers

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

double get_number(const json& obj, const std::string& key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
  const double v = obj[key].get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + "." + key + ": not finite");
  return v;
}

int get_int(const json& obj, const std::string& key, int fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  return obj[key].get<int>();
}

bool get_bool(const json& obj, const std::string& key, bool fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
  return obj[key].get<bool>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return obj[key].get<std::string>();
}

Eigen::Vector3d get_vec3(const json& obj, const std::string& key, const Eigen::Vector3d& fallback,
                         const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& a = obj[key];
  if (!a.is_array() || a.size() != 3) throw ConfigError(where + "." + key + ": expected three numbers");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!a[i].is_number()) throw ConfigError(where + "." + key + ": expected three numbers");
    v(i) = a[i].get<double>();
  }
  return v;
}

std::vector<surface::ShTerm> get_terms(const json& obj, const std::string& key, const std::string& where) {
  std::vector<surface::ShTerm> out;
  if (!obj.contains(key)) return out;
  const json& a = obj[key];
  if (!a.is_array()) throw ConfigError(where + "." + key + ": expected a list of [l, m, coefficient]");
  for (const auto& t : a) {
    if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() || !t[1].is_number_integer() || !t[2].is_number())
      throw ConfigError(where + "." + key + ": expected a list of [l, m, coefficient]");
    surface::ShTerm term{t[0].get<int>(), t[1].get<int>(), t[2].get<double>()};
    if (term.l < 0 || std::abs(term.m) > term.l) throw ConfigError(where + "." + key + ": invalid (l, m)");
    out.push_back(term);
  }
  return out;
}

spacetime::StaticParameters parse_spacetime(const json& j, const std::string& where) {
  check_keys(j, {"family", "m", "kappa", "n", "bump_amplitude", "bump_center", "bump_width"}, where);
  spacetime::StaticParameters p;
  if (!j.contains("family")) throw ConfigError(where + ": missing 'family'");
  p.family = spacetime::family_from_name(get_string(j, "family", "", where));
  p.m = get_number(j, "m", 0.0, where);
  p.kappa = get_number(j, "kappa", 0.0, where);
  p.n = get_int(j, "n", 3, where);
  p.bump_amplitude = get_number(j, "bump_amplitude", 0.0, where);
  p.bump_center = get_number(j, "bump_center", 1.0, where);
  p.bump_width = get_number(j, "bump_width", 0.25, where);
  if (p.m < 0.0) throw ConfigError(where + ".m: mass must be non-negative");
  if (p.n != 3) throw ConfigError(where + ".n: surfaces are supported in dimension n = 3 only");
  using spacetime::Family;
  if (p.family == Family::minkowski && (p.m != 0.0 || p.kappa != 0.0))
    throw ConfigError(where + ": minkowski takes no m or kappa");
  if (p.family == Family::desitter && !(p.kappa > 0.0)) throw ConfigError(where + ".kappa: desitter needs kappa > 0");
  if (p.family == Family::antidesitter && !(p.kappa < 0.0))
    throw ConfigError(where + ".kappa: antidesitter needs kappa < 0");
  if (p.family == Family::schwarzschild && p.kappa != 0.0) throw ConfigError(where + ": schwarzschild takes no kappa");
  if (p.bump_width <= 0.0) throw ConfigError(where + ".bump_width: must be positive");
  return p;
}

surface::FamilyParams parse_surface(const json& j, const std::string& where, std::uint64_t seed, std::string& family) {
  check_keys(j,
             {"family", "t0", "r0", "beta", "rho_terms", "time_terms", "epsilon", "random_lmax", "seed", "axes",
              "center", "outgoing", "csv_path", "csv_lmax"},
             where);
  if (!j.contains("family")) throw ConfigError(where + ": missing 'family'");
  family = get_string(j, "family", "", where);
  const auto names = surface::family_names();
  if (std::find(names.begin(), names.end(), family) == names.end())
    throw ConfigError(where + ".family: unknown surface family '" + family + "'");
  surface::FamilyParams p;
  p.t0 = get_number(j, "t0", p.t0, where);
  p.r0 = get_number(j, "r0", p.r0, where);
  p.beta = get_number(j, "beta", p.beta, where);
  p.rho_terms = get_terms(j, "rho_terms", where);
  p.time_terms = get_terms(j, "time_terms", where);
  p.epsilon = get_number(j, "epsilon", p.epsilon, where);
  p.random_lmax = get_int(j, "random_lmax", p.random_lmax, where);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError(where + ".seed: expected a non-negative integer");
    p.seed = j["seed"].get<std::uint64_t>();
  } else {
    p.seed = seed;
  }
  p.axes = get_vec3(j, "axes", p.axes, where);
  p.center = get_vec3(j, "center", p.center, where);
  p.outgoing = get_bool(j, "outgoing", p.outgoing, where);
  p.csv_path = get_string(j, "csv_path", p.csv_path, where);
  p.csv_lmax = get_int(j, "csv_lmax", p.csv_lmax, where);
  if (!(p.r0 > 0.0)) throw ConfigError(where + ".r0: must be positive");
  if (!(std::abs(p.beta) < 1.0)) throw ConfigError(where + ".beta: must satisfy |beta| < 1");
  if (!(p.epsilon >= 0.0 && p.epsilon < 1.0)) throw ConfigError(where + ".epsilon: must lie in [0, 1)");
  if ((p.axes.array() <= 0.0).any()) throw ConfigError(where + ".axes: must be positive");
  if (family == "csv" && p.csv_path.empty()) throw ConfigError(where + ".csv_path: required for the csv family");
  return p;
}

surface::GaugeSpec parse_gauge(const json& j, const std::string& where) {
  surface::GaugeSpec g;
  std::string kind;
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else {
    check_keys(j, {"kind", "cone_lmax"}, where);
    kind = get_string(j, "kind", "slice", where);
    g.cone_lmax = get_int(j, "cone_lmax", g.cone_lmax, where);
  }
  try {
    g.kind = surface::gauge_from_name(kind);
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
  if (g.kind == surface::GaugeKind::flow) throw ConfigError(where + ": the flow gauge is internal to null_flow");
  return g;
}

// Parameter keys and default declared convergence orders.
const std::map<std::string, std::pair<std::set<std::string>, double>>& identity_table() {
  static const std::map<std::string, std::pair<std::set<std::string>, double>> t = {
      {"minkowski_k1", {{}, 4.0}},
      {"minkowski_k1_reduced", {{}, 4.0}},
      {"minkowski_rs", {{"r", "s", "variant"}, 4.0}},
      {"classical_recovery", {{"k"}, 4.0}},
      {"heintze_karcher", {{"direction"}, 0.0}},
      {"slice_heintze_karcher", {{}, 0.0}},
      {"schwarzschild_mass_formula", {{}, 4.0}},
      {"flux_invariant", {{}, 0.0}},
      {"divergence", {{"r", "s", "barred"}, 4.0}},
      {"divergence_schwarzschild", {{"barred"}, 4.0}},
      {"schwarzschild_inequality", {{"order", "side"}, 0.0}},
      {"equality_sandwich", {{"r", "s"}, 0.0}},
      {"null_flow", {{"n_steps", "ds"}, 0.0}},
      {"raychaudhuri", {{"s_star", "ds"}, 0.0}},
      {"quadrature", {{}, 0.0}},
  };
  return t;
}

IdentitySpec parse_identity(const json& j, const std::string& where) {
  IdentitySpec spec;
  if (j.is_string()) {
    spec.id = j.get<std::string>();
  } else if (j.is_object()) {
    if (!j.contains("id") || !j["id"].is_string()) throw ConfigError(where + ": identity object needs a string 'id'");
    spec.id = j["id"].get<std::string>();
  } else {
    throw ConfigError(where + ": identity must be a name or an object");
  }
  const auto& table = identity_table();
  const auto it = table.find(spec.id);
  if (it == table.end()) throw ConfigError(where + ": unknown identity '" + spec.id + "'");
  spec.declared_order = it->second.second;
  if (j.is_object()) {
    std::set<std::string> allowed = it->second.first;
    allowed.insert("id");
    allowed.insert("declared_order");
    check_keys(j, allowed, where);
    spec.declared_order = get_number(j, "declared_order", spec.declared_order, where);
    for (const auto& [key, value] : j.items())
      if (key != "id" && key != "declared_order") spec.params[key] = value;
  }
  return spec;
}

ScenarioConfig parse_scenario(const json& j, const std::string& where, std::uint64_t seed) {
  check_keys(j,
             {"name", "description", "spacetime", "surface", "gauge", "resolutions", "step_factor", "identities",
              "tolerance", "torsion_threshold"},
             where);
  ScenarioConfig s;
  s.name = get_string(j, "name", "scenario", where);
  if (!j.contains("spacetime")) throw ConfigError(where + ": missing 'spacetime'");
  s.spacetime = parse_spacetime(j["spacetime"], where + ".spacetime");
  if (!j.contains("identities") || !j["identities"].is_array() || j["identities"].empty())
    throw ConfigError(where + ": 'identities' must be a non-empty list");
  for (std::size_t i = 0; i < j["identities"].size(); ++i)
    s.identities.push_back(parse_identity(j["identities"][i], where + ".identities[" + std::to_string(i) + "]"));
  const bool surface_needed = std::any_of(s.identities.begin(), s.identities.end(),
                                          [](const IdentitySpec& id) { return id.id != "quadrature"; });
  if (j.contains("surface")) {
    s.surface = parse_surface(j["surface"], where + ".surface", seed, s.surface_family);
  } else if (surface_needed) {
    throw ConfigError(where + ": missing 'surface'");
  }
  if (j.contains("gauge")) s.gauge = parse_gauge(j["gauge"], where + ".gauge");
  if (!j.contains("resolutions") || !j["resolutions"].is_array() || j["resolutions"].empty())
    throw ConfigError(where + ": 'resolutions' must be a non-empty list of polar node counts");
  for (const auto& r : j["resolutions"]) {
    if (!r.is_number_integer() || r.get<int>() < 4) throw ConfigError(where + ".resolutions: integers >= 4 expected");
    s.resolutions.push_back(r.get<int>());
  }
  s.step_factor = get_number(j, "step_factor", s.step_factor, where);
  if (!(s.step_factor > 0.0 && s.step_factor < 1.0)) throw ConfigError(where + ".step_factor: must lie in (0, 1)");
  s.tolerance = get_number(j, "tolerance", 0.0, where);
  if (s.tolerance < 0.0) throw ConfigError(where + ".tolerance: must be non-negative");
  s.torsion_threshold = get_number(j, "torsion_threshold", s.torsion_threshold, where);
  return s;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_') ? c : '_';
  return out.empty() ? "_" : out;
}

void write_atomic(const fs::path& path, const std::string& body) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << body;
    if (!out) throw ConfigError("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Identity dispatch

struct Context {
  const ScenarioConfig* cfg = nullptr;
  int n_theta = 0;
  std::shared_ptr<const surface::Ambient> ambient;
  std::shared_ptr<const surface::Immersion> immersion;
  std::shared_ptr<surface::SurfaceMesh> mesh;
  std::shared_ptr<surface::NullFrameField> frame;
  verify::VerifyOptions opt;

  const surface::SurfaceMesh& get_mesh() {
    if (!mesh) {
      surface::SurfaceOptions so{n_theta, 2 * n_theta, cfg->step_factor};
      mesh = std::make_shared<surface::SurfaceMesh>(surface::build_surface(ambient, immersion, so));
    }
    return *mesh;
  }
  const surface::NullFrameField& get_frame() {
    if (!frame) frame = std::make_shared<surface::NullFrameField>(surface::null_frame(get_mesh(), cfg->gauge));
    return *frame;
  }
};

verify::IdentityReport not_applicable(Context& ctx, const std::string& id, const std::string& why) {
  verify::IdentityReport r;
  r.id = id;
  r.kind = verify::ReportKind::inequality;
  r.verdict = verify::Verdict::not_applicable;
  r.resolution = std::to_string(ctx.n_theta) + "x" + std::to_string(2 * ctx.n_theta);
  r.surface = ctx.cfg->surface_family;
  r.spacetime = spacetime::family_name(ctx.cfg->spacetime.family);
  r.gauge = surface::gauge_name(ctx.cfg->gauge.kind);
  r.tolerance = ctx.opt.tolerance;
  r.warnings.push_back(why);
  return r;
}

template <typename Fn>
void guarded(Context& ctx, const std::string& id, std::vector<verify::IdentityReport>& out, Fn&& fn) {
  try {
    fn();
  } catch (const PreconditionError& e) {
    out.push_back(not_applicable(ctx, id, std::string("precondition: ") + e.what()));
  }
}

std::vector<int> int_choices(const json& params, const std::string& key, std::vector<int> all) {
  if (!params.contains(key)) return all;
  if (!params[key].is_number_integer()) throw ConfigError("identity parameter '" + key + "' must be an integer");
  return {params[key].get<int>()};
}

std::vector<bool> barred_choices(const json& params) {
  if (!params.contains("barred")) return {false, true};
  const json& b = params["barred"];
  if (b.is_boolean()) return {b.get<bool>()};
  if (b.is_string() && b.get<std::string>() == "both") return {false, true};
  throw ConfigError("identity parameter 'barred' must be true, false or \"both\"");
}

double sphere_exp_integral(int n_theta) {
  const quadrature::SphereRule rule(n_theta, 2 * n_theta);
  std::vector<double> f(rule.size());
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double th = rule.theta(rule.theta_index(k)), ph = rule.phi(rule.phi_index(k));
    f[k] = std::exp(std::sin(th) * std::cos(ph));
  }
  return quadrature::integrate_round(rule, f);
}

void dispatch(const IdentitySpec& spec, Context& ctx, ScenarioResult& result, std::vector<verify::IdentityReport>& out) {
  const json& p = spec.params;
  const auto& id = spec.id;
  const auto& opt = ctx.opt;
  if (id == "quadrature") {
    verify::IdentityReport r;
    r.id = "quadrature_exp_x";
    r.kind = verify::ReportKind::value;
    r.resolution = std::to_string(ctx.n_theta) + "x" + std::to_string(2 * ctx.n_theta);
    r.surface = "unit-sphere";
    r.spacetime = "none";
    r.gauge = "none";
    const double exact = 4.0 * M_PI * std::sinh(1.0), value = sphere_exp_integral(ctx.n_theta);
    r.terms = {{"integral", value}, {"expected", exact}};
    r.residual = value - exact;
    r.scale = std::abs(value) + std::abs(exact);
    r.rel_residual = std::abs(r.residual) / r.scale;
    r.tolerance = (opt.tolerance > 0 ? opt.tolerance : 1e-12) * opt.tolerance_scale;
    r.verdict = std::abs(r.residual) <= r.tolerance * r.scale ? verify::Verdict::pass : verify::Verdict::fail;
    r.equality = r.verdict == verify::Verdict::pass;
    out.push_back(r);
    return;
  }
  if (id == "null_flow") {
    nullflow::FlowOptions fo;
    fo.n_steps = int_choices(p, "n_steps", {fo.n_steps})[0];
    if (p.contains("ds")) {
      if (!p["ds"].is_number()) throw ConfigError("null_flow.ds must be a number");
      fo.ds = p["ds"].get<double>();
    }
    guarded(ctx, "null_flow", out, [&] {
      auto flow = nullflow::evolve(ctx.get_mesh(), fo);
      const auto checks = nullflow::flow_checks(flow, opt);
      out.push_back(checks.monotonicity);
      out.push_back(checks.q_rate);
      out.push_back(checks.xi_rate);
      result.flows.push_back(std::move(flow));
    });
    return;
  }
  if (id == "raychaudhuri") {
    double s_star = 0.4;
    std::vector<double> ds = {0.2, 0.1, 0.05};
    if (p.contains("s_star")) s_star = p["s_star"].get<double>();
    if (p.contains("ds")) ds = p["ds"].get<std::vector<double>>();
    if (ds.size() < 3) throw ConfigError("raychaudhuri.ds needs at least three step sizes");
    const auto st = nullflow::raychaudhuri_study(ctx.get_mesh(), s_star, ds);
    verify::IdentityReport r;
    r.id = "raychaudhuri_order";
    r.kind = verify::ReportKind::inequality;
    r.resolution = std::to_string(ctx.n_theta) + "x" + std::to_string(2 * ctx.n_theta);
    r.surface = ctx.get_mesh().source().name();
    r.spacetime = spacetime::family_name(ctx.cfg->spacetime.family);
    r.gauge = "flow";
    const double declared = spec.declared_order > 0.0 ? spec.declared_order : 4.0;
    r.terms = {{"order", st.order}, {"threshold", declared - 0.5}};
    for (std::size_t i = 0; i < st.ds.size(); ++i)
      r.terms.push_back({"residual_l2_ds_" + fmt(st.ds[i]), st.residual_l2[i]});
    r.residual = st.order - (declared - 0.5);
    r.scale = 1.0;
    r.rel_residual = std::abs(r.residual);
    r.tolerance = 0.0;
    r.verdict = r.residual >= 0.0 ? verify::Verdict::pass : verify::Verdict::fail;
    out.push_back(r);
    return;
  }

  const auto& frame = ctx.get_frame();
  if (id == "minkowski_k1") {
    out.push_back(verify::minkowski_k1(frame, opt));
  } else if (id == "minkowski_k1_reduced") {
    out.push_back(verify::minkowski_k1_reduced(frame, opt));
  } else if (id == "minkowski_rs") {
    std::vector<verify::RsVariant> variants = {verify::RsVariant::l_pair, verify::RsVariant::lbar_pair, verify::RsVariant::lbar_mixed,
                                               verify::RsVariant::l_mixed};
    if (p.contains("variant") && !(p["variant"].is_string() && p["variant"].get<std::string>() == "all")) {
      if (!p["variant"].is_string()) throw ConfigError("minkowski_rs.variant must be a string");
      variants = {verify::rs_variant_from_name(p["variant"].get<std::string>())};
    }
    const bool fixed = p.contains("r") || p.contains("s");
    for (auto v : variants)
      for (int r : int_choices(p, "r", {0, 1, 2}))
        for (int s : int_choices(p, "s", {0, 1, 2})) {
          const bool needs_r = v == verify::RsVariant::l_pair || v == verify::RsVariant::lbar_mixed;
          const bool valid = r >= 0 && s >= 0 && r + s >= 1 && r + s <= 2 && (needs_r ? r >= 1 : s >= 1);
          if (!valid) {
            if (fixed && variants.size() == 1)
              throw ConfigError("minkowski_rs: (r, s) = (" + std::to_string(r) + ", " + std::to_string(s) +
                                ") does not fit variant " + verify::rs_variant_name(v));
            continue;
          }
          out.push_back(verify::minkowski_rs(frame, r, s, v, opt));
        }
  } else if (id == "classical_recovery") {
    for (int k : int_choices(p, "k", {1, 2})) {
      if (k < 1 || k > 2) throw ConfigError("classical_recovery.k must be 1 or 2");
      guarded(ctx, "classical_recovery_k" + std::to_string(k), out,
              [&] { out.push_back(verify::classical_recovery(frame, k, opt)); });
    }
  } else if (id == "heintze_karcher") {
    const std::string d = p.contains("direction") ? p["direction"].get<std::string>() : "both";
    std::vector<verify::HkDirection> dirs;
    if (d == "both" || d == "future-incoming") dirs.push_back(verify::HkDirection::future_incoming);
    if (d == "both" || d == "past-incoming") dirs.push_back(verify::HkDirection::past_incoming);
    if (dirs.empty()) throw ConfigError("heintze_karcher.direction must be future-incoming, past-incoming or both");
    for (auto dir : dirs)
      guarded(ctx, "heintze_karcher_" + verify::hk_direction_name(dir), out,
              [&] { out.push_back(verify::heintze_karcher(frame, dir, opt)); });
  } else if (id == "slice_heintze_karcher") {
    guarded(ctx, "slice_heintze_karcher", out, [&] { out.push_back(verify::slice_heintze_karcher(frame, opt)); });
  } else if (id == "schwarzschild_mass_formula") {
    guarded(ctx, "schwarzschild_mass_formula", out, [&] { out.push_back(verify::schwarzschild_mass_formula(frame, opt)); });
  } else if (id == "flux_invariant") {
    guarded(ctx, "flux_invariant", out, [&] { out.push_back(verify::flux_invariant(frame, opt)); });
  } else if (id == "divergence") {
    const bool fixed = p.contains("r") || p.contains("s");
    for (int r : int_choices(p, "r", {0, 1, 2}))
      for (int s : int_choices(p, "s", {0, 1, 2})) {
        if (r < 0 || s < 0 || r + s > 2) {
          if (fixed) throw ConfigError("divergence: need r, s >= 0 and r + s <= 2");
          continue;
        }
        for (bool b : barred_choices(p)) out.push_back(verify::divergence_constant_curvature(frame, r, s, b, opt));
      }
  } else if (id == "divergence_schwarzschild") {
    for (bool b : barred_choices(p))
      guarded(ctx, std::string("divergence_schwarzschild_") + (b ? "Tbar02" : "T20"), out, [&] {
        auto d = verify::divergence_schwarzschild(frame, b, opt);
        out.push_back(std::move(d.closed_form));
        out.push_back(std::move(d.specialization));
      });
  } else if (id == "schwarzschild_inequality") {
    const std::string side = p.contains("side") ? p["side"].get<std::string>() : "both";
    std::vector<verify::SchwarzschildMode> modes;
    if (side == "both" || side == "L") modes.push_back(verify::SchwarzschildMode::l_side);
    if (side == "both" || side == "Lbar") modes.push_back(verify::SchwarzschildMode::lbar_side);
    if (modes.empty()) throw ConfigError("schwarzschild_inequality.side must be L, Lbar or both");
    for (auto mode : modes)
      for (int order : int_choices(p, "order", {1, 2})) {
        if (order < 1 || order > 2) throw ConfigError("schwarzschild_inequality.order must be 1 or 2");
        out.push_back(verify::schwarzschild_inequality(frame, order, mode, opt));
      }
  } else if (id == "equality_sandwich") {
    const int r = int_choices(p, "r", {1})[0], s = int_choices(p, "s", {0})[0];
    if (r < 1 || s < 0 || r + s > 2) throw ConfigError("equality_sandwich: need r >= 1, s >= 0, r + s <= 2");
    guarded(ctx, "equality_sandwich", out, [&] { out.push_back(verify::equality_sandwich(frame, r, s, opt)); });
  } else {
    throw ConfigError("unknown identity '" + id + "'");
  }
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const RunConfig& run, std::vector<double>& declared) {
  ScenarioResult res;
  res.name = cfg.name;
  std::shared_ptr<const surface::Ambient> ambient;
  std::shared_ptr<const surface::Immersion> immersion;
  try {
    ambient = std::make_shared<surface::Ambient>(cfg.spacetime);
    if (!cfg.surface_family.empty()) immersion = surface::family_catalog(cfg.surface_family, cfg.surface, *ambient);
  } catch (const std::exception& e) {
    res.errors.push_back(e.what());
    return res;
  }
  for (int nt : cfg.resolutions) {
    Context ctx;
    ctx.cfg = &cfg;
    ctx.n_theta = nt;
    ctx.ambient = ambient;
    ctx.immersion = immersion;
    ctx.opt.tolerance = cfg.tolerance;
    ctx.opt.tolerance_scale = run.tol_scale;
    ctx.opt.torsion_threshold = cfg.torsion_threshold;
    for (const auto& spec : cfg.identities) {
      std::vector<verify::IdentityReport> out;
      try {
        dispatch(spec, ctx, res, out);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        res.errors.push_back(spec.id + " at n_theta=" + std::to_string(nt) + ": " + e.what());
        continue;
      }
      for (auto& r : out) {
        res.reports.push_back(std::move(r));
        declared.push_back(spec.declared_order);
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Convergence orders

std::vector<OrderRow> fit_orders(const ScenarioResult& sr, const std::vector<double>& declared,
                                 const std::vector<int>& resolutions) {
  std::vector<OrderRow> rows;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<const verify::IdentityReport*>> groups;
  std::vector<double> group_declared;
  for (std::size_t k = 0; k < sr.reports.size(); ++k) {
    const auto& r = sr.reports[k];
    auto [it, inserted] = index.emplace(r.id, groups.size());
    if (inserted) {
      groups.emplace_back();
      group_declared.push_back(declared[k]);
    }
    groups[it->second].push_back(&r);
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    OrderRow row;
    row.scenario = sr.name;
    row.id = groups[g][0]->id;
    row.declared = group_declared[g];
    std::vector<double> scale;
    for (const auto* r : groups[g]) {
      const int nt = std::atoi(r->resolution.c_str());
      row.resolutions.push_back(nt);
      row.residuals.push_back(r->residual);
      scale.push_back(r->scale);
    }
    const std::size_t n = row.residuals.size();
    const bool inequality = groups[g][0]->kind == verify::ReportKind::inequality;
    if (groups[g][0]->verdict == verify::Verdict::not_applicable) {
      row.note = "not applicable";
    } else if (n < 2 || (inequality && n < 3)) {
      row.note = "too few resolutions";
    } else if (std::abs(row.residuals.back()) <= 1e-12 * std::max(scale.back(), 1e-300) && !inequality) {
      row.note = "roundoff floor";
    } else {
      // Identities decay to zero: least-squares slope of log|residual| against log n.
      // Inequalities converge to a limit: successive differences of the last three levels.
      std::vector<double> xs, ys;
      if (!inequality) {
        for (std::size_t i = 0; i < n; ++i)
          if (std::abs(row.residuals[i]) > 1e-12 * std::max(scale[i], 1e-300)) {
            xs.push_back(std::log(double(row.resolutions[i])));
            ys.push_back(std::log(std::abs(row.residuals[i])));
          }
      } else {
        const double e1 = std::abs(row.residuals[n - 3] - row.residuals[n - 2]);
        const double e2 = std::abs(row.residuals[n - 2] - row.residuals[n - 1]);
        if (e2 <= 1e-12 * scale.back() || e1 <= 1e-12 * scale.back()) {
          row.note = "roundoff floor";
        } else {
          const double n1 = 0.5 * (row.resolutions[n - 3] + row.resolutions[n - 2]);
          const double n2 = 0.5 * (row.resolutions[n - 2] + row.resolutions[n - 1]);
          xs = {std::log(n1), std::log(n2)};
          ys = {std::log(e1), std::log(e2)};
        }
      }
      if (xs.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
        mx /= xs.size();
        my /= xs.size();
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
        row.order = -sxy / sxx;
      } else if (row.note.empty()) {
        row.note = "roundoff floor";
      }
    }
    if (row.declared > 0.0 && row.order) row.ok = *row.order >= row.declared - 0.5;
    rows.push_back(std::move(row));
  }
  (void)resolutions;
  return rows;
}

json order_json(const OrderRow& r) {
  json j = {{"scenario", r.scenario}, {"id", r.id},       {"resolutions", r.resolutions}, {"residuals", r.residuals},
            {"declared_order", r.declared}, {"ok", r.ok}, {"note", r.note}};
  j["order"] = r.order ? json(*r.order) : json(nullptr);
  return j;
}

void write_scenario_outputs(const fs::path& dir, const ScenarioConfig& cfg, const ScenarioResult& sr,
                            const std::vector<OrderRow>* orders) {
  // One CSV per report id, one row per resolution.
  std::map<std::string, std::string> tables;
  std::vector<std::string> order_of_ids;
  for (const auto& r : sr.reports) {
    auto [it, inserted] = tables.emplace(r.id, verify::csv_header() + "\n");
    if (inserted) order_of_ids.push_back(r.id);
    it->second += verify::csv_row(r) + "\n";
  }
  for (const auto& [id, body] : tables) write_atomic(dir / (sanitize(id) + ".csv"), body);
  if (cfg.resolutions.size() > 1) {
    std::vector<svg::Series> series;
    for (const auto& id : order_of_ids) {
      svg::Series s;
      s.label = id;
      for (const auto& r : sr.reports)
        if (r.id == id) {
          s.x.push_back(std::atof(r.resolution.c_str()));
          s.y.push_back(std::abs(r.residual) / std::max(r.scale, 1e-300));
        }
      series.push_back(std::move(s));
    }
    svg::PlotOptions po;
    po.title = cfg.name + ": relative residual";
    po.x_label = "polar nodes";
    po.y_label = "|residual| / scale";
    po.log_x = po.log_y = true;
    po.height = std::max(420, 60 + 16 * int(series.size()));
    write_atomic(dir / "residuals.svg", svg::line_plot(series, po));
  }
  for (std::size_t i = 0; i < sr.flows.size(); ++i) {
    const auto& flow = sr.flows[i];
    std::ostringstream os;
    nullflow::write_trace_csv(os, flow);
    const std::string tag = std::to_string(flow.states.empty() ? 0 : flow.states[0].mesh->rule().n_theta());
    write_atomic(dir / ("flow_trace_" + tag + ".csv"), os.str());
    svg::Series s;
    s.label = "F";
    for (const auto& st : flow.states) {
      s.x.push_back(st.s);
      s.y.push_back(st.terms.F);
    }
    svg::PlotOptions po;
    po.title = cfg.name + ": F along the null flow";
    po.x_label = "affine parameter s";
    po.y_label = "F";
    write_atomic(dir / ("flow_F_" + tag + ".svg"), svg::line_plot({s}, po));
  }
  if (orders) {
    std::string body = "id,declared_order,order,ok,note\n";
    for (const auto& r : *orders)
      if (r.scenario == sr.name)
        body += r.id + "," + fmt(r.declared) + "," + (r.order ? fmt(*r.order) : std::string("")) + "," +
                (r.ok ? "1" : "0") + "," + r.note + "\n";
    write_atomic(dir / "orders.csv", body);
  }
}

RunResult execute(const RunConfig& config, bool write_outputs, bool with_orders) {
  RunResult out;
  const std::size_t n = config.scenarios.size();
  out.scenarios.resize(n);
  std::vector<std::vector<double>> declared(n);
  std::vector<std::string> config_errors(n);
  parallel_for(n, [&](std::size_t i) {
    try {
      out.scenarios[i] = run_scenario(config.scenarios[i], config, declared[i]);
    } catch (const ConfigError& e) {
      config_errors[i] = e.what();
      out.scenarios[i].name = config.scenarios[i].name;
    }
  });
  for (const auto& e : config_errors)
    if (!e.empty()) throw ConfigError(e);
  if (with_orders)
    for (std::size_t i = 0; i < n; ++i) {
      auto rows = fit_orders(out.scenarios[i], declared[i], config.scenarios[i].resolutions);
      out.orders.insert(out.orders.end(), rows.begin(), rows.end());
    }

  json reports = json::array(), scen = json::array();
  bool any_fail = false, any_error = false;
  for (const auto& sr : out.scenarios) {
    scen.push_back({{"name", sr.name}, {"errors", sr.errors}, {"report_count", sr.reports.size()}});
    any_error = any_error || !sr.errors.empty();
    for (const auto& r : sr.reports) {
      json j = verify::to_json(r, config.hash);
      j["scenario"] = sr.name;
      reports.push_back(std::move(j));
      any_fail = any_fail || r.verdict == verify::Verdict::fail;
    }
  }
  out.report = {{"schema_version", 1},
                {"mode", with_orders ? "convergence" : "run"},
                {"config_hash", config.hash},
                {"seed", config.seed},
                {"tol_scale", config.tol_scale},
                {"scenarios", scen},
                {"reports", reports}};
  if (with_orders) {
    json rows = json::array();
    for (const auto& r : out.orders) {
      rows.push_back(order_json(r));
      any_fail = any_fail || !r.ok;
    }
    out.report["convergence"] = rows;
  }
  out.exit_code = any_error ? 1 : (any_fail ? 2 : 0);

  if (write_outputs) {
    const fs::path root(config.output_dir);
    for (std::size_t i = 0; i < n; ++i)
      write_scenario_outputs(root / sanitize(config.scenarios[i].name), config.scenarios[i], out.scenarios[i],
                             with_orders ? &out.orders : nullptr);
    write_atomic(root / "report.json", report_body(out));
  }
  return out;
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const json& config, const Overrides& overrides) {
  if (!config.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig rc;
  json canonical = config;
  const bool multi = config.contains("scenarios");
  std::set<std::string> top = {"output", "seed", "tol_scale", "description", "name"};
  if (multi) {
    top.insert("scenarios");
    check_keys(config, top, "config");
  }
  rc.output_dir = get_string(config, "output", rc.output_dir, "config");
  if (config.contains("seed")) {
    if (!config["seed"].is_number_unsigned()) throw ConfigError("config.seed: expected a non-negative integer");
    rc.seed = config["seed"].get<std::uint64_t>();
  }
  rc.tol_scale = get_number(config, "tol_scale", 1.0, "config");
  if (overrides.seed) rc.seed = *overrides.seed;
  if (overrides.output_dir) rc.output_dir = *overrides.output_dir;
  if (overrides.tol_scale) rc.tol_scale = *overrides.tol_scale;
  if (!(rc.tol_scale > 0.0)) throw ConfigError("tol_scale must be positive");
  if (multi) {
    if (!config["scenarios"].is_array() || config["scenarios"].empty())
      throw ConfigError("config.scenarios: expected a non-empty list");
    for (std::size_t i = 0; i < config["scenarios"].size(); ++i)
      rc.scenarios.push_back(parse_scenario(config["scenarios"][i], "scenarios[" + std::to_string(i) + "]", rc.seed));
  } else {
    json scenario = config;
    for (const char* k : {"output", "seed", "tol_scale"}) scenario.erase(k);
    rc.scenarios.push_back(parse_scenario(scenario, "config", rc.seed));
  }
  std::set<std::string> names;
  for (const auto& s : rc.scenarios)
    if (!names.insert(s.name).second) throw ConfigError("duplicate scenario name '" + s.name + "'");
  canonical.erase("output");
  canonical["seed"] = rc.seed;
  canonical["tol_scale"] = rc.tol_scale;
  rc.hash = fnv1a_hex(canonical.dump());
  return rc;
}

std::string scenario_directory() {
  if (const char* env = std::getenv("CODIM2_SCENARIO_DIR")) return env;
  return CODIM2_SCENARIO_DIR;
}

std::vector<std::string> bundled_scenarios() {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(scenario_directory(), ec))
    if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

RunConfig load_config(const std::string& path_or_name, const Overrides& overrides) {
  // A bare name prefers the bundled scenario, so a same-named file in the cwd does not shadow it.
  fs::path path(path_or_name);
  const bool bare = !path.has_parent_path() && !path.has_extension();
  const fs::path bundled = fs::path(scenario_directory()) / (path_or_name + ".json");
  if (bare && fs::is_regular_file(bundled)) {
    path = bundled;
  } else if (!fs::is_regular_file(path)) {
    if (!fs::is_regular_file(bundled)) throw ConfigError("no config file or bundled scenario named '" + path_or_name + "'");
    path = bundled;
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return parse_config(j, overrides);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

RunResult run(const RunConfig& config, bool write_outputs) { return execute(config, write_outputs, false); }
RunResult convergence(const RunConfig& config, bool write_outputs) { return execute(config, write_outputs, true); }

std::string report_body(const RunResult& result) { return result.report.dump(2) + "\n"; }

}  // namespace codim2::runner
