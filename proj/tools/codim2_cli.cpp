#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "codim2/errors.hpp"
#include "codim2/runner.hpp"

namespace {

void summarize(const codim2::runner::RunResult& result, const std::string& out_dir) {
  int pass = 0, fail = 0, na = 0;
  for (const auto& sr : result.scenarios) {
    for (const auto& r : sr.reports) {
      switch (r.verdict) {
        case codim2::verify::Verdict::pass: ++pass; break;
        case codim2::verify::Verdict::fail:
          ++fail;
          std::printf("FAIL  %-28s %-40s %s rel=%.3e tol=%.1e\n", sr.name.c_str(), r.id.c_str(), r.resolution.c_str(),
                      r.rel_residual, r.tolerance);
          break;
        case codim2::verify::Verdict::not_applicable:
          ++na;
          std::printf("N/A   %-28s %-40s %s %s\n", sr.name.c_str(), r.id.c_str(), r.resolution.c_str(),
                      r.warnings.empty() ? "" : r.warnings.front().c_str());
          break;
      }
    }
    for (const auto& e : sr.errors) std::printf("ERROR %-28s %s\n", sr.name.c_str(), e.c_str());
  }
  for (const auto& o : result.orders) {
    if (o.order)
      std::printf("ORDER %-28s %-40s %6.2f (declared %.1f)%s\n", o.scenario.c_str(), o.id.c_str(), *o.order,
                  o.declared, o.ok ? "" : "  SHORT");
    else
      std::printf("ORDER %-28s %-40s   --   %s\n", o.scenario.c_str(), o.id.c_str(), o.note.c_str());
  }
  std::printf("%d passed, %d failed, %d not applicable; report in %s/report.json\n", pass, fail, na, out_dir.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Integral identities for codimension-two surfaces in static spacetimes"};
  app.require_subcommand(1);

  std::string config;
  codim2::runner::Overrides ov;
  std::uint64_t seed = 0;
  std::string out;
  double tol_scale = 0.0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "config file, or the name of a bundled scenario")->required();
    sub->add_option("--seed", seed, "seed for random surface families");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--tol-scale", tol_scale, "multiplier applied to every tolerance")->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "evaluate every identity of a config");
  add_common(run);
  auto* conv = app.add_subcommand("convergence", "evaluate and fit decay orders across the resolution list");
  add_common(conv);
  auto* list = app.add_subcommand("list-scenarios", "print the bundled scenario names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (list->parsed()) {
    for (const auto& name : codim2::runner::bundled_scenarios()) std::cout << name << "\n";
    return 0;
  }
  for (auto* sub : {run, conv}) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--out")) ov.output_dir = out;
    if (sub->count("--tol-scale")) ov.tol_scale = tol_scale;
  }
  try {
    const auto cfg = codim2::runner::load_config(config, ov);
    const auto result = run->parsed() ? codim2::runner::run(cfg) : codim2::runner::convergence(cfg);
    summarize(result, cfg.output_dir);
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
