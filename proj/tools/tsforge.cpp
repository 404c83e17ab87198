// tsforge: corpus-forging and evaluation pipeline driver.
//
// Subcommands: synth, profile, caption, build, mix, eval, judge, analyze,
// report. Exit codes: 0 success, 2 config error, 3 stage error, 4 provider
// error.

#include "tsforge/errors.hpp"
#include "tsforge/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{"tsforge: time series corpus forging and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool dry_run = false;
  app.add_option("--config", config_path, "Pipeline config (JSON)")
      ->required();
  app.add_option("--out", out_dir, "Output directory (default: out)");
  app.add_option("--seed", seed, "Override every stage seed");
  app.add_flag("--dry-run", dry_run, "Print the plan without writing");

  const std::vector<std::string> stages = {"synth", "profile", "caption",
                                           "build", "mix", "eval",
                                           "judge", "analyze", "report"};
  for (const auto& stage : stages) {
    // fallthrough lets the global flags appear after the stage name
    app.add_subcommand(stage, "Run the " + stage + " stage")->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto config = tsforge::pipeline::load_config(config_path);
    if (seed) {
      config.synth.synth.seed = *seed;
      config.mix.mix.seed = *seed;
      config.eval.seeds = {*seed};
      config.analyze.seed = *seed;
    }
    for (const auto* sub : app.get_subcommands()) {
      tsforge::pipeline::run_stage(sub->get_name(), config, out_dir, dry_run);
    }
  } catch (const tsforge::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const tsforge::ProviderError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "stage error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
