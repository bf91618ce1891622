#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "kflow/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"kflow: energy-preserving nonlocal k-width flow of locally convex curves"};
  app.require_subcommand(1);

  std::string config;
  auto* simulate = app.add_subcommand("simulate", "run a config file, or every *.json in a directory");
  simulate->add_option("config", config, "config file or directory")->required();

  std::string samples;
  int k = 2;
  auto* analyze = app.add_subcommand("analyze", "invariants and spectrum of a snapshot");
  analyze->add_option("samples", samples, "snapshot CSV")->required();
  analyze->add_option("--k", k, "order of the width")->required()->check(CLI::PositiveNumber);

  std::string snapshot;
  std::string svg;
  auto* render = app.add_subcommand("render", "reconstruct the curve of a snapshot as SVG");
  render->add_option("snapshot", snapshot, "snapshot CSV")->required();
  render->add_option("-o,--output", svg, "output SVG")->required();

  kflow::AcceptanceOptions acceptance;
  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_option("--fd-dt-scale", acceptance.fd_dt_scale, "finite-difference step as a fraction of the bound")
      ->check(CLI::PositiveNumber);
  verify->add_option("--grid", acceptance.grid_override, "override the grid of the standard runs");
  verify->add_option("--horizon", acceptance.horizon, "end time of the conservation runs")
      ->check(CLI::PositiveNumber);

  std::string gallery_dir;
  auto* gallery = app.add_subcommand("gallery", "write example configs, initial snapshots and renders");
  gallery->add_option("--out", gallery_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kflow::kExitConfig;
  }

  if (*simulate) return kflow::cmd_simulate(config, std::cout, std::cerr, kflow::batch_threads());
  if (*analyze) return kflow::cmd_analyze(samples, k, std::cout, std::cerr);
  if (*render) return kflow::cmd_render(snapshot, svg, std::cout, std::cerr);
  if (*verify) return kflow::cmd_verify(acceptance, std::cout, std::cerr);
  if (*gallery) return kflow::cmd_gallery(gallery_dir, std::cout, std::cerr);
  return kflow::kExitFailure;
}
