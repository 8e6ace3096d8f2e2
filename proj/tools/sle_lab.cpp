// sle-lab <verb> --config <path> [--seed S] [--jobs J] [--out DIR]
// sle-lab plot --manifest <path> --kind <rate|driving-overlay|ks-table>

#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "slelab/harness.hpp"

int main(int argc, char** argv) {
  using namespace slelab;
  CLI::App app{"Percolation interfaces, Loewner chains and their couplings"};
  app.require_subcommand(1);

  std::string config_path, out_dir, manifest_path, plot_kind;
  std::uint64_t seed = 0;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  for (const auto& verb : experiment_kinds()) {
    auto* sub = app.add_subcommand(verb, "run the " + verb + " experiment");
    sub->add_option("--config", config_path, "JSON config (or a manifest to rerun)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "override the output directory");
  }
  auto* plot = app.add_subcommand("plot", "write gnuplot columns from a finished run");
  plot->add_option("--manifest", manifest_path, "manifest.json of the run")->required()->check(CLI::ExistingFile);
  plot->add_option("--kind", plot_kind, "rate | driving-overlay | ks-table")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (plot->parsed()) {
      std::cout << emit_plotdata(load_manifest(manifest_path), plot_kind).string() << "\n";
      return 0;
    }
    const auto* sub = app.get_subcommands().front();
    auto cfg = load_config(config_path, sub->get_name());
    if (sub->count("--seed")) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out = out_dir;
    validate(cfg);
    const auto m = run(cfg, jobs);
    std::cout << to_json(m)["summary"].dump(2) << "\n";
    if (!m.ok()) {
      std::cerr << "run failed: " << m.error << "\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
