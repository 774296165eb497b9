#include <CLI11.hpp>

#include <string>

#include "tubalsr/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tubalsr: tensor sparse-coding super-resolution and fingerprint localization"};
  app.require_subcommand(1);

  tubalsr::cli::CliOptions opts;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;

  const std::vector<std::string> commands{"synth",      "svd-report", "train-dict", "super-resolve",
                                          "train-tgan", "localize",   "pipeline",   "slice-csv"};
  std::string chosen;
  for (const std::string& name : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config, "JSON experiment config")->required();
    sub->add_option("--seed", seed_flag, "override the config seed")->each([&](const std::string&) {
      seed_set = true;
    });
    sub->add_option("--out", opts.out, "root directory for run outputs");
    sub->add_flag("--verbose", opts.verbose, "log progress to stderr");
    sub->callback([&chosen, name] { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);
  if (seed_set) opts.seed = seed_flag;
  return tubalsr::cli::run_command(chosen, opts);
}
