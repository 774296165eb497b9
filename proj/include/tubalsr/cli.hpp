#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace tubalsr::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kMissingFile = 2,
  kBadConfig = 3,
  kSolverFailure = 4,
  kInternal = 5,
};

struct CliOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;  // overrides the config's seed
  std::filesystem::path out = "runs";
  bool verbose = false;
};

/// Runs one subcommand (synth, svd-report, train-dict, super-resolve,
/// train-tgan, localize, pipeline). Creates a content-addressed run directory
/// under opts.out and returns an ExitCode; on failure a machine-readable error
/// JSON goes to stderr.
int run_command(const std::string& command, const CliOptions& opts);

/// Where run_command would place its outputs for this config (the run
/// directory name hashes the resolved config, so identical configs map to the
/// same directory).
std::filesystem::path run_dir_for(const std::string& command, const CliOptions& opts);

}  // namespace tubalsr::cli
