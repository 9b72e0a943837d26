#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "hermite/cli/config.hpp"

namespace hermite::cli {

/// Command-line overrides applied on top of the config file.
struct CommandOptions {
  std::optional<std::string> config_path;
  std::filesystem::path out_dir = ".";
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<int> order;
  bool check = false;
};

/// Loads the config and applies the overrides.
RunConfig resolve_config(const CommandOptions& options);

/// Each command writes its files under options.out_dir, prints a summary to `log`
/// and returns a process exit code.
int cmd_simulate(const CommandOptions& options, std::ostream& log);
int cmd_gradient(const CommandOptions& options, std::ostream& log);
int cmd_convergence(const CommandOptions& options, std::ostream& log);
int cmd_stepsize_study(const CommandOptions& options, std::ostream& log);
int cmd_optimize(const CommandOptions& options, std::ostream& log);
/// Runs without a config unless one with a "rabi" section is given.
int cmd_rabi_verify(const CommandOptions& options, std::ostream& log);

}  // namespace hermite::cli
