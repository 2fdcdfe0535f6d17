#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace acp_phonon {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_scf = 3, exit_response = 4 };

struct CommandOptions {
  std::filesystem::path config_path;
  std::optional<std::string> method;           // phonon: overrides [phonon] methods
  std::vector<int> sizes;                      // benchmark: atom counts
  std::vector<std::string> methods;            // benchmark: overrides [phonon] methods
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

/// Each command returns an ExitCode and reports failures on `log`.
int cmd_ground_state(const CommandOptions& options, std::ostream& log);
int cmd_phonon(const CommandOptions& options, std::ostream& log);
int cmd_benchmark(const CommandOptions& options, std::ostream& log);

/// Least-squares slope of log(seconds) against log(size).
double loglog_slope(const std::vector<double>& sizes, const std::vector<double>& seconds);

}  // namespace acp_phonon
