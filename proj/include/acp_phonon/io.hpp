#pragma once

#include "acp_phonon/ground_state.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace acp_phonon {

/// Shortest decimal form that parses back to the same double.
std::string format_number(double x);

/// Writes through a temporary file and renames, so a failed run never leaves
/// a truncated artifact behind.
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string csv_table(const std::vector<std::string>& header, const Eigen::MatrixXd& rows);

/// Binary warm-start state of a converged SCF, keyed by the inputs that
/// determine it.
struct Checkpoint {
  std::string key;
  Field input_density;
  Batch orbitals;
};

void write_checkpoint(const std::filesystem::path& directory, const Checkpoint& cp);
/// Empty when no checkpoint exists; throws Error when it is unreadable.
std::optional<Checkpoint> read_checkpoint(const std::filesystem::path& directory);

}  // namespace acp_phonon
