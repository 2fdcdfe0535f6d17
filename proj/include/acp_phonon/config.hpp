#pragma once

#include "acp_phonon/acp.hpp"
#include "acp_phonon/ground_state.hpp"
#include "acp_phonon/phonon.hpp"
#include "acp_phonon/response.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace acp_phonon {

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class Model { chain1d, triangular2d };

struct SystemConfig {
  Model model = Model::chain1d;
  int n_atoms = 60;               // chain1d
  int k_cells = 7;                // triangular2d
  double spacing = 0.0;           // 0 means the model default
  std::vector<int> vacancies;     // explicit indices
  int vacancy_count = 0;          // random vacancies when no explicit list
  std::uint64_t vacancy_seed = 0;
  int relax_steps = 0;
  double relax_step_size = 1.0;
};

struct PhysicsConfig {
  double kappa = 0.1;
  double eps0 = 0.0;              // 0 means the model default
  double sigma = 0.0;             // 0 means the model default
  int charge = 1;
  double mass = 1.0;
};

struct NumericsConfig {
  double grid_spacing = 0.0;      // 0 means the model default
  ScfOptions scf;
  SternheimerOptions sternheimer;
  double dyson_tol = 1e-7;
  int dyson_max_iters = 200;
  AcpOptions acp;                 // n_cheb, srft_oversampling and outer cap default by model
  std::uint64_t seed = 0;
};

struct PhononConfig {
  std::vector<PhononMethod> methods{PhononMethod::dfpt};
  double fd_delta = 0.01;
  double dos_sigma = 0.0;         // 0 means the model default
  double omega_min = 0.0;         // omega_max <= omega_min selects an automatic range
  double omega_max = 0.0;
  int omega_points = 2001;
  bool acoustic_sum_rule = true;  // correct D before diagonalizing
};

struct OutputConfig {
  std::filesystem::path directory = ".";
  bool checkpoint = false;
  std::vector<std::string> formats{"csv", "json"};
};

/// Experiment description with every default materialized.
struct RunConfig {
  SystemConfig system;
  PhysicsConfig physics;
  NumericsConfig numerics;
  PhononConfig phonon;
  OutputConfig output;

  YukawaKernel kernel() const;
  /// Configuration after vacancies (relaxation is a separate step).
  AtomicConfiguration configuration() const;
  /// Same model at a different size: N_A for chain1d, 2 k^2 atoms for triangular2d.
  AtomicConfiguration configuration_of_size(int n_atoms) const;
  PlaneWaveGrid grid(const AtomicConfiguration& config) const;
  DysonOptions dyson_options() const;
  AcpOptions acp_options() const;
  FdOptions fd_options() const;
  /// Canonical text form; loading it yields the same configuration.
  std::string to_text() const;
};

/// Parses
///   [section]
///   key = value   # comment
/// with sections system, physics, numerics, phonon, output. Unknown sections
/// or keys and malformed values throw ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

std::string to_string(Model model);

}  // namespace acp_phonon
