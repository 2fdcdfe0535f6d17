#pragma once

#include "acp_phonon/grid.hpp"
#include "acp_phonon/ionic.hpp"
#include "acp_phonon/lattice.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace acp_phonon {

struct ScfOptions {
  double scf_tol = 1e-8;        // ||rho_out - rho_in|| / ||rho_in||
  double eig_tol = 1e-6;        // loosest eigensolver tolerance used
  double eig_tol_floor = 1e-11; // tightest one, reached as the density settles
  int max_scf_iters = 100;
  int max_eig_iters = 500;
  int mixing_history = 10;
  double mixing_beta = 0.5;
  double kerker_k0 = 0.0;       // > 0 enables Kerker preconditioning of the residual
  int n_extra = -1;             // unoccupied pairs; -1 means max(4, ceil(0.1 N_e))
  std::uint64_t seed = 0;
  bool verbose = false;

  void validate() const;
};

/// Converged model Kohn-Sham state. Orbitals are physical (psi^T psi dV = I)
/// and are eigenvectors of H[potential], with potential = K * (input_density + m).
struct GroundState {
  PlaneWaveGrid grid;
  YukawaKernel kernel;
  AtomicConfiguration config;
  Batch orbitals;                     // N_g x N_e
  Eigen::VectorXd eigenvalues;        // N_e occupied, ascending
  Eigen::VectorXd unoccupied;         // computed unoccupied eigenvalues
  Field density;                      // sum_i psi_i^2
  Field input_density;                // density the potential was built from
  Field potential;
  Field pseudocharge;                 // m
  double gap = 0.0;
  std::vector<double> residual_history;
  int scf_iterations = 0;
  int eig_iterations = 0;

  Index n_electrons() const { return orbitals.cols(); }
  /// Orbitals scaled to unit Euclidean norm on the samples (psi sqrt(dV)).
  Batch euclidean_orbitals() const;
};

/// Optional warm start; either member may be empty.
struct ScfGuess {
  Field density;
  Batch orbitals;  // physical normalization, at least N_e columns
};

/// V = K * (rho + m).
Field effective_potential(const PlaneWaveGrid& grid, const YukawaKernel& kernel,
                          const AtomicConfiguration& config, const Field& rho);

GroundState scf(const PlaneWaveGrid& grid, const YukawaKernel& kernel,
                const AtomicConfiguration& config, const ScfOptions& options = {},
                const ScfGuess* guess = nullptr);

/// Harris-form total energy sum_i eps_i - 1/2 <rho_in, K rho_in> + E_II, evaluated
/// with the density that defines the Hamiltonian. At self-consistency it equals
/// the Kohn-Sham energy functional up to the constant pseudocharge self energy.
double total_energy(const GroundState& gs);

/// F_{I,a} = -int g_{I,a} rho - dE_II/dR_{I,a}, N_A x d.
Eigen::MatrixXd forces(const GroundState& gs);

struct RelaxResult {
  AtomicConfiguration config;
  std::vector<double> energies;     // one per SCF, starting configuration first
  std::vector<double> max_forces;
  GroundState ground_state;         // at the returned configuration
};

/// Steepest descent R <- R + step_size F with a fresh SCF after every step.
RelaxResult relax(const PlaneWaveGrid& grid, const YukawaKernel& kernel,
                  const AtomicConfiguration& config, int steps, double step_size = 1.0,
                  const ScfOptions& options = {});

}  // namespace acp_phonon
