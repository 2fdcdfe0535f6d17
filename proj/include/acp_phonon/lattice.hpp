#pragma once

#include "acp_phonon/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace acp_phonon {

/// Atoms in a periodic cell: Gaussian pseudocharges of a shared width.
struct AtomicConfiguration {
  int dim = 1;
  std::vector<double> cell;         // per-dimension cell length (bohr)
  Eigen::MatrixXd positions;        // N_A x d (bohr), wrapped into the cell
  std::vector<int> charges;         // Z_I
  double sigma = 0.3;               // Gaussian width (bohr)
  Eigen::VectorXd masses;           // M_I (atomic units)

  Index n_atoms() const { return positions.rows(); }
  int n_electrons() const;
  /// Throws InvalidArgument when the invariants do not hold.
  void validate() const;
  /// Copy with every position mapped into [0, L).
  AtomicConfiguration wrapped() const;
};

AtomicConfiguration chain_1d(int n_atoms, double spacing, double sigma = 0.3);

/// Rectangular supercell of a triangular lattice: lattice vectors (a, 0) and
/// (0, a sqrt 3) with atoms at (0, 0) and (a/2, a sqrt 3 / 2), tiled k x k.
AtomicConfiguration triangular_2d(int k_cells, double spacing, double sigma = 0.24);

AtomicConfiguration remove_atoms(const AtomicConfiguration& config, std::span<const int> indices);

/// `count` distinct atom indices drawn with a seeded generator, sorted.
std::vector<int> random_vacancies(Index n_atoms, int count, std::uint64_t seed);

/// Screened interaction with Fourier symbol 4 pi / (eps0 (|k|^2 + kappa^2)).
struct YukawaKernel {
  double kappa = 0.1;
  double eps0 = 1.0;

  double symbol(double k2) const;
  void validate() const;
};

}  // namespace acp_phonon
