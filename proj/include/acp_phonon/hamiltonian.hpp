#pragma once

#include "acp_phonon/grid.hpp"

namespace acp_phonon {

/// H = -1/2 Laplacian + V acting on real-space samples.
///
/// The kinetic term is the Fourier multiplier |k|^2/2 (Nyquist modes
/// included), so H is a real symmetric matrix in the plain Euclidean inner
/// product on samples.
class Hamiltonian {
 public:
  Hamiltonian(PlaneWaveGrid grid, Field potential);

  const PlaneWaveGrid& grid() const { return grid_; }
  const Field& potential() const { return potential_; }
  Index size() const { return grid_.size(); }

  void apply(const Eigen::Ref<const Batch>& in, Eigen::Ref<Batch> out) const;
  Field apply(const Field& psi) const;

  /// out = (|k|^2/2 + shift)^{-1} in, an SPD approximation of (H - V + shift)^{-1}.
  void precondition(const Eigen::Ref<const Batch>& in, Eigen::Ref<Batch> out,
                    double shift = 1.0) const;

 private:
  PlaneWaveGrid grid_;
  Field potential_;
  Eigen::VectorXd kinetic_;
};

Field hamiltonian_apply(const PlaneWaveGrid& grid, const Field& potential, const Field& psi);

}  // namespace acp_phonon
