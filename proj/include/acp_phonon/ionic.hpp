#pragma once

#include "acp_phonon/grid.hpp"
#include "acp_phonon/lattice.hpp"

#include <vector>

namespace acp_phonon {

// Yukawa convolution v = K * f, applied as a Fourier multiplier.
Field yukawa_apply(const YukawaKernel& kernel, const PlaneWaveGrid& grid, const Field& f);
Batch yukawa_apply(const YukawaKernel& kernel, const PlaneWaveGrid& grid, const Batch& f);
// Exact inverse of yukawa_apply (kappa > 0 keeps every mode invertible).
Field yukawa_inverse_apply(const YukawaKernel& kernel, const PlaneWaveGrid& grid, const Field& v);
Batch yukawa_inverse_apply(const YukawaKernel& kernel, const PlaneWaveGrid& grid, const Batch& v);

/// Kernel symbol sampled on the grid's half spectrum.
Eigen::VectorXd yukawa_symbol(const YukawaKernel& kernel, const PlaneWaveGrid& grid);

/// Throws InvalidArgument unless every grid spacing is at most sigma/2.
void check_resolution(const AtomicConfiguration& config, const PlaneWaveGrid& grid);

struct Pseudocharge {
  Field total;      // m = sum_I m_I(r - R_I)
  Batch per_atom;   // column I holds m_I(r - R_I)
};

/// Gaussian pseudocharges built from their analytic Fourier transform, so the
/// periodic images are summed exactly. Nyquist modes are dropped.
Pseudocharge pseudocharge(const AtomicConfiguration& config, const PlaneWaveGrid& grid);

/// V_ion = K * m.
Field ionic_potential(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                      const YukawaKernel& kernel);

/// Columns g_{I,a} = dV_I/dR_{I,a}, stacked as column I*d + a.
Batch pseudopotential_gradient(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                               const YukawaKernel& kernel);

/// Per atom, the d*d fields d^2 V_I / dR_{I,a} dR_{I,b} stored as column a*d + b.
std::vector<Batch> pseudopotential_hessian_diag(const AtomicConfiguration& config,
                                                const PlaneWaveGrid& grid,
                                                const YukawaKernel& kernel);

/// Ion-ion energy as the Yukawa interaction of the smeared pseudocharges
/// minus their position-independent self energies:
///   E_II = 1/2 <m, K m> - sum_I 1/2 <m_I, K m_I>.
/// Sums run over the same wavevectors the grid represents.
double ion_ion_energy(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                      const YukawaKernel& kernel);
/// dE_II/dR, N_A x d.
Eigen::MatrixXd ion_ion_gradient(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                                 const YukawaKernel& kernel);
/// d^2 E_II / dR_{I,a} dR_{J,b}, (d N_A) x (d N_A).
Eigen::MatrixXd ion_ion_hessian(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                                const YukawaKernel& kernel);

/// Self energy 1/2 <m_I, K m_I> summed over atoms (a constant for fixed charges).
double pseudocharge_self_energy(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                                const YukawaKernel& kernel);

}  // namespace acp_phonon
