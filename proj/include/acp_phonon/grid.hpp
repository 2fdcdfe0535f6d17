#pragma once

#include "acp_phonon/types.hpp"

#include <complex>
#include <memory>
#include <vector>

namespace acp_phonon {

namespace detail {
class FftPlans;
}

/// Periodic uniform grid in one or two dimensions with the Fourier metadata
/// needed for spectral operators.
///
/// Grid points are stored row-major (last dimension fastest). Spectral data
/// uses the real-to-complex half spectrum: the last dimension only keeps
/// wavenumbers 0..n/2. Symbols passed to apply_symbol() are sampled on that
/// half spectrum.
class PlaneWaveGrid {
 public:
  PlaneWaveGrid(int dim, std::vector<double> cell_lengths, std::vector<int> points_per_dim);

  int dim() const { return dim_; }
  double cell_length(int a) const { return lengths_[a]; }
  int points(int a) const { return counts_[a]; }
  const std::vector<double>& cell_lengths() const { return lengths_; }
  const std::vector<int>& points_per_dim() const { return counts_; }
  double spacing(int a) const { return lengths_[a] / counts_[a]; }

  Index size() const { return size_; }
  double volume() const { return volume_; }
  double volume_element() const { return volume_ / static_cast<double>(size_); }

  /// Real-space coordinates, N_g x d.
  Eigen::MatrixXd coordinates() const;
  /// Wavevector of every grid point in standard FFT ordering, N_g x d.
  Eigen::MatrixXd frequencies() const;

  Index spectrum_size() const { return half_k2_.size(); }
  const Eigen::MatrixXd& half_frequencies() const { return half_k_; }
  const Eigen::VectorXd& half_k2() const { return half_k2_; }
  /// Number of full-spectrum modes each half-spectrum entry stands for (1 or 2).
  const Eigen::VectorXd& half_multiplicity() const { return half_mult_; }
  /// True where any component sits at the Nyquist wavenumber.
  const std::vector<bool>& half_nyquist() const { return half_nyquist_; }

  /// Fourier coefficients c_k = (1/N_g) sum_r f(r) e^{-ik.r} on the half spectrum.
  Eigen::VectorXcd coefficients(const Field& f) const;
  /// Inverse of coefficients(): f(r) = sum_k c_k e^{ik.r}.
  Field synthesize(const Eigen::VectorXcd& c) const;

  /// out = F^{-1} diag(symbol) F in, the multiplier acting on Fourier coefficients.
  void apply_symbol(const Eigen::VectorXd& symbol, const double* in, double* out) const;
  Field apply_symbol(const Eigen::VectorXd& symbol, const Field& f) const;
  Batch apply_symbol(const Eigen::VectorXd& symbol, const Batch& f) const;

  /// Raw transforms. forward() is unnormalized; backward() overwrites its input.
  void forward(const double* in, std::complex<double>* out) const;
  void backward(std::complex<double>* in, double* out) const;

 private:
  int dim_;
  std::vector<double> lengths_;
  std::vector<int> counts_;
  Index size_;
  double volume_;
  Eigen::MatrixXd half_k_;
  Eigen::VectorXd half_k2_;
  Eigen::VectorXd half_mult_;
  std::vector<bool> half_nyquist_;
  std::shared_ptr<const detail::FftPlans> plans_;
};

PlaneWaveGrid build_grid(int dim, std::vector<double> cell_lengths, std::vector<int> points_per_dim);

/// Smallest even point counts whose spacing does not exceed max_spacing.
PlaneWaveGrid grid_for_cell(const std::vector<double>& cell_lengths, double max_spacing);

/// Quadrature of a field over the cell.
double integrate(const PlaneWaveGrid& grid, const Field& f);
/// L2 inner product with the grid quadrature weight.
double inner(const PlaneWaveGrid& grid, const Field& f, const Field& g);

}  // namespace acp_phonon
