#include "acp_phonon/ionic.hpp"

#include <cmath>
#include <complex>

namespace acp_phonon {

namespace {

using cd = std::complex<double>;

// Fourier coefficients of -Z_I exp(-|r - R_I|^2 / 2 sigma^2) / (2 pi sigma^2)^{d/2}
// periodized over the cell; the Nyquist plane is dropped.
Eigen::VectorXcd atom_coefficients(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                                   Index atom) {
  const Eigen::MatrixXd& k = grid.half_frequencies();
  const Eigen::VectorXd& k2 = grid.half_k2();
  const double s2 = config.sigma * config.sigma;
  const double scale = -static_cast<double>(config.charges[atom]) / grid.volume();
  Eigen::VectorXcd c(grid.spectrum_size());
  for (Index q = 0; q < c.size(); ++q) {
    if (grid.half_nyquist()[q]) {
      c(q) = 0.0;
      continue;
    }
    const double phase = -k.row(q).dot(config.positions.row(atom));
    c(q) = scale * std::exp(-0.5 * k2(q) * s2) * cd(std::cos(phase), std::sin(phase));
  }
  return c;
}

// Per-mode weight mult * K(k) exp(-k^2 sigma^2) / V for the pair sums; zero on Nyquist.
Eigen::VectorXd pair_weights(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                             const YukawaKernel& kernel) {
  const Eigen::VectorXd& k2 = grid.half_k2();
  const double s2 = config.sigma * config.sigma;
  Eigen::VectorXd w(grid.spectrum_size());
  for (Index q = 0; q < w.size(); ++q) {
    w(q) = grid.half_nyquist()[q]
               ? 0.0
               : grid.half_multiplicity()(q) * kernel.symbol(k2(q)) * std::exp(-k2(q) * s2) /
                     grid.volume();
  }
  return w;
}

// Z_I cos(k.R_I) and Z_I sin(k.R_I), N_half x N_A.
void structure_tables(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                      Eigen::MatrixXd& zc, Eigen::MatrixXd& zs) {
  const Eigen::MatrixXd phase = grid.half_frequencies() * config.positions.transpose();
  Eigen::RowVectorXd z(config.n_atoms());
  for (Index i = 0; i < config.n_atoms(); ++i) z(i) = config.charges[i];
  zc = phase.array().cos().rowwise() * z.array();
  zs = phase.array().sin().rowwise() * z.array();
}

void require_dims(const AtomicConfiguration& config, const PlaneWaveGrid& grid) {
  if (config.dim != grid.dim()) throw InvalidArgument("configuration and grid dimensions differ");
  for (int a = 0; a < grid.dim(); ++a)
    if (std::abs(config.cell[a] - grid.cell_length(a)) > 1e-12 * config.cell[a])
      throw InvalidArgument("configuration cell does not match the grid cell");
}

}  // namespace

Eigen::VectorXd yukawa_symbol(const YukawaKernel& kernel, const PlaneWaveGrid& grid) {
  return grid.half_k2().unaryExpr([&](double k2) { return kernel.symbol(k2); });
}

Field yukawa_apply(const YukawaKernel& kernel, const PlaneWaveGrid& grid, const Field& f) {
  return grid.apply_symbol(yukawa_symbol(kernel, grid), f);
}

Batch yukawa_apply(const YukawaKernel& kernel, const PlaneWaveGrid& grid, const Batch& f) {
  return grid.apply_symbol(yukawa_symbol(kernel, grid), f);
}

Field yukawa_inverse_apply(const YukawaKernel& kernel, const PlaneWaveGrid& grid, const Field& v) {
  return grid.apply_symbol(yukawa_symbol(kernel, grid).cwiseInverse(), v);
}

Batch yukawa_inverse_apply(const YukawaKernel& kernel, const PlaneWaveGrid& grid, const Batch& v) {
  return grid.apply_symbol(yukawa_symbol(kernel, grid).cwiseInverse(), v);
}

void check_resolution(const AtomicConfiguration& config, const PlaneWaveGrid& grid) {
  for (int a = 0; a < grid.dim(); ++a) {
    if (grid.spacing(a) > 0.5 * config.sigma * (1.0 + 1e-9))
      throw InvalidArgument("grid spacing " + std::to_string(grid.spacing(a)) +
                            " does not resolve sigma = " + std::to_string(config.sigma) +
                            " (need spacing <= sigma/2)");
  }
}

Pseudocharge pseudocharge(const AtomicConfiguration& config, const PlaneWaveGrid& grid) {
  require_dims(config, grid);
  check_resolution(config, grid);
  Pseudocharge out;
  out.per_atom.resize(grid.size(), config.n_atoms());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < config.n_atoms(); ++i)
    out.per_atom.col(i) = grid.synthesize(atom_coefficients(config, grid, i));
  out.total = out.per_atom.rowwise().sum();
  return out;
}

Field ionic_potential(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                      const YukawaKernel& kernel) {
  return yukawa_apply(kernel, grid, pseudocharge(config, grid).total);
}

Batch pseudopotential_gradient(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                               const YukawaKernel& kernel) {
  require_dims(config, grid);
  check_resolution(config, grid);
  const int d = config.dim;
  const Eigen::VectorXd ksym = yukawa_symbol(kernel, grid);
  const Eigen::MatrixXd& k = grid.half_frequencies();
  Batch g(grid.size(), d * config.n_atoms());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < config.n_atoms(); ++i) {
    const Eigen::VectorXcd c = atom_coefficients(config, grid, i);
    for (int a = 0; a < d; ++a) {
      Eigen::VectorXcd ca(c.size());
      for (Index q = 0; q < c.size(); ++q) ca(q) = cd(0.0, -k(q, a)) * ksym(q) * c(q);
      g.col(i * d + a) = grid.synthesize(ca);
    }
  }
  return g;
}

std::vector<Batch> pseudopotential_hessian_diag(const AtomicConfiguration& config,
                                                const PlaneWaveGrid& grid,
                                                const YukawaKernel& kernel) {
  require_dims(config, grid);
  check_resolution(config, grid);
  const int d = config.dim;
  const Eigen::VectorXd ksym = yukawa_symbol(kernel, grid);
  const Eigen::MatrixXd& k = grid.half_frequencies();
  std::vector<Batch> out(config.n_atoms());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < config.n_atoms(); ++i) {
    const Eigen::VectorXcd c = atom_coefficients(config, grid, i);
    Batch h(grid.size(), d * d);
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        if (b < a) {
          h.col(a * d + b) = h.col(b * d + a);
          continue;
        }
        Eigen::VectorXcd cab(c.size());
        for (Index q = 0; q < c.size(); ++q) cab(q) = -k(q, a) * k(q, b) * ksym(q) * c(q);
        h.col(a * d + b) = grid.synthesize(cab);
      }
    }
    out[i] = std::move(h);
  }
  return out;
}

double ion_ion_energy(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                      const YukawaKernel& kernel) {
  require_dims(config, grid);
  const Eigen::VectorXd w = pair_weights(config, grid, kernel);
  Eigen::MatrixXd zc, zs;
  structure_tables(config, grid, zc, zs);
  const Eigen::VectorXd s2 =
      zc.rowwise().sum().array().square() + zs.rowwise().sum().array().square();
  double z2 = 0.0;
  for (int z : config.charges) z2 += static_cast<double>(z) * z;
  return 0.5 * w.dot((s2.array() - z2).matrix());
}

double pseudocharge_self_energy(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                                const YukawaKernel& kernel) {
  double z2 = 0.0;
  for (int z : config.charges) z2 += static_cast<double>(z) * z;
  return 0.5 * z2 * pair_weights(config, grid, kernel).sum();
}

Eigen::MatrixXd ion_ion_gradient(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                                 const YukawaKernel& kernel) {
  require_dims(config, grid);
  const Eigen::VectorXd w = pair_weights(config, grid, kernel);
  Eigen::MatrixXd zc, zs;
  structure_tables(config, grid, zc, zs);
  // S(k) = sum_J Z_J e^{-ik.R_J} = sc - i ss.
  const Eigen::VectorXd sc = zc.rowwise().sum();
  const Eigen::VectorXd ss = zs.rowwise().sum();
  // dE/dR_{I,a} = sum_k w_k Re(-i k_a Z_I e^{-ik.R_I} S*(k)) = sum_k w_k k_a (zc_I ss - zs_I sc).
  Eigen::MatrixXd grad(config.n_atoms(), config.dim);
  const Eigen::MatrixXd& k = grid.half_frequencies();
  for (int a = 0; a < config.dim; ++a) {
    const Eigen::VectorXd wk = w.cwiseProduct(k.col(a));
    grad.col(a) = zc.transpose() * wk.cwiseProduct(ss) - zs.transpose() * wk.cwiseProduct(sc);
  }
  return grad;
}

Eigen::MatrixXd ion_ion_hessian(const AtomicConfiguration& config, const PlaneWaveGrid& grid,
                                const YukawaKernel& kernel) {
  require_dims(config, grid);
  const int d = config.dim;
  const Index na = config.n_atoms();
  const Eigen::VectorXd w = pair_weights(config, grid, kernel);
  Eigen::MatrixXd zc, zs;
  structure_tables(config, grid, zc, zs);
  const Eigen::VectorXd sc = zc.rowwise().sum();
  const Eigen::VectorXd ss = zs.rowwise().sum();
  const Eigen::MatrixXd& k = grid.half_frequencies();
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(d * na, d * na);
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      const Eigen::VectorXd wab = w.cwiseProduct(k.col(a)).cwiseProduct(k.col(b));
      // Off-diagonal pair term: Z_I Z_J cos(k.(R_I - R_J)) = zc_I zc_J + zs_I zs_J.
      Eigen::MatrixXd block = zc.transpose() * wab.asDiagonal() * zc +
                              zs.transpose() * wab.asDiagonal() * zs;
      // Diagonal correction -Z_I Re(S* e^{-ik.R_I}) = -(zc_I C + zs_I S).
      const Eigen::VectorXd diag =
          zc.transpose() * wab.cwiseProduct(sc) + zs.transpose() * wab.cwiseProduct(ss);
      block.diagonal() -= diag;
      for (Index i = 0; i < na; ++i) {
        for (Index j = 0; j < na; ++j) {
          hess(i * d + a, j * d + b) = block(i, j);
          hess(i * d + b, j * d + a) = block(i, j);
        }
      }
    }
  }
  return hess;
}

}  // namespace acp_phonon
