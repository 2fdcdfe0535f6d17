#include "acp_phonon/ground_state.hpp"

#include "acp_phonon/anderson.hpp"
#include "acp_phonon/hamiltonian.hpp"
#include "acp_phonon/lobpcg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace acp_phonon {

void ScfOptions::validate() const {
  if (!(scf_tol > 0.0) || !(eig_tol > 0.0) || !(eig_tol_floor > 0.0))
    throw InvalidArgument("SCF tolerances must be positive");
  if (max_scf_iters < 1 || max_eig_iters < 1) throw InvalidArgument("iteration caps must be >= 1");
  if (mixing_history < 0 || !(mixing_beta > 0.0)) throw InvalidArgument("bad mixing parameters");
  if (kerker_k0 < 0.0) throw InvalidArgument("kerker_k0 must be nonnegative");
}

Batch GroundState::euclidean_orbitals() const {
  return orbitals * std::sqrt(grid.volume_element());
}

Field effective_potential(const PlaneWaveGrid& grid, const YukawaKernel& kernel,
                          const AtomicConfiguration& config, const Field& rho) {
  if (rho.size() != grid.size()) throw InvalidArgument("density size does not match the grid");
  return yukawa_apply(kernel, grid, Field(rho + pseudocharge(config, grid).total));
}

GroundState scf(const PlaneWaveGrid& grid, const YukawaKernel& kernel,
                const AtomicConfiguration& config_in, const ScfOptions& options,
                const ScfGuess* guess) {
  options.validate();
  kernel.validate();
  config_in.validate();
  const AtomicConfiguration config = config_in.wrapped();
  const Index ne = config.n_electrons();
  const Index n_extra =
      options.n_extra >= 0 ? options.n_extra
                           : std::max<Index>(4, static_cast<Index>(std::ceil(0.1 * ne)));
  if (n_extra < 1) throw InvalidArgument("at least one unoccupied state is needed for the gap");
  if (ne + n_extra > grid.size())
    throw InvalidArgument("grid too small for the requested number of eigenpairs");

  const Field m = pseudocharge(config, grid).total;
  const double dv = grid.volume_element();
  const Eigen::VectorXd ksym = yukawa_symbol(kernel, grid);

  Field rho_in;
  if (guess && guess->density.size() == grid.size()) {
    rho_in = guess->density;
  } else {
    rho_in = (-m).cwiseMax(0.0);
    rho_in *= static_cast<double>(ne) / integrate(grid, rho_in);
  }

  Batch x;  // Euclidean-normalized eigenvector block, reused as the next guess
  if (guess && guess->orbitals.rows() == grid.size() && guess->orbitals.cols() > 0)
    x = guess->orbitals * std::sqrt(dv);

  Eigen::VectorXd kerker;
  if (options.kerker_k0 > 0.0) {
    const double q2 = options.kerker_k0 * options.kerker_k0;
    kerker = grid.half_k2().unaryExpr([&](double k2) { return k2 / (k2 + q2); });
    kerker(0) = 1.0;  // the residual integrates to zero up to round-off
  }

  AndersonMixer mixer(options.mixing_history, options.mixing_beta);
  std::vector<double> history;
  double res = 1.0;
  int eig_total = 0;
  for (int it = 1; it <= options.max_scf_iters; ++it) {
    const Field v = grid.apply_symbol(ksym, Field(rho_in + m));
    const Hamiltonian h(grid, v);

    LobpcgOptions lo;
    lo.tol = std::clamp(0.1 * res, options.eig_tol_floor, options.eig_tol);
    lo.max_iters = options.max_eig_iters;
    lo.n_converge = ne + 1;
    lo.seed = options.seed;
    auto apply = [&](const Eigen::Ref<const Batch>& in, Eigen::Ref<Batch> out) { h.apply(in, out); };
    auto prec = [&](const Eigen::Ref<const Batch>& in, Eigen::Ref<Batch> out) {
      h.precondition(in, out);
    };
    LobpcgResult eig;
    try {
      eig = lobpcg(apply, grid.size(), ne + n_extra, lo, prec, x.cols() > 0 ? &x : nullptr);
    } catch (const SolverError& e) {
      throw ScfError(std::string("SCF iteration ") + std::to_string(it) + ": " + e.what());
    }
    eig_total += eig.iterations;
    x = eig.vectors;

    const Field rho_out = x.leftCols(ne).rowwise().squaredNorm() / dv;
    res = (rho_out - rho_in).norm() / rho_in.norm();
    history.push_back(res);
    if (options.verbose)
      std::fprintf(stderr, "scf %3d  residual %.3e  lobpcg %d  gap %.6f\n", it, res,
                   eig.iterations, eig.values(ne) - eig.values(ne - 1));

    if (res <= options.scf_tol) {
      GroundState gs{grid,
                     kernel,
                     config,
                     x.leftCols(ne) / std::sqrt(dv),
                     eig.values.head(ne),
                     eig.values.tail(eig.values.size() - ne),
                     rho_out,
                     rho_in,
                     v,
                     m,
                     eig.values(ne) - eig.values(ne - 1),
                     history,
                     it,
                     eig_total};
      if (!(gs.gap >= 1e-6))
        throw ScfError("HOMO-LUMO gap " + std::to_string(gs.gap) +
                       " vanishes; the system is not an insulator");
      return gs;
    }

    Field f = rho_out - rho_in;
    if (kerker.size() > 0) f = grid.apply_symbol(kerker, f);
    rho_in = mixer.update(rho_in, f);
  }
  throw ScfError("SCF did not converge in " + std::to_string(options.max_scf_iters) +
                 " iterations (residual " + std::to_string(res) + ")");
}

double total_energy(const GroundState& gs) {
  const Field krho = yukawa_apply(gs.kernel, gs.grid, gs.input_density);
  return gs.eigenvalues.sum() - 0.5 * inner(gs.grid, gs.input_density, krho) +
         ion_ion_energy(gs.config, gs.grid, gs.kernel);
}

Eigen::MatrixXd forces(const GroundState& gs) {
  const int d = gs.config.dim;
  const Batch g = pseudopotential_gradient(gs.config, gs.grid, gs.kernel);
  const Eigen::VectorXd hf = g.transpose() * gs.density * gs.grid.volume_element();
  Eigen::MatrixXd f = -ion_ion_gradient(gs.config, gs.grid, gs.kernel);
  for (Index i = 0; i < gs.config.n_atoms(); ++i)
    for (int a = 0; a < d; ++a) f(i, a) -= hf(i * d + a);
  return f;
}

RelaxResult relax(const PlaneWaveGrid& grid, const YukawaKernel& kernel,
                  const AtomicConfiguration& config, int steps, double step_size,
                  const ScfOptions& options) {
  if (steps < 0) throw InvalidArgument("relax: steps must be nonnegative");
  AtomicConfiguration current = config.wrapped();
  GroundState gs = scf(grid, kernel, current, options);
  std::vector<double> energies{total_energy(gs)};
  Eigen::MatrixXd f = forces(gs);
  std::vector<double> fmax{f.cwiseAbs().maxCoeff()};
  for (int s = 1; s <= steps; ++s) {
    current.positions += step_size * f;
    current = current.wrapped();
    ScfGuess warm{gs.input_density, gs.orbitals};
    try {
      gs = scf(grid, kernel, current, options, &warm);
    } catch (const ScfError& e) {
      throw ScfError("relaxation step " + std::to_string(s) + ": " + e.what());
    }
    energies.push_back(total_energy(gs));
    f = forces(gs);
    fmax.push_back(f.cwiseAbs().maxCoeff());
  }
  return RelaxResult{current, energies, fmax, std::move(gs)};
}

}  // namespace acp_phonon
