#include "acp_phonon/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

namespace acp_phonon {

int AtomicConfiguration::n_electrons() const {
  return std::accumulate(charges.begin(), charges.end(), 0);
}

void AtomicConfiguration::validate() const {
  if (dim != 1 && dim != 2) throw InvalidArgument("configuration dimension must be 1 or 2");
  if (static_cast<int>(cell.size()) != dim) throw InvalidArgument("cell must have d lengths");
  for (double L : cell)
    if (!(L > 0.0)) throw InvalidArgument("cell lengths must be positive");
  if (n_atoms() == 0) throw InvalidArgument("configuration has no atoms");
  if (positions.cols() != dim) throw InvalidArgument("positions must be N_A x d");
  if (static_cast<Index>(charges.size()) != n_atoms() || masses.size() != n_atoms())
    throw InvalidArgument("charges and masses need one entry per atom");
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  for (Index i = 0; i < n_atoms(); ++i) {
    if (!(masses(i) > 0.0)) throw InvalidArgument("masses must be positive");
    if (charges[i] < 0) throw InvalidArgument("charges must be nonnegative");
  }
  if (n_electrons() <= 0) throw InvalidArgument("configuration carries no electrons");
}

AtomicConfiguration AtomicConfiguration::wrapped() const {
  AtomicConfiguration out = *this;
  for (Index i = 0; i < out.n_atoms(); ++i) {
    for (int a = 0; a < dim; ++a) {
      double x = std::fmod(out.positions(i, a), cell[a]);
      if (x < 0.0) x += cell[a];
      if (x >= cell[a]) x -= cell[a];
      out.positions(i, a) = x;
    }
  }
  return out;
}

AtomicConfiguration chain_1d(int n_atoms, double spacing, double sigma) {
  if (n_atoms < 2) throw InvalidArgument("chain_1d needs at least 2 atoms");
  if (!(spacing > 0.0)) throw InvalidArgument("spacing must be positive");
  AtomicConfiguration c;
  c.dim = 1;
  c.cell = {n_atoms * spacing};
  c.positions.resize(n_atoms, 1);
  for (int i = 0; i < n_atoms; ++i) c.positions(i, 0) = i * spacing;
  c.charges.assign(n_atoms, 1);
  c.sigma = sigma;
  c.masses = Eigen::VectorXd::Ones(n_atoms);
  c.validate();
  return c;
}

AtomicConfiguration triangular_2d(int k_cells, double spacing, double sigma) {
  if (k_cells < 1) throw InvalidArgument("triangular_2d needs k_cells >= 1");
  if (!(spacing > 0.0)) throw InvalidArgument("spacing must be positive");
  const double h = spacing * std::numbers::sqrt3;
  AtomicConfiguration c;
  c.dim = 2;
  c.cell = {k_cells * spacing, k_cells * h};
  const int n = 2 * k_cells * k_cells;
  c.positions.resize(n, 2);
  int idx = 0;
  for (int i = 0; i < k_cells; ++i) {
    for (int j = 0; j < k_cells; ++j) {
      c.positions.row(idx++) << i * spacing, j * h;
      c.positions.row(idx++) << i * spacing + 0.5 * spacing, j * h + 0.5 * h;
    }
  }
  c.charges.assign(n, 1);
  c.sigma = sigma;
  c.masses = Eigen::VectorXd::Ones(n);
  c.validate();
  return c;
}

AtomicConfiguration remove_atoms(const AtomicConfiguration& config, std::span<const int> indices) {
  std::set<int> drop;
  for (int i : indices) {
    if (i < 0 || i >= config.n_atoms())
      throw InvalidArgument("remove_atoms: index " + std::to_string(i) + " out of range");
    if (!drop.insert(i).second)
      throw InvalidArgument("remove_atoms: duplicate index " + std::to_string(i));
  }
  const Index keep = config.n_atoms() - static_cast<Index>(drop.size());
  if (keep == 0) throw InvalidArgument("remove_atoms: cannot remove every atom");
  AtomicConfiguration out = config;
  out.positions.resize(keep, config.dim);
  out.charges.clear();
  out.masses.resize(keep);
  Index k = 0;
  for (Index i = 0; i < config.n_atoms(); ++i) {
    if (drop.count(static_cast<int>(i))) continue;
    out.positions.row(k) = config.positions.row(i);
    out.charges.push_back(config.charges[i]);
    out.masses(k) = config.masses(i);
    ++k;
  }
  out.validate();
  return out;
}

std::vector<int> random_vacancies(Index n_atoms, int count, std::uint64_t seed) {
  if (count < 0 || count >= n_atoms)
    throw InvalidArgument("vacancy count must be in [0, N_A)");
  std::vector<int> all(n_atoms);
  std::iota(all.begin(), all.end(), 0);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, n_atoms - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  std::vector<int> out(all.begin(), all.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

double YukawaKernel::symbol(double k2) const {
  return 4.0 * std::numbers::pi / (eps0 * (k2 + kappa * kappa));
}

void YukawaKernel::validate() const {
  if (!(kappa > 0.0)) throw InvalidArgument("Yukawa kappa must be positive");
  if (!(eps0 > 0.0)) throw InvalidArgument("Yukawa eps0 must be positive");
}

}  // namespace acp_phonon
