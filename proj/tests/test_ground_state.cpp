#include "doctest.h"
#include "test_support.hpp"

#include "acp_phonon/ground_state.hpp"
#include "acp_phonon/hamiltonian.hpp"
#include "acp_phonon/lobpcg.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace acp_phonon;
using namespace acp_phonon::testing;

namespace {

// Harris energy as a function of the input density, by dense diagonalization.
double harris_energy(const GroundState& gs, const Field& rho) {
  const Field v = effective_potential(gs.grid, gs.kernel, gs.config, rho);
  const Hamiltonian h(gs.grid, v);
  Eigen::MatrixXd m = dense_operator(gs.grid.size(), [&](const Field& e) { return h.apply(e); });
  m = 0.5 * (m + m.transpose()).eval();
  const Eigen::VectorXd e = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues();
  const double band = e.head(gs.n_electrons()).sum();
  return band - 0.5 * inner(gs.grid, rho, yukawa_apply(gs.kernel, gs.grid, rho)) +
         ion_ion_energy(gs.config, gs.grid, gs.kernel);
}

GroundState tight_scf(const PlaneWaveGrid& g, const YukawaKernel& k, const AtomicConfiguration& c) {
  ScfOptions o;
  o.scf_tol = 1e-11;
  return scf(g, k, c, o);
}

}  // namespace

TEST_CASE("effective potential") {
  const SmallChain s;
  const Field m = pseudocharge(s.config, s.grid).total;
  CHECK(effective_potential(s.grid, s.kernel, s.config, -m).norm() < 1e-10 * m.norm());
  const Field ion = ionic_potential(s.config, s.grid, s.kernel);
  CHECK((effective_potential(s.grid, s.kernel, s.config, Field(Field::Zero(s.grid.size()))) - ion)
            .norm() < 1e-12 * ion.norm());

  const Field rho = random_field(s.grid.size(), 4).cwiseAbs();
  const Eigen::MatrixXd k = dense_operator(s.grid.size(), [&](const Field& e) {
    return yukawa_apply(s.kernel, s.grid, e);
  });
  const Field dense = k * (rho + m);
  CHECK(rel_error(dense, effective_potential(s.grid, s.kernel, s.config, rho)) < 1e-12);
}

TEST_CASE("lobpcg on a diagonal operator") {
  const Index n = 200;
  const Eigen::VectorXd diag = Eigen::VectorXd::LinSpaced(n, 1.0, static_cast<double>(n));
  const BlockOperator op = [&](const Eigen::Ref<const Batch>& in, Eigen::Ref<Batch> out) {
    out = diag.asDiagonal() * in;
  };
  LobpcgOptions o;
  o.tol = 1e-8;
  const LobpcgResult r = lobpcg(op, n, 3, o);
  CHECK(r.converged);
  CHECK(r.values(0) == doctest::Approx(1.0));
  CHECK(r.values(1) == doctest::Approx(2.0));
  CHECK(r.values(2) == doctest::Approx(3.0));
  CHECK((r.vectors.transpose() * r.vectors - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-10);

  LobpcgOptions capped;
  capped.max_iters = 1;
  capped.tol = 1e-14;
  CHECK_THROWS_AS(lobpcg(op, n, 3, capped), SolverError);
}

TEST_CASE("lobpcg free particle spectrum") {
  const double l = 9.6;
  const PlaneWaveGrid g = build_grid(1, {l}, {64});
  const Hamiltonian h(g, Field::Zero(64));
  const BlockOperator op = [&](const Eigen::Ref<const Batch>& in, Eigen::Ref<Batch> out) {
    h.apply(in, out);
  };
  LobpcgOptions o;
  o.tol = 1e-9;
  const LobpcgResult r = lobpcg(op, 64, 5, o);
  const double e1 = 0.5 * std::pow(2 * std::numbers::pi / l, 2);
  CHECK(std::abs(r.values(0)) < 1e-12);
  CHECK(r.values(1) == doctest::Approx(e1));
  CHECK(r.values(2) == doctest::Approx(e1));
  CHECK(r.values(3) == doctest::Approx(4 * e1));
  CHECK(r.values(4) == doctest::Approx(4 * e1));
}

TEST_CASE("scf on a small chain matches dense diagonalization") {
  const SmallChain s;
  const GroundState gs = s.ground_state();
  const Index ne = gs.n_electrons();
  CHECK(ne == 8);
  CHECK(gs.residual_history.back() <= 1e-10);

  const auto dense = dense_spectrum(gs);
  CHECK((dense.eigenvalues().head(ne) - gs.eigenvalues).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(dense.eigenvalues()(ne) - gs.unoccupied(0)) < 1e-8);
  CHECK(gs.gap == doctest::Approx(gs.unoccupied(0) - gs.eigenvalues(ne - 1)));

  const double dv = gs.grid.volume_element();
  const Eigen::MatrixXd overlap = gs.orbitals.transpose() * gs.orbitals * dv;
  CHECK((overlap - Eigen::MatrixXd::Identity(ne, ne)).cwiseAbs().maxCoeff() < 1e-8);

  const Field rho = gs.orbitals.array().square().rowwise().sum();
  CHECK((rho - gs.density).norm() < 1e-12 * rho.norm());
  CHECK((rho - gs.input_density).norm() <= 1e-10 * gs.input_density.norm());
  CHECK(integrate(gs.grid, gs.density) == doctest::Approx(8.0).epsilon(1e-10));
}

TEST_CASE("scf failure modes") {
  const SmallChain s;
  ScfOptions o;
  o.max_scf_iters = 1;
  CHECK_THROWS_AS(scf(s.grid, s.kernel, s.config, o), ScfError);
  ScfOptions bad;
  bad.scf_tol = -1.0;
  CHECK_THROWS_AS(scf(s.grid, s.kernel, s.config, bad), InvalidArgument);
}

TEST_CASE("scf warm start from a converged state") {
  const SmallChain s;
  const GroundState gs = s.ground_state();
  ScfGuess guess{gs.input_density, gs.orbitals};
  ScfOptions o;
  o.scf_tol = 1e-10;
  const GroundState again = scf(s.grid, s.kernel, s.config, o, &guess);
  CHECK(again.scf_iterations <= 2);
  CHECK(again.gap == doctest::Approx(gs.gap).epsilon(1e-8));
}

TEST_CASE("total energy invariances") {
  const SmallChain s;
  AtomicConfiguration c = s.config;
  c.positions(2, 0) += 0.15;
  const double e0 = total_energy(tight_scf(s.grid, s.kernel, c));
  AtomicConfiguration moved = c;
  moved.positions.array() += 0.61;
  CHECK(total_energy(tight_scf(s.grid, s.kernel, moved.wrapped())) ==
        doctest::Approx(e0).epsilon(1e-10));

  AtomicConfiguration one = remove_atoms(s.config, std::vector<int>{1, 2, 3, 4, 5, 6, 7});
  const PlaneWaveGrid g = s.grid;
  const double a = total_energy(tight_scf(g, s.kernel, one));
  one.positions(0, 0) = 7.77;
  CHECK(total_energy(tight_scf(g, s.kernel, one)) == doctest::Approx(a).epsilon(1e-10));
}

TEST_CASE("forces match the energy derivative") {
  const SmallChain s;
  AtomicConfiguration c = s.config;
  c.positions(1, 0) += 0.2;
  c.positions(5, 0) -= 0.1;
  const Eigen::MatrixXd f = forces(tight_scf(s.grid, s.kernel, c));
  CHECK(std::abs(f.sum()) < 1e-8);
  const double h = 1e-3;
  for (int atom : {1, 4, 5}) {
    AtomicConfiguration plus = c, minus = c;
    plus.positions(atom, 0) += h;
    minus.positions(atom, 0) -= h;
    const double fd = -(total_energy(tight_scf(s.grid, s.kernel, plus)) -
                        total_energy(tight_scf(s.grid, s.kernel, minus))) / (2 * h);
    CHECK(std::abs(fd - f(atom, 0)) < 1e-5);
  }
}

TEST_CASE("forces vanish on the periodic lattice") {
  const SmallChain s;
  const Eigen::MatrixXd f = forces(s.ground_state());
  CHECK(f.cwiseAbs().maxCoeff() < 1e-6);

  const AtomicConfiguration tri = triangular_2d(2, 1.2);
  const PlaneWaveGrid g = grid_for_cell(tri.cell, 0.1);
  const GroundState gs = tight_scf(g, YukawaKernel{0.1, 0.05}, tri);
  const Eigen::MatrixXd f2 = forces(gs);
  CHECK(f2.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(f2.colwise().sum().cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("harris energy is stationary at the fixed point") {
  const SmallChain s;
  const GroundState gs = tight_scf(s.grid, s.kernel, s.config);
  const double e0 = harris_energy(gs, gs.input_density);
  CHECK(e0 == doctest::Approx(total_energy(gs)).epsilon(1e-10));
  Field dir = random_field(gs.grid.size(), 17);
  dir /= std::sqrt(inner(gs.grid, dir, dir));
  const double d3 = std::abs(harris_energy(gs, gs.input_density + 1e-3 * dir) - e0);
  const double d4 = std::abs(harris_energy(gs, gs.input_density + 1e-4 * dir) - e0);
  // quadratic: a tenfold smaller step shrinks the change about a hundredfold
  CHECK(d4 < 0.02 * d3);
  CHECK(d3 < 1e-4);
}

TEST_CASE("relaxation") {
  const SmallChain s;
  ScfOptions o;
  o.scf_tol = 1e-10;
  const RelaxResult eq = relax(s.grid, s.kernel, s.config, 2, 1.0, o);
  CHECK((eq.config.positions - s.config.positions).cwiseAbs().maxCoeff() < 1e-6);

  AtomicConfiguration c = s.config;
  c.positions(3, 0) += 0.3;
  c.positions(6, 0) -= 0.2;
  const RelaxResult r = relax(s.grid, s.kernel, c, 5, 0.1, o);
  REQUIRE(r.energies.size() == 6);
  for (std::size_t i = 1; i < r.energies.size(); ++i)
    CHECK(r.energies[i] <= r.energies[i - 1] + 1e-12);
  CHECK(r.max_forces.back() < r.max_forces.front());
  CHECK_THROWS_AS(relax(s.grid, s.kernel, c, -1), InvalidArgument);
}

TEST_CASE("one-dimensional insulator gaps") {
  const AtomicConfiguration c = chain_1d(60, 2.4, 0.3);
  const PlaneWaveGrid g = grid_for_cell(c.cell, 0.15);
  const GroundState gs = scf(g, YukawaKernel{0.1, 1.0}, c);
  CHECK(gs.gap == doctest::Approx(0.6763).epsilon(0.02));
  CHECK(gs.density.minCoeff() == doctest::Approx(0.1935).epsilon(0.02));
  CHECK(gs.density.maxCoeff() == doctest::Approx(0.6927).epsilon(0.02));

  const GroundState weak = scf(g, YukawaKernel{0.1, 10.0}, c);
  CHECK(weak.gap == doctest::Approx(0.1012).epsilon(0.05));
}
