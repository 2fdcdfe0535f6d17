#include "doctest.h"
#include "test_support.hpp"

#include "acp_phonon/response.hpp"

#include <cmath>

using namespace acp_phonon;
using namespace acp_phonon::testing;

namespace {

const GroundState& small_state() {
  static const GroundState gs = SmallChain{}.ground_state();
  return gs;
}

SternheimerOptions tight() {
  SternheimerOptions o;
  o.tol = 1e-11;
  return o;
}

}  // namespace

TEST_CASE("projection onto the unoccupied subspace") {
  const GroundState& gs = small_state();
  CHECK(project_unoccupied(gs, Field(gs.orbitals.col(0))).norm() < 1e-12 * gs.orbitals.col(0).norm());
  const Field v = random_field(gs.grid.size(), 8);
  const Field qv = project_unoccupied(gs, v);
  CHECK((project_unoccupied(gs, qv) - qv).norm() < 1e-12 * v.norm());
  const Eigen::VectorXd overlaps = gs.orbitals.transpose() * qv * gs.grid.volume_element();
  CHECK(overlaps.cwiseAbs().maxCoeff() < 1e-10);

  const Batch b = random_batch(gs.grid.size(), 3, 2);
  const Batch qb = project_unoccupied(gs, b);
  CHECK((qb.col(1) - project_unoccupied(gs, Field(b.col(1)))).norm() < 1e-12 * b.norm());
}

TEST_CASE("sternheimer solve") {
  const GroundState& gs = small_state();
  const Index n = gs.grid.size();
  CHECK(sternheimer_solve(gs, gs.eigenvalues(0), Field(Field::Zero(n))).norm() == 0.0);
  CHECK(sternheimer_solve(gs, gs.eigenvalues(2), Field(gs.orbitals.col(3))).norm() < 1e-10);

  // pseudoinverse of the dense projected operator
  const auto eig = dense_spectrum(gs);
  const Eigen::MatrixXd x = eig.eigenvectors().rightCols(n - gs.n_electrons());
  const Eigen::VectorXd e = eig.eigenvalues().tail(n - gs.n_electrons());
  const Field rhs = random_field(n, 3);
  for (double shift : {gs.eigenvalues(0), gs.eigenvalues(7), 0.5 * (gs.eigenvalues(7) + gs.unoccupied(0))}) {
    const Eigen::VectorXd inv = (shift - e.array()).inverse();
    const Field oracle = x * inv.asDiagonal() * (x.transpose() * rhs);
    CHECK(rel_error(oracle, sternheimer_solve(gs, shift, rhs, tight())) < 1e-6);
  }
  CHECK_THROWS_AS(sternheimer_solve(gs, gs.unoccupied(0), rhs), InvalidArgument);

  SternheimerOptions capped;
  capped.max_iters = 2;
  capped.tol = 1e-12;
  CHECK_THROWS_AS(sternheimer_solve(gs, gs.eigenvalues(0), rhs, capped), SolverError);
}

TEST_CASE("preconditioned sternheimer agrees with the plain solve") {
  const GroundState& gs = small_state();
  const Field rhs = random_field(gs.grid.size(), 21);
  SternheimerOptions p = tight();
  p.precondition = true;
  const Field a = sternheimer_solve(gs, gs.eigenvalues(4), rhs, tight());
  const Field b = sternheimer_solve(gs, gs.eigenvalues(4), rhs, p);
  CHECK(rel_error(a, b) < 1e-8);
}

TEST_CASE("chi0 matches the Adler-Wiser sum") {
  const GroundState& gs = small_state();
  const Eigen::MatrixXd chi = dense_chi0(gs);
  const Batch g = random_batch(gs.grid.size(), 4, 5);
  const Batch u = apply_chi0_batch(gs, g, tight());
  CHECK(rel_error(chi * g, u) < 1e-6);
  CHECK(rel_error(chi * g.col(2), apply_chi0(gs, g.col(2), tight())) < 1e-6);
}

TEST_CASE("chi0 structural properties") {
  const GroundState& gs = small_state();
  const Index n = gs.grid.size();
  const Field c = Field::Constant(n, 1.3);
  CHECK(apply_chi0(gs, c).norm() < 1e-8 * c.norm());

  const Batch f = random_batch(n, 3, 10);
  const Batch g = random_batch(n, 3, 11);
  const Batch cf = apply_chi0_batch(gs, f, tight());
  const Batch cg = apply_chi0_batch(gs, g, tight());
  for (Index j = 0; j < 3; ++j) {
    CHECK(std::abs(integrate(gs.grid, cg.col(j))) < 1e-8);
    const double a = inner(gs.grid, f.col(j), cg.col(j));
    const double b = inner(gs.grid, cf.col(j), g.col(j));
    CHECK(std::abs(a - b) < 1e-8 * std::abs(a));
    CHECK(inner(gs.grid, g.col(j), cg.col(j)) <= 1e-10);
  }
}

TEST_CASE("dyson solve") {
  const GroundState& gs = small_state();
  const Index n = gs.grid.size();
  const Batch g = pseudopotential_gradient(gs.config, gs.grid, gs.kernel);

  DysonOptions o;
  o.sternheimer = tight();
  o.tol = 1e-9;
  CHECK(dyson_solve_dfpt(gs, gs.kernel, Batch(Batch::Zero(n, 3)), o).u.norm() == 0.0);

  const Eigen::MatrixXd chi = dense_chi0(gs);
  const Eigen::MatrixXd k = dense_kernel(gs);
  const Eigen::MatrixXd eps = Eigen::MatrixXd::Identity(n, n) - chi * k;
  const Eigen::MatrixXd oracle = eps.partialPivLu().solve(chi * g);
  const DysonResult r = dyson_solve_dfpt(gs, gs.kernel, g, o);
  CHECK(rel_error(oracle, r.u) < 1e-5);

  // residual identity at exit
  const Batch chig = apply_chi0_batch(gs, g, tight());
  const Batch resid = r.u - chig - apply_chi0_batch(gs, yukawa_apply(gs.kernel, gs.grid, r.u), tight());
  CHECK(resid.norm() / chig.norm() < 1e-7);

  DysonOptions decoupled = o;
  decoupled.coupling = 0.0;
  const DysonResult d = dyson_solve_dfpt(gs, gs.kernel, g, decoupled);
  CHECK(d.iterations <= 1);
  CHECK(rel_error(chi * g, d.u) < 1e-6);

  // columns solved one at a time agree with the batch
  for (Index j : {Index(0), Index(5)}) {
    const DysonResult one = dyson_solve_dfpt(gs, gs.kernel, Batch(g.col(j)), o);
    CHECK(rel_error(r.u.col(j), one.u.col(0)) < 1e-6);
  }

  DysonOptions capped = o;
  capped.max_iters = 1;
  CHECK_THROWS_AS(dyson_solve_dfpt(gs, gs.kernel, g, capped), SolverError);
}
