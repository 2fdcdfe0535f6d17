#include "doctest.h"
#include "test_support.hpp"

#include "acp_phonon/acp.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>

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

AcpOptions options(double eps, int n_cheb = 20) {
  AcpOptions o;
  o.id_threshold = eps;
  o.n_cheb = n_cheb;
  o.sternheimer = tight();
  return o;
}

// All orbital-pair products psi_i (.) g_j, column j * N_e + i.
Eigen::MatrixXd pair_matrix(const GroundState& gs, const Batch& g) {
  const Index ne = gs.n_electrons();
  Eigen::MatrixXd m(gs.grid.size(), ne * g.cols());
  for (Index j = 0; j < g.cols(); ++j)
    for (Index i = 0; i < ne; ++i) m.col(j * ne + i) = gs.orbitals.col(i).cwiseProduct(g.col(j));
  return m;
}

}  // namespace

TEST_CASE("chebyshev nodes") {
  const Eigen::VectorXd one = chebyshev_nodes(-2.0, 4.0, 1);
  REQUIRE(one.size() == 1);
  CHECK(one(0) == 1.0);

  const Eigen::VectorXd two = chebyshev_nodes(-1.0, 1.0, 2);
  CHECK(two(0) == doctest::Approx(-std::cos(std::numbers::pi / 4)));
  CHECK(two(1) == doctest::Approx(std::cos(std::numbers::pi / 4)));

  const Eigen::VectorXd flat = chebyshev_nodes(0.3, 0.3, 4);
  for (Index c = 0; c < flat.size(); ++c) CHECK(flat(c) == doctest::Approx(0.3));

  const Eigen::VectorXd many = chebyshev_nodes(-0.7, 1.9, 20);
  CHECK(many.minCoeff() > -0.7);
  CHECK(many.maxCoeff() < 1.9);
  CHECK_THROWS_AS(chebyshev_nodes(1.0, 0.0, 3), InvalidArgument);
  CHECK_THROWS_AS(chebyshev_nodes(0.0, 1.0, 0), InvalidArgument);
}

TEST_CASE("lagrange weights") {
  const Eigen::VectorXd nodes = chebyshev_nodes(-1.3, 0.4, 12);
  for (Index c = 0; c < nodes.size(); ++c) {
    const Eigen::VectorXd l = lagrange_coefficients(nodes, nodes(c));
    CHECK((l - Eigen::VectorXd::Unit(nodes.size(), c)).norm() < 1e-14);
  }
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.3, 0.4);
  for (int t = 0; t < 10; ++t) {
    const double x = u(rng);
    const Eigen::VectorXd l = lagrange_coefficients(nodes, x);
    CHECK(std::abs(l.sum() - 1.0) < 1e-12);
    for (int p = 0; p < 12; ++p) {
      const double interp = l.dot(nodes.array().pow(p).matrix());
      CHECK(std::abs(interp - std::pow(x, p)) < 1e-10);
    }
  }
  Eigen::VectorXd bad(2);
  bad << 0.5, 0.5;
  CHECK_THROWS_AS(lagrange_coefficients(bad, 0.1), InvalidArgument);
}

TEST_CASE("row ID of an exactly low-rank matrix") {
  const Batch left = random_batch(80, 5, 1);
  const Batch right = random_batch(40, 5, 2);
  const Eigen::MatrixXd a = left * right.transpose();
  const InterpolativeDecomposition id = row_interpolative_decomposition(a, 1e-10);
  CHECK(id.rank() == 5);
  Eigen::MatrixXd rows(5, a.cols());
  for (Index m = 0; m < 5; ++m) rows.row(m) = a.row(id.selected_rows[m]);
  CHECK((a - id.interpolation_vectors * rows).norm() < 1e-8 * a.norm());

  const InterpolativeDecomposition fixed = row_interpolative_decomposition(a, 1e-10, 3);
  CHECK(fixed.rank() == 3);
}

TEST_CASE("randomized ID") {
  const GroundState& gs = small_state();
  const Batch g = pseudopotential_gradient(gs.config, gs.grid, gs.kernel);
  const Eigen::MatrixXd m = pair_matrix(gs, g);
  const InterpolativeDecomposition id = randomized_id(gs, g, options(1e-5));
  const Index nmu = id.rank();
  CHECK(nmu > 0);
  CHECK(nmu <= id.sketch_width);
  CHECK(!id.rank_saturated);
  std::set<Index> distinct(id.selected_rows.begin(), id.selected_rows.end());
  CHECK(static_cast<Index>(distinct.size()) == nmu);

  Eigen::MatrixXd xi_rows(nmu, nmu);
  Eigen::MatrixXd m_rows(nmu, m.cols());
  for (Index r = 0; r < nmu; ++r) {
    xi_rows.row(r) = id.interpolation_vectors.row(id.selected_rows[r]);
    m_rows.row(r) = m.row(id.selected_rows[r]);
  }
  CHECK((xi_rows - Eigen::MatrixXd::Identity(nmu, nmu)).cwiseAbs().maxCoeff() < 1e-10);
  const Eigen::MatrixXd recon = id.interpolation_vectors * m_rows;
  CHECK((recon - m).norm() < 1e-4 * m.norm());
  for (Index r = 0; r < nmu; ++r)
    CHECK((recon.row(id.selected_rows[r]) - m.row(id.selected_rows[r])).norm() <
          1e-10 * m.row(id.selected_rows[r]).norm());

  // smaller thresholds keep more rows
  CHECK(randomized_id(gs, g, options(1e-2)).rank() < randomized_id(gs, g, options(1e-3)).rank());
  CHECK(randomized_id(gs, g, options(1e-3)).rank() < nmu);
}

TEST_CASE("randomized ID is seed deterministic") {
  const GroundState& gs = small_state();
  const Batch g = pseudopotential_gradient(gs.config, gs.grid, gs.kernel);
  AcpOptions o = options(1e-4);
  o.seed = 99;
  const InterpolativeDecomposition a = randomized_id(gs, g, o);
  const InterpolativeDecomposition b = randomized_id(gs, g, o);
  CHECK(a.selected_rows == b.selected_rows);
  CHECK(a.interpolation_vectors == b.interpolation_vectors);
  CHECK(a.seed == 99);
}

TEST_CASE("compressed chi0") {
  const GroundState& gs = small_state();
  const Index n = gs.grid.size();
  const Batch g = pseudopotential_gradient(gs.config, gs.grid, gs.kernel);
  const CompressedPolarizability cp = build_compressed_chi0(gs, g, options(1e-5));

  // a constant is annihilated up to the ID reconstruction error of psi_i (.) c
  const Batch c = Batch::Constant(n, 1, 0.8);
  CHECK(cp.apply(c).norm() < 1e-4 * c.norm());
  for (Index j = 0; j < cp.w.cols(); ++j) CHECK(std::abs(integrate(gs.grid, cp.w.col(j))) < 1e-8);

  // rank of the assembled dense operator
  const Eigen::MatrixXd dense = dense_operator(n, [&](const Field& e) {
    return Field(cp.apply(Batch(e)).col(0));
  });
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dense);
  qr.setThreshold(1e-12);
  CHECK(qr.rank() <= cp.rank());

  // column by column against the Algorithm-1 action
  const Batch ref = apply_chi0_batch(gs, g, tight());
  const Batch approx = cp.apply(g);
  for (Index j = 0; j < g.cols(); ++j) CHECK(rel_error(ref.col(j), approx.col(j)) < 1e-4);
}

TEST_CASE("compressed chi0 accuracy is monotone in the threshold") {
  const GroundState& gs = small_state();
  const Batch g = pseudopotential_gradient(gs.config, gs.grid, gs.kernel);
  const Batch ref = apply_chi0_batch(gs, g, tight());
  double previous = 1e300;
  for (double eps : {1e-2, 1e-3, 1e-5, 1e-8}) {
    const double err = rel_error(ref, build_compressed_chi0(gs, g, options(eps)).apply(g));
    CHECK(err <= previous);
    previous = err;
  }
  CHECK(previous < 1e-8);

  // more Chebyshev nodes help until the ID error dominates
  const double e5 = rel_error(ref, build_compressed_chi0(gs, g, options(1e-8, 5)).apply(g));
  const double e10 = rel_error(ref, build_compressed_chi0(gs, g, options(1e-8, 10)).apply(g));
  const double e20 = rel_error(ref, build_compressed_chi0(gs, g, options(1e-8, 20)).apply(g));
  CHECK(e10 < e5);
  CHECK(e20 <= e10);
}

TEST_CASE("acp solve") {
  const GroundState& gs = small_state();
  const Index n = gs.grid.size();
  const Batch g = pseudopotential_gradient(gs.config, gs.grid, gs.kernel);
  CHECK(acp_solve(gs, gs.kernel, Batch(Batch::Zero(n, 2)), options(1e-3)).u.norm() == 0.0);

  DysonOptions d;
  d.tol = 1e-10;
  d.sternheimer = tight();
  const Batch ref = dyson_solve_dfpt(gs, gs.kernel, g, d).u;

  AcpOptions o = options(1e-8, 40);
  o.max_outer_iters = 6;
  o.outer_tol = 1e-10;
  o.keep_iterates = true;
  const AcpResult r = acp_solve(gs, gs.kernel, g, o);
  CHECK(r.converged);
  CHECK(rel_error(ref, r.u) < 1e-8);
  REQUIRE(r.iterates.size() == static_cast<std::size_t>(r.iterations));
  CHECK(r.n_mu.size() == r.seeds.size());
  CHECK(r.updates.back() < 1e-10);

  // the first iterate is the zero-coupling compression, later ones adapt
  AcpOptions coarse = options(1e-3);
  coarse.keep_iterates = true;
  const AcpResult c = acp_solve(gs, gs.kernel, g, coarse);
  CHECK(rel_error(ref, c.iterates.front()) > rel_error(ref, c.u));
}
