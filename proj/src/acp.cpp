#include "acp_phonon/acp.hpp"

#include <Eigen/Householder>
#include <Eigen/LU>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>

namespace acp_phonon {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

void AcpOptions::validate() const {
  if (n_cheb < 1) throw InvalidArgument("n_cheb must be >= 1");
  if (fixed_rank <= 0 && !(id_threshold > 0.0 && id_threshold < 1.0))
    throw InvalidArgument("id_threshold must lie in (0, 1)");
  if (srft_oversampling < 1) throw InvalidArgument("srft_oversampling must be >= 1");
  if (max_outer_iters < 1 || !(outer_tol > 0.0)) throw InvalidArgument("bad outer iteration options");
  sternheimer.validate();
}

Eigen::VectorXd chebyshev_nodes(double lo, double hi, int n) {
  if (n < 1) throw InvalidArgument("chebyshev_nodes: n must be >= 1");
  if (lo > hi) throw InvalidArgument("chebyshev_nodes: lo > hi");
  Eigen::VectorXd x(n);
  for (int c = 1; c <= n; ++c)
    x(c - 1) = 0.5 * (lo + hi) + 0.5 * (lo - hi) * std::cos(std::numbers::pi * (c - 0.5) / n);
  if (n % 2 == 1) x(n / 2) = 0.5 * (lo + hi);  // cos(pi/2) is not exactly zero
  return x;
}

Eigen::VectorXd lagrange_coefficients(const Eigen::VectorXd& nodes, double eps) {
  const Index n = nodes.size();
  Eigen::VectorXd l = Eigen::VectorXd::Ones(n);
  for (Index c = 0; c < n; ++c) {
    for (Index q = 0; q < n; ++q) {
      if (q == c) continue;
      const double den = nodes(c) - nodes(q);
      if (den == 0.0) throw InvalidArgument("lagrange_coefficients: coincident nodes");
      l(c) *= (eps - nodes(q)) / den;
    }
  }
  return l;
}

InterpolativeDecomposition row_interpolative_decomposition(const Eigen::MatrixXd& a,
                                                           double threshold, Index fixed_rank) {
  // Pivoted QR of A^T: columns of at are rows of a.
  Eigen::MatrixXd at = a.transpose();
  const Index m = at.rows(), n = at.cols();
  const Index kmax = std::min(m, n);
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  Eigen::VectorXd vn1 = at.colwise().norm().transpose();
  Eigen::VectorXd vn2 = vn1;
  const double tol3z = std::sqrt(std::numeric_limits<double>::epsilon());
  InterpolativeDecomposition id;
  id.threshold = threshold;
  std::vector<double> pivots;
  Eigen::VectorXd work(n);

  Index rank = 0;
  double r11 = 0.0;
  for (Index k = 0; k < kmax; ++k) {
    Index p;
    vn1.tail(n - k).maxCoeff(&p);
    p += k;
    if (p != k) {
      at.col(k).swap(at.col(p));
      std::swap(perm[k], perm[p]);
      std::swap(vn1(k), vn1(p));
      std::swap(vn2(k), vn2(p));
    }
    const double rkk = at.col(k).tail(m - k).norm();
    pivots.push_back(rkk);
    if (k == 0) r11 = rkk;
    if (fixed_rank > 0 ? k >= fixed_rank : (r11 == 0.0 || rkk < threshold * r11)) break;

    double tau, beta;
    Eigen::VectorXd essential(m - k - 1);
    at.col(k).tail(m - k).makeHouseholder(essential, tau, beta);
    at(k, k) = beta;
    at.col(k).tail(m - k - 1) = essential;
    if (k + 1 < n)
      at.bottomRightCorner(m - k, n - k - 1)
          .applyHouseholderOnTheLeft(essential, tau, work.data());
    rank = k + 1;

    for (Index j = k + 1; j < n; ++j) {
      if (vn1(j) == 0.0) continue;
      double t = std::abs(at(k, j)) / vn1(j);
      t = std::max(0.0, (1.0 + t) * (1.0 - t));
      const double t2 = t * (vn1(j) / vn2(j)) * (vn1(j) / vn2(j));
      if (t2 <= tol3z) {
        vn1(j) = k + 1 < m ? at.col(j).tail(m - k - 1).norm() : 0.0;
        vn2(j) = vn1(j);
      } else {
        vn1(j) *= std::sqrt(t);
      }
    }
  }
  id.rank_saturated = fixed_rank > 0 ? fixed_rank > kmax : rank == kmax;
  id.pivots = Eigen::Map<const Eigen::VectorXd>(pivots.data(), static_cast<Index>(pivots.size()));

  // Xi^T = R11^{-1} [R11 R12] Pi^{-1}.
  const Index na = a.rows();
  id.selected_rows.assign(perm.begin(), perm.begin() + rank);
  id.interpolation_vectors = Batch::Zero(na, rank);
  if (rank > 0) {
    const Eigen::MatrixXd r11m = at.topLeftCorner(rank, rank).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd t = r11m.triangularView<Eigen::Upper>().solve(
        at.block(0, rank, rank, n - rank));
    for (Index mu = 0; mu < rank; ++mu) id.interpolation_vectors(perm[mu], mu) = 1.0;
    for (Index j = rank; j < n; ++j)
      id.interpolation_vectors.row(perm[j]) = t.col(j - rank).transpose();
  }
  return id;
}

InterpolativeDecomposition randomized_id(const GroundState& gs, const Batch& g,
                                         const AcpOptions& options) {
  using cd = std::complex<double>;
  const Index n = g.cols();
  if (n == 0) throw InvalidArgument("randomized_id: no columns");
  if (g.rows() != gs.grid.size()) throw InvalidArgument("randomized_id: field size mismatch");
  const Index ne = gs.n_electrons();
  const Index r = std::min<Index>(options.srft_oversampling, n);
  if (r < options.srft_oversampling && options.verbose)
    std::fprintf(stderr, "randomized_id: sketch width clamped to %ld columns of G\n",
                 static_cast<long>(r));

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  Eigen::VectorXcd eta(n);
  for (Index j = 0; j < n; ++j) eta(j) = std::polar(1.0, angle(rng));
  std::vector<Index> nu(n);
  std::iota(nu.begin(), nu.end(), Index{0});
  for (Index j = 0; j < r; ++j) {
    std::uniform_int_distribution<Index> pick(j, n - 1);
    std::swap(nu[j], nu[pick(rng)]);
  }

  // G~ = G Phi with Phi_{j,nu} = eta_j exp(-2 pi i j nu / n).
  Eigen::MatrixXd phi_re(n, r), phi_im(n, r);
  for (Index c = 0; c < r; ++c) {
    for (Index j = 0; j < n; ++j) {
      const double t = -2.0 * std::numbers::pi * static_cast<double>((j * nu[c]) % n) / n;
      const cd z = eta(j) * std::polar(1.0, t);
      phi_re(j, c) = z.real();
      phi_im(j, c) = z.imag();
    }
  }
  const Eigen::MatrixXd gre = g * phi_re, gim = g * phi_im;

  // Row alpha of the real sketch: [Re(kron(G~_alpha, psi_alpha)), Im(...)].
  const Batch& psi = gs.orbitals;
  const Index width = r * ne;
  Eigen::MatrixXd sketch(g.rows(), 2 * width);
  for (Index c = 0; c < r; ++c) {
    sketch.middleCols(c * ne, ne) = psi.array().colwise() * gre.col(c).array();
    sketch.middleCols(width + c * ne, ne) = psi.array().colwise() * gim.col(c).array();
  }
  InterpolativeDecomposition id =
      row_interpolative_decomposition(sketch, options.id_threshold, options.fixed_rank);
  id.seed = options.seed;
  id.sketch_width = 2 * width;
  return id;
}

Batch CompressedPolarizability::sample(const Batch& g) const {
  Batch s(static_cast<Index>(selected_rows.size()), g.cols());
  for (Index mu = 0; mu < s.rows(); ++mu) s.row(mu) = g.row(selected_rows[mu]);
  return s;
}

Batch CompressedPolarizability::apply(const Batch& g) const { return w * sample(g); }

CompressedPolarizability build_compressed_chi0(const GroundState& gs, const Batch& g,
                                               const AcpOptions& options, ResponseStats* stats,
                                               AcpWarmStart* warm, AcpTimings* timings) {
  options.validate();
  auto t0 = Clock::now();
  CompressedPolarizability out;
  out.id = randomized_id(gs, g, options);
  out.selected_rows = out.id.selected_rows;
  if (timings) timings->id += seconds_since(t0);

  const Index ne = gs.n_electrons();
  const Index ng = gs.grid.size();
  const Index nmu = out.id.rank();
  const double lo = gs.eigenvalues(0), hi = gs.eigenvalues(ne - 1);
  // A (numerically) single occupied level needs only one shift.
  const int nc = hi - lo <= 1e-12 * std::max(1.0, std::abs(hi)) ? 1 : options.n_cheb;
  out.chebyshev_nodes = nc == 1 ? Eigen::VectorXd::Constant(1, 0.5 * (lo + hi))
                                : chebyshev_nodes(lo, hi, nc);
  // lc(c, i) = l_c(eps_i)
  Eigen::MatrixXd lc(nc, ne);
  for (Index i = 0; i < ne; ++i)
    lc.col(i) = nc == 1 ? Eigen::VectorXd::Ones(1)
                        : lagrange_coefficients(out.chebyshev_nodes, gs.eigenvalues(i));

  const bool use_warm = warm && warm->enabled && options.warm_start &&
                        8.0 * ng * nc * static_cast<double>(nmu) <= options.warm_start_bytes;
  if (warm && (warm->n_cheb != nc || !use_warm)) warm->zeta.clear();
  if (warm) warm->n_cheb = nc;
  std::unordered_map<Index, Batch> next_warm;

  out.w = Batch::Zero(ng, nmu);
  const Batch& psi = gs.orbitals;
  const Index chunk = std::max<Index>(1, 256 / nc);
  const Index nchunks = (nmu + chunk - 1) / chunk;
  std::mutex mu_lock;
  std::exception_ptr error;
  Index error_chunk = nchunks;
  ResponseStats total;
  double t_solve = 0.0, t_assemble = 0.0;

#pragma omp parallel for schedule(dynamic)
  for (Index b = 0; b < nchunks; ++b) {
    try {
      const Index m0 = b * chunk, m1 = std::min(nmu, m0 + chunk), w = m1 - m0;
      // Column mu_local * nc + c holds shift nodes(c) and right-hand side xi_mu.
      Batch rhs(ng, w * nc), guess = Batch::Zero(ng, w * nc);
      Eigen::VectorXd shifts(w * nc);
      bool have_guess = false;
      for (Index q = 0; q < w; ++q) {
        for (int c = 0; c < nc; ++c) {
          rhs.col(q * nc + c) = out.id.interpolation_vectors.col(m0 + q);
          shifts(q * nc + c) = out.chebyshev_nodes(c);
        }
        if (use_warm) {
          auto it = warm->zeta.find(out.selected_rows[m0 + q]);
          if (it != warm->zeta.end()) {
            guess.middleCols(q * nc, nc) = it->second;
            have_guess = true;
          }
        }
      }
      auto ts = Clock::now();
      ResponseStats local;
      const Batch zeta = sternheimer_solve_batch(gs, shifts, rhs, options.sternheimer,
                                                 have_guess ? &guess : nullptr, &local);
      const double dt_solve = seconds_since(ts);

      ts = Clock::now();
      Eigen::MatrixXd psi_sel(w, ne);
      for (Index q = 0; q < w; ++q) psi_sel.row(q) = psi.row(out.selected_rows[m0 + q]);
      Batch wb = Batch::Zero(ng, w);
      for (int c = 0; c < nc; ++c) {
        // T_c = Psi diag(l_c(eps)) Psi(rows)^T
        const Batch tc = psi * lc.row(c).transpose().asDiagonal() * psi_sel.transpose();
        for (Index q = 0; q < w; ++q)
          wb.col(q).array() += 2.0 * zeta.col(q * nc + c).array() * tc.col(q).array();
      }
      out.w.middleCols(m0, w) = wb;
      const double dt_assemble = seconds_since(ts);

      std::lock_guard lock(mu_lock);
      total.merge(local);
      t_solve += dt_solve;
      t_assemble += dt_assemble;
      if (use_warm)
        for (Index q = 0; q < w; ++q)
          next_warm[out.selected_rows[m0 + q]] = zeta.middleCols(q * nc, nc);
    } catch (...) {
      std::lock_guard lock(mu_lock);
      if (b < error_chunk) {
        error_chunk = b;
        error = std::current_exception();
      }
    }
  }
  if (stats) stats->merge(total);
  if (timings) {
    timings->sternheimer += t_solve;
    timings->assemble += t_assemble;
  }
  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const SolverError& e) {
      throw SolverError("compressed chi0, selected rows " + std::to_string(error_chunk * chunk) +
                            ".." + std::to_string(std::min(nmu, (error_chunk + 1) * chunk) - 1) +
                            ": " + e.what(),
                        e.achieved_residual());
    }
  }
  if (use_warm) warm->zeta = std::move(next_warm);
  return out;
}

AcpResult acp_solve(const GroundState& gs, const YukawaKernel& kernel, const Batch& g,
                    const AcpOptions& options) {
  options.validate();
  const Index n = g.rows(), m = g.cols();
  AcpResult out;
  if (m == 0 || g.isZero(0.0)) {
    out.u = Batch::Zero(n, m);
    out.converged = true;
    return out;
  }
  const Batch b = yukawa_inverse_apply(kernel, gs.grid, g);
  Batch ut = b;
  AcpWarmStart warm;
  warm.enabled = options.warm_start;

  for (int k = 1; k <= options.max_outer_iters; ++k) {
    AcpOptions step = options;
    step.seed = options.seed + static_cast<std::uint64_t>(k - 1) * 0x9E3779B97F4A7C15ULL;
    out.seeds.push_back(step.seed);

    const Batch gk = k == 1 ? g : yukawa_apply(kernel, gs.grid, ut);
    const CompressedPolarizability chi =
        build_compressed_chi0(gs, gk, step, &out.stats, &warm, &out.timings);
    out.n_mu.push_back(chi.rank());
    out.rank_saturated = out.rank_saturated || chi.id.rank_saturated;

    auto t0 = Clock::now();
    const Batch kw = yukawa_apply(kernel, gs.grid, chi.w);
    Eigen::MatrixXd core = -chi.sample(kw);
    core.diagonal().array() += 1.0;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(core);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14))
      throw SolverError("ACP core matrix is singular (reciprocal condition " +
                            std::to_string(rcond) + ")",
                        rcond);
    Batch next = b + chi.w * lu.solve(chi.sample(g));
    out.timings.update += seconds_since(t0);

    const double change = (next - ut).norm() / next.norm();
    ut = std::move(next);
    out.updates.push_back(change);
    out.iterations = k;
    if (options.keep_iterates) out.iterates.push_back(ut - b);
    if (options.verbose)
      std::fprintf(stderr, "acp outer %d  N_mu %ld  change %.3e\n", k,
                   static_cast<long>(chi.rank()), change);
    if (change < options.outer_tol) {
      out.converged = true;
      break;
    }
  }
  out.u = ut - b;
  return out;
}

}  // namespace acp_phonon
