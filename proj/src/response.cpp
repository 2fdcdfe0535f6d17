#include "acp_phonon/response.hpp"

#include "acp_phonon/anderson.hpp"
#include "acp_phonon/hamiltonian.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>

namespace acp_phonon {

void SternheimerOptions::validate() const {
  if (!(tol > 0.0) || max_iters < 1) throw InvalidArgument("bad Sternheimer options");
}

void DysonOptions::validate() const {
  if (!(tol > 0.0) || max_iters < 1 || history < 0 || !(beta > 0.0))
    throw InvalidArgument("bad Dyson options");
  sternheimer.validate();
}

void ResponseStats::merge(const ResponseStats& other) {
  solves += other.solves;
  column_iterations += other.column_iterations;
  max_iterations = std::max(max_iterations, other.max_iterations);
  max_residual = std::max(max_residual, other.max_residual);
}

namespace {

// A = Q(H - shift)Q + P, symmetric positive definite below the first unoccupied level.
class ProjectedShifted {
 public:
  ProjectedShifted(const GroundState& gs, const Eigen::VectorXd& shifts)
      : h_(gs.grid, gs.potential), x_(gs.euclidean_orbitals()), shifts_(shifts) {}

  const Batch& orbitals() const { return x_; }

  void apply(const Batch& in, Batch& out, const std::vector<Index>& ids) const {
    const Eigen::MatrixXd c1 = x_.transpose() * in;
    Batch u = in;
    u.noalias() -= x_ * c1;
    out.resize(in.rows(), in.cols());
    h_.apply(u, out);
    for (Index j = 0; j < in.cols(); ++j) out.col(j) -= shifts_(ids[j]) * u.col(j);
    Eigen::MatrixXd c2 = x_.transpose() * out;
    c2 -= c1;
    out.noalias() -= x_ * c2;
  }

  void precondition(const Batch& in, Batch& out) const {
    out.resize(in.rows(), in.cols());
    h_.precondition(in, out);
  }

  void project(Batch& v) const { v.noalias() -= x_ * (x_.transpose() * v); }

 private:
  Hamiltonian h_;
  Batch x_;
  Eigen::VectorXd shifts_;
};

Batch solve_projected(const ProjectedShifted& a, const Batch& rhs, const Batch* guess,
                      const SternheimerOptions& options, ResponseStats* stats) {
  // A zeta = -Q rhs has the same solution as Q(shift - H)Q zeta = Q rhs.
  Batch b = rhs;
  a.project(b);
  b = -b;
  Batch x = guess && guess->rows() == rhs.rows() && guess->cols() == rhs.cols()
                ? *guess
                : Batch::Zero(rhs.rows(), rhs.cols());
  MinresOptions mo;
  mo.tol = options.tol;
  mo.max_iters = options.max_iters;
  ColumnOperator op = [&](const Batch& in, Batch& out, const std::vector<Index>& ids) {
    a.apply(in, out, ids);
  };
  ColumnOperator prec;
  if (options.precondition)
    prec = [&](const Batch& in, Batch& out, const std::vector<Index>&) { a.precondition(in, out); };
  const MinresStats ms = minres_batch(op, b, x, mo, prec);
  if (stats) {
    stats->solves += rhs.cols();
    stats->column_iterations += ms.column_iterations;
    stats->max_iterations = std::max(stats->max_iterations, ms.max_iterations);
    stats->max_residual = std::max(stats->max_residual, ms.max_residual);
  }
  if (!ms.converged)
    throw SolverError("Sternheimer MINRES stopped at relative residual " +
                          std::to_string(ms.max_residual) + " after " +
                          std::to_string(ms.max_iterations) + " iterations",
                      ms.max_residual);
  a.project(x);
  return x;
}

void check_shifts(const GroundState& gs, const Eigen::VectorXd& shifts) {
  if (gs.unoccupied.size() == 0) throw InvalidArgument("ground state has no unoccupied level");
  const double limit = gs.unoccupied(0) - 1e-6;
  for (Index j = 0; j < shifts.size(); ++j)
    if (!(shifts(j) < limit))
      throw InvalidArgument("Sternheimer shift " + std::to_string(shifts(j)) +
                            " is too close to the unoccupied spectrum");
}

}  // namespace

Field project_unoccupied(const GroundState& gs, const Field& v) {
  const Batch x = gs.euclidean_orbitals();
  return v - x * (x.transpose() * v);
}

Batch project_unoccupied(const GroundState& gs, const Batch& v) {
  const Batch x = gs.euclidean_orbitals();
  return v - x * (x.transpose() * v);
}

Batch sternheimer_solve_batch(const GroundState& gs, const Eigen::VectorXd& shifts,
                              const Batch& rhs, const SternheimerOptions& options,
                              const Batch* guess, ResponseStats* stats) {
  options.validate();
  if (rhs.rows() != gs.grid.size() || shifts.size() != rhs.cols())
    throw InvalidArgument("Sternheimer: shape mismatch");
  check_shifts(gs, shifts);
  const ProjectedShifted a(gs, shifts);
  return solve_projected(a, rhs, guess, options, stats);
}

Field sternheimer_solve(const GroundState& gs, double shift, const Field& rhs,
                        const SternheimerOptions& options) {
  const Batch z = sternheimer_solve_batch(gs, Eigen::VectorXd::Constant(1, shift), rhs, options);
  return z.col(0);
}

Field apply_chi0(const GroundState& gs, const Field& g, const SternheimerOptions& options) {
  return apply_chi0_batch(gs, g, options).col(0);
}

Batch apply_chi0_batch(const GroundState& gs, const Batch& g, const SternheimerOptions& options,
                       ResponseStats* stats, Chi0WarmStart* warm) {
  options.validate();
  if (g.rows() != gs.grid.size()) throw InvalidArgument("apply_chi0: field size mismatch");
  check_shifts(gs, gs.eigenvalues);
  const ProjectedShifted a(gs, gs.eigenvalues);
  const Batch& psi = gs.orbitals;
  const Index ncols = g.cols();
  if (warm && warm->enabled && static_cast<Index>(warm->zeta.size()) != ncols)
    warm->zeta.assign(ncols, Batch());

  Batch u(g.rows(), ncols);
  std::mutex mu;
  ResponseStats total;
  std::exception_ptr error;
  Index error_col = ncols;
#pragma omp parallel for schedule(dynamic)
  for (Index j = 0; j < ncols; ++j) {
    try {
      const Batch rhs = psi.array().colwise() * g.col(j).array();
      ResponseStats local;
      const Batch* guess = warm && warm->enabled ? &warm->zeta[j] : nullptr;
      Batch zeta = solve_projected(a, rhs, guess, options, &local);
      u.col(j) = 2.0 * (psi.array() * zeta.array()).rowwise().sum();
      if (warm && warm->enabled) warm->zeta[j] = std::move(zeta);
      std::lock_guard lock(mu);
      total.merge(local);
    } catch (...) {
      std::lock_guard lock(mu);
      if (j < error_col) {
        error_col = j;
        error = std::current_exception();
      }
    }
  }
  if (stats) stats->merge(total);
  if (error) {
    try {
      std::rethrow_exception(error);
    } catch (const SolverError& e) {
      throw SolverError("chi0 column " + std::to_string(error_col) + ": " + e.what(),
                        e.achieved_residual());
    }
  }
  return u;
}

DysonResult dyson_solve_dfpt(const GroundState& gs, const YukawaKernel& kernel, const Batch& g,
                             const DysonOptions& options) {
  options.validate();
  const Index n = g.rows(), m = g.cols();
  DysonResult out;
  if (m == 0 || g.isZero(0.0)) {
    out.u = Batch::Zero(n, m);
    return out;
  }
  const double bytes = 8.0 * static_cast<double>(n) * static_cast<double>(gs.n_electrons()) *
                       static_cast<double>(m);
  // Separate stores for the fixed right-hand side and for the K U updates.
  Chi0WarmStart warm_g, warm_u;
  warm_g.enabled = false;
  warm_u.enabled = options.warm_start && bytes <= options.warm_start_bytes;
  out.warm_start_used = warm_u.enabled;

  const Batch chi0g = apply_chi0_batch(gs, g, options.sternheimer, &out.stats, &warm_g);
  const double ref = chi0g.norm();
  if (ref == 0.0) {
    out.u = Batch::Zero(n, m);
    return out;
  }

  AndersonMixer mixer(options.history, options.beta);
  Eigen::VectorXd u_in = chi0g.reshaped();
  for (int it = 1; it <= options.max_iters; ++it) {
    Batch f = chi0g;
    if (options.coupling != 0.0) {
      const Batch ku = yukawa_apply(kernel, gs.grid, Batch(u_in.reshaped(n, m)));
      f += options.coupling * apply_chi0_batch(gs, ku, options.sternheimer, &out.stats, &warm_u);
    }
    const Eigen::VectorXd res = f.reshaped() - u_in;
    const double rel = res.norm() / ref;
    out.residuals.push_back(rel);
    out.iterations = it;
    if (options.verbose) std::fprintf(stderr, "dyson %3d  residual %.3e\n", it, rel);
    if (rel <= options.tol) {
      out.u = u_in.reshaped(n, m);
      return out;
    }
    u_in = mixer.update(u_in, res);
  }
  throw SolverError("Dyson iteration did not converge in " + std::to_string(options.max_iters) +
                        " iterations (residual " + std::to_string(out.residuals.back()) + ")",
                    out.residuals.back());
}

}  // namespace acp_phonon
