#include "acp_phonon/minres.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace acp_phonon {

namespace {

using Eigen::ArrayXd;

void keep_columns(Batch& m, const std::vector<Index>& keep) {
  Batch out(m.rows(), static_cast<Index>(keep.size()));
  for (Index j = 0; j < out.cols(); ++j) out.col(j) = m.col(keep[j]);
  m.swap(out);
}

void keep_entries(ArrayXd& a, const std::vector<Index>& keep) {
  ArrayXd out(static_cast<Index>(keep.size()));
  for (Index j = 0; j < out.size(); ++j) out(j) = a(keep[j]);
  a.swap(out);
}

Eigen::VectorXd column_dots(const Batch& a, const Batch& b) {
  return (a.array() * b.array()).colwise().sum().transpose();
}

// One MINRES pass on A dx = r for the listed columns. thr is the relative
// reduction wanted per column, budget its iteration allowance.
void minres_pass(const ColumnOperator& op, const ColumnOperator& prec, const Batch& r0,
                 std::vector<Index> ids, ArrayXd thr, std::vector<int> budget, Batch& dx_out,
                 std::vector<int>& used) {
  const Index n = r0.rows();
  Index p = r0.cols();
  dx_out.setZero(n, p);
  used.assign(p, 0);
  // slot[j] is the position of working column j in the pass output.
  std::vector<Index> slot(p);
  for (Index j = 0; j < p; ++j) slot[j] = j;
  std::vector<Index> global = ids;

  Batch r1 = r0, r2 = r0, y(n, p), v(n, p), w = Batch::Zero(n, p), w1(n, p),
        w2 = Batch::Zero(n, p), dx = Batch::Zero(n, p);
  if (prec) prec(r1, y, global); else y = r1;
  ArrayXd beta = column_dots(r1, y).array().sqrt();
  ArrayXd beta1 = beta, oldb = ArrayXd::Zero(p), dbar = ArrayXd::Zero(p),
          epsln = ArrayXd::Zero(p), phibar = beta, cs = ArrayXd::Constant(p, -1.0),
          sn = ArrayXd::Zero(p);
  std::vector<int> its(p, 0);
  const double tiny = std::numeric_limits<double>::min();
  const double eps = std::numeric_limits<double>::epsilon();

  auto retire = [&](const std::vector<bool>& done) {
    std::vector<Index> keep;
    for (Index j = 0; j < p; ++j) {
      if (done[j]) {
        dx_out.col(slot[j]) = dx.col(j);
        used[slot[j]] = its[j];
      } else {
        keep.push_back(j);
      }
    }
    if (static_cast<Index>(keep.size()) == p) return;
    for (Batch* m : {&r1, &r2, &y, &v, &w, &w1, &w2, &dx}) keep_columns(*m, keep);
    for (ArrayXd* a : {&beta, &beta1, &oldb, &dbar, &epsln, &phibar, &cs, &sn, &thr})
      keep_entries(*a, keep);
    std::vector<Index> s2, g2;
    std::vector<int> i2, b2;
    for (Index j : keep) {
      s2.push_back(slot[j]);
      g2.push_back(global[j]);
      i2.push_back(its[j]);
      b2.push_back(budget[j]);
    }
    slot.swap(s2);
    global.swap(g2);
    its.swap(i2);
    budget.swap(b2);
    p = static_cast<Index>(keep.size());
  };

  {
    std::vector<bool> done(p);
    for (Index j = 0; j < p; ++j) done[j] = !(beta1(j) > tiny) || budget[j] <= 0;
    retire(done);
  }

  for (int k = 1; p > 0; ++k) {
    v = y * beta.inverse().matrix().asDiagonal();
    op(v, y, global);
    if (k >= 2) y -= r1 * (beta / oldb).matrix().asDiagonal();
    const ArrayXd alfa = column_dots(v, y).array();
    y -= r2 * (alfa / beta).matrix().asDiagonal();
    std::swap(r1, r2);
    std::swap(r2, y);
    if (prec) prec(r2, y, global); else y = r2;
    oldb = beta;
    beta = column_dots(r2, y).array().max(0.0).sqrt();

    const ArrayXd oldeps = epsln;
    const ArrayXd delta = cs * dbar + sn * alfa;
    const ArrayXd gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const ArrayXd gamma = (gbar.square() + beta.square()).sqrt().max(eps);
    cs = gbar / gamma;
    sn = beta / gamma;
    const ArrayXd phi = cs * phibar;
    phibar = sn * phibar;

    std::swap(w1, w2);
    std::swap(w2, w);
    w = (v - w1 * oldeps.matrix().asDiagonal() - w2 * delta.matrix().asDiagonal()) *
        gamma.inverse().matrix().asDiagonal();
    dx += w * phi.matrix().asDiagonal();

    std::vector<bool> done(p);
    bool any = false;
    for (Index j = 0; j < p; ++j) {
      ++its[j];
      done[j] = phibar(j) <= thr(j) * beta1(j) || its[j] >= budget[j] ||
                !(beta(j) > tiny * beta1(j));
      any = any || done[j];
    }
    if (any) retire(done);
  }
}

}  // namespace

MinresStats minres_batch(const ColumnOperator& op, const Batch& b, Batch& x,
                         const MinresOptions& options, const ColumnOperator& precondition) {
  const Index n = b.rows(), m = b.cols();
  if (x.rows() != n || x.cols() != m) x = Batch::Zero(n, m);
  MinresStats stats;
  if (m == 0) return stats;
  const Eigen::VectorXd bnorm = b.colwise().norm().transpose();
  std::vector<int> total(m, 0);

  for (int pass = 0;; ++pass) {
    // True residuals of every column whose guess is nonzero.
    Batch r = b;
    std::vector<Index> nz;
    for (Index j = 0; j < m; ++j)
      if (!x.col(j).isZero(0.0)) nz.push_back(j);
    if (!nz.empty()) {
      Batch xs(n, static_cast<Index>(nz.size())), ax(n, static_cast<Index>(nz.size()));
      for (Index j = 0; j < xs.cols(); ++j) xs.col(j) = x.col(nz[j]);
      op(xs, ax, nz);
      for (Index j = 0; j < xs.cols(); ++j) r.col(nz[j]) -= ax.col(j);
    }

    std::vector<Index> pending;
    stats.max_residual = 0.0;
    for (Index j = 0; j < m; ++j) {
      if (bnorm(j) == 0.0) {
        x.col(j).setZero();
        continue;
      }
      const double rel = r.col(j).norm() / bnorm(j);
      stats.max_residual = std::max(stats.max_residual, rel);
      if (rel > options.tol && total[j] < options.max_iters) pending.push_back(j);
    }
    if (pending.empty() || pass > options.max_restarts) break;

    const Index p = static_cast<Index>(pending.size());
    Batch rp(n, p);
    ArrayXd thr(p);
    std::vector<int> budget(p);
    for (Index j = 0; j < p; ++j) {
      rp.col(j) = r.col(pending[j]);
      // Aim a little below the target so the true residual usually passes.
      thr(j) = 0.5 * options.tol * bnorm(pending[j]) / rp.col(j).norm();
      budget[j] = options.max_iters - total[pending[j]];
    }
    Batch dx;
    std::vector<int> used;
    minres_pass(op, precondition, rp, pending, thr, budget, dx, used);
    for (Index j = 0; j < p; ++j) {
      x.col(pending[j]) += dx.col(j);
      total[pending[j]] += used[j];
    }
  }

  for (Index j = 0; j < m; ++j) {
    stats.column_iterations += total[j];
    stats.max_iterations = std::max(stats.max_iterations, total[j]);
  }
  stats.converged = stats.max_residual <= options.tol;
  return stats;
}

}  // namespace acp_phonon
