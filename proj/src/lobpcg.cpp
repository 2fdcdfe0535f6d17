#include "acp_phonon/lobpcg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <random>

namespace acp_phonon {

namespace {

// Remove the components of y along the orthonormal columns of b (twice, for stability).
void orthogonalize_against(const Batch& b, Batch& y) {
  if (b.cols() == 0 || y.cols() == 0) return;
  for (int pass = 0; pass < 2; ++pass) y.noalias() -= b * (b.transpose() * y);
}

// Orthonormalize the columns of y in place, dropping numerically dependent directions.
void svqb(Batch& y) {
  if (y.cols() == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::MatrixXd gram = y.transpose() * y;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const Eigen::VectorXd& d = es.eigenvalues();
    const double dmax = std::max(d.maxCoeff(), 0.0);
    std::vector<Index> keep;
    for (Index j = 0; j < d.size(); ++j)
      if (d(j) > 1e-14 * dmax && d(j) > 0.0) keep.push_back(j);
    Eigen::MatrixXd t(y.cols(), static_cast<Index>(keep.size()));
    for (Index j = 0; j < static_cast<Index>(keep.size()); ++j)
      t.col(j) = es.eigenvectors().col(keep[j]) / std::sqrt(d(keep[j]));
    y = (y * t).eval();
  }
}

}  // namespace

LobpcgResult lobpcg(const BlockOperator& apply, Index dimension, Index n_eigs,
                    const LobpcgOptions& options, const BlockOperator& precondition,
                    const Batch* initial_guess) {
  if (n_eigs < 1 || n_eigs > dimension)
    throw InvalidArgument("lobpcg: n_eigs must be in [1, dimension]");
  const Index n_conv = options.n_converge < 0 ? n_eigs : std::min(options.n_converge, n_eigs);
  const Index m = n_eigs;

  Batch x(dimension, m);
  {
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal;
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < dimension; ++i) x(i, j) = normal(rng);
    if (initial_guess) {
      const Index c = std::min(m, initial_guess->cols());
      x.leftCols(c) = initial_guess->leftCols(c);
      // Keep random fill only as a small perturbation when a guess is supplied.
      if (c < m) x.rightCols(m - c) *= 1e-3;
    }
  }
  svqb(x);
  if (x.cols() < m) {
    // Guess columns were dependent; refill with random directions.
    std::mt19937_64 rng(options.seed + 1);
    std::normal_distribution<double> normal;
    Batch extra(dimension, m - x.cols());
    for (Index j = 0; j < extra.cols(); ++j)
      for (Index i = 0; i < dimension; ++i) extra(i, j) = normal(rng);
    orthogonalize_against(x, extra);
    svqb(extra);
    Batch merged(dimension, x.cols() + extra.cols());
    merged << x, extra;
    x = merged;
  }

  Batch ax(dimension, x.cols());
  apply(x, ax);
  Eigen::VectorXd lambda;
  {
    Eigen::MatrixXd h = x.transpose() * ax;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    lambda = es.eigenvalues();
    x = (x * es.eigenvectors()).eval();
    ax = (ax * es.eigenvectors()).eval();
  }

  Batch p(dimension, 0);
  Batch ap(dimension, 0);
  LobpcgResult result;
  Eigen::VectorXd res_norm(m);
  for (int it = 0;; ++it) {
    Batch r = ax - x * lambda.asDiagonal();
    res_norm = r.colwise().norm().transpose();
    std::vector<Index> active;
    for (Index j = 0; j < m; ++j)
      if (res_norm(j) > options.tol) active.push_back(j);
    const bool done = std::none_of(active.begin(), active.end(),
                                   [&](Index j) { return j < n_conv; });
    result.iterations = it;
    if (done || it >= options.max_iters) {
      result.converged = done;
      break;
    }

    Batch w(dimension, static_cast<Index>(active.size()));
    for (Index j = 0; j < w.cols(); ++j) w.col(j) = r.col(active[j]);
    if (precondition) {
      Batch tw(dimension, w.cols());
      precondition(w, tw);
      w = std::move(tw);
    }
    orthogonalize_against(x, w);
    svqb(w);
    orthogonalize_against(x, p);
    orthogonalize_against(w, p);
    svqb(p);

    Batch aw(dimension, w.cols());
    apply(w, aw);
    ap.resize(dimension, p.cols());
    if (p.cols() > 0) apply(p, ap);

    const Index nw = w.cols(), np = p.cols();
    Batch s(dimension, m + nw + np);
    s << x, w, p;
    Batch as(dimension, m + nw + np);
    as << ax, aw, ap;
    Eigen::MatrixXd h = s.transpose() * as;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const Eigen::MatrixXd c = es.eigenvectors().leftCols(m);
    lambda = es.eigenvalues().head(m);

    x = s * c;
    ax = as * c;
    const Eigen::MatrixXd cr = c.bottomRows(nw + np);
    p = s.rightCols(nw + np) * cr;
    ap = as.rightCols(nw + np) * cr;
  }

  result.values = lambda;
  result.vectors = std::move(x);
  result.residuals = res_norm;
  if (!result.converged && options.require_convergence) {
    throw SolverError("lobpcg did not converge in " + std::to_string(options.max_iters) +
                          " iterations (max residual " +
                          std::to_string(res_norm.head(n_conv).maxCoeff()) + ")",
                      res_norm.head(n_conv).maxCoeff());
  }
  return result;
}

}  // namespace acp_phonon
