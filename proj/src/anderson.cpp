#include "acp_phonon/anderson.hpp"

#include <stdexcept>

namespace acp_phonon {

AndersonMixer::AndersonMixer(int depth, double beta) : depth_(depth), beta_(beta) {
  if (depth_ < 0 || !(beta_ > 0.0)) throw std::invalid_argument("bad Anderson parameters");
}

void AndersonMixer::reset() {
  have_last_ = false;
  dx_.clear();
  df_.clear();
}

Eigen::VectorXd AndersonMixer::update(const Eigen::VectorXd& x, const Eigen::VectorXd& residual) {
  if (have_last_ && depth_ > 0) {
    dx_.push_back(x - last_x_);
    df_.push_back(residual - last_f_);
    if (static_cast<int>(dx_.size()) > depth_) {
      dx_.pop_front();
      df_.pop_front();
    }
  }
  last_x_ = x;
  last_f_ = residual;
  have_last_ = true;

  if (dx_.empty()) return x + beta_ * residual;

  // Least squares min ||f - dF gamma|| through the small Gram matrix; the
  // history vectors can be large, so they are never copied into one block.
  const Eigen::Index m = static_cast<Eigen::Index>(df_.size());
  Eigen::MatrixXd gram(m, m);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    rhs(i) = df_[i].dot(residual);
    for (Eigen::Index j = 0; j <= i; ++j) gram(i, j) = gram(j, i) = df_[i].dot(df_[j]);
  }
  const Eigen::VectorXd gamma = gram.completeOrthogonalDecomposition().solve(rhs);
  Eigen::VectorXd next = x + beta_ * residual;
  for (Eigen::Index j = 0; j < m; ++j) next -= gamma(j) * (dx_[j] + beta_ * df_[j]);
  return next;
}

}  // namespace acp_phonon
