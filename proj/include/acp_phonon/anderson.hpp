#pragma once

#include <Eigen/Dense>

#include <deque>

namespace acp_phonon {

/// Anderson (Pulay) acceleration of a fixed point x = F(x), driven by the
/// residual f = F(x) - x.
class AndersonMixer {
 public:
  AndersonMixer(int depth, double beta);

  /// Next iterate from the current input x and its residual.
  Eigen::VectorXd update(const Eigen::VectorXd& x, const Eigen::VectorXd& residual);
  void reset();
  int history_size() const { return static_cast<int>(dx_.size()); }

 private:
  int depth_;
  double beta_;
  Eigen::VectorXd last_x_;
  Eigen::VectorXd last_f_;
  bool have_last_ = false;
  std::deque<Eigen::VectorXd> dx_;
  std::deque<Eigen::VectorXd> df_;
};

}  // namespace acp_phonon
