#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace acp_phonon {

// Real-space samples of a scalar function on the grid.
using Field = Eigen::VectorXd;
// N_g x n_cols block of fields; column meaning is defined by the caller.
using Batch = Eigen::MatrixXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition or malformed input.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Self-consistent field iteration failed or left the insulating regime.
class ScfError : public Error {
 public:
  using Error::Error;
};

// An iterative linear/eigen solver did not reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double achieved_residual)
      : Error(what), achieved_residual_(achieved_residual) {}
  double achieved_residual() const { return achieved_residual_; }

 private:
  double achieved_residual_;
};

}  // namespace acp_phonon
