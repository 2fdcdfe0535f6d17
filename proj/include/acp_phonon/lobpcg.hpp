#pragma once

#include "acp_phonon/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>

namespace acp_phonon {

using BlockOperator = std::function<void(const Eigen::Ref<const Batch>&, Eigen::Ref<Batch>)>;

struct LobpcgOptions {
  double tol = 1e-6;          // on ||A x - lambda x||_2 with ||x||_2 = 1
  int max_iters = 500;
  Index n_converge = -1;      // leading pairs that must converge; -1 means all
  bool require_convergence = true;
  std::uint64_t seed = 0;     // random start when no guess is supplied
};

struct LobpcgResult {
  Eigen::VectorXd values;     // ascending
  Batch vectors;              // orthonormal columns
  Eigen::VectorXd residuals;
  int iterations = 0;
  bool converged = false;
};

/// Lowest n_eigs eigenpairs of a symmetric operator by locally optimal block
/// preconditioned conjugate gradients. The basis [X, W, P] is
/// re-orthonormalized every step (SVQB), which keeps the Rayleigh-Ritz problem
/// a standard symmetric eigenproblem.
///
/// Throws SolverError on non-convergence when options.require_convergence.
LobpcgResult lobpcg(const BlockOperator& apply, Index dimension, Index n_eigs,
                    const LobpcgOptions& options, const BlockOperator& precondition = {},
                    const Batch* initial_guess = nullptr);

}  // namespace acp_phonon
