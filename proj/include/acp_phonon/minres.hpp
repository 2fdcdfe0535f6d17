#pragma once

#include "acp_phonon/types.hpp"

#include <functional>
#include <vector>

namespace acp_phonon {

/// Applies a symmetric operator to the columns of `in`. `ids` gives the
/// original column index of every column, so column-dependent operators
/// (different shifts per right-hand side) can be expressed.
using ColumnOperator =
    std::function<void(const Batch& in, Batch& out, const std::vector<Index>& ids)>;

struct MinresOptions {
  double tol = 1e-8;   // on ||b - A x|| / ||b|| per column
  int max_iters = 2000;
  int max_restarts = 4;
};

struct MinresStats {
  long column_iterations = 0;   // summed over columns
  int max_iterations = 0;       // worst column
  double max_residual = 0.0;    // worst true relative residual at exit
  bool converged = true;
};

/// Batched MINRES (Paige-Saunders) for A x_j = b_j. Each column carries its
/// own recurrence scalars, converged columns leave the working block, and the
/// true residual is checked at the end with restarts from the current iterate
/// if the recurrence estimate drifted. `x` holds the initial guess on entry.
/// The optional preconditioner must be symmetric positive definite.
MinresStats minres_batch(const ColumnOperator& op, const Batch& b, Batch& x,
                         const MinresOptions& options, const ColumnOperator& precondition = {});

}  // namespace acp_phonon
