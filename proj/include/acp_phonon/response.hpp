#pragma once

#include "acp_phonon/ground_state.hpp"
#include "acp_phonon/minres.hpp"

#include <vector>

namespace acp_phonon {

struct SternheimerOptions {
  double tol = 1e-8;          // relative residual of the projected system
  int max_iters = 2000;
  bool precondition = false;  // kinetic (|k|^2/2 + 1)^{-1} preconditioner

  void validate() const;
};

/// Work counters accumulated over Sternheimer solves.
struct ResponseStats {
  long solves = 0;
  long column_iterations = 0;
  int max_iterations = 0;
  double max_residual = 0.0;

  void merge(const ResponseStats& other);
};

/// Qv = v - Psi (Psi^T v) dV.
Field project_unoccupied(const GroundState& gs, const Field& v);
Batch project_unoccupied(const GroundState& gs, const Batch& v);

/// Solves Q(shift_j - H)Q zeta_j = Q rhs_j for every column. The projected
/// operator is made definite by adding the occupied projector, which leaves
/// the range(Q) solution unchanged. Throws SolverError on failure.
Batch sternheimer_solve_batch(const GroundState& gs, const Eigen::VectorXd& shifts,
                              const Batch& rhs, const SternheimerOptions& options = {},
                              const Batch* guess = nullptr, ResponseStats* stats = nullptr);
Field sternheimer_solve(const GroundState& gs, double shift, const Field& rhs,
                        const SternheimerOptions& options = {});

/// Previous Sternheimer solutions, one N_g x N_e block per right-hand side column.
struct Chi0WarmStart {
  std::vector<Batch> zeta;
  bool enabled = true;
};

/// chi0 g = 2 sum_i psi_i (.) zeta_i with zeta_i the Sternheimer solution for
/// shift eps_i and right-hand side psi_i (.) g.
Field apply_chi0(const GroundState& gs, const Field& g, const SternheimerOptions& options = {});
Batch apply_chi0_batch(const GroundState& gs, const Batch& g,
                       const SternheimerOptions& options = {}, ResponseStats* stats = nullptr,
                       Chi0WarmStart* warm = nullptr);

struct DysonOptions {
  double tol = 1e-7;             // ||F(U) - U|| / ||chi0 G||, stacked Frobenius
  int max_iters = 200;
  int history = 10;
  double beta = 0.5;
  double coupling = 1.0;         // scales the kernel; 0 decouples the equation
  bool warm_start = true;        // reuse Sternheimer solutions between iterations
  double warm_start_bytes = 2.5e9;
  SternheimerOptions sternheimer;
  bool verbose = false;

  void validate() const;
};

struct DysonResult {
  Batch u;
  std::vector<double> residuals;
  int iterations = 0;
  bool warm_start_used = false;
  ResponseStats stats;
};

/// U = chi G from the fixed point U = chi0 (G + K U), Anderson-accelerated on
/// the stacked batch. Throws SolverError when the tolerance is not reached.
DysonResult dyson_solve_dfpt(const GroundState& gs, const YukawaKernel& kernel, const Batch& g,
                             const DysonOptions& options = {});

}  // namespace acp_phonon
