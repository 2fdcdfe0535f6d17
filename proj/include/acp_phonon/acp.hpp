#pragma once

#include "acp_phonon/ground_state.hpp"
#include "acp_phonon/response.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace acp_phonon {

struct AcpOptions {
  int n_cheb = 20;
  double id_threshold = 1e-3;     // relative pivot cutoff of the pivoted QR
  int srft_oversampling = 8;      // r, sketch keeps r * N_e orbital-pair columns
  Index fixed_rank = 0;           // > 0 overrides the threshold with a fixed N_mu
  int max_outer_iters = 4;
  double outer_tol = 1e-6;        // ||U^k - U^{k-1}|| / ||U^k||
  std::uint64_t seed = 0;
  bool warm_start = true;         // reuse Sternheimer solutions at repeated grid rows
  double warm_start_bytes = 2.5e9;
  bool keep_iterates = false;     // store U after every outer iteration
  SternheimerOptions sternheimer;
  bool verbose = false;

  void validate() const;
};

/// Chebyshev points of the first kind mapped to [lo, hi], in the order
/// (lo+hi)/2 + (lo-hi)/2 cos(pi (c - 1/2) / n).
Eigen::VectorXd chebyshev_nodes(double lo, double hi, int n);

/// Lagrange basis weights l_c(eps) on distinct nodes.
Eigen::VectorXd lagrange_coefficients(const Eigen::VectorXd& nodes, double eps);

struct InterpolativeDecomposition {
  std::vector<Index> selected_rows;   // r_mu
  Batch interpolation_vectors;        // Xi, N_g x N_mu, identity on selected rows
  Eigen::VectorXd pivots;             // |R_kk| for the retained steps (and the next, if any)
  double threshold = 0.0;
  std::uint64_t seed = 0;
  Index sketch_width = 0;
  bool rank_saturated = false;        // threshold not reached before the sketch ran out

  Index rank() const { return static_cast<Index>(selected_rows.size()); }
};

/// Row interpolative decomposition A ~ Xi A(rows, :) by truncated
/// column-pivoted Householder QR of A^T.
InterpolativeDecomposition row_interpolative_decomposition(const Eigen::MatrixXd& a,
                                                           double threshold,
                                                           Index fixed_rank = 0);

/// Randomized row ID of M_ij = psi_i (.) g_j without forming M: the columns
/// of G are sketched by random phases, a DFT over the column index and a
/// random subsample, and every sketched row of M is the Kronecker product of
/// the sketched G row with the orbital row. The complex sketch is split into
/// real and imaginary parts before the pivoted QR.
InterpolativeDecomposition randomized_id(const GroundState& gs, const Batch& g,
                                         const AcpOptions& options);

/// chi0 restricted to the span it was adapted to: chi0~ g = W g(rows).
struct CompressedPolarizability {
  Batch w;                            // N_g x N_mu
  std::vector<Index> selected_rows;
  Eigen::VectorXd chebyshev_nodes;
  InterpolativeDecomposition id;

  Index rank() const { return w.cols(); }
  Batch apply(const Batch& g) const;
  Batch sample(const Batch& g) const;
};

/// Sternheimer solutions per selected grid row, reused across outer iterations.
struct AcpWarmStart {
  std::unordered_map<Index, Batch> zeta;  // N_g x N_c per row
  int n_cheb = 0;
  bool enabled = true;
};

struct AcpTimings {
  double id = 0.0;
  double sternheimer = 0.0;
  double assemble = 0.0;
  double update = 0.0;
};

CompressedPolarizability build_compressed_chi0(const GroundState& gs, const Batch& g,
                                               const AcpOptions& options,
                                               ResponseStats* stats = nullptr,
                                               AcpWarmStart* warm = nullptr,
                                               AcpTimings* timings = nullptr);

struct AcpResult {
  Batch u;                           // chi G
  std::vector<Index> n_mu;           // per outer iteration
  std::vector<double> updates;       // relative change of U~ per outer iteration
  std::vector<Batch> iterates;       // U after each outer iteration, if requested
  std::vector<std::uint64_t> seeds;  // sketch seed per outer iteration
  int iterations = 0;
  bool converged = false;
  bool rank_saturated = false;
  ResponseStats stats;
  AcpTimings timings;
};

/// chi G through the change of variable U~ = U + B, B = K^{-1} G. Every outer
/// iteration recompresses chi0 on K U~ and applies
///   U~ <- B + W (I - (K W)(rows, :))^{-1} G(rows, :).
AcpResult acp_solve(const GroundState& gs, const YukawaKernel& kernel, const Batch& g,
                    const AcpOptions& options = {});

}  // namespace acp_phonon
