#pragma once

#include "acp_phonon/acp.hpp"
#include "acp_phonon/ground_state.hpp"
#include "acp_phonon/response.hpp"

#include <string>
#include <vector>

namespace acp_phonon {

enum class PhononMethod { fd, dfpt, acp };

std::string to_string(PhononMethod method);
/// Accepts "fd", "dfpt" or "acp"; throws InvalidArgument otherwise.
PhononMethod parse_method(const std::string& name);

struct ResponseMatrixOptions {
  DysonOptions dyson;
  AcpOptions acp;
};

struct ResponseMatrixResult {
  Eigen::MatrixXd dynamical_matrix;  // symmetrized, mass weighted
  Batch response;                    // U = chi G, column I*d + a
  double asymmetry = 0.0;            // max |H - H^T| before symmetrization
  DysonResult dyson;                 // filled for dfpt
  AcpResult acp;                     // filled for acp
  double response_seconds = 0.0;
  double assemble_seconds = 0.0;
};

/// Mass-weighted Hessian from a response batch U = chi G:
///   H = dV G^T U + delta_IJ int rho d^2 V_I + d^2 E_II,
/// symmetrized. `asymmetry` receives max |H - H^T| before symmetrization.
Eigen::MatrixXd assemble_dynamical_matrix(const GroundState& gs, const Batch& g, const Batch& u,
                                          double* asymmetry = nullptr);

/// Dynamical matrix with the response term from DFPT or ACP.
ResponseMatrixResult dynamical_matrix_response(const GroundState& gs, PhononMethod method,
                                               const ResponseMatrixOptions& options = {});

struct FdOptions {
  double delta = 0.01;
  ScfOptions scf;
  bool verbose = false;
};

/// Frozen-phonon dynamical matrix from central differences of forces, one
/// SCF per displaced configuration. `reference` (the undisplaced ground
/// state) seeds every SCF when given.
Eigen::MatrixXd dynamical_matrix_fd(const PlaneWaveGrid& grid, const YukawaKernel& kernel,
                                    const AtomicConfiguration& config, const FdOptions& options,
                                    const GroundState* reference = nullptr,
                                    int* scf_iterations = nullptr);

struct PhononResult {
  Eigen::MatrixXd dynamical_matrix;
  Eigen::VectorXd eigenvalues;   // of D, ascending, before clamping
  Eigen::VectorXd frequencies;   // sqrt(max(lambda, 0))
  Eigen::MatrixXd modes;         // orthonormal columns
  std::string method;
  Index clamped_count = 0;       // eigenvalues below zero
};

/// Largest |sum_J H_{(I,a),(J,b)}| over (I, a, b), with H the unweighted
/// Hessian recovered from the mass-weighted D.
double acoustic_sum_rule_violation(const Eigen::MatrixXd& d, const AtomicConfiguration& config);

/// Simple acoustic sum rule correction: every diagonal block of the Hessian
/// loses the (symmetrized) sum of its block row, so uniform translations
/// cost no energy. Mass weighting is undone and reapplied around the fix.
Eigen::MatrixXd enforce_acoustic_sum_rule(const Eigen::MatrixXd& d,
                                          const AtomicConfiguration& config);

PhononResult phonon_modes(const Eigen::MatrixXd& d, const std::string& method = "");

/// Gaussian-smeared DOS (1 / n) sum_k delta_sigma(omega - omega_k).
Eigen::VectorXd phonon_dos(const Eigen::VectorXd& frequencies, double sigma,
                           const Eigen::VectorXd& omega_grid);

/// Uniform grid covering [min omega - 6 sigma, max omega + 6 sigma].
Eigen::VectorXd dos_omega_grid(const Eigen::VectorXd& frequencies, double sigma,
                               Index points = 2001);

enum class ErrorMetric { linf_freq, rel_l2_batch };

/// linf_freq: max |a_k - b_k| after sorting both; rel_l2_batch: ||a - b||_F / ||a||_F.
double spectrum_error(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& candidate,
                      ErrorMetric metric);

}  // namespace acp_phonon
