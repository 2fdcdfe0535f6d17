#include "acp_phonon/phonon.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace acp_phonon {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::VectorXd mass_scale(const AtomicConfiguration& config) {
  const int d = config.dim;
  Eigen::VectorXd s(d * config.n_atoms());
  for (Index i = 0; i < config.n_atoms(); ++i)
    for (int a = 0; a < d; ++a) s(i * d + a) = 1.0 / std::sqrt(config.masses(i));
  return s;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& h) { return 0.5 * (h + h.transpose()); }

}  // namespace

std::string to_string(PhononMethod method) {
  switch (method) {
    case PhononMethod::fd: return "fd";
    case PhononMethod::dfpt: return "dfpt";
    case PhononMethod::acp: return "acp";
  }
  return "unknown";
}

PhononMethod parse_method(const std::string& name) {
  if (name == "fd") return PhononMethod::fd;
  if (name == "dfpt") return PhononMethod::dfpt;
  if (name == "acp") return PhononMethod::acp;
  throw InvalidArgument("unknown phonon method '" + name + "' (expected fd, dfpt or acp)");
}

Eigen::MatrixXd assemble_dynamical_matrix(const GroundState& gs, const Batch& g, const Batch& u,
                                          double* asymmetry) {
  const AtomicConfiguration& config = gs.config;
  const int d = config.dim;
  const Index n = d * config.n_atoms();
  if (g.cols() != n || u.cols() != n || g.rows() != gs.grid.size() || u.rows() != g.rows())
    throw InvalidArgument("assemble_dynamical_matrix: shape mismatch");
  const double dv = gs.grid.volume_element();

  Eigen::MatrixXd h = dv * g.transpose() * u;
  if (asymmetry) *asymmetry = (h - h.transpose()).cwiseAbs().maxCoeff();

  const std::vector<Batch> hv = pseudopotential_hessian_diag(config, gs.grid, gs.kernel);
  for (Index i = 0; i < config.n_atoms(); ++i) {
    const Eigen::VectorXd rho_h = hv[i].transpose() * gs.density * dv;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) h(i * d + a, i * d + b) += rho_h(a * d + b);
  }
  h += ion_ion_hessian(config, gs.grid, gs.kernel);

  const Eigen::VectorXd s = mass_scale(config);
  return symmetrized(s.asDiagonal() * h * s.asDiagonal());
}

ResponseMatrixResult dynamical_matrix_response(const GroundState& gs, PhononMethod method,
                                               const ResponseMatrixOptions& options) {
  if (method == PhononMethod::fd)
    throw InvalidArgument("dynamical_matrix_response handles dfpt and acp only");
  ResponseMatrixResult out;
  const Batch g = pseudopotential_gradient(gs.config, gs.grid, gs.kernel);
  auto t0 = Clock::now();
  if (method == PhononMethod::dfpt) {
    out.dyson = dyson_solve_dfpt(gs, gs.kernel, g, options.dyson);
    out.response = out.dyson.u;
  } else {
    out.acp = acp_solve(gs, gs.kernel, g, options.acp);
    out.response = out.acp.u;
  }
  out.response_seconds = seconds_since(t0);
  t0 = Clock::now();
  out.dynamical_matrix = assemble_dynamical_matrix(gs, g, out.response, &out.asymmetry);
  out.assemble_seconds = seconds_since(t0);
  return out;
}

Eigen::MatrixXd dynamical_matrix_fd(const PlaneWaveGrid& grid, const YukawaKernel& kernel,
                                    const AtomicConfiguration& config_in, const FdOptions& options,
                                    const GroundState* reference, int* scf_iterations) {
  if (!(options.delta > 0.0)) throw InvalidArgument("fd delta must be positive");
  const AtomicConfiguration config = config_in.wrapped();
  const int d = config.dim;
  const Index na = config.n_atoms();
  const Index n = d * na;
  ScfGuess warm;
  if (reference) warm = ScfGuess{reference->input_density, reference->orbitals};
  Eigen::MatrixXd h(n, n);
  int iters = 0;

  for (Index col = 0; col < n; ++col) {
    Eigen::VectorXd fcol[2];
    for (int s = 0; s < 2; ++s) {
      AtomicConfiguration shifted = config;
      shifted.positions(col / d, col % d) += s == 0 ? options.delta : -options.delta;
      GroundState gs = [&] {
        try {
          return scf(grid, kernel, shifted, options.scf, reference ? &warm : nullptr);
        } catch (const ScfError& e) {
          throw ScfError("frozen phonon: SCF failed for atom " + std::to_string(col / d) +
                         " direction " + std::to_string(col % d) +
                         (s == 0 ? " (+delta): " : " (-delta): ") + e.what());
        }
      }();
      iters += gs.scf_iterations;
      const Eigen::MatrixXd f = forces(gs);
      fcol[s].resize(n);
      for (Index j = 0; j < na; ++j)
        for (int b = 0; b < d; ++b) fcol[s](j * d + b) = f(j, b);
    }
    // Row (I,a) of the Hessian is -dF / dR_{I,a}.
    h.row(col) = -(fcol[0] - fcol[1]).transpose() / (2.0 * options.delta);
    if (options.verbose) std::fprintf(stderr, "fd column %ld/%ld\n", long(col + 1), long(n));
  }
  if (scf_iterations) *scf_iterations = iters;
  const Eigen::VectorXd s = mass_scale(config);
  return symmetrized(s.asDiagonal() * h * s.asDiagonal());
}

namespace {

Eigen::MatrixXd block_sums(const Eigen::MatrixXd& h, int d) {
  const Index na = h.rows() / d;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(h.rows(), d);
  for (Index j = 0; j < na; ++j) s += h.middleCols(j * d, d);
  return s;
}

void check_square(const Eigen::MatrixXd& d, const AtomicConfiguration& config) {
  const Index n = config.dim * config.n_atoms();
  if (d.rows() != n || d.cols() != n)
    throw InvalidArgument("dynamical matrix does not match the configuration");
}

}  // namespace

double acoustic_sum_rule_violation(const Eigen::MatrixXd& d, const AtomicConfiguration& config) {
  check_square(d, config);
  const Eigen::VectorXd s = mass_scale(config).cwiseInverse();
  return block_sums(s.asDiagonal() * d * s.asDiagonal(), config.dim).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd enforce_acoustic_sum_rule(const Eigen::MatrixXd& d,
                                          const AtomicConfiguration& config) {
  check_square(d, config);
  const int dim = config.dim;
  const Eigen::VectorXd s = mass_scale(config);
  Eigen::MatrixXd h = s.cwiseInverse().asDiagonal() * d * s.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd sums = block_sums(h, dim);
  for (Index i = 0; i < config.n_atoms(); ++i) {
    const Eigen::MatrixXd blk = sums.middleRows(i * dim, dim);
    h.block(i * dim, i * dim, dim, dim) -= 0.5 * (blk + blk.transpose());
  }
  return symmetrized(s.asDiagonal() * h * s.asDiagonal());
}

PhononResult phonon_modes(const Eigen::MatrixXd& d, const std::string& method) {
  if (d.rows() != d.cols()) throw InvalidArgument("dynamical matrix must be square");
  PhononResult out;
  out.method = method;
  out.dynamical_matrix = symmetrized(d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.dynamical_matrix);
  out.eigenvalues = es.eigenvalues();
  out.modes = es.eigenvectors();
  out.frequencies = out.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  out.clamped_count = (out.eigenvalues.array() < 0.0).count();
  return out;
}

Eigen::VectorXd phonon_dos(const Eigen::VectorXd& frequencies, double sigma,
                           const Eigen::VectorXd& omega_grid) {
  if (!(sigma > 0.0)) throw InvalidArgument("DOS smearing must be positive");
  if (frequencies.size() == 0) throw InvalidArgument("DOS needs at least one frequency");
  const double norm =
      1.0 / (static_cast<double>(frequencies.size()) * std::sqrt(2.0 * std::numbers::pi) * sigma);
  Eigen::VectorXd rho(omega_grid.size());
  for (Index p = 0; p < omega_grid.size(); ++p) {
    const Eigen::ArrayXd x = (omega_grid(p) - frequencies.array()) / sigma;
    rho(p) = norm * (-0.5 * x.square()).exp().sum();
  }
  return rho;
}

Eigen::VectorXd dos_omega_grid(const Eigen::VectorXd& frequencies, double sigma, Index points) {
  if (points < 2) throw InvalidArgument("DOS grid needs at least two points");
  const double lo = frequencies.minCoeff() - 6.0 * sigma;
  const double hi = frequencies.maxCoeff() + 6.0 * sigma;
  return Eigen::VectorXd::LinSpaced(points, lo, hi);
}

double spectrum_error(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& candidate,
                      ErrorMetric metric) {
  if (reference.rows() != candidate.rows() || reference.cols() != candidate.cols())
    throw InvalidArgument("spectrum_error: dimension mismatch");
  if (metric == ErrorMetric::linf_freq) {
    std::vector<double> a(reference.data(), reference.data() + reference.size());
    std::vector<double> b(candidate.data(), candidate.data() + candidate.size());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double e = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, std::abs(a[k] - b[k]));
    return e;
  }
  const double ref = reference.norm();
  if (ref == 0.0) throw InvalidArgument("spectrum_error: reference has zero norm");
  return (reference - candidate).norm() / ref;
}

}  // namespace acp_phonon
