#include "acp_phonon/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace acp_phonon {

namespace detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

// FFTW's planner is not thread-safe, execution with the new-array interface is.
class FftPlans {
 public:
  explicit FftPlans(const std::vector<int>& counts) {
    std::lock_guard lock(planner_mutex());
    Index n = 1;
    for (int c : counts) n *= c;
    Index nh = n / counts.back() * (counts.back() / 2 + 1);
    double* r = fftw_alloc_real(n);
    fftw_complex* c = fftw_alloc_complex(nh);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    if (counts.size() == 1) {
      forward_ = fftw_plan_dft_r2c_1d(counts[0], r, c, flags);
      backward_ = fftw_plan_dft_c2r_1d(counts[0], c, r, flags | FFTW_DESTROY_INPUT);
    } else {
      forward_ = fftw_plan_dft_r2c_2d(counts[0], counts[1], r, c, flags);
      backward_ = fftw_plan_dft_c2r_2d(counts[0], counts[1], c, r, flags | FFTW_DESTROY_INPUT);
    }
    fftw_free(r);
    fftw_free(c);
  }
  ~FftPlans() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  void forward(const double* in, std::complex<double>* out) const {
    fftw_execute_dft_r2c(forward_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  }
  void backward(std::complex<double>* in, double* out) const {
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(in), out);
  }

 private:
  fftw_plan forward_;
  fftw_plan backward_;
};

}  // namespace detail

namespace {

// Signed wavenumber index for FFT position m of an n-point axis.
int signed_mode(int m, int n) { return m < n / 2 ? m : m - n; }

}  // namespace

PlaneWaveGrid::PlaneWaveGrid(int dim, std::vector<double> cell_lengths,
                             std::vector<int> points_per_dim)
    : dim_(dim), lengths_(std::move(cell_lengths)), counts_(std::move(points_per_dim)) {
  if (dim_ != 1 && dim_ != 2) throw InvalidArgument("grid dimension must be 1 or 2");
  if (static_cast<int>(lengths_.size()) != dim_ || static_cast<int>(counts_.size()) != dim_)
    throw InvalidArgument("grid lengths/counts must have one entry per dimension");
  size_ = 1;
  volume_ = 1.0;
  for (int a = 0; a < dim_; ++a) {
    if (!(lengths_[a] > 0.0)) throw InvalidArgument("cell lengths must be positive");
    if (counts_[a] < 4 || counts_[a] % 2 != 0)
      throw InvalidArgument("grid point counts must be even and at least 4, got " +
                            std::to_string(counts_[a]));
    size_ *= counts_[a];
    volume_ *= lengths_[a];
  }

  const int nlast = counts_.back();
  const int hlast = nlast / 2 + 1;
  const int nfirst = dim_ == 2 ? counts_[0] : 1;
  const Index nh = static_cast<Index>(nfirst) * hlast;
  half_k_.resize(nh, dim_);
  half_k2_.resize(nh);
  half_mult_.resize(nh);
  half_nyquist_.assign(nh, false);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int m0 = 0; m0 < nfirst; ++m0) {
    for (int m1 = 0; m1 < hlast; ++m1) {
      const Index q = static_cast<Index>(m0) * hlast + m1;
      bool nyq = (m1 == nlast / 2);
      if (dim_ == 2) {
        half_k_(q, 0) = two_pi / lengths_[0] * signed_mode(m0, counts_[0]);
        half_k_(q, 1) = two_pi / lengths_[1] * m1;
        nyq = nyq || (m0 == counts_[0] / 2);
      } else {
        half_k_(q, 0) = two_pi / lengths_[0] * m1;
      }
      half_k2_(q) = half_k_.row(q).squaredNorm();
      half_mult_(q) = (m1 == 0 || m1 == nlast / 2) ? 1.0 : 2.0;
      half_nyquist_[q] = nyq;
    }
  }
  plans_ = std::make_shared<const detail::FftPlans>(counts_);
}

Eigen::MatrixXd PlaneWaveGrid::coordinates() const {
  Eigen::MatrixXd x(size_, dim_);
  for (Index p = 0; p < size_; ++p) {
    if (dim_ == 1) {
      x(p, 0) = spacing(0) * static_cast<double>(p);
    } else {
      x(p, 0) = spacing(0) * static_cast<double>(p / counts_[1]);
      x(p, 1) = spacing(1) * static_cast<double>(p % counts_[1]);
    }
  }
  return x;
}

Eigen::MatrixXd PlaneWaveGrid::frequencies() const {
  Eigen::MatrixXd k(size_, dim_);
  const double two_pi = 2.0 * std::numbers::pi;
  for (Index p = 0; p < size_; ++p) {
    if (dim_ == 1) {
      k(p, 0) = two_pi / lengths_[0] * signed_mode(static_cast<int>(p), counts_[0]);
    } else {
      k(p, 0) = two_pi / lengths_[0] * signed_mode(static_cast<int>(p / counts_[1]), counts_[0]);
      k(p, 1) = two_pi / lengths_[1] * signed_mode(static_cast<int>(p % counts_[1]), counts_[1]);
    }
  }
  return k;
}

void PlaneWaveGrid::forward(const double* in, std::complex<double>* out) const {
  plans_->forward(in, out);
}

void PlaneWaveGrid::backward(std::complex<double>* in, double* out) const {
  plans_->backward(in, out);
}

Eigen::VectorXcd PlaneWaveGrid::coefficients(const Field& f) const {
  Eigen::VectorXcd c(spectrum_size());
  forward(f.data(), c.data());
  c /= static_cast<double>(size_);
  return c;
}

Field PlaneWaveGrid::synthesize(const Eigen::VectorXcd& c) const {
  Eigen::VectorXcd scratch = c;
  Field f(size_);
  backward(scratch.data(), f.data());
  return f;
}

void PlaneWaveGrid::apply_symbol(const Eigen::VectorXd& symbol, const double* in,
                                 double* out) const {
  Eigen::VectorXcd spec(spectrum_size());
  forward(in, spec.data());
  const double norm = 1.0 / static_cast<double>(size_);
  for (Index q = 0; q < spec.size(); ++q) spec(q) *= symbol(q) * norm;
  backward(spec.data(), out);
}

Field PlaneWaveGrid::apply_symbol(const Eigen::VectorXd& symbol, const Field& f) const {
  Field out(size_);
  apply_symbol(symbol, f.data(), out.data());
  return out;
}

Batch PlaneWaveGrid::apply_symbol(const Eigen::VectorXd& symbol, const Batch& f) const {
  Batch out(size_, f.cols());
#pragma omp parallel for schedule(static) if (f.cols() > 8)
  for (Index j = 0; j < f.cols(); ++j) apply_symbol(symbol, f.col(j).data(), out.col(j).data());
  return out;
}

PlaneWaveGrid build_grid(int dim, std::vector<double> cell_lengths, std::vector<int> points_per_dim) {
  return PlaneWaveGrid(dim, std::move(cell_lengths), std::move(points_per_dim));
}

PlaneWaveGrid grid_for_cell(const std::vector<double>& cell_lengths, double max_spacing) {
  if (!(max_spacing > 0.0)) throw InvalidArgument("grid spacing must be positive");
  std::vector<int> counts;
  for (double L : cell_lengths) {
    // Tolerate round-off when L is an exact multiple of the spacing.
    int half = static_cast<int>(std::ceil(L / (2.0 * max_spacing) - 1e-9));
    counts.push_back(std::max(2, half) * 2);
  }
  return PlaneWaveGrid(static_cast<int>(cell_lengths.size()), cell_lengths, counts);
}

double integrate(const PlaneWaveGrid& grid, const Field& f) {
  return f.sum() * grid.volume_element();
}

double inner(const PlaneWaveGrid& grid, const Field& f, const Field& g) {
  return f.dot(g) * grid.volume_element();
}

}  // namespace acp_phonon
