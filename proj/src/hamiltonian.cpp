#include "acp_phonon/hamiltonian.hpp"

namespace acp_phonon {

Hamiltonian::Hamiltonian(PlaneWaveGrid grid, Field potential)
    : grid_(std::move(grid)), potential_(std::move(potential)) {
  if (potential_.size() != grid_.size())
    throw InvalidArgument("potential size does not match the grid");
  kinetic_ = 0.5 * grid_.half_k2();
}

void Hamiltonian::apply(const Eigen::Ref<const Batch>& in, Eigen::Ref<Batch> out) const {
#pragma omp parallel for schedule(static) if (in.cols() > 4)
  for (Index j = 0; j < in.cols(); ++j) {
    grid_.apply_symbol(kinetic_, in.col(j).data(), out.col(j).data());
    out.col(j).array() += potential_.array() * in.col(j).array();
  }
}

Field Hamiltonian::apply(const Field& psi) const {
  Field out(psi.size());
  grid_.apply_symbol(kinetic_, psi.data(), out.data());
  out.array() += potential_.array() * psi.array();
  return out;
}

void Hamiltonian::precondition(const Eigen::Ref<const Batch>& in, Eigen::Ref<Batch> out,
                               double shift) const {
  const Eigen::VectorXd symbol = (kinetic_.array() + shift).inverse();
#pragma omp parallel for schedule(static) if (in.cols() > 4)
  for (Index j = 0; j < in.cols(); ++j)
    grid_.apply_symbol(symbol, in.col(j).data(), out.col(j).data());
}

Field hamiltonian_apply(const PlaneWaveGrid& grid, const Field& potential, const Field& psi) {
  return Hamiltonian(grid, potential).apply(psi);
}

}  // namespace acp_phonon
