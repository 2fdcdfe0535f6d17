#pragma once

namespace acp_phonon {

/// Sets the OpenMP worker count from ACP_PHONON_THREADS (when set) and keeps
/// Eigen's own kernels single-threaded so parallelism stays at the column
/// level and results do not depend on the thread count. Returns the count.
int configure_threads();

}  // namespace acp_phonon
