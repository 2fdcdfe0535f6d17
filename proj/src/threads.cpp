#include "acp_phonon/threads.hpp"

#include "acp_phonon/types.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

namespace acp_phonon {

int configure_threads() {
  Eigen::setNbThreads(1);
  if (const char* env = std::getenv("ACP_PHONON_THREADS"); env && *env) {
    int n = 0;
    try {
      n = std::stoi(env);
    } catch (const std::exception&) {
      throw InvalidArgument(std::string("ACP_PHONON_THREADS is not an integer: ") + env);
    }
    if (n < 1) throw InvalidArgument("ACP_PHONON_THREADS must be >= 1");
    omp_set_num_threads(n);
  }
  return omp_get_max_threads();
}

}  // namespace acp_phonon
