#include "gridtrade/parallel.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace gridtrade {

bool openmp_enabled() noexcept {
#if defined(_OPENMP)
  return true;
#else
  return false;
#endif
}

int max_threads() noexcept {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

} // namespace gridtrade
