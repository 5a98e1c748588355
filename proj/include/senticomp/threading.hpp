#pragma once

#include <cstdlib>
#include <string>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace senticomp {

/// Worker cap honoring the SENTICOMP_THREADS environment variable.
/// Every parallel loop in the library requests at most this many threads.
inline int max_threads() {
#if defined(_OPENMP)
  int n = omp_get_max_threads();
#else
  int n = 1;
#endif
  if (const char* env = std::getenv("SENTICOMP_THREADS")) {
    int cap = std::atoi(env);
    if (cap > 0 && cap < n) n = cap;
  }
  return n;
}

inline bool in_parallel_region() {
#if defined(_OPENMP)
  return omp_in_parallel() != 0;
#else
  return false;
#endif
}

}  // namespace senticomp
