#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>

#include "nnc/types.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nnc {

// Runs f(i) for i in [0, n). Under Exec::Parallel every index is handled by
// exactly one thread and f may only write per-index outputs, so both paths
// produce bit-identical results. Exceptions thrown by f are captured and
// rethrown on the calling thread (first one wins).
template <class F>
void parallel_for(std::size_t n, Exec exec, F&& f) {
#ifdef _OPENMP
  if (exec == Exec::Parallel) {
    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      try {
        f(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical(nnc_parallel_for_error)
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) f(i);
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace nnc
