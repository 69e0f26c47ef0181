#pragma once

#include <cstddef>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace motionorder {

/// Selects the reference serial loop or the OpenMP kernel. Both paths must produce
/// bit-identical results; the serial one is what the tests compare against.
enum class Exec { serial, parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

/// Runs body(i) for i in [0, n). The first exception thrown by any iteration is
/// rethrown on the calling thread after the loop finishes.
template <typename Body>
void parallel_for(Exec exec, std::size_t n, Body&& body) {
  if (exec == Exec::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(motionorder_parallel_for_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

/// Static-schedule variant for short uniform inner loops (gradient rows).
template <typename Body>
void parallel_for_static(Exec exec, std::size_t n, Body&& body) {
  if (exec == Exec::serial || n < 64) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
}

} // namespace motionorder
