#pragma once

#include <cstddef>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace depthmatte {

namespace detail {
// Below this many samples per call the fork/join overhead dominates.
inline constexpr std::size_t kParallelThreshold = 1 << 15;
}  // namespace detail

/// Runs fn(y) for every row in [0, rows). Rows must be independent: each call
/// writes only its own output row. Returns after every row is done, so a
/// call is a full barrier between sub-passes.
template <class Fn>
void for_each_row(int rows, std::size_t samples_per_row, Fn&& fn) {
#if defined(_OPENMP)
  const bool parallel = static_cast<std::size_t>(rows) * samples_per_row >= detail::kParallelThreshold;
#pragma omp parallel for schedule(static) if (parallel)
  for (int y = 0; y < rows; ++y) fn(y);
#else
  (void)samples_per_row;
  for (int y = 0; y < rows; ++y) fn(y);
#endif
}

/// Worker count used by for_each_row; 0 restores the runtime default.
inline void set_worker_threads(int n) {
#if defined(_OPENMP)
  static const int default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : default_threads);
#else
  (void)n;
#endif
}

inline int worker_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace depthmatte
