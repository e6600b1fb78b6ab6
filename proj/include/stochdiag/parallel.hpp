#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stochdiag {

// Execution policy for the data-parallel kernels. Every parallel kernel has a
// serial twin that produces bit-identical results; Exec::Serial selects it.
enum class Exec { Serial, Parallel };

// Runs body(i) for i in [0, n). Loop iterations must be independent: each
// iteration writes only to its own slots, so results do not depend on the
// thread count or schedule.
template <class F>
void parallel_for(std::size_t n, Exec exec, F&& body) {
    if (exec == Exec::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
#endif
    }
    for (std::size_t i = 0; i < n; ++i) {
        body(i);
    }
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace stochdiag
