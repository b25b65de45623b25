#pragma once

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

// Shared-memory execution of independent sweep/sample jobs. Every parallel
// loop writes results into preallocated slots keyed by job index, so the
// serial and OpenMP paths produce bit-identical output; the serial path is
// kept as the reference implementation for tests and benchmarks.

namespace offres {

enum class ExecPolicy { Serial, OpenMP };

inline int effective_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_thread_count(int n) {
    if (n <= 0) return;
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
}

// honors an explicit request first, then OFFRES_THREADS
inline void configure_threads(int requested) {
    if (requested > 0) {
        set_thread_count(requested);
        return;
    }
    if (const char* env = std::getenv("OFFRES_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) set_thread_count(n);
    }
}

template <typename Fn>
void parallel_for(ExecPolicy policy, int count, Fn&& fn) {
    if (policy == ExecPolicy::OpenMP) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (int i = 0; i < count; ++i) fn(i);
    } else {
        for (int i = 0; i < count; ++i) fn(i);
    }
}

}  // namespace offres
