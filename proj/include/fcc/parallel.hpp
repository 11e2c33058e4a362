#pragma once

#include <cstddef>

#ifdef FCC_HAVE_OPENMP
#include <omp.h>
#endif

namespace fcc {

// How batch kernels fan out. threads == 1 selects the plain loop; 0 means
// "all available cores". Every parallel kernel in this library writes to
// per-item slots (or reduces in a fixed order), so results are bit-identical
// for every thread count — the policy only changes wall time.
struct ExecPolicy {
    int threads = 0;

    static ExecPolicy serial() { return ExecPolicy{1}; }
};

inline int effective_threads(const ExecPolicy& policy) {
#ifdef FCC_HAVE_OPENMP
    if (policy.threads <= 0) return omp_get_max_threads();
    return policy.threads;
#else
    (void)policy;
    return 1;
#endif
}

// Runs f(i) for i in [0, n). Independent iterations only; f must confine its
// writes to slot i of any shared output.
template <class F>
void parallel_for(const ExecPolicy& policy, std::size_t n, F&& f) {
    const int threads = effective_threads(policy);
#ifdef FCC_HAVE_OPENMP
    if (threads > 1) {
#pragma omp parallel for schedule(static) num_threads(threads)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            f(static_cast<std::size_t>(i));
        }
        return;
    }
#endif
    (void)threads;
    for (std::size_t i = 0; i < n; ++i) f(i);
}

} // namespace fcc
