// SPDX-License-Identifier: Apache-2.0

#include "glint/parallel.h"

#include <cstdlib>

namespace glint {

namespace {

int initial_workers() {
    if (const char* env = std::getenv("GLINT_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) {
#ifdef _OPENMP
            omp_set_num_threads(n);
#endif
            return n;
        }
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

int& workers_ref() {
    static int workers = initial_workers();
    return workers;
}

}  // namespace

void set_worker_count(int n) {
    if (n < 1) n = 1;
    workers_ref() = n;
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
}

int worker_count() { return workers_ref(); }

}  // namespace glint
