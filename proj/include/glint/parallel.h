// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace glint {

// Worker count is a process-wide knob. Results are required to be identical
// for any thread count: every parallel loop below either writes disjoint
// outputs per index or reduces over fixed-size blocks merged in block order.
void set_worker_count(int n);
int worker_count();

// Pixels per reduction block. Fixed so that floating-point merge order does
// not depend on the worker count.
constexpr int64_t kReduceBlock = 4096;

inline int64_t block_count(int64_t n, int64_t block = kReduceBlock) {
    return (n + block - 1) / block;
}

// Parallel loop over [0, n); body(i) must only touch state owned by index i.
template <typename Body>
void parallel_for(int64_t n, Body&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) body(i);
#else
    for (int64_t i = 0; i < n; ++i) body(i);
#endif
}

// Parallel loop over contiguous index blocks; body(block_index, begin, end).
template <typename Body>
void parallel_for_blocks(int64_t n, int64_t block, Body&& body) {
    const int64_t nb = block_count(n, block);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
    for (int64_t b = 0; b < nb; ++b) {
        const int64_t lo = b * block;
        const int64_t hi = lo + block < n ? lo + block : n;
        body(b, lo, hi);
    }
#else
    for (int64_t b = 0; b < nb; ++b) {
        const int64_t lo = b * block;
        const int64_t hi = lo + block < n ? lo + block : n;
        body(b, lo, hi);
    }
#endif
}

// Deterministic sum reduction: per-block partials accumulated in index order
// inside each block, partials merged in block order. T needs T(), +=.
template <typename T, typename PerIndex>
T block_reduce(int64_t n, PerIndex&& per_index, int64_t block = kReduceBlock) {
    const int64_t nb = block_count(n, block);
    std::vector<T> partials(static_cast<size_t>(nb));
    parallel_for_blocks(n, block, [&](int64_t b, int64_t lo, int64_t hi) {
        T acc{};
        for (int64_t i = lo; i < hi; ++i) acc += per_index(i);
        partials[static_cast<size_t>(b)] = acc;
    });
    T total{};
    for (const T& p : partials) total += p;
    return total;
}

}  // namespace glint
