// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "glint/math.h"
#include "glint/parallel.h"
#include "glint/spherical.h"

namespace glint {

// Full-sphere quadrature on an equirect grid of level^2 x 2*level^2 samples.
// Each latitude band uses the exact integral of sin(theta) across the band as
// its weight, so constants integrate exactly at every level; the remaining
// error is O(1/level^4) on smooth integrands. Deterministic: per-row partial
// sums are merged in row order regardless of worker count.
template <typename F>
Rgb sphere_quadrature(F&& f, int level) {
    const int64_t rows = static_cast<int64_t>(level) * level;
    const int64_t cols = 2 * rows;
    const double dphi = kTwoPi / static_cast<double>(cols);

    std::vector<Rgb> partial(static_cast<size_t>(rows));
    parallel_for(rows, [&](int64_t i) {
        const double theta_lo = kPi * static_cast<double>(i) / rows;
        const double theta_hi = kPi * static_cast<double>(i + 1) / rows;
        const double theta = 0.5 * (theta_lo + theta_hi);
        const double band = std::cos(theta_lo) - std::cos(theta_hi);
        const double st = std::sin(theta);
        const double ct = std::cos(theta);
        Rgb acc;
        for (int64_t j = 0; j < cols; ++j) {
            const double phi = -kPi + dphi * (j + 0.5);
            const Direction w(st * std::sin(phi), ct, -st * std::cos(phi));
            acc += f(w);
        }
        partial[static_cast<size_t>(i)] = acc * (band * dphi);
    });

    Rgb total;
    for (const Rgb& p : partial) total += p;
    return total;
}

}  // namespace glint
