// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glint/math.h"

namespace glint {

// Latitude-longitude convention used everywhere: y is world-up, azimuth is
// measured from -z toward +x, so u=0.5 looks down -z and v runs from the
// north pole (v=0) to the south pole (v->1).

inline Vec2 dir_to_equirect(const Direction& w) {
    // Azimuth is undefined at the poles; pin it to the seam center.
    const double phi = (w.x == 0.0 && w.z == 0.0) ? 0.0 : std::atan2(w.x, -w.z);
    const double theta = std::acos(clamp(w.y, -1.0, 1.0));  // [0, pi]
    double u = (phi + kPi) / kTwoPi;
    double v = theta / kPi;
    if (u >= 1.0) u -= 1.0;
    if (v >= 1.0) v = std::nextafter(1.0, 0.0);
    return {u, v};
}

inline Direction equirect_to_dir(double u, double v) {
    u -= std::floor(u);  // wrap azimuth
    v = clamp(v, 0.0, 1.0);
    const double phi = u * kTwoPi - kPi;
    const double theta = v * kPi;
    const double st = std::sin(theta);
    return {st * std::sin(phi), std::cos(theta), -st * std::cos(phi)};
}

// Deterministic, roughly uniform set of K axes (Fibonacci spiral; pole axis
// y). The constant azimuth offset keeps every axis away from the exact
// coordinate-plane branch points of tangent_basis.
inline Direction fibonacci_direction(int k, int count) {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    const double y = 1.0 - 2.0 * (k + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double phi = golden * k + 0.5;
    return {r * std::cos(phi), y, r * std::sin(phi)};
}

}  // namespace glint
