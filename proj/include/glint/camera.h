// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

#include "glint/math.h"

namespace glint {

struct Camera {
    Vec3 eye{0.0, 0.0, 3.0};
    Vec3 lookat{0.0, 0.0, 0.0};
    Direction up{0.0, 1.0, 0.0};
    double vertical_fov = 45.0 * kPi / 180.0;  // radians
    int width = 256;
    int height = 256;
};

// Precomputed viewing frame. Screen coordinates have +x right, +y down,
// pixel centers at (i + 0.5, j + 0.5); depth is distance along the forward
// axis (positive in front of the eye).
struct CameraFrame {
    Vec3 eye;
    Direction forward, right, upv;
    double tan_half_v, tan_half_h;
    int width, height;

    explicit CameraFrame(const Camera& cam);

    struct Projected {
        Vec2 screen;
        double depth = 0.0;
    };

    Projected project(const Vec3& v) const;

    // Adjoint of project(): d_screen/d_depth pulled back to the world point.
    Vec3 project_backward(const Vec3& v, const Vec2& d_screen, double d_depth) const;

    // Normalized direction from the eye through pixel center (i, j).
    Direction pixel_ray(int i, int j) const;

    Vec2 screen_to_ndc(const Vec2& s) const {
        return {2.0 * s.x / width - 1.0, 1.0 - 2.0 * s.y / height};
    }
};

}  // namespace glint
