// SPDX-License-Identifier: Apache-2.0

#include "glint/camera.h"

namespace glint {

CameraFrame::CameraFrame(const Camera& cam) {
    if (!(cam.vertical_fov > 0.0 && cam.vertical_fov < kPi))
        throw std::runtime_error("camera: vertical fov must be in (0, pi)");
    const Vec3 to_target = cam.lookat - cam.eye;
    if (length_squared(to_target) < 1e-24)
        throw std::runtime_error("camera: eye and lookat coincide");
    eye = cam.eye;
    forward = normalize(to_target);
    const Vec3 side = cross(forward, cam.up);
    if (length_squared(side) < 1e-12)
        throw std::runtime_error("camera: up is parallel to the view direction");
    right = normalize(side);
    upv = cross(right, forward);
    tan_half_v = std::tan(0.5 * cam.vertical_fov);
    tan_half_h = tan_half_v * static_cast<double>(cam.width) / cam.height;
    width = cam.width;
    height = cam.height;
}

CameraFrame::Projected CameraFrame::project(const Vec3& v) const {
    const Vec3 rel = v - eye;
    Projected out;
    out.depth = dot(rel, forward);
    const double cx = dot(rel, right);
    const double cy = dot(rel, upv);
    const double ndc_x = cx / (out.depth * tan_half_h);
    const double ndc_y = cy / (out.depth * tan_half_v);
    out.screen = {(ndc_x + 1.0) * 0.5 * width, (1.0 - ndc_y) * 0.5 * height};
    return out;
}

Vec3 CameraFrame::project_backward(const Vec3& v, const Vec2& d_screen,
                                   double d_depth) const {
    const Vec3 rel = v - eye;
    const double depth = dot(rel, forward);
    const double cx = dot(rel, right);
    const double cy = dot(rel, upv);

    const double d_ndc_x = d_screen.x * 0.5 * width;
    const double d_ndc_y = -d_screen.y * 0.5 * height;

    const double d_cx = d_ndc_x / (depth * tan_half_h);
    const double d_cy = d_ndc_y / (depth * tan_half_v);
    double dd = d_depth;
    dd -= d_ndc_x * cx / (depth * depth * tan_half_h);
    dd -= d_ndc_y * cy / (depth * depth * tan_half_v);

    return d_cx * right + d_cy * upv + dd * forward;
}

Direction CameraFrame::pixel_ray(int i, int j) const {
    const double ndc_x = 2.0 * (i + 0.5) / width - 1.0;
    const double ndc_y = 1.0 - 2.0 * (j + 0.5) / height;
    return normalize(forward + ndc_x * tan_half_h * right + ndc_y * tan_half_v * upv);
}

}  // namespace glint
