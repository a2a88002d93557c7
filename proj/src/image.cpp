// SPDX-License-Identifier: Apache-2.0

#include "glint/image.h"

namespace glint {

BilinearFootprint bilinear_clamp(int width, int height, double u, double v) {
    const double px = clamp(u, 0.0, 1.0) * width - 0.5;
    const double py = clamp(v, 0.0, 1.0) * height - 0.5;
    double fx0 = std::floor(px);
    double fy0 = std::floor(py);
    const double ax = px - fx0;
    const double ay = py - fy0;
    BilinearFootprint f;
    f.x0 = static_cast<int>(clamp(fx0, 0.0, width - 1.0));
    f.x1 = static_cast<int>(clamp(fx0 + 1.0, 0.0, width - 1.0));
    f.y0 = static_cast<int>(clamp(fy0, 0.0, height - 1.0));
    f.y1 = static_cast<int>(clamp(fy0 + 1.0, 0.0, height - 1.0));
    f.w00 = (1.0 - ax) * (1.0 - ay);
    f.w01 = ax * (1.0 - ay);
    f.w10 = (1.0 - ax) * ay;
    f.w11 = ax * ay;
    return f;
}

BilinearFootprint bilinear_equirect(int width, int height, double u, double v) {
    const double px = u * width - 0.5;
    const double py = clamp(v, 0.0, 1.0) * height - 0.5;
    double fx0 = std::floor(px);
    double fy0 = std::floor(py);
    const double ax = px - fx0;
    const double ay = py - fy0;
    int x0 = static_cast<int>(fx0);
    x0 %= width;
    if (x0 < 0) x0 += width;
    BilinearFootprint f;
    f.x0 = x0;
    f.x1 = (x0 + 1) % width;  // azimuth wraps
    f.y0 = static_cast<int>(clamp(fy0, 0.0, height - 1.0));
    f.y1 = static_cast<int>(clamp(fy0 + 1.0, 0.0, height - 1.0));  // poles clamp
    f.w00 = (1.0 - ax) * (1.0 - ay);
    f.w01 = ax * (1.0 - ay);
    f.w10 = (1.0 - ax) * ay;
    f.w11 = ax * ay;
    return f;
}

TextureSample sample_texture(const ImageRgb& tex, double u, double v) {
    TextureSample s;
    s.footprint = bilinear_clamp(tex.width, tex.height, u, v);
    const BilinearFootprint& f = s.footprint;
    const Rgb c00 = tex.at(f.x0, f.y0);
    const Rgb c01 = tex.at(f.x1, f.y0);
    const Rgb c10 = tex.at(f.x0, f.y1);
    const Rgb c11 = tex.at(f.x1, f.y1);
    s.value = c00 * f.w00 + c01 * f.w01 + c10 * f.w10 + c11 * f.w11;

    // d/d(uv) of the bilinear blend; the fractional weights recover ax, ay.
    const double ay = f.w10 + f.w11;
    const double ax = f.w01 + f.w11;
    const bool inx = u > 0.0 && u < 1.0;
    const bool iny = v > 0.0 && v < 1.0;
    s.d_du = inx ? ((c01 - c00) * (1.0 - ay) + (c11 - c10) * ay) * tex.width : Rgb{};
    s.d_dv = iny ? ((c10 - c00) * (1.0 - ax) + (c11 - c01) * ax) * tex.height : Rgb{};
    return s;
}

}  // namespace glint
