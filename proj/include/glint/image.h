// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "glint/math.h"
#include "glint/spherical.h"

namespace glint {

template <typename T>
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int w, int h, T fill = T{})
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    int64_t count() const { return static_cast<int64_t>(width) * height; }
    T& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    T& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }
};

using ImageRgb = Grid<Rgb>;
using GridF = Grid<double>;

struct BilinearFootprint {
    int x0, y0, x1, y1;
    double w00, w01, w10, w11;  // weight at (x0,y0), (x1,y0), (x0,y1), (x1,y1)
};

// Clamp-addressed bilinear footprint for texture-style lookups, uv in [0,1]^2.
BilinearFootprint bilinear_clamp(int width, int height, double u, double v);

// Wrap-in-azimuth, clamp-at-poles footprint for equirect lighting lookups.
BilinearFootprint bilinear_equirect(int width, int height, double u, double v);

inline Rgb gather(const ImageRgb& img, const BilinearFootprint& f) {
    return img.at(f.x0, f.y0) * f.w00 + img.at(f.x1, f.y0) * f.w01 +
           img.at(f.x0, f.y1) * f.w10 + img.at(f.x1, f.y1) * f.w11;
}

inline void scatter(ImageRgb& img, const BilinearFootprint& f, const Rgb& v) {
    img.at(f.x0, f.y0) += v * f.w00;
    img.at(f.x1, f.y0) += v * f.w01;
    img.at(f.x0, f.y1) += v * f.w10;
    img.at(f.x1, f.y1) += v * f.w11;
}

// Latitude-longitude HDR radiance map (linear values, y-up convention).
struct EquirectImage {
    ImageRgb pixels;

    EquirectImage() = default;
    EquirectImage(int w, int h, Rgb fill = Rgb{}) : pixels(w, h, fill) {}

    int width() const { return pixels.width; }
    int height() const { return pixels.height; }

    Direction pixel_direction(int x, int y) const {
        return equirect_to_dir((x + 0.5) / width(), (y + 0.5) / height());
    }

    // Polar angle of a pixel row center; sin of it weights area-correct sums.
    double row_sin_theta(int y) const {
        return std::sin(kPi * (y + 0.5) / height());
    }

    Rgb sample(const Direction& w) const {
        const Vec2 uv = dir_to_equirect(w);
        return gather(pixels, bilinear_equirect(width(), height(), uv.x, uv.y));
    }

    BilinearFootprint footprint(const Direction& w) const {
        const Vec2 uv = dir_to_equirect(w);
        return bilinear_equirect(width(), height(), uv.x, uv.y);
    }
};

// Texture lookup value plus the uv-derivatives needed for adjoints.
struct TextureSample {
    Rgb value;
    Rgb d_du;
    Rgb d_dv;
    BilinearFootprint footprint;
};

TextureSample sample_texture(const ImageRgb& tex, double u, double v);

}  // namespace glint
