// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "glint/math.h"

namespace glint {

// Spherical Gaussian kernel G(w; axis, sharpness, amplitude)
//   = amplitude * exp(sharpness * (dot(axis, w) - 1)).
struct SgLobe {
    Direction axis{0.0, 1.0, 0.0};
    double sharpness = 1.0;
    Rgb amplitude{1.0};
};

// Adjoint accumulator matching SgLobe's fields.
struct SgLobeAdj {
    Vec3 axis{};
    double sharpness = 0.0;
    Rgb amplitude{};

    SgLobeAdj& operator+=(const SgLobeAdj& o) {
        axis += o.axis;
        sharpness += o.sharpness;
        amplitude += o.amplitude;
        return *this;
    }
};

// K-lobe environment light mixture.
struct SgEnvLight {
    std::vector<SgLobe> lobes;

    int lobe_count() const { return static_cast<int>(lobes.size()); }
    // Free parameters per lobe: axis (3) + sharpness (1) + amplitude (3).
    int parameter_count() const { return lobe_count() * 7; }
};

Rgb sg_eval(const SgLobe& lobe, const Direction& w);
void sg_eval_backward(const SgLobe& lobe, const Direction& w, const Rgb& d_out,
                      SgLobeAdj& d_lobe, Vec3* d_w = nullptr);

// Closed-form integral over the full sphere: 2*pi*mu*(1 - exp(-2*lambda))/lambda,
// with the lambda -> 0 limit (4*pi*mu) taken analytically below 1e-6.
Rgb sg_integral(const SgLobe& lobe);
void sg_integral_backward(const SgLobe& lobe, const Rgb& d_out, SgLobeAdj& d_lobe);

// Exact pointwise product of two SGs, itself an SG.
SgLobe sg_product(const SgLobe& a, const SgLobe& b);
void sg_product_backward(const SgLobe& a, const SgLobe& b, const SgLobe& product,
                         const SgLobeAdj& d_product, SgLobeAdj& d_a, SgLobeAdj& d_b);

// Integral of the pointwise product over the sphere.
Rgb sg_inner(const SgLobe& a, const SgLobe& b);
void sg_inner_backward(const SgLobe& a, const SgLobe& b, const Rgb& d_out,
                       SgLobeAdj& d_a, SgLobeAdj& d_b);

// Single-SG fit of the clamped-cosine foreshortening about normal n.
constexpr double kCosineSgSharpness = 2.133;
constexpr double kCosineSgAmplitude = 1.17;

inline SgLobe cosine_sg(const Direction& n) {
    return {n, kCosineSgSharpness, Rgb(kCosineSgAmplitude)};
}

Rgb sg_env_eval(const SgEnvLight& light, const Direction& w);

}  // namespace glint
