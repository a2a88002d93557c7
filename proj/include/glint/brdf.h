// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glint/image.h"
#include "glint/math.h"
#include "glint/sg.h"

namespace glint {

constexpr double kMinRoughness = 0.01;
constexpr double kDielectricSpecularScale = 0.08;

// Simplified isotropic Disney/Cook-Torrance material: spatially-varying
// diffuse albedo plus global specular albedo, roughness and metalness.
// GGX microfacet distribution with alpha = roughness^2, height-correlated
// Smith shadowing, Schlick Fresnel with F0 = (1-m)*0.08*s + m*albedo.
struct BrdfParams {
    ImageRgb albedo_texture{1, 1, Rgb(0.5)};
    double specular = 0.5;
    double roughness = 0.3;
    double metalness = 0.0;

    Rgb albedo_at(double u, double v) const {
        return sample_texture(albedo_texture, u, v).value;
    }
};

struct BrdfSample {
    Direction direction{0.0, 0.0, 1.0};
    double pdf = 0.0;   // solid-angle density; 0 marks a null sample
    Rgb value{};        // f_r at the sampled direction
};

// Adjoints of a scalar objective with respect to the material inputs and the
// shading geometry. The incident direction is treated as fixed.
struct BrdfAdjoint {
    Rgb albedo{};
    double specular = 0.0;
    double roughness = 0.0;
    double metalness = 0.0;
    Vec3 normal{};
    Vec3 view{};
};

Rgb brdf_eval(const BrdfParams& p, const Rgb& albedo, const Direction& n,
              const Direction& wi, const Direction& wo);
void brdf_eval_backward(const BrdfParams& p, const Rgb& albedo, const Direction& n,
                        const Direction& wi, const Direction& wo, const Rgb& d_out,
                        BrdfAdjoint& adj);

double brdf_pdf(const BrdfParams& p, const Rgb& albedo, const Direction& n,
                const Direction& wi, const Direction& wo);
void brdf_pdf_backward(const BrdfParams& p, const Rgb& albedo, const Direction& n,
                       const Direction& wi, const Direction& wo, double d_pdf,
                       BrdfAdjoint& adj);

// One-sample mixture over the diffuse (cosine) and specular (GGX half-vector)
// lobes; the returned pdf is the balance-weighted mixture density.
BrdfSample brdf_sample(const BrdfParams& p, const Rgb& albedo, const Direction& n,
                       const Direction& wo, double u1, double u2, double u3);

// Single monochromatic SG approximating the specular lobe: the GGX NDF as an
// SG in the half-vector domain, warped to the incident domain about the
// mirror direction, scaled by the remaining Cook-Torrance factors at the
// lobe center.
SgLobe specular_to_sg(const BrdfParams& p, const Rgb& albedo, const Direction& n,
                      const Direction& wo);
void specular_to_sg_backward(const BrdfParams& p, const Rgb& albedo, const Direction& n,
                             const Direction& wo, const SgLobeAdj& d_lobe,
                             BrdfAdjoint& adj);

}  // namespace glint
