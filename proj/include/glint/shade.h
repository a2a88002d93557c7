// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "glint/raster.h"
#include "glint/rng.h"
#include "glint/scene.h"

namespace glint {

// Surface record for one covered pixel, unpacked from the G-buffer.
struct PixelSurface {
    Vec3 position;
    Direction normal;   // unit, camera-facing
    Vec2 uv;
    Direction view;     // unit, surface -> eye
};

struct RenderOutput {
    ImageRgb image;        // I = V*C + (1-V)*background
    ImageRgb foreground;   // I_f = V*C
    GridF mask;            // soft silhouette V
    Grid<int32_t> samples; // stochastic samples spent per pixel
};

// Recorded Monte-Carlo sample directions for replay-style differentiation
// and common-random-number finite differences. A zero vector marks a null
// sample (kept so replays preserve the realized estimator exactly).
struct McSampleRecord {
    std::vector<int64_t> offset;  // per-pixel start index, size pixel_count()+1
    std::vector<Vec3> directions;

    std::span<const Vec3> pixel_samples(int64_t p) const {
        return {directions.data() + offset[p], static_cast<size_t>(offset[p + 1] - offset[p])};
    }
};

// Eq.-style BRDF importance-sampled estimator for one pixel; consumes
// exactly 3 uniforms per sample from the stream.
Rgb shade_mc(const PixelSurface& surface, const EquirectImage& env,
             const BrdfParams& brdf, int n_samples, RngStream& stream,
             std::vector<Vec3>* record = nullptr);

// Re-evaluates the estimator on fixed directions (the detached-sample view
// of the same computation).
Rgb shade_mc_replay(const PixelSurface& surface, const EquirectImage& env,
                    const BrdfParams& brdf, std::span<const Vec3> directions);

// Closed-form shading against a K-lobe SG light: diffuse term via the
// cosine-SG inner product, specular term via the warped specular lobe.
Rgb shade_sg(const PixelSurface& surface, const SgEnvLight& light,
             const BrdfParams& brdf);

// Adjoints of shade_sg w.r.t. material, geometry and every light lobe.
// d_albedo inside `brdf_adj` refers to the albedo sampled at the pixel.
void shade_sg_backward(const PixelSurface& surface, const SgEnvLight& light,
                       const BrdfParams& brdf, const Rgb& albedo, const Rgb& d_out,
                       BrdfAdjoint& brdf_adj, std::vector<SgLobeAdj>& light_adj);

// Forward render with recorded intermediates, the input to render_backward.
struct RenderContext {
    Backend backend = Backend::Sg;
    double sigma = kDefaultSoftSigma;
    uint64_t seed = 0;
    int n_samples = 1;
    Camera camera;  // the camera actually rendered (may override the scene's)
    GBuffer gbuffer;
    ImageRgb background;   // per-pixel I_b
    ImageRgb fg_shaded;    // per-pixel C (zero where uncovered or inactive)
    RenderOutput output;
    McSampleRecord mc;
    bool has_mc_record = false;
    std::vector<uint8_t> active;  // empty = all pixels shaded
};

// active: optional per-pixel 0/1 mask restricting which covered pixels are
// shaded (pixel losses over a subsample). replay: reuse recorded directions
// instead of drawing fresh ones (requires matching resolution/sample count).
// camera_override: render through a different view (multi-view targets).
RenderContext render_with_context(const Scene& scene, Backend backend,
                                  bool record_mc = false,
                                  const std::vector<uint8_t>* active = nullptr,
                                  const McSampleRecord* replay = nullptr,
                                  const Camera* camera_override = nullptr);

RenderOutput render(const Scene& scene, Backend backend);

// Single-threaded reference of the full pipeline (testing; bitwise equal).
RenderOutput render_serial(const Scene& scene, Backend backend);

// Uniform without-replacement subsample of the foreground (mask > 0.5);
// ceil(fraction * count), at least 1 when the foreground is nonempty.
// Returned indices are sorted.
std::vector<int64_t> subsample_pixels(const GridF& mask, double fraction,
                                      RngStream stream);

}  // namespace glint
