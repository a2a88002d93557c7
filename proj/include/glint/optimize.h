// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glint/adam.h"
#include "glint/grad.h"
#include "glint/losses.h"

namespace glint {

struct TargetView {
    ImageRgb image;
    GridF mask;
    bool has_mask = false;
    Camera camera;
    std::string image_path, mask_path;
};

struct OptimizeTask {
    std::vector<TargetView> targets;
    std::vector<std::string> free_params;  // selector patterns over the ParamLayout
    int steps = 500;
    double lr_material = 0.005;
    double lr_lighting = 0.01;
    double lr_vertex = 0.001;
    double lr_override = -1.0;  // >= 0 replaces all family rates
    Backend backend = Backend::Sg;
    double subsample = 1.0;    // MC pixel fraction for the image loss
    uint64_t seed = 0;
    LossWeights weights;
    AdamConfig adam;  // lr field unused; family rates above apply
};

struct LossBreakdown {
    double total = 0.0;
    double image = 0.0;      // raw sub-losses, averaged over views
    double mask = 0.0;
    double perceptual = 0.0;
    double laplacian = 0.0;
};

struct TotalLossResult {
    LossBreakdown parts;
    GradRecord grads;
};

// Weighted multi-view loss stack and its gradients: image L1 (optionally on
// a pixel subsample), silhouette IoU, optional registered perceptual term,
// and the Laplacian shape regularizer against the initial mesh.
TotalLossResult total_loss(const Scene& scene, Backend backend,
                           const std::vector<TargetView>& targets,
                           const LossWeights& weights, const Mesh& initial_mesh,
                           double subsample_fraction, uint64_t subsample_salt);

struct OptimizeResult {
    Scene scene;  // best iterate
    std::vector<LossBreakdown> trace;  // entry per step, plus a final entry
    LossBreakdown initial;
    LossBreakdown best;
    ImageRgb before;  // first target view, initial vs fitted parameters
    ImageRgb after;
};

OptimizeResult optimize(const Scene& initial, const OptimizeTask& task);

struct ParsedTask {
    Scene scene;
    OptimizeTask task;
};

// Task file: [scene] path, [targets] image/mask + camera overrides,
// [free] param = <selector> entries, [opt] steps/lr/backend/subsample/seed
// and loss-weight overrides.
ParsedTask parse_task(const std::string& path);

}  // namespace glint
