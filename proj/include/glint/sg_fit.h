// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glint/image.h"
#include "glint/sg.h"

namespace glint {

struct SgFitResult {
    SgEnvLight light;            // best iterate
    double initial_loss = 0.0;
    double final_loss = 0.0;     // loss of the returned mixture
    std::vector<double> trace;   // per-iteration loss, pre-step
};

// Fits a K-lobe SG mixture to an equirect radiance map by Adam descent on a
// sin(theta)-weighted relative L2 objective. Axes start on a Fibonacci
// sphere, sharpness at K/2 (kept positive through softplus), amplitudes at
// the map mean. Returns the best iterate, so final_loss <= initial_loss.
SgFitResult fit_env_sg(const EquirectImage& env, int lobe_count, int iterations,
                       double learning_rate);

// sin-weighted mean squared error between the mixture and the map, divided
// by the map's mean squared value (the quantity fit_env_sg minimizes).
double sg_fit_loss(const SgEnvLight& light, const EquirectImage& env);

// Single-threaded reference for the fused loss+gradient kernel (testing).
double sg_fit_loss_grad_serial(const SgEnvLight& light, const EquirectImage& env,
                               std::vector<SgLobeAdj>& grads);
double sg_fit_loss_grad(const SgEnvLight& light, const EquirectImage& env,
                        std::vector<SgLobeAdj>& grads);

// Rasterizes the mixture at pixel-center directions.
EquirectImage sg_env_to_equirect(const SgEnvLight& light, int width, int height);

}  // namespace glint
