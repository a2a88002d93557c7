// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "glint/image.h"
#include "glint/mesh.h"

namespace glint {

struct LossWeights {
    double image = 20.0;
    double mask = 5.0;
    double perceptual = 0.5;
    double laplacian = 5.0;
};

// Mean absolute difference over the pixel set (all pixels when null), per
// channel. Throws on dimension mismatch.
double loss_image_l1(const ImageRgb& a, const ImageRgb& b,
                     const std::vector<int64_t>* pixels = nullptr);
// d(loss)/d(a), the subgradient sign(a - b) scaled by the mean weight.
ImageRgb loss_image_l1_backward(const ImageRgb& a, const ImageRgb& b,
                                const std::vector<int64_t>* pixels = nullptr);

// 1 - intersection/union over soft masks in [0,1].
double loss_iou(const GridF& v, const GridF& v_ref);
GridF loss_iou_backward(const GridF& v, const GridF& v_ref);  // d/d(v)

// Mean squared change of the uniform-Laplacian differentials between two
// meshes of identical topology.
double loss_laplacian(const Mesh& current, const Mesh& initial);
std::vector<Vec3> loss_laplacian_backward(const Mesh& current, const Mesh& initial);

// 1 - <a,b> / (|a| |b|); scale-invariant. Throws if either input has zero
// norm or shapes differ.
double metric_ncc(const ImageRgb& a, const ImageRgb& b);
double metric_ncc(const GridF& a, const GridF& b);
double metric_ncc_masked(const ImageRgb& a, const ImageRgb& b,
                         const std::vector<uint8_t>& mask);

// Optional perceptual loss plug-in: scalar value plus d(value)/d(render)
// accumulated into the third argument. None is registered by default.
using PerceptualLoss =
    std::function<double(const ImageRgb& render, const ImageRgb& target, ImageRgb& d_render)>;

void register_perceptual_loss(PerceptualLoss fn);
void clear_perceptual_loss();
const PerceptualLoss* registered_perceptual_loss();

}  // namespace glint
