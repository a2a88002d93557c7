// SPDX-License-Identifier: Apache-2.0

#include "glint/losses.h"

#include <cmath>
#include <stdexcept>

namespace glint {

namespace {

void check_same_shape(int64_t a, int64_t b, const char* what) {
    if (a != b) throw std::runtime_error(std::string(what) + ": dimension mismatch");
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

PerceptualLoss g_perceptual;

}  // namespace

double loss_image_l1(const ImageRgb& a, const ImageRgb& b,
                     const std::vector<int64_t>* pixels) {
    check_same_shape(a.count(), b.count(), "loss_image_l1");
    double s = 0.0;
    if (pixels) {
        if (pixels->empty()) return 0.0;
        for (int64_t p : *pixels) s += sum(abs(a[p] - b[p]));
        return s / (3.0 * static_cast<double>(pixels->size()));
    }
    for (int64_t p = 0; p < a.count(); ++p) s += sum(abs(a[p] - b[p]));
    return s / (3.0 * static_cast<double>(a.count()));
}

ImageRgb loss_image_l1_backward(const ImageRgb& a, const ImageRgb& b,
                                const std::vector<int64_t>* pixels) {
    check_same_shape(a.count(), b.count(), "loss_image_l1");
    ImageRgb d(a.width, a.height);
    const double w = pixels ? (pixels->empty() ? 0.0 : 1.0 / (3.0 * pixels->size()))
                            : 1.0 / (3.0 * a.count());
    auto put = [&](int64_t p) {
        const Rgb diff = a[p] - b[p];
        d[p] = Rgb(sign(diff.r), sign(diff.g), sign(diff.b)) * w;
    };
    if (pixels) {
        for (int64_t p : *pixels) put(p);
    } else {
        for (int64_t p = 0; p < a.count(); ++p) put(p);
    }
    return d;
}

double loss_iou(const GridF& v, const GridF& v_ref) {
    check_same_shape(v.count(), v_ref.count(), "loss_iou");
    double inter = 0.0, uni = 0.0;
    for (int64_t p = 0; p < v.count(); ++p) {
        inter += v_ref[p] * v[p];
        uni += v_ref[p] + v[p] - v_ref[p] * v[p];
    }
    if (uni <= 0.0) return 0.0;  // both masks empty: perfect overlap
    return 1.0 - inter / uni;
}

GridF loss_iou_backward(const GridF& v, const GridF& v_ref) {
    check_same_shape(v.count(), v_ref.count(), "loss_iou");
    double inter = 0.0, uni = 0.0;
    for (int64_t p = 0; p < v.count(); ++p) {
        inter += v_ref[p] * v[p];
        uni += v_ref[p] + v[p] - v_ref[p] * v[p];
    }
    GridF d(v.width, v.height);
    if (uni <= 0.0) return d;
    for (int64_t p = 0; p < v.count(); ++p) {
        // d/dv of 1 - inter/union.
        d[p] = -(v_ref[p] * uni - inter * (1.0 - v_ref[p])) / (uni * uni);
    }
    return d;
}

double loss_laplacian(const Mesh& current, const Mesh& initial) {
    if (current.vertex_count() != initial.vertex_count() ||
        current.triangles != initial.triangles)
        throw std::runtime_error("loss_laplacian: topology mismatch");
    double s = 0.0;
    for (int vtx = 0; vtx < current.vertex_count(); ++vtx) {
        const Vec3 d = current.laplacian_delta(vtx) - initial.laplacian_delta(vtx);
        s += length_squared(d);
    }
    return s / static_cast<double>(current.vertex_count());
}

std::vector<Vec3> loss_laplacian_backward(const Mesh& current, const Mesh& initial) {
    if (current.vertex_count() != initial.vertex_count() ||
        current.triangles != initial.triangles)
        throw std::runtime_error("loss_laplacian: topology mismatch");
    const int nv = current.vertex_count();
    std::vector<Vec3> grad(nv);
    const double w = 2.0 / static_cast<double>(nv);
    for (int vtx = 0; vtx < nv; ++vtx) {
        const Vec3 resid = current.laplacian_delta(vtx) - initial.laplacian_delta(vtx);
        grad[vtx] += w * resid;
        const auto& nb = current.adjacency[vtx];
        if (!nb.empty()) {
            const Vec3 spread = w / static_cast<double>(nb.size()) * resid;
            for (int j : nb) grad[j] -= spread;
        }
    }
    return grad;
}

namespace {

double ncc_impl(const double* a, const double* b, int64_t n, const uint8_t* mask,
                int64_t mask_stride) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        if (mask && !mask[i / mask_stride]) continue;
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (!(aa > 0.0) || !(bb > 0.0))
        throw std::runtime_error("metric_ncc: zero-norm input");
    return 1.0 - ab / (std::sqrt(aa) * std::sqrt(bb));
}

}  // namespace

double metric_ncc(const ImageRgb& a, const ImageRgb& b) {
    check_same_shape(a.count(), b.count(), "metric_ncc");
    return ncc_impl(&a.data[0].r, &b.data[0].r, 3 * a.count(), nullptr, 1);
}

double metric_ncc(const GridF& a, const GridF& b) {
    check_same_shape(a.count(), b.count(), "metric_ncc");
    return ncc_impl(a.data.data(), b.data.data(), a.count(), nullptr, 1);
}

double metric_ncc_masked(const ImageRgb& a, const ImageRgb& b,
                         const std::vector<uint8_t>& mask) {
    check_same_shape(a.count(), b.count(), "metric_ncc");
    check_same_shape(a.count(), static_cast<int64_t>(mask.size()), "metric_ncc mask");
    return ncc_impl(&a.data[0].r, &b.data[0].r, 3 * a.count(), mask.data(), 3);
}

void register_perceptual_loss(PerceptualLoss fn) { g_perceptual = std::move(fn); }
void clear_perceptual_loss() { g_perceptual = nullptr; }
const PerceptualLoss* registered_perceptual_loss() {
    return g_perceptual ? &g_perceptual : nullptr;
}

}  // namespace glint
