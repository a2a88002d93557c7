// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glint/adam.h"
#include "glint/losses.h"
#include "testutil.h"

using namespace glint;

TEST_CASE("image l1 loss") {
    ImageRgb a(4, 4, Rgb(0.3));
    ImageRgb b = a;
    CHECK(loss_image_l1(a, b) == 0.0);

    for (Rgb& p : b.data) p += Rgb(0.1);
    CHECK(loss_image_l1(a, b) == doctest::Approx(0.1).epsilon(1e-12));

    // Over an explicit subset: recompute by hand.
    RngStream rng(1, 2);
    for (Rgb& p : a.data) p = Rgb(rng.next_uniform(), rng.next_uniform(), rng.next_uniform());
    std::vector<int64_t> subset = {1, 5, 9, 12};
    double manual = 0.0;
    for (int64_t p : subset) manual += sum(abs(a[p] - b[p]));
    manual /= 3.0 * subset.size();
    CHECK(loss_image_l1(a, b, &subset) == doctest::Approx(manual).epsilon(1e-12));

    ImageRgb wrong(3, 4);
    CHECK_THROWS(loss_image_l1(a, wrong));

    // Backward: subgradient sign consistency via FD on one pixel.
    const ImageRgb d = loss_image_l1_backward(a, b);
    const double eps = 1e-7;
    ImageRgb a2 = a;
    a2[3].g += eps;
    const double fd = (loss_image_l1(a2, b) - loss_image_l1(a, b)) / eps;
    CHECK(fd == doctest::Approx(d[3].g).epsilon(1e-6));
}

TEST_CASE("iou loss on masks") {
    GridF v(4, 4, 1.0), w(4, 4, 1.0);
    CHECK(loss_iou(v, w) == 0.0);

    GridF l(4, 4, 0.0), r(4, 4, 0.0);
    for (int64_t p = 0; p < 8; ++p) l[p] = 1.0;
    for (int64_t p = 8; p < 16; ++p) r[p] = 1.0;
    CHECK(loss_iou(l, r) == 1.0);  // disjoint

    GridF half(4, 4, 0.0);
    for (int64_t p = 0; p < 8; ++p) half[p] = 1.0;
    CHECK(loss_iou(half, v) == doctest::Approx(0.5).epsilon(1e-12));  // 1 - 8/16

    // Gradient vs finite differences on a soft mask.
    GridF soft(4, 4);
    RngStream rng(7, 1);
    for (double& x : soft.data) x = rng.next_uniform();
    const GridF grad = loss_iou_backward(soft, half);
    const double eps = 1e-7;
    GridF soft2 = soft;
    soft2[5] += eps;
    const double fd = (loss_iou(soft2, half) - loss_iou(soft, half)) / eps;
    CHECK(fd == doctest::Approx(grad[5]).epsilon(1e-4));
}

TEST_CASE("laplacian loss") {
    const Mesh sphere = make_icosphere(2);
    CHECK(loss_laplacian(sphere, sphere) == 0.0);

    // Global translation leaves the differentials unchanged.
    Mesh moved = sphere;
    for (Vec3& v : moved.vertices) v += Vec3(0.4, -1.0, 2.0);
    CHECK(loss_laplacian(moved, sphere) < 1e-24);

    // One displaced vertex: loss scales as the square of the displacement.
    Mesh bump1 = sphere, bump2 = sphere;
    bump1.vertices[17] += Vec3(0.0, 0.01, 0.0);
    bump2.vertices[17] += Vec3(0.0, 0.02, 0.0);
    const double l1 = loss_laplacian(bump1, sphere);
    const double l2 = loss_laplacian(bump2, sphere);
    CHECK(l1 > 0.0);
    CHECK(l2 / l1 == doctest::Approx(4.0).epsilon(1e-9));

    // Gradient vs finite differences.
    const std::vector<Vec3> grad = loss_laplacian_backward(bump1, sphere);
    const double eps = 1e-7;
    Mesh pert = bump1;
    pert.vertices[17].y += eps;
    const double fd = (loss_laplacian(pert, sphere) - l1) / eps;
    CHECK(fd == doctest::Approx(grad[17].y).epsilon(1e-5));

    Mesh other = make_icosphere(1);
    CHECK_THROWS(loss_laplacian(other, sphere));
}

TEST_CASE("ncc metric") {
    ImageRgb a(8, 4);
    RngStream rng(3, 3);
    for (Rgb& p : a.data) p = Rgb(rng.next_uniform(), rng.next_uniform(), rng.next_uniform());

    CHECK(metric_ncc(a, a) == doctest::Approx(0.0).epsilon(1e-12));

    ImageRgb twice = a;
    for (Rgb& p : twice.data) p *= 2.0;
    CHECK(metric_ncc(a, twice) == doctest::Approx(0.0).epsilon(1e-12));  // scale invariant

    ImageRgb left(8, 4), right(8, 4);
    for (int64_t p = 0; p < 16; ++p) left[p] = Rgb(1.0);
    for (int64_t p = 16; p < 32; ++p) right[p] = Rgb(1.0);
    CHECK(metric_ncc(left, right) == doctest::Approx(1.0).epsilon(1e-12));  // disjoint

    ImageRgb zero(8, 4);
    CHECK_THROWS(metric_ncc(a, zero));
}

TEST_CASE("loss weights default to the stated values") {
    const LossWeights w;
    CHECK(w.image == 20.0);
    CHECK(w.mask == 5.0);
    CHECK(w.perceptual == 0.5);
    CHECK(w.laplacian == 5.0);
}

TEST_CASE("perceptual plug-in registry") {
    CHECK(registered_perceptual_loss() == nullptr);  // none ships by default
    register_perceptual_loss(
        [](const ImageRgb& render, const ImageRgb& target, ImageRgb& d_render) {
            double s = 0.0;
            for (int64_t p = 0; p < render.count(); ++p) {
                s += sum(abs(render[p] - target[p]));
                d_render[p] = Rgb(1.0);
            }
            return s;
        });
    CHECK(registered_perceptual_loss() != nullptr);
    clear_perceptual_loss();
    CHECK(registered_perceptual_loss() == nullptr);
}

TEST_CASE("adam: first step matches the hand-computed update") {
    std::vector<double> params = {1.0, -2.0};
    const std::vector<double> grads = {0.3, -0.05};
    AdamState state;
    AdamConfig config;
    config.lr = 0.01;

    adam_step(params, grads, state, config);
    // t=1: m_hat = g, v_hat = g^2, delta = lr * g / (|g| + eps).
    for (int i = 0; i < 2; ++i) {
        const double expected = (i == 0 ? 1.0 : -2.0) -
                                config.lr * grads[i] / (std::abs(grads[i]) + config.eps);
        CHECK(params[i] == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(state.t == 1);
}

TEST_CASE("adam: zero gradients advance state but not parameters") {
    std::vector<double> params = {0.5, 0.25, -3.0};
    const std::vector<double> before = params;
    const std::vector<double> grads = {0.0, 0.0, 0.0};
    AdamState state;
    adam_step(params, grads, state, AdamConfig{});
    CHECK(state.t == 1);
    for (size_t i = 0; i < params.size(); ++i) CHECK(params[i] == before[i]);
}

TEST_CASE("adam: constant gradient moves about lr per step after warmup") {
    std::vector<double> params = {0.0};
    const std::vector<double> grads = {2.5};
    AdamState state;
    AdamConfig config;
    config.lr = 0.01;
    double prev = params[0];
    for (int i = 0; i < 100; ++i) {
        adam_step(params, grads, state, config);
        const double step = prev - params[0];
        prev = params[0];
        if (i > 10) CHECK(step == doctest::Approx(config.lr).epsilon(1e-6));
        CHECK(step > 0.0);  // monotone under a constant gradient
    }
}

TEST_CASE("adam: shape mismatch throws") {
    std::vector<double> params = {1.0};
    const std::vector<double> grads = {1.0, 2.0};
    AdamState state;
    CHECK_THROWS(adam_step(params, grads, state, AdamConfig{}));
}
