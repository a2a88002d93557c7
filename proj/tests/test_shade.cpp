// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glint/parallel.h"
#include "glint/quadrature.h"
#include "glint/shade.h"
#include "testutil.h"

using namespace glint;
using testutil::rel_error;

namespace {

PixelSurface test_surface() {
    PixelSurface s;
    s.position = Vec3(0.0, 0.0, 1.0);
    s.normal = make_direction(0.15, 0.9, 0.4);
    s.uv = Vec2(0.5, 0.5);
    s.view = make_direction(0.1, 0.35, 0.93);
    return s;
}

}  // namespace

TEST_CASE("mc estimator is exact for a Lambertian surface under constant light") {
    const EquirectImage env(16, 8, Rgb(0.8, 1.1, 0.4));
    BrdfParams brdf;
    brdf.albedo_texture = ImageRgb(1, 1, Rgb(0.5, 0.25, 0.75));
    brdf.specular = 0.0;
    brdf.metalness = 0.0;
    const PixelSurface surf = test_surface();

    for (int n : {1, 4, 33}) {
        RngStream stream(3, 17);
        const Rgb got = shade_mc(surf, env, brdf, n, stream);
        const Rgb expect = Rgb(0.5 * 0.8, 0.25 * 1.1, 0.75 * 0.4);
        CHECK(rel_error(got, expect) < 1e-12);  // f L cos / pdf is constant
    }
}

TEST_CASE("mc near-mirror looks up the reflected direction") {
    // Broad bright blob around the mirror direction of a metallic surface.
    const PixelSurface surf = test_surface();
    const Direction mirror = reflect(surf.view, surf.normal);
    EquirectImage env(64, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 64; ++x) {
            const Direction w = env.pixel_direction(x, y);
            env.pixels.at(x, y) = Rgb(2.5 * std::exp(6.0 * (dot(w, mirror) - 1.0)));
        }

    BrdfParams brdf;
    brdf.albedo_texture = ImageRgb(1, 1, Rgb(0.7));
    brdf.roughness = kMinRoughness;
    brdf.metalness = 1.0;

    RngStream stream(1, 5);
    const Rgb got = shade_mc(surf, env, brdf, 4, stream);

    const double ndotv = dot(surf.normal, surf.view);
    const double f0 = 0.7;
    const double f90 = 1.0;  // saturate(50 * 0.7)
    const double w5 = std::pow(1.0 - ndotv, 5.0);
    const double fres = f0 + (f90 - f0) * w5;
    const Rgb expect = env.sample(mirror) * fres;
    CHECK(rel_error(got, expect) < 0.03);
}

TEST_CASE("mc replay reproduces the recorded estimate bitwise") {
    const Scene scene = testutil::make_sphere_scene_mc(24, 16, 8, 16);
    const RenderContext ctx = render_with_context(scene, Backend::Mc, true);
    const RenderContext replayed =
        render_with_context(scene, Backend::Mc, false, nullptr, &ctx.mc);
    for (int64_t p = 0; p < ctx.output.image.count(); ++p) {
        CHECK(ctx.output.image[p].r == replayed.output.image[p].r);
        CHECK(ctx.output.image[p].g == replayed.output.image[p].g);
        CHECK(ctx.output.image[p].b == replayed.output.image[p].b);
    }
}

TEST_CASE("mc estimator converges to the quadrature reference") {
    const EquirectImage env = testutil::make_test_env(32, 16);
    BrdfParams brdf;
    brdf.albedo_texture = ImageRgb(1, 1, Rgb(0.6));
    brdf.specular = 0.8;
    brdf.roughness = 0.3;
    brdf.metalness = 0.2;
    const PixelSurface surf = test_surface();
    const Rgb albedo = brdf.albedo_at(0.5, 0.5);

    const Rgb reference = sphere_quadrature(
        [&](const Direction& wi) {
            const double c = dot(surf.normal, wi);
            if (c <= 0.0) return Rgb{};
            return brdf_eval(brdf, albedo, surf.normal, wi, surf.view) * env.sample(wi) * c;
        },
        32);

    // Mean of many N=16 estimates approaches the reference.
    Rgb mean;
    constexpr int kRuns = 200;
    for (int r = 0; r < kRuns; ++r) {
        RngStream stream(999, static_cast<uint64_t>(r));
        mean += shade_mc(surf, env, brdf, 16, stream);
    }
    mean = mean / static_cast<double>(kRuns);
    CHECK(rel_error(mean, reference) < 0.05);
}

TEST_CASE("sg diffuse-only shading equals the closed-form inner product") {
    BrdfParams brdf;
    brdf.albedo_texture = ImageRgb(1, 1, Rgb(0.55, 0.35, 0.2));
    brdf.specular = 0.0;
    brdf.metalness = 0.0;
    const PixelSurface surf = test_surface();

    SgEnvLight light;
    light.lobes = {{make_direction(0.4, 0.7, -0.2), 7.5, Rgb(1.3, 0.9, 0.5)}};

    const Rgb got = shade_sg(surf, light, brdf);
    const Rgb albedo = brdf.albedo_at(0.5, 0.5);
    const Rgb diffuse = albedo * kInvPi * sg_inner(light.lobes[0], cosine_sg(surf.normal));
    CHECK(rel_error(got, diffuse) < 1e-12);  // s=0 kills the specular lobe exactly

    // And the inner product agrees with quadrature of G_l * G_c.
    const Rgb oracle = sphere_quadrature(
        [&](const Direction& w) {
            return albedo * kInvPi * sg_eval(light.lobes[0], w) *
                   sg_eval(cosine_sg(surf.normal), w);
        },
        48);
    CHECK(rel_error(got, oracle) < 1e-3);
}

TEST_CASE("sg shading is linear in lobe amplitude and zero for dark lights") {
    BrdfParams brdf;
    brdf.albedo_texture = ImageRgb(1, 1, Rgb(0.5));
    brdf.specular = 0.7;
    brdf.roughness = 0.35;
    const PixelSurface surf = test_surface();

    SgEnvLight dark;
    dark.lobes = {{make_direction(0.2, 0.9, 0.1), 5.0, Rgb(0.0)}};
    CHECK(sum(abs(shade_sg(surf, dark, brdf))) == 0.0);

    SgEnvLight light;
    light.lobes = {{make_direction(0.2, 0.9, 0.1), 5.0, Rgb(0.6, 0.8, 0.2)}};
    SgEnvLight doubled = light;
    doubled.lobes[0].amplitude = 2.0 * light.lobes[0].amplitude;
    CHECK(rel_error(shade_sg(surf, doubled, brdf), 2.0 * shade_sg(surf, light, brdf)) < 1e-12);
}

TEST_CASE("render: off-screen mesh leaves pure background") {
    Scene scene = testutil::make_sphere_scene_sg(24);
    for (Vec3& v : scene.mesh.vertices) v += Vec3(100.0, 0.0, 0.0);
    scene.background_color = Rgb(0.125, 0.25, 0.5);
    const RenderOutput out = render(scene, Backend::Sg);
    for (int64_t p = 0; p < out.image.count(); ++p) {
        CHECK(out.mask[p] == 0.0);
        CHECK(out.image[p].r == 0.125);
        CHECK(out.image[p].g == 0.25);
        CHECK(out.image[p].b == 0.5);
        CHECK(sum(abs(out.foreground[p])) == 0.0);
    }
}

TEST_CASE("render composition identity holds exactly") {
    Scene scene = testutil::make_sphere_scene_sg(32);
    scene.background_color = Rgb(0.2, 0.1, 0.05);
    const RenderOutput out = render(scene, Backend::Sg);
    for (int64_t p = 0; p < out.image.count(); ++p) {
        const Rgb recomposed =
            out.foreground[p] + (1.0 - out.mask[p]) * scene.background_color;
        CHECK(std::abs(out.image[p].r - recomposed.r) < 1e-6);
        CHECK(std::abs(out.image[p].g - recomposed.g) < 1e-6);
        CHECK(std::abs(out.image[p].b - recomposed.b) < 1e-6);
        CHECK(is_finite(out.image[p]));
        CHECK(out.image[p].r >= 0.0);
    }
}

TEST_CASE("render is bitwise identical across worker counts and vs serial") {
    for (Backend backend : {Backend::Sg, Backend::Mc}) {
        const Scene scene = backend == Backend::Sg ? testutil::make_sphere_scene_sg(40)
                                                   : testutil::make_sphere_scene_mc(40);
        set_worker_count(1);
        const RenderOutput one = render(scene, backend);
        set_worker_count(8);
        const RenderOutput eight = render(scene, backend);
        const RenderOutput serial = render_serial(scene, backend);
        set_worker_count(2);
        for (int64_t p = 0; p < one.image.count(); ++p) {
            CHECK(one.image[p].r == eight.image[p].r);
            CHECK(one.image[p].g == eight.image[p].g);
            CHECK(one.image[p].b == eight.image[p].b);
            CHECK(one.image[p].r == serial.image[p].r);
            CHECK(one.mask[p] == eight.mask[p]);
        }
    }
}

TEST_CASE("subsample_pixels counts and determinism") {
    GridF mask(40, 25, 0.0);
    for (int64_t p = 0; p < 1000; ++p) mask[p] = 1.0;  // exactly 1000 foreground

    const auto all = subsample_pixels(mask, 1.0, RngStream(1, 0));
    CHECK(all.size() == 1000);

    const auto some = subsample_pixels(mask, 0.04, RngStream(1, 0));
    CHECK(some.size() == 40);
    for (size_t i = 1; i < some.size(); ++i) CHECK(some[i] > some[i - 1]);  // unique, sorted
    for (int64_t p : some) CHECK(mask[p] > 0.5);

    const auto again = subsample_pixels(mask, 0.04, RngStream(1, 0));
    CHECK(some == again);

    // Two streams: overlap close to the hypergeometric expectation (1.6).
    const auto other = subsample_pixels(mask, 0.04, RngStream(1, 7));
    int overlap = 0;
    for (int64_t p : some)
        overlap += std::binary_search(other.begin(), other.end(), p) ? 1 : 0;
    CHECK(overlap <= 8);

    // Empty foreground gives an empty set.
    GridF empty(8, 8, 0.0);
    CHECK(subsample_pixels(empty, 0.5, RngStream(0, 0)).empty());

    // Rounded up, at least one pixel.
    GridF tiny(8, 8, 0.0);
    tiny[3] = 1.0;
    tiny[9] = 1.0;
    tiny[11] = 1.0;
    CHECK(subsample_pixels(tiny, 0.01, RngStream(0, 0)).size() == 1);
}

TEST_CASE("per-pixel sample counts are reported") {
    const Scene mc = testutil::make_sphere_scene_mc(24, 16, 8, 7);
    const RenderOutput out = render(mc, Backend::Mc);
    const GBuffer gb = rasterize(mc.mesh, mc.camera);
    for (int64_t p = 0; p < out.samples.count(); ++p)
        CHECK(out.samples[p] == (gb.visibility[p] ? 7 : 0));

    const Scene sg = testutil::make_sphere_scene_sg(24);
    const RenderOutput sgout = render(sg, Backend::Sg);
    for (int64_t p = 0; p < sgout.samples.count(); ++p) CHECK(sgout.samples[p] == 0);
}

TEST_CASE("backend/lighting mismatch is rejected") {
    const Scene sg = testutil::make_sphere_scene_sg(16);
    CHECK_THROWS(render(sg, Backend::Mc));
    const Scene mc = testutil::make_sphere_scene_mc(16);
    CHECK_THROWS(render(mc, Backend::Sg));
}
