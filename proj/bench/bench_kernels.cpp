// SPDX-License-Identifier: Apache-2.0

// Serial-vs-OpenMP comparison for the pixel kernels. Run manually:
//   build/bench/glint_bench [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include "glint/parallel.h"
#include "glint/raster.h"
#include "glint/sg_fit.h"
#include "glint/shade.h"
#include "glint/spherical.h"

namespace {

using namespace glint;

Scene bench_scene_sg(int resolution, int lobes) {
    Scene scene;
    scene.mesh = make_icosphere(3);
    scene.camera.eye = Vec3(0.0, 0.0, 2.8);
    scene.camera.width = resolution;
    scene.camera.height = resolution;
    scene.brdf.albedo_texture = ImageRgb(1, 1, Rgb(0.6, 0.45, 0.3));
    scene.brdf.specular = 0.7;
    scene.brdf.roughness = 0.3;
    scene.light_type = LightType::SgMixture;
    scene.sg_light.lobes.resize(lobes);
    for (int i = 0; i < lobes; ++i) {
        scene.sg_light.lobes[i].axis = fibonacci_direction(i, lobes);
        scene.sg_light.lobes[i].sharpness = 4.0 + i;
        scene.sg_light.lobes[i].amplitude = Rgb(0.8);
    }
    return scene;
}

Scene bench_scene_mc(int resolution, int samples) {
    Scene scene = bench_scene_sg(resolution, 1);
    scene.light_type = LightType::Envmap;
    scene.sg_light.lobes.clear();
    scene.envmap = EquirectImage(64, 32, Rgb(0.5));
    scene.render.backend = Backend::Mc;
    scene.render.samples = samples;
    return scene;
}

void bench_render_sg_serial(benchmark::State& state) {
    const Scene scene = bench_scene_sg(static_cast<int>(state.range(0)), 32);
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_serial(scene, Backend::Sg));
    }
}

void bench_render_sg_omp(benchmark::State& state) {
    const Scene scene = bench_scene_sg(static_cast<int>(state.range(0)), 32);
    for (auto _ : state) {
        benchmark::DoNotOptimize(render(scene, Backend::Sg));
    }
}

void bench_render_mc_serial(benchmark::State& state) {
    const Scene scene = bench_scene_mc(static_cast<int>(state.range(0)), 64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_serial(scene, Backend::Mc));
    }
}

void bench_render_mc_omp(benchmark::State& state) {
    const Scene scene = bench_scene_mc(static_cast<int>(state.range(0)), 64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(render(scene, Backend::Mc));
    }
}

void bench_rasterize_serial(benchmark::State& state) {
    const Scene scene = bench_scene_sg(static_cast<int>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rasterize_serial(scene.mesh, scene.camera));
    }
}

void bench_rasterize_omp(benchmark::State& state) {
    const Scene scene = bench_scene_sg(static_cast<int>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rasterize(scene.mesh, scene.camera));
    }
}

void bench_fit_grad_serial(benchmark::State& state) {
    EquirectImage env(128, 64, Rgb(0.5));
    SgEnvLight light;
    light.lobes.resize(32);
    for (int i = 0; i < 32; ++i)
        light.lobes[i] = {fibonacci_direction(i, 32), 16.0, Rgb(0.5)};
    std::vector<SgLobeAdj> grads;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sg_fit_loss_grad_serial(light, env, grads));
    }
}

void bench_fit_grad_omp(benchmark::State& state) {
    EquirectImage env(128, 64, Rgb(0.5));
    SgEnvLight light;
    light.lobes.resize(32);
    for (int i = 0; i < 32; ++i)
        light.lobes[i] = {fibonacci_direction(i, 32), 16.0, Rgb(0.5)};
    std::vector<SgLobeAdj> grads;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sg_fit_loss_grad(light, env, grads));
    }
}

}  // namespace

BENCHMARK(bench_render_sg_serial)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_render_sg_omp)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_render_mc_serial)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_render_mc_omp)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_rasterize_serial)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_rasterize_omp)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_fit_grad_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bench_fit_grad_omp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
