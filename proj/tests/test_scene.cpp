// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "glint/image_io.h"
#include "glint/scene.h"
#include "testutil.h"

using namespace glint;

namespace {

std::string write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    return path;
}

std::string setup_assets(const std::string& dir) {
    save_obj(make_icosphere(1), dir + "sphere.obj");
    write_pfm(testutil::make_test_env(8, 4).pixels, dir + "env.pfm");
    return dir;
}

}  // namespace

TEST_CASE("minimal scene gets the documented defaults") {
    const std::string dir = setup_assets(testutil::make_temp_dir("scene_min"));
    const std::string path = write_file(dir + "min.scene",
                                        "[mesh]\npath = sphere.obj\n"
                                        "[camera]\neye = 0 0 3\n"
                                        "[sg_light]\n"
                                        "count = 1\n"
                                        "axis = 0 1 0\n"
                                        "sharpness = 0\n"
                                        "amplitude = 0.5 0.5 0.5\n");
    const Scene scene = parse_scene(path);
    CHECK(scene.render.samples == 64);
    CHECK(scene.render.seed == 0);
    CHECK(scene.render.backend == Backend::Sg);
    CHECK(scene.camera.width == 256);
    CHECK(scene.camera.height == 256);
    CHECK(scene.light_type == LightType::SgMixture);
    CHECK(scene.sg_light.lobe_count() == 1);
    CHECK(scene.brdf.albedo_texture.count() == 1);
}

TEST_CASE("sg_light default count is 32 with fibonacci init") {
    const std::string dir = setup_assets(testutil::make_temp_dir("scene_k"));
    const std::string path = write_file(dir + "k.scene",
                                        "[mesh]\npath = sphere.obj\n"
                                        "[camera]\neye = 0 0 3\n"
                                        "[sg_light]\ninit = fibonacci\n");
    const Scene scene = parse_scene(path);
    CHECK(scene.sg_light.lobe_count() == 32);
    for (const SgLobe& lobe : scene.sg_light.lobes) {
        CHECK(length(lobe.axis) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(lobe.sharpness == 16.0);
    }
}

TEST_CASE("conflicting lighting blocks are rejected") {
    const std::string dir = setup_assets(testutil::make_temp_dir("scene_conflict"));
    const std::string path = write_file(dir + "c.scene",
                                        "[mesh]\npath = sphere.obj\n"
                                        "[camera]\neye = 0 0 3\n"
                                        "[envmap]\npath = env.pfm\n"
                                        "[sg_light]\ncount = 4\n");
    CHECK_THROWS_WITH_AS(parse_scene(path),
                         doctest::Contains("conflicting lighting"), std::runtime_error);
}

TEST_CASE("mc scene with explicit samples honors them") {
    const std::string dir = setup_assets(testutil::make_temp_dir("scene_mc"));
    const std::string path = write_file(dir + "mc.scene",
                                        "[mesh]\npath = sphere.obj\n"
                                        "[camera]\neye = 0 0 3\nwidth = 32\nheight = 32\n"
                                        "[envmap]\npath = env.pfm\n"
                                        "[render]\nbackend = mc\nsamples = 1024\nseed = 9\n");
    const Scene scene = parse_scene(path);
    CHECK(scene.render.backend == Backend::Mc);
    CHECK(scene.render.samples == 1024);
    CHECK(scene.render.seed == 9);
    CHECK(scene.light_type == LightType::Envmap);
    CHECK(scene.envmap.width() == 8);
}

TEST_CASE("unknown keys and sections are errors") {
    const std::string dir = setup_assets(testutil::make_temp_dir("scene_unknown"));
    const std::string bad_key = write_file(dir + "bk.scene",
                                           "[mesh]\npath = sphere.obj\nfrobnicate = 3\n");
    CHECK_THROWS_WITH_AS(parse_scene(bad_key), doctest::Contains("unknown key"),
                         std::runtime_error);
    const std::string bad_section = write_file(dir + "bs.scene",
                                               "[mesh]\npath = sphere.obj\n[wat]\nx = 1\n");
    CHECK_THROWS_WITH_AS(parse_scene(bad_section), doctest::Contains("unknown section"),
                         std::runtime_error);
}

TEST_CASE("missing required keys are reported") {
    const std::string dir = setup_assets(testutil::make_temp_dir("scene_missing"));
    const std::string no_mesh = write_file(dir + "nm.scene",
                                           "[camera]\neye = 0 0 3\n[sg_light]\ncount = 1\n");
    CHECK_THROWS_WITH_AS(parse_scene(no_mesh), doctest::Contains("[mesh]"),
                         std::runtime_error);
    const std::string no_light = write_file(dir + "nl.scene",
                                            "[mesh]\npath = sphere.obj\n[camera]\neye = 0 0 3\n");
    CHECK_THROWS_WITH_AS(parse_scene(no_light), doctest::Contains("lighting"),
                         std::runtime_error);
}

TEST_CASE("asset failures carry scene-file context") {
    const std::string dir = setup_assets(testutil::make_temp_dir("scene_asset"));
    const std::string path = write_file(dir + "a.scene",
                                        "[mesh]\npath = nonexistent.obj\n"
                                        "[camera]\neye = 0 0 3\n"
                                        "[sg_light]\ncount = 1\n");
    try {
        parse_scene(path);
        FAIL("expected an asset error");
    } catch (const std::exception& e) {
        const std::string msg = e.what();
        CHECK(msg.find("a.scene") != std::string::npos);
        CHECK(msg.find("nonexistent.obj") != std::string::npos);
    }
}

TEST_CASE("scene writer round-trips through the parser") {
    const std::string dir = setup_assets(testutil::make_temp_dir("scene_rt"));
    Scene scene;
    scene.mesh = make_icosphere(1);
    scene.camera.eye = Vec3(0.4, 1.25, 3.5);
    scene.camera.width = 24;
    scene.camera.height = 20;
    scene.brdf.albedo_texture = ImageRgb(1, 1, Rgb(0.25, 0.5, 0.75));
    scene.brdf.specular = 0.375;
    scene.brdf.roughness = 0.1875;
    scene.brdf.metalness = 0.0625;
    scene.light_type = LightType::SgMixture;
    scene.sg_light = testutil::make_test_sg_light(3);
    scene.render.backend = Backend::Sg;
    scene.render.samples = 17;
    scene.render.seed = 5;

    write_scene(scene, dir + "out.scene");
    const Scene back = parse_scene(dir + "out.scene");
    CHECK(back.render.samples == 17);
    CHECK(back.render.seed == 5);
    CHECK(back.camera.width == 24);
    CHECK(back.brdf.specular == 0.375);
    CHECK(back.mesh.vertex_count() == scene.mesh.vertex_count());
    REQUIRE(back.sg_light.lobe_count() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(length(back.sg_light.lobes[i].axis - scene.sg_light.lobes[i].axis) < 1e-15);
        CHECK(back.sg_light.lobes[i].sharpness == scene.sg_light.lobes[i].sharpness);
    }

    // Env-map scenes round-trip through a written PFM.
    Scene env_scene = scene;
    env_scene.light_type = LightType::Envmap;
    env_scene.sg_light.lobes.clear();
    env_scene.envmap = testutil::make_test_env(8, 4);
    // PFM stores float32: quantize first so the round trip is exact.
    for (Rgb& p : env_scene.envmap.pixels.data)
        p = Rgb(static_cast<float>(p.r), static_cast<float>(p.g), static_cast<float>(p.b));
    write_scene(env_scene, dir + "env_scene.scene");
    const Scene env_back = parse_scene(dir + "env_scene.scene");
    CHECK(env_back.light_type == LightType::Envmap);
    REQUIRE(env_back.envmap.width() == 8);
    CHECK(env_back.envmap.pixels.at(3, 2).g == env_scene.envmap.pixels.at(3, 2).g);
}
