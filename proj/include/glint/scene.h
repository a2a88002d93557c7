// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "glint/brdf.h"
#include "glint/camera.h"
#include "glint/image.h"
#include "glint/mesh.h"
#include "glint/sg.h"

namespace glint {

enum class Backend { Mc, Sg };

const char* backend_name(Backend b);
Backend backend_from_name(const std::string& name);

struct RenderConfig {
    Backend backend = Backend::Sg;
    int samples = 64;
    uint64_t seed = 0;
};

enum class LightType { Envmap, SgMixture };

// Fully resolved scene: mesh + camera + material + one lighting
// representation + background + render settings. Immutable after parse as
// far as the renderer is concerned; the optimizer mutates copies.
struct Scene {
    Mesh mesh;
    Camera camera;
    BrdfParams brdf;

    LightType light_type = LightType::SgMixture;
    EquirectImage envmap;   // valid iff light_type == Envmap
    SgEnvLight sg_light;    // valid iff light_type == SgMixture

    bool background_is_env = false;
    Rgb background_color{};       // linear, default black
    EquirectImage background_env;

    RenderConfig render;

    // Source paths, kept for scene writing; empty when the data is inline.
    std::string mesh_path;
    std::string envmap_path;
    std::string texture_path;
    std::string background_path;
};

// Parses the line-oriented scene format (see README for the grammar).
// Unknown sections or keys are errors; asset failures carry file context.
Scene parse_scene(const std::string& path);

// Serializes a scene; side assets (mesh, env map, texture) are written next
// to the scene file with the given stem.
void write_scene(const Scene& scene, const std::string& path);

// The [sg_light] block alone, as emitted by fit-env.
std::string sg_light_fragment(const SgEnvLight& light);

}  // namespace glint
