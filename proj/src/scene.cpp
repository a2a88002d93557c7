// SPDX-License-Identifier: Apache-2.0

#include "glint/scene.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "glint/image_io.h"
#include "glint/spherical.h"

namespace glint {

namespace {

[[noreturn]] void fail(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string dir_of(const std::string& path) {
    const size_t slash = path.find_last_of('/');
    return slash == std::string::npos ? std::string() : path.substr(0, slash + 1);
}

std::string resolve(const std::string& scene_path, const std::string& rel) {
    if (!rel.empty() && rel[0] == '/') return rel;
    return dir_of(scene_path) + rel;
}

double parse_double(const std::string& v, const std::string& path, int line) {
    try {
        size_t used = 0;
        const double x = std::stod(v, &used);
        if (trim(v.substr(used)).empty()) return x;
    } catch (const std::exception&) {
    }
    fail(path, line, "expected a number, got '" + v + "'");
}

std::vector<double> parse_doubles(const std::string& v, size_t count,
                                  const std::string& path, int line) {
    std::istringstream ss(v);
    std::vector<double> out;
    double x;
    while (ss >> x) out.push_back(x);
    std::string rest;
    if (ss >> rest || out.size() != count)
        fail(path, line, "expected " + std::to_string(count) + " numbers, got '" + v + "'");
    return out;
}

Vec3 parse_vec3(const std::string& v, const std::string& path, int line) {
    const auto d = parse_doubles(v, 3, path, line);
    return {d[0], d[1], d[2]};
}

Rgb parse_rgb(const std::string& v, const std::string& path, int line) {
    const auto d = parse_doubles(v, 3, path, line);
    return {d[0], d[1], d[2]};
}

void check_albedo_range(const ImageRgb& tex, const std::string& context) {
    for (const Rgb& c : tex.data) {
        for (int i = 0; i < 3; ++i) {
            if (!(c[i] >= -1e-9 && c[i] <= 1.0 + 1e-9))
                throw std::runtime_error(context + ": albedo values must lie in [0,1]");
        }
    }
}

struct SgLightSpec {
    bool present = false;
    int count = -1;
    bool fibonacci = false;
    std::vector<SgLobe> lobes;
    bool lobe_open = false;
};

}  // namespace

const char* backend_name(Backend b) { return b == Backend::Mc ? "mc" : "sg"; }

Backend backend_from_name(const std::string& name) {
    if (name == "mc") return Backend::Mc;
    if (name == "sg") return Backend::Sg;
    throw std::runtime_error("unknown backend '" + name + "' (expected mc or sg)");
}

Scene parse_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open scene file");

    Scene scene;
    scene.camera.width = 256;
    scene.camera.height = 256;

    bool have_mesh = false, have_eye = false, have_envmap = false;
    bool have_tex = false, have_albedo_const = false;
    bool have_bg_color = false, have_bg_path = false;
    Rgb albedo_const(0.5);
    SgLightSpec sg;
    std::string envmap_path, texture_path, bg_path;

    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(path, lineno, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "mesh" && section != "camera" && section != "brdf" &&
                section != "envmap" && section != "sg_light" && section != "render" &&
                section != "background")
                fail(path, lineno, "unknown section [" + section + "]");
            if (section == "sg_light") sg.present = true;
            continue;
        }

        const size_t eq = line.find('=');
        if (eq == std::string::npos) fail(path, lineno, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) fail(path, lineno, "key '" + key + "' outside any section");

        if (section == "mesh") {
            if (key == "path") {
                scene.mesh_path = resolve(path, value);
                have_mesh = true;
            } else {
                fail(path, lineno, "unknown key '" + key + "' in [mesh]");
            }
        } else if (section == "camera") {
            if (key == "eye") { scene.camera.eye = parse_vec3(value, path, lineno); have_eye = true; }
            else if (key == "lookat") scene.camera.lookat = parse_vec3(value, path, lineno);
            else if (key == "up") scene.camera.up = normalize(parse_vec3(value, path, lineno));
            else if (key == "fov_deg") scene.camera.vertical_fov = parse_double(value, path, lineno) * kPi / 180.0;
            else if (key == "width") scene.camera.width = static_cast<int>(parse_double(value, path, lineno));
            else if (key == "height") scene.camera.height = static_cast<int>(parse_double(value, path, lineno));
            else fail(path, lineno, "unknown key '" + key + "' in [camera]");
        } else if (section == "brdf") {
            if (key == "texture") { texture_path = resolve(path, value); have_tex = true; }
            else if (key == "albedo") { albedo_const = parse_rgb(value, path, lineno); have_albedo_const = true; }
            else if (key == "specular") scene.brdf.specular = parse_double(value, path, lineno);
            else if (key == "roughness") scene.brdf.roughness = parse_double(value, path, lineno);
            else if (key == "metalness") scene.brdf.metalness = parse_double(value, path, lineno);
            else fail(path, lineno, "unknown key '" + key + "' in [brdf]");
        } else if (section == "envmap") {
            if (key == "path") { envmap_path = resolve(path, value); have_envmap = true; }
            else fail(path, lineno, "unknown key '" + key + "' in [envmap]");
        } else if (section == "sg_light") {
            if (key == "count") sg.count = static_cast<int>(parse_double(value, path, lineno));
            else if (key == "init") {
                if (value != "fibonacci") fail(path, lineno, "unknown sg_light init '" + value + "'");
                sg.fibonacci = true;
            } else if (key == "axis") {
                SgLobe lobe;
                lobe.axis = normalize(parse_vec3(value, path, lineno));
                sg.lobes.push_back(lobe);
                sg.lobe_open = true;
            } else if (key == "sharpness") {
                if (!sg.lobe_open) fail(path, lineno, "'sharpness' before any 'axis'");
                sg.lobes.back().sharpness = parse_double(value, path, lineno);
            } else if (key == "amplitude") {
                if (!sg.lobe_open) fail(path, lineno, "'amplitude' before any 'axis'");
                sg.lobes.back().amplitude = parse_rgb(value, path, lineno);
            } else {
                fail(path, lineno, "unknown key '" + key + "' in [sg_light]");
            }
        } else if (section == "render") {
            if (key == "backend") {
                try { scene.render.backend = backend_from_name(value); }
                catch (const std::exception& e) { fail(path, lineno, e.what()); }
            } else if (key == "samples") {
                scene.render.samples = static_cast<int>(parse_double(value, path, lineno));
            } else if (key == "seed") {
                scene.render.seed = static_cast<uint64_t>(parse_double(value, path, lineno));
            } else {
                fail(path, lineno, "unknown key '" + key + "' in [render]");
            }
        } else if (section == "background") {
            if (key == "color") { scene.background_color = parse_rgb(value, path, lineno); have_bg_color = true; }
            else if (key == "path") { bg_path = resolve(path, value); have_bg_path = true; }
            else fail(path, lineno, "unknown key '" + key + "' in [background]");
        }
    }

    // Structural validation.
    if (!have_mesh) throw std::runtime_error(path + ": missing required [mesh] path");
    if (!have_eye) throw std::runtime_error(path + ": missing required [camera] eye");
    if (have_envmap && sg.present)
        throw std::runtime_error(path + ": conflicting lighting blocks ([envmap] and [sg_light])");
    if (!have_envmap && !sg.present)
        throw std::runtime_error(path + ": missing lighting ([envmap] or [sg_light])");
    if (have_tex && have_albedo_const)
        throw std::runtime_error(path + ": [brdf] texture and albedo are mutually exclusive");
    if (have_bg_color && have_bg_path)
        throw std::runtime_error(path + ": [background] color and path are mutually exclusive");
    if (scene.render.samples < 1)
        throw std::runtime_error(path + ": [render] samples must be >= 1");
    if (scene.camera.width < 1 || scene.camera.height < 1)
        throw std::runtime_error(path + ": camera resolution must be >= 1");

    // Assets.
    try {
        scene.mesh = load_obj(scene.mesh_path);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": while loading mesh: " + e.what());
    }

    if (have_tex) {
        try {
            scene.brdf.albedo_texture =
                texture_path.size() >= 4 && texture_path.compare(texture_path.size() - 4, 4, ".pfm") == 0
                    ? load_pfm(texture_path)
                    : load_hdr(texture_path).pixels;
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": while loading texture: " + e.what());
        }
        check_albedo_range(scene.brdf.albedo_texture, texture_path);
        scene.texture_path = texture_path;
    } else {
        scene.brdf.albedo_texture = ImageRgb(1, 1, albedo_const);
        check_albedo_range(scene.brdf.albedo_texture, path);
    }
    if (!(scene.brdf.specular >= 0.0 && scene.brdf.specular <= 1.0))
        throw std::runtime_error(path + ": [brdf] specular must lie in [0,1]");
    if (!(scene.brdf.roughness >= 0.0 && scene.brdf.roughness <= 1.0))
        throw std::runtime_error(path + ": [brdf] roughness must lie in [0,1]");
    if (!(scene.brdf.metalness >= 0.0 && scene.brdf.metalness <= 1.0))
        throw std::runtime_error(path + ": [brdf] metalness must lie in [0,1]");

    if (have_envmap) {
        scene.light_type = LightType::Envmap;
        try {
            scene.envmap = load_hdr(envmap_path);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": while loading envmap: " + e.what());
        }
        scene.envmap_path = envmap_path;
    } else {
        scene.light_type = LightType::SgMixture;
        if (!sg.lobes.empty()) {
            if (sg.fibonacci)
                throw std::runtime_error(path + ": [sg_light] explicit lobes and init are mutually exclusive");
            if (sg.count >= 0 && sg.count != static_cast<int>(sg.lobes.size()))
                throw std::runtime_error(path + ": [sg_light] count does not match the number of lobes");
            scene.sg_light.lobes = sg.lobes;
        } else {
            const int k = sg.count >= 0 ? sg.count : 32;  // default K
            if (k < 1) throw std::runtime_error(path + ": [sg_light] count must be >= 1");
            scene.sg_light.lobes.resize(k);
            for (int i = 0; i < k; ++i) {
                scene.sg_light.lobes[i].axis = fibonacci_direction(i, k);
                scene.sg_light.lobes[i].sharpness = 0.5 * k;
                scene.sg_light.lobes[i].amplitude = Rgb(1.0);
            }
        }
        for (const SgLobe& lobe : scene.sg_light.lobes) {
            if (!(lobe.sharpness >= 0.0) || !std::isfinite(lobe.sharpness))
                throw std::runtime_error(path + ": [sg_light] sharpness must be finite and >= 0");
        }
    }

    if (have_bg_path) {
        scene.background_is_env = true;
        try {
            scene.background_env = load_hdr(bg_path);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": while loading background: " + e.what());
        }
        scene.background_path = bg_path;
    }

    return scene;
}

std::string sg_light_fragment(const SgEnvLight& light) {
    std::ostringstream out;
    out.precision(17);
    out << "[sg_light]\n";
    out << "count = " << light.lobe_count() << "\n";
    for (const SgLobe& lobe : light.lobes) {
        out << "axis = " << lobe.axis.x << " " << lobe.axis.y << " " << lobe.axis.z << "\n";
        out << "sharpness = " << lobe.sharpness << "\n";
        out << "amplitude = " << lobe.amplitude.r << " " << lobe.amplitude.g << " "
            << lobe.amplitude.b << "\n";
    }
    return out.str();
}

void write_scene(const Scene& scene, const std::string& path) {
    std::string stem = path;
    const size_t dot = stem.find_last_of('.');
    if (dot != std::string::npos && stem.find('/', dot) == std::string::npos)
        stem = stem.substr(0, dot);

    auto basename = [](const std::string& p) {
        const size_t slash = p.find_last_of('/');
        return slash == std::string::npos ? p : p.substr(slash + 1);
    };

    std::ostringstream out;
    out.precision(17);

    const std::string mesh_file = stem + "_mesh.obj";
    save_obj(scene.mesh, mesh_file);
    out << "[mesh]\npath = " << basename(mesh_file) << "\n\n";

    const Camera& c = scene.camera;
    out << "[camera]\n";
    out << "eye = " << c.eye.x << " " << c.eye.y << " " << c.eye.z << "\n";
    out << "lookat = " << c.lookat.x << " " << c.lookat.y << " " << c.lookat.z << "\n";
    out << "up = " << c.up.x << " " << c.up.y << " " << c.up.z << "\n";
    out << "fov_deg = " << c.vertical_fov * 180.0 / kPi << "\n";
    out << "width = " << c.width << "\nheight = " << c.height << "\n\n";

    out << "[brdf]\n";
    if (scene.brdf.albedo_texture.count() == 1) {
        const Rgb a = scene.brdf.albedo_texture[0];
        out << "albedo = " << a.r << " " << a.g << " " << a.b << "\n";
    } else {
        const std::string tex_file = stem + "_albedo.pfm";
        write_pfm(scene.brdf.albedo_texture, tex_file);
        out << "texture = " << basename(tex_file) << "\n";
    }
    out << "specular = " << scene.brdf.specular << "\n";
    out << "roughness = " << scene.brdf.roughness << "\n";
    out << "metalness = " << scene.brdf.metalness << "\n\n";

    if (scene.light_type == LightType::Envmap) {
        const std::string env_file = stem + "_env.pfm";
        write_pfm(scene.envmap.pixels, env_file);
        out << "[envmap]\npath = " << basename(env_file) << "\n\n";
    } else {
        out << sg_light_fragment(scene.sg_light) << "\n";
    }

    out << "[background]\n";
    if (scene.background_is_env) {
        const std::string bg_file = stem + "_background.pfm";
        write_pfm(scene.background_env.pixels, bg_file);
        out << "path = " << basename(bg_file) << "\n";
    } else {
        const Rgb b = scene.background_color;
        out << "color = " << b.r << " " << b.g << " " << b.b << "\n";
    }
    out << "\n[render]\n";
    out << "backend = " << backend_name(scene.render.backend) << "\n";
    out << "samples = " << scene.render.samples << "\n";
    out << "seed = " << scene.render.seed << "\n";

    std::ofstream file(path);
    if (!file) throw std::runtime_error(path + ": cannot open for writing");
    file << out.str();
    if (!file) throw std::runtime_error(path + ": write failure");
}

}  // namespace glint
