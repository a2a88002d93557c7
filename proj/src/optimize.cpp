// SPDX-License-Identifier: Apache-2.0

#include "glint/optimize.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "glint/image_io.h"

namespace glint {

TotalLossResult total_loss(const Scene& scene, Backend backend,
                           const std::vector<TargetView>& targets,
                           const LossWeights& weights, const Mesh& initial_mesh,
                           double subsample_fraction, uint64_t subsample_salt) {
    if (targets.empty()) throw std::runtime_error("total_loss: no target views");

    const ParamLayout layout = param_layout(scene);
    TotalLossResult out;
    out.grads = GradRecord(layout);
    const double inv_views = 1.0 / static_cast<double>(targets.size());
    const PerceptualLoss* perceptual = registered_perceptual_loss();
    const double alpha_per = perceptual ? weights.perceptual : 0.0;

    for (size_t view = 0; view < targets.size(); ++view) {
        const TargetView& target = targets[view];
        const RenderContext ctx = render_with_context(
            scene, backend, backend == Backend::Mc, nullptr, nullptr, &target.camera);
        if (ctx.output.image.count() != target.image.count())
            throw std::runtime_error("total_loss: target image resolution mismatch");

        std::vector<int64_t> subset;
        const std::vector<int64_t>* subset_ptr = nullptr;
        if (subsample_fraction < 1.0) {
            RngStream stream(scene.render.seed,
                             hash_combine(subsample_salt, static_cast<uint64_t>(view)));
            subset = subsample_pixels(ctx.output.mask, subsample_fraction, stream);
            subset_ptr = &subset;
        }

        const double l_im = loss_image_l1(ctx.output.image, target.image, subset_ptr);
        out.parts.image += l_im * inv_views;

        ImageRgb d_image = loss_image_l1_backward(ctx.output.image, target.image, subset_ptr);
        const double image_scale = weights.image * inv_views;
        for (Rgb& g : d_image.data) g *= image_scale;

        GridF d_mask(ctx.output.mask.width, ctx.output.mask.height);
        if (target.has_mask) {
            if (target.mask.count() != ctx.output.mask.count())
                throw std::runtime_error("total_loss: target mask resolution mismatch");
            const double l_msk = loss_iou(ctx.output.mask, target.mask);
            out.parts.mask += l_msk * inv_views;
            d_mask = loss_iou_backward(ctx.output.mask, target.mask);
            const double mask_scale = weights.mask * inv_views;
            for (double& g : d_mask.data) g *= mask_scale;
        }

        if (alpha_per > 0.0) {
            ImageRgb d_per(ctx.output.image.width, ctx.output.image.height);
            const double l_per = (*perceptual)(ctx.output.image, target.image, d_per);
            out.parts.perceptual += l_per * inv_views;
            const double per_scale = alpha_per * inv_views;
            for (int64_t p = 0; p < d_image.count(); ++p) d_image[p] += d_per[p] * per_scale;
        }

        out.grads += render_backward(scene, ctx, d_image, &d_mask);
    }

    out.parts.laplacian = loss_laplacian(scene.mesh, initial_mesh);
    const std::vector<Vec3> d_lap = loss_laplacian_backward(scene.mesh, initial_mesh);
    for (int vtx = 0; vtx < layout.vertex_count; ++vtx) {
        out.grads.values[layout.offset_vertex + 3 * vtx] += weights.laplacian * d_lap[vtx].x;
        out.grads.values[layout.offset_vertex + 3 * vtx + 1] += weights.laplacian * d_lap[vtx].y;
        out.grads.values[layout.offset_vertex + 3 * vtx + 2] += weights.laplacian * d_lap[vtx].z;
    }

    out.parts.total = weights.image * out.parts.image + weights.mask * out.parts.mask +
                      alpha_per * out.parts.perceptual +
                      weights.laplacian * out.parts.laplacian;
    return out;
}

namespace {

enum class Reparam { Raw, Sigmoid, Softplus, Tangent, ClampPositive, ClampUnit };

Reparam reparam_of(const ParamLayout& layout, int64_t index) {
    switch (layout.family_of(index)) {
        case ParamFamily::Vertex: return Reparam::Raw;
        case ParamFamily::Albedo: return Reparam::ClampUnit;
        case ParamFamily::Specular:
        case ParamFamily::Roughness:
        case ParamFamily::Metalness: return Reparam::Sigmoid;
        case ParamFamily::Env: return Reparam::ClampPositive;
        case ParamFamily::SgLight: break;
    }
    const int slot = static_cast<int>((index - layout.offset_light) % 6);
    if (slot <= 1) return Reparam::Tangent;
    if (slot == 2) return Reparam::Softplus;
    return Reparam::ClampPositive;
}

double family_lr(const ParamLayout& layout, int64_t index, const OptimizeTask& task) {
    if (task.lr_override >= 0.0) return task.lr_override;
    switch (layout.family_of(index)) {
        case ParamFamily::Vertex: return task.lr_vertex;
        case ParamFamily::Env:
        case ParamFamily::SgLight: return task.lr_lighting;
        default: return task.lr_material;
    }
}

double to_unconstrained(Reparam r, double scene_value) {
    switch (r) {
        case Reparam::Sigmoid: return sigmoid_inv(scene_value);
        case Reparam::Softplus: return softplus_inv(scene_value);
        case Reparam::Tangent: return 0.0;
        default: return scene_value;
    }
}

double from_unconstrained(Reparam r, double u) {
    switch (r) {
        case Reparam::Sigmoid: return sigmoid(u);
        case Reparam::Softplus: return softplus(u);
        case Reparam::ClampPositive: return std::max(u, 0.0);
        case Reparam::ClampUnit: return clamp(u, 0.0, 1.0);
        default: return u;
    }
}

double chain_to_unconstrained(Reparam r, double u, double scene_grad) {
    switch (r) {
        case Reparam::Sigmoid: return scene_grad * sigmoid_deriv(u);
        case Reparam::Softplus: return scene_grad * softplus_deriv(u);
        default: return scene_grad;
    }
}

}  // namespace

OptimizeResult optimize(const Scene& initial, const OptimizeTask& task) {
    if (task.targets.empty()) throw std::runtime_error("optimize: task has no target views");
    if (task.free_params.empty())
        throw std::runtime_error("optimize: task has an empty free-parameter set");
    if (task.steps < 0) throw std::runtime_error("optimize: negative step count");

    const ParamLayout layout = param_layout(initial);

    // Expand selector patterns into a sorted, deduplicated index set.
    std::set<int64_t> index_set;
    for (const std::string& pattern : task.free_params) {
        for (int64_t i : match_params(layout, pattern, layout.total)) index_set.insert(i);
    }
    const std::vector<int64_t> free_indices(index_set.begin(), index_set.end());

    Scene scene = initial;
    const Mesh initial_mesh = initial.mesh;

    const size_t m = free_indices.size();
    std::vector<Reparam> reparams(m);
    std::vector<double> u(m), gu(m), lr_scale(m);
    for (size_t i = 0; i < m; ++i) {
        reparams[i] = reparam_of(layout, free_indices[i]);
        u[i] = to_unconstrained(reparams[i], get_param(scene, layout, free_indices[i]));
        lr_scale[i] = family_lr(layout, free_indices[i], task);
    }

    AdamState state;
    AdamConfig adam = task.adam;
    adam.lr = 1.0;  // per-parameter rates via lr_scale

    OptimizeResult result;
    result.scene = scene;
    double best = std::numeric_limits<double>::infinity();

    const RenderContext before_ctx =
        render_with_context(scene, task.backend, false, nullptr, nullptr,
                            &task.targets[0].camera);
    result.before = before_ctx.output.image;

    auto evaluate = [&](bool with_grads, uint64_t salt) {
        return total_loss(scene, task.backend, task.targets, task.weights, initial_mesh,
                          with_grads ? task.subsample : 1.0, salt);
    };

    for (int step = 0; step < task.steps; ++step) {
        const TotalLossResult tl = evaluate(true, static_cast<uint64_t>(step));
        if (!std::isfinite(tl.parts.total))
            throw std::runtime_error("optimize: non-finite loss at step " + std::to_string(step));
        result.trace.push_back(tl.parts);
        if (step == 0) result.initial = tl.parts;
        if (tl.parts.total < best) {
            best = tl.parts.total;
            result.scene = scene;
            result.best = tl.parts;
        }

        for (size_t i = 0; i < m; ++i)
            gu[i] = chain_to_unconstrained(reparams[i], u[i],
                                           tl.grads.values[free_indices[i]]);
        std::vector<double> u_before = u;
        adam_step_scaled(u, gu, lr_scale, state, adam);

        std::vector<int64_t> tangent_indices;
        std::vector<double> tangent_deltas;
        for (size_t i = 0; i < m; ++i) {
            if (u[i] == u_before[i]) continue;  // bitwise no-op updates leave the scene alone
            if (reparams[i] == Reparam::Tangent) {
                tangent_indices.push_back(free_indices[i]);
                tangent_deltas.push_back(u[i]);
                u[i] = 0.0;  // tangent offsets are deltas about the moved axis
            } else {
                const double value = from_unconstrained(reparams[i], u[i]);
                set_param(scene, layout, free_indices[i], value);
                if (reparams[i] == Reparam::ClampPositive || reparams[i] == Reparam::ClampUnit)
                    u[i] = value;  // projected step
            }
        }
        // Both tangent components of a lobe move the axis in one step.
        apply_param_offsets(scene, layout, tangent_indices, tangent_deltas);
    }

    const TotalLossResult last = evaluate(false, static_cast<uint64_t>(task.steps));
    if (task.steps == 0) result.initial = last.parts;
    result.trace.push_back(last.parts);
    if (last.parts.total < best) {
        best = last.parts.total;
        result.scene = scene;
        result.best = last.parts;
    }

    const RenderContext after_ctx =
        render_with_context(result.scene, task.backend, false, nullptr, nullptr,
                            &task.targets[0].camera);
    result.after = after_ctx.output.image;
    return result;
}

namespace {

[[noreturn]] void task_fail(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::string trim_copy(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string resolve_rel(const std::string& base, const std::string& rel) {
    if (!rel.empty() && rel[0] == '/') return rel;
    const size_t slash = base.find_last_of('/');
    return slash == std::string::npos ? rel : base.substr(0, slash + 1) + rel;
}

GridF luminance_grid(const ImageRgb& img) {
    GridF g(img.width, img.height);
    for (int64_t p = 0; p < img.count(); ++p) g[p] = luminance(img[p]);
    return g;
}

}  // namespace

ParsedTask parse_task(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open task file");

    ParsedTask parsed;
    OptimizeTask& task = parsed.task;
    std::string scene_path;
    bool scene_loaded = false;
    bool backend_set = false;

    std::string section, line;
    int lineno = 0;
    auto require_scene = [&](const char* context) {
        if (!scene_loaded)
            task_fail(path, lineno, std::string(context) + " requires [scene] to come first");
    };

    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim_copy(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') task_fail(path, lineno, "malformed section header");
            section = trim_copy(line.substr(1, line.size() - 2));
            if (section != "scene" && section != "targets" && section != "free" && section != "opt")
                task_fail(path, lineno, "unknown section [" + section + "]");
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) task_fail(path, lineno, "expected 'key = value'");
        const std::string key = trim_copy(line.substr(0, eq));
        const std::string value = trim_copy(line.substr(eq + 1));

        if (section == "scene") {
            if (key != "path") task_fail(path, lineno, "unknown key '" + key + "' in [scene]");
            scene_path = resolve_rel(path, value);
            parsed.scene = parse_scene(scene_path);
            scene_loaded = true;
        } else if (section == "targets") {
            require_scene("[targets]");
            auto num = [&](const std::string& v) {
                try { return std::stod(v); }
                catch (const std::exception&) { task_fail(path, lineno, "expected a number"); }
            };
            auto vec = [&](const std::string& v) {
                std::istringstream ss(v);
                Vec3 r;
                if (!(ss >> r.x >> r.y >> r.z)) task_fail(path, lineno, "expected 3 numbers");
                return r;
            };
            if (key == "image") {
                TargetView view;
                view.camera = parsed.scene.camera;
                view.image_path = resolve_rel(path, value);
                view.image = load_pfm(view.image_path);
                task.targets.push_back(std::move(view));
            } else if (task.targets.empty()) {
                task_fail(path, lineno, "target key '" + key + "' before any 'image'");
            } else if (key == "mask") {
                TargetView& view = task.targets.back();
                view.mask_path = resolve_rel(path, value);
                view.mask = luminance_grid(load_pfm(view.mask_path));
                view.has_mask = true;
            } else if (key == "eye") {
                task.targets.back().camera.eye = vec(value);
            } else if (key == "lookat") {
                task.targets.back().camera.lookat = vec(value);
            } else if (key == "up") {
                task.targets.back().camera.up = normalize(vec(value));
            } else if (key == "fov_deg") {
                task.targets.back().camera.vertical_fov = num(value) * kPi / 180.0;
            } else {
                task_fail(path, lineno, "unknown key '" + key + "' in [targets]");
            }
        } else if (section == "free") {
            if (key != "param") task_fail(path, lineno, "unknown key '" + key + "' in [free]");
            task.free_params.push_back(value);
        } else if (section == "opt") {
            auto num = [&](const std::string& v) {
                try { return std::stod(v); }
                catch (const std::exception&) { task_fail(path, lineno, "expected a number"); }
            };
            if (key == "steps") task.steps = static_cast<int>(num(value));
            else if (key == "lr") task.lr_override = num(value);
            else if (key == "lr_material") task.lr_material = num(value);
            else if (key == "lr_lighting") task.lr_lighting = num(value);
            else if (key == "lr_vertex") task.lr_vertex = num(value);
            else if (key == "backend") { task.backend = backend_from_name(value); backend_set = true; }
            else if (key == "subsample") task.subsample = num(value);
            else if (key == "seed") task.seed = static_cast<uint64_t>(num(value));
            else if (key == "alpha_im") task.weights.image = num(value);
            else if (key == "alpha_msk") task.weights.mask = num(value);
            else if (key == "alpha_per") task.weights.perceptual = num(value);
            else if (key == "alpha_lap") task.weights.laplacian = num(value);
            else task_fail(path, lineno, "unknown key '" + key + "' in [opt]");
        } else {
            task_fail(path, lineno, "key '" + key + "' outside any section");
        }
    }

    if (!scene_loaded) throw std::runtime_error(path + ": missing [scene] path");
    if (task.targets.empty()) throw std::runtime_error(path + ": no targets declared");
    if (!(task.subsample > 0.0 && task.subsample <= 1.0))
        throw std::runtime_error(path + ": subsample must lie in (0,1]");
    if (!backend_set) task.backend = parsed.scene.render.backend;
    parsed.scene.render.seed = task.seed;
    return parsed;
}

}  // namespace glint
