// SPDX-License-Identifier: Apache-2.0

#include "glint/grad.h"

#include <charconv>
#include <stdexcept>

#include "glint/parallel.h"

namespace glint {

namespace {

[[noreturn]] void selector_fail(const std::string& s, const std::string& why) {
    throw std::runtime_error("selector '" + s + "': " + why);
}

}  // namespace

ParamFamily ParamLayout::family_of(int64_t i) const {
    if (i < offset_albedo) return ParamFamily::Vertex;
    if (i < offset_specular) return ParamFamily::Albedo;
    if (i == offset_specular) return ParamFamily::Specular;
    if (i == offset_roughness) return ParamFamily::Roughness;
    if (i == offset_metalness) return ParamFamily::Metalness;
    return light == LightType::Envmap ? ParamFamily::Env : ParamFamily::SgLight;
}

ParamLayout param_layout(const Scene& scene) {
    ParamLayout l;
    l.vertex_count = scene.mesh.vertex_count();
    l.albedo_width = scene.brdf.albedo_texture.width;
    l.albedo_height = scene.brdf.albedo_texture.height;
    l.light = scene.light_type;
    if (scene.light_type == LightType::Envmap) {
        l.env_width = scene.envmap.width();
        l.env_height = scene.envmap.height();
    } else {
        l.lobe_count = scene.sg_light.lobe_count();
    }
    l.offset_vertex = 0;
    l.offset_albedo = l.offset_vertex + 3ll * l.vertex_count;
    l.offset_specular = l.offset_albedo + 3ll * l.albedo_width * l.albedo_height;
    l.offset_roughness = l.offset_specular + 1;
    l.offset_metalness = l.offset_roughness + 1;
    l.offset_light = l.offset_metalness + 1;
    const int64_t light_size = scene.light_type == LightType::Envmap
                                   ? 3ll * l.env_width * l.env_height
                                   : 6ll * l.lobe_count;
    l.total = l.offset_light + light_size;
    return l;
}

GradRecord& GradRecord::operator+=(const GradRecord& o) {
    for (size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
}

GradRecord& GradRecord::operator*=(double s) {
    for (double& v : values) v *= s;
    return *this;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

int64_t parse_int(const std::string& tok, const std::string& sel) {
    int64_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
        selector_fail(sel, "expected an integer, got '" + tok + "'");
    return v;
}

int channel_of(const std::string& tok, const std::string& sel) {
    if (tok == "r" || tok == "x") return 0;
    if (tok == "g" || tok == "y") return 1;
    if (tok == "b" || tok == "z") return 2;
    selector_fail(sel, "expected a channel (r|g|b or x|y|z), got '" + tok + "'");
}

constexpr const char* kSgSlotNames[6] = {"t1", "t2", "lambda", "mu_r", "mu_g", "mu_b"};

int sg_slot_of(const std::string& tok, const std::string& sel) {
    for (int i = 0; i < 6; ++i)
        if (tok == kSgSlotNames[i]) return i;
    selector_fail(sel, "expected t1|t2|lambda|mu_r|mu_g|mu_b, got '" + tok + "'");
}

// Flat index of a texel selector "X,Y:c" or "<flat>" within a grid group.
int64_t grid_index(const std::vector<std::string>& parts, size_t first, int width,
                   int height, const std::string& sel) {
    if (parts.size() == first + 1) {
        const auto comma = parts[first].find(',');
        if (comma == std::string::npos) {
            const int64_t flat = parse_int(parts[first], sel);
            if (flat < 0 || flat >= 3ll * width * height) selector_fail(sel, "index out of range");
            return flat;
        }
        selector_fail(sel, "texel selector needs a channel, e.g. albedo:3,5:g");
    }
    if (parts.size() != first + 2) selector_fail(sel, "too many ':' fields");
    const auto xy = split(parts[first], ',');
    if (xy.size() != 2) selector_fail(sel, "expected 'x,y'");
    const int64_t x = parse_int(xy[0], sel);
    const int64_t y = parse_int(xy[1], sel);
    if (x < 0 || x >= width || y < 0 || y >= height) selector_fail(sel, "texel out of range");
    return 3 * (y * width + x) + channel_of(parts[first + 1], sel);
}

}  // namespace

int64_t param_index(const ParamLayout& layout, const std::string& selector) {
    const auto parts = split(selector, ':');
    const std::string& head = parts[0];
    if (head == "specular" && parts.size() == 1) return layout.offset_specular;
    if (head == "roughness" && parts.size() == 1) return layout.offset_roughness;
    if (head == "metalness" && parts.size() == 1) return layout.offset_metalness;
    if (head == "vertex") {
        if (parts.size() != 3) selector_fail(selector, "expected vertex:<i>:x|y|z");
        const int64_t v = parse_int(parts[1], selector);
        if (v < 0 || v >= layout.vertex_count) selector_fail(selector, "vertex out of range");
        return layout.offset_vertex + 3 * v + channel_of(parts[2], selector);
    }
    if (head == "albedo") {
        if (parts.size() < 2) selector_fail(selector, "expected albedo:<flat> or albedo:<x,y>:<c>");
        return layout.offset_albedo +
               grid_index(parts, 1, layout.albedo_width, layout.albedo_height, selector);
    }
    if (head == "env") {
        if (layout.light != LightType::Envmap) selector_fail(selector, "scene has no env map");
        if (parts.size() < 2) selector_fail(selector, "expected env:<flat> or env:<x,y>:<c>");
        return layout.offset_light +
               grid_index(parts, 1, layout.env_width, layout.env_height, selector);
    }
    if (head == "sg") {
        if (layout.light != LightType::SgMixture) selector_fail(selector, "scene has no SG light");
        if (parts.size() != 3) selector_fail(selector, "expected sg:<k>:<slot>");
        const int64_t k = parse_int(parts[1], selector);
        if (k < 0 || k >= layout.lobe_count) selector_fail(selector, "lobe out of range");
        return layout.offset_light + 6 * k + sg_slot_of(parts[2], selector);
    }
    selector_fail(selector, "unknown parameter");
}

std::vector<int64_t> match_params(const ParamLayout& layout, const std::string& pattern,
                                  int64_t max_matches) {
    // Group prefixes expand to ranges; anything else must name one parameter.
    int64_t lo = -1, hi = -1;
    const auto parts = split(pattern, ':');
    if (pattern == "vertex") {
        lo = layout.offset_vertex;
        hi = layout.offset_albedo;
    } else if (pattern == "albedo") {
        lo = layout.offset_albedo;
        hi = layout.offset_specular;
    } else if (pattern == "env" && layout.light == LightType::Envmap) {
        lo = layout.offset_light;
        hi = layout.total;
    } else if (pattern == "sg" && layout.light == LightType::SgMixture) {
        lo = layout.offset_light;
        hi = layout.total;
    } else if (parts.size() == 2 && parts[0] == "sg" && layout.light == LightType::SgMixture) {
        const int64_t k = parse_int(parts[1], pattern);
        if (k < 0 || k >= layout.lobe_count) selector_fail(pattern, "lobe out of range");
        lo = layout.offset_light + 6 * k;
        hi = lo + 6;
    } else if (parts.size() == 2 && parts[0] == "vertex") {
        const int64_t v = parse_int(parts[1], pattern);
        if (v < 0 || v >= layout.vertex_count) selector_fail(pattern, "vertex out of range");
        lo = layout.offset_vertex + 3 * v;
        hi = lo + 3;
    } else {
        const int64_t idx = param_index(layout, pattern);
        lo = idx;
        hi = idx + 1;
    }
    std::vector<int64_t> out;
    for (int64_t i = lo; i < hi && static_cast<int64_t>(out.size()) < max_matches; ++i)
        out.push_back(i);
    return out;
}

std::string param_name(const ParamLayout& layout, int64_t index) {
    const char* rgb = "rgb";
    const char* xyz = "xyz";
    switch (layout.family_of(index)) {
        case ParamFamily::Vertex: {
            const int64_t r = index - layout.offset_vertex;
            return "vertex:" + std::to_string(r / 3) + ":" + xyz[r % 3];
        }
        case ParamFamily::Albedo: {
            const int64_t r = index - layout.offset_albedo;
            const int64_t texel = r / 3;
            return "albedo:" + std::to_string(texel % layout.albedo_width) + "," +
                   std::to_string(texel / layout.albedo_width) + ":" + rgb[r % 3];
        }
        case ParamFamily::Specular: return "specular";
        case ParamFamily::Roughness: return "roughness";
        case ParamFamily::Metalness: return "metalness";
        case ParamFamily::Env: {
            const int64_t r = index - layout.offset_light;
            const int64_t texel = r / 3;
            return "env:" + std::to_string(texel % layout.env_width) + "," +
                   std::to_string(texel / layout.env_width) + ":" + rgb[r % 3];
        }
        case ParamFamily::SgLight: {
            const int64_t r = index - layout.offset_light;
            return "sg:" + std::to_string(r / 6) + ":" + kSgSlotNames[r % 6];
        }
    }
    return "?";
}

double get_param(const Scene& scene, const ParamLayout& layout, int64_t index) {
    switch (layout.family_of(index)) {
        case ParamFamily::Vertex: {
            const int64_t r = index - layout.offset_vertex;
            return scene.mesh.vertices[r / 3][static_cast<int>(r % 3)];
        }
        case ParamFamily::Albedo: {
            const int64_t r = index - layout.offset_albedo;
            return scene.brdf.albedo_texture[r / 3][static_cast<int>(r % 3)];
        }
        case ParamFamily::Specular: return scene.brdf.specular;
        case ParamFamily::Roughness: return scene.brdf.roughness;
        case ParamFamily::Metalness: return scene.brdf.metalness;
        case ParamFamily::Env: {
            const int64_t r = index - layout.offset_light;
            return scene.envmap.pixels[r / 3][static_cast<int>(r % 3)];
        }
        case ParamFamily::SgLight: {
            const int64_t r = index - layout.offset_light;
            const SgLobe& lobe = scene.sg_light.lobes[r / 6];
            switch (r % 6) {
                case 0: case 1: return 0.0;  // tangent offsets about the current axis
                case 2: return lobe.sharpness;
                default: return lobe.amplitude[static_cast<int>(r % 6) - 3];
            }
        }
    }
    return 0.0;
}

void set_param(Scene& scene, const ParamLayout& layout, int64_t index, double value) {
    switch (layout.family_of(index)) {
        case ParamFamily::Vertex: {
            const int64_t r = index - layout.offset_vertex;
            scene.mesh.vertices[r / 3][static_cast<int>(r % 3)] = value;
            return;
        }
        case ParamFamily::Albedo: {
            const int64_t r = index - layout.offset_albedo;
            scene.brdf.albedo_texture[r / 3][static_cast<int>(r % 3)] = value;
            return;
        }
        case ParamFamily::Specular: scene.brdf.specular = value; return;
        case ParamFamily::Roughness: scene.brdf.roughness = value; return;
        case ParamFamily::Metalness: scene.brdf.metalness = value; return;
        case ParamFamily::Env: {
            const int64_t r = index - layout.offset_light;
            scene.envmap.pixels[r / 3][static_cast<int>(r % 3)] = value;
            return;
        }
        case ParamFamily::SgLight: {
            const int64_t r = index - layout.offset_light;
            SgLobe& lobe = scene.sg_light.lobes[r / 6];
            const int slot = static_cast<int>(r % 6);
            if (slot <= 1) {
                if (value != 0.0) {
                    Vec3 t, b;
                    tangent_basis(lobe.axis, t, b);
                    lobe.axis = normalize(lobe.axis + value * (slot == 0 ? t : b));
                }
            } else if (slot == 2) {
                lobe.sharpness = value;
            } else {
                lobe.amplitude[slot - 3] = value;
            }
            return;
        }
    }
}

void apply_param_offsets(Scene& scene, const ParamLayout& layout,
                         const std::vector<int64_t>& indices,
                         const std::vector<double>& deltas) {
    if (indices.size() != deltas.size())
        throw std::runtime_error("apply_param_offsets: shape mismatch");

    // Tangent offsets are gathered per lobe and applied in one move.
    std::vector<std::pair<int64_t, Vec2>> tangent;  // lobe -> (dt1, dt2)
    auto tangent_slot = [&](int64_t lobe) -> Vec2& {
        for (auto& entry : tangent)
            if (entry.first == lobe) return entry.second;
        tangent.emplace_back(lobe, Vec2{});
        return tangent.back().second;
    };

    for (size_t k = 0; k < indices.size(); ++k) {
        const int64_t index = indices[k];
        if (layout.family_of(index) == ParamFamily::SgLight) {
            const int64_t r = index - layout.offset_light;
            const int slot = static_cast<int>(r % 6);
            if (slot <= 1) {
                Vec2& t = tangent_slot(r / 6);
                (slot == 0 ? t.x : t.y) += deltas[k];
                continue;
            }
        }
        set_param(scene, layout, index, get_param(scene, layout, index) + deltas[k]);
    }

    for (const auto& [lobe_index, offset] : tangent) {
        if (offset.x == 0.0 && offset.y == 0.0) continue;
        SgLobe& lobe = scene.sg_light.lobes[static_cast<size_t>(lobe_index)];
        Vec3 t, b;
        tangent_basis(lobe.axis, t, b);
        lobe.axis = normalize(lobe.axis + offset.x * t + offset.y * b);
    }
}

namespace {

// Per-block accumulator for parameters shared across pixels.
struct SharedGrads {
    std::vector<Rgb> albedo;        // per texel
    double specular = 0.0, roughness = 0.0, metalness = 0.0;
    std::vector<Rgb> env;           // per texel
    std::vector<SgLobeAdj> lobes;   // ambient-space axis adjoints
};

void mc_backward_pixel(const PixelSurface& surf, const EquirectImage& env,
                       const BrdfParams& brdf, const Rgb& albedo,
                       std::span<const Vec3> dirs, const Rgb& d_out,
                       BrdfAdjoint& badj, std::vector<Rgb>& d_env) {
    if (dirs.empty()) return;
    const double inv_n = 1.0 / static_cast<double>(dirs.size());
    for (const Vec3& w : dirs) {
        if (length_squared(w) == 0.0) continue;
        const double pdf = brdf_pdf(brdf, albedo, surf.normal, w, surf.view);
        if (!(pdf > 0.0)) continue;
        const Rgb f = brdf_eval(brdf, albedo, surf.normal, w, surf.view);
        const BilinearFootprint fp = env.footprint(w);
        const Rgb radiance = gather(env.pixels, fp);
        const double cosine = dot(surf.normal, w);
        const double scale = cosine / pdf * inv_n;

        const Rgb d_f = d_out * radiance * scale;
        const Rgb d_radiance = d_out * f * scale;
        const double fl = dot(d_out, f * radiance);
        const double d_cos = fl / pdf * inv_n;
        const double d_pdf = -fl * cosine / (pdf * pdf) * inv_n;

        // Scatter the radiance adjoint onto the bilinear footprint.
        d_env[static_cast<size_t>(fp.y0) * env.width() + fp.x0] += d_radiance * fp.w00;
        d_env[static_cast<size_t>(fp.y0) * env.width() + fp.x1] += d_radiance * fp.w01;
        d_env[static_cast<size_t>(fp.y1) * env.width() + fp.x0] += d_radiance * fp.w10;
        d_env[static_cast<size_t>(fp.y1) * env.width() + fp.x1] += d_radiance * fp.w11;

        badj.normal += d_cos * w;
        brdf_eval_backward(brdf, albedo, surf.normal, w, surf.view, d_f, badj);
        brdf_pdf_backward(brdf, albedo, surf.normal, w, surf.view, d_pdf, badj);
    }
}

}  // namespace

GradRecord render_backward(const Scene& scene, const RenderContext& ctx,
                           const ImageRgb& d_image, const GridF* d_mask_extra) {
    const GBuffer& gb = ctx.gbuffer;
    const int64_t n = gb.pixel_count();
    if (d_image.count() != n)
        throw std::runtime_error("render_backward: adjoint image shape mismatch");
    if (d_mask_extra && d_mask_extra->count() != n)
        throw std::runtime_error("render_backward: adjoint mask shape mismatch");
    if (ctx.backend == Backend::Mc && !ctx.has_mc_record)
        throw std::runtime_error("render_backward: MC context lacks recorded samples");

    const ParamLayout layout = param_layout(scene);
    GradRecord rec(layout);

    RasterAdjoints radj;
    radj.d_position.assign(n, Vec3{});
    radj.d_normal.assign(n, Vec3{});
    radj.d_uv.assign(n, Vec2{});
    radj.d_soft_mask.assign(n, 0.0);

    const int64_t texels = static_cast<int64_t>(layout.albedo_width) * layout.albedo_height;
    const int64_t env_texels = static_cast<int64_t>(layout.env_width) * layout.env_height;
    const int64_t nb = block_count(n);
    std::vector<SharedGrads> partials(static_cast<size_t>(nb));

    parallel_for_blocks(n, kReduceBlock, [&](int64_t blk, int64_t lo, int64_t hi) {
        SharedGrads& acc = partials[static_cast<size_t>(blk)];
        acc.albedo.assign(static_cast<size_t>(texels), Rgb{});
        if (layout.light == LightType::Envmap)
            acc.env.assign(static_cast<size_t>(env_texels), Rgb{});
        else
            acc.lobes.assign(static_cast<size_t>(layout.lobe_count), SgLobeAdj{});

        std::vector<SgLobeAdj> lobe_adj(static_cast<size_t>(layout.lobe_count));
        for (int64_t p = lo; p < hi; ++p) {
            const Rgb d_i = d_image[p];
            const double v = gb.soft_mask[p];

            // I = V C + (1 - V) B.
            double d_v = dot(d_i, ctx.fg_shaded[p] - ctx.background[p]);
            if (d_mask_extra) d_v += (*d_mask_extra)[p];
            radj.d_soft_mask[p] = d_v;

            const Rgb d_c = d_i * v;
            const bool shaded = gb.visibility[p] && (ctx.active.empty() || ctx.active[p]);
            if (!shaded || (d_c.r == 0.0 && d_c.g == 0.0 && d_c.b == 0.0)) continue;

            const PixelSurface surf{gb.position[p], gb.normal[p], gb.uv[p], gb.view[p]};
            const TextureSample tex =
                sample_texture(scene.brdf.albedo_texture, surf.uv.x, surf.uv.y);

            BrdfAdjoint badj;
            if (ctx.backend == Backend::Sg) {
                for (auto& la : lobe_adj) la = SgLobeAdj{};
                shade_sg_backward(surf, scene.sg_light, scene.brdf, tex.value, d_c, badj,
                                  lobe_adj);
                for (size_t l = 0; l < lobe_adj.size(); ++l) acc.lobes[l] += lobe_adj[l];
            } else {
                mc_backward_pixel(surf, scene.envmap, scene.brdf, tex.value,
                                  ctx.mc.pixel_samples(p), d_c, badj, acc.env);
            }

            // Albedo: scatter onto the sampled footprint, plus the uv chain.
            const BilinearFootprint& fp = tex.footprint;
            acc.albedo[static_cast<size_t>(fp.y0) * layout.albedo_width + fp.x0] += badj.albedo * fp.w00;
            acc.albedo[static_cast<size_t>(fp.y0) * layout.albedo_width + fp.x1] += badj.albedo * fp.w01;
            acc.albedo[static_cast<size_t>(fp.y1) * layout.albedo_width + fp.x0] += badj.albedo * fp.w10;
            acc.albedo[static_cast<size_t>(fp.y1) * layout.albedo_width + fp.x1] += badj.albedo * fp.w11;
            radj.d_uv[p] = Vec2(dot(badj.albedo, tex.d_du), dot(badj.albedo, tex.d_dv));

            acc.specular += badj.specular;
            acc.roughness += badj.roughness;
            acc.metalness += badj.metalness;
            radj.d_normal[p] = badj.normal;

            // view = normalize(eye - position).
            radj.d_position[p] =
                -normalize_backward(ctx.camera.eye - surf.position, badj.view);
        }
    });

    // Merge block partials in block order.
    for (const SharedGrads& acc : partials) {
        for (int64_t t = 0; t < texels; ++t) {
            rec.values[layout.offset_albedo + 3 * t] += acc.albedo[static_cast<size_t>(t)].r;
            rec.values[layout.offset_albedo + 3 * t + 1] += acc.albedo[static_cast<size_t>(t)].g;
            rec.values[layout.offset_albedo + 3 * t + 2] += acc.albedo[static_cast<size_t>(t)].b;
        }
        rec.values[layout.offset_specular] += acc.specular;
        rec.values[layout.offset_roughness] += acc.roughness;
        rec.values[layout.offset_metalness] += acc.metalness;
        if (layout.light == LightType::Envmap) {
            for (int64_t t = 0; t < env_texels; ++t) {
                rec.values[layout.offset_light + 3 * t] += acc.env[static_cast<size_t>(t)].r;
                rec.values[layout.offset_light + 3 * t + 1] += acc.env[static_cast<size_t>(t)].g;
                rec.values[layout.offset_light + 3 * t + 2] += acc.env[static_cast<size_t>(t)].b;
            }
        } else {
            for (int l = 0; l < layout.lobe_count; ++l) {
                const SgLobeAdj& a = acc.lobes[static_cast<size_t>(l)];
                const SgLobe& lobe = scene.sg_light.lobes[static_cast<size_t>(l)];
                Vec3 t, b;
                tangent_basis(lobe.axis, t, b);
                const int64_t base = layout.offset_light + 6ll * l;
                rec.values[base] += dot(a.axis, t);
                rec.values[base + 1] += dot(a.axis, b);
                rec.values[base + 2] += a.sharpness;
                rec.values[base + 3] += a.amplitude.r;
                rec.values[base + 4] += a.amplitude.g;
                rec.values[base + 5] += a.amplitude.b;
            }
        }
    }

    const MeshGrad mesh_grad =
        raster_backward(scene.mesh, ctx.camera, gb, radj, ctx.sigma);
    for (int vtx = 0; vtx < layout.vertex_count; ++vtx) {
        rec.values[layout.offset_vertex + 3 * vtx] = mesh_grad.d_vertices[vtx].x;
        rec.values[layout.offset_vertex + 3 * vtx + 1] = mesh_grad.d_vertices[vtx].y;
        rec.values[layout.offset_vertex + 3 * vtx + 2] = mesh_grad.d_vertices[vtx].z;
    }
    return rec;
}

namespace {

struct LossEval {
    double value = 0.0;
    ImageRgb d_image;
    GridF d_mask;
};

LossEval eval_check_loss(const RenderContext& ctx, CheckLoss kind, bool with_adjoints) {
    const int64_t n = ctx.output.image.count();
    LossEval out;
    if (with_adjoints) {
        out.d_image = ImageRgb(ctx.output.image.width, ctx.output.image.height);
        out.d_mask = GridF(ctx.output.image.width, ctx.output.image.height);
    }
    if (kind == CheckLoss::ImageMean) {
        double s = 0.0;
        for (int64_t p = 0; p < n; ++p) s += sum(ctx.output.image[p]);
        out.value = s / (3.0 * n);
        if (with_adjoints)
            for (int64_t p = 0; p < n; ++p) out.d_image[p] = Rgb(1.0 / (3.0 * n));
    } else if (kind == CheckLoss::MaskMean) {
        double s = 0.0;
        for (int64_t p = 0; p < n; ++p) s += ctx.output.mask[p];
        out.value = s / static_cast<double>(n);
        if (with_adjoints)
            for (int64_t p = 0; p < n; ++p) out.d_mask[p] = 1.0 / static_cast<double>(n);
    } else {
        int64_t count = 0;
        double s = 0.0;
        for (int64_t p = 0; p < n; ++p) {
            if (ctx.output.mask[p] == 0.0) {
                s += sum(ctx.output.image[p]);
                ++count;
            }
        }
        out.value = count > 0 ? s / (3.0 * count) : 0.0;
        if (with_adjoints && count > 0) {
            for (int64_t p = 0; p < n; ++p)
                if (ctx.output.mask[p] == 0.0) out.d_image[p] = Rgb(1.0 / (3.0 * count));
        }
    }
    return out;
}

}  // namespace

FdReport finite_diff_check(const Scene& scene, Backend backend,
                           const std::string& selector, double eps, double tol,
                           CheckLoss loss) {
    const ParamLayout layout = param_layout(scene);
    const int64_t idx = param_index(layout, selector);

    const bool mc = backend == Backend::Mc;
    const RenderContext ctx = render_with_context(scene, backend, mc);
    const LossEval base = eval_check_loss(ctx, loss, true);
    const GradRecord rec = render_backward(scene, ctx, base.d_image, &base.d_mask);

    const double center = get_param(scene, layout, idx);
    double side[2];
    for (int s = 0; s < 2; ++s) {
        Scene pert = scene;
        set_param(pert, layout, idx, center + (s == 0 ? eps : -eps));
        const RenderContext pctx =
            render_with_context(pert, backend, false, nullptr, mc ? &ctx.mc : nullptr);
        side[s] = eval_check_loss(pctx, loss, false).value;
    }

    FdReport report;
    report.selector = selector;
    report.analytic = rec.values[idx];
    report.numeric = (side[0] - side[1]) / (2.0 * eps);
    const double mag = std::max(std::abs(report.analytic), std::abs(report.numeric));
    report.rel_error = mag > 0.0 ? std::abs(report.analytic - report.numeric) /
                                       std::max(mag, 1e-12)
                                 : 0.0;
    report.pass = report.rel_error <= tol;
    return report;
}

}  // namespace glint
