// SPDX-License-Identifier: Apache-2.0

#include "glint/shade.h"

#include <algorithm>
#include <stdexcept>

#include "glint/parallel.h"

namespace glint {

Rgb shade_mc(const PixelSurface& surface, const EquirectImage& env,
             const BrdfParams& brdf, int n_samples, RngStream& stream,
             std::vector<Vec3>* record) {
    const Rgb albedo = brdf.albedo_at(surface.uv.x, surface.uv.y);
    Rgb sum;
    for (int k = 0; k < n_samples; ++k) {
        const double u1 = stream.next_uniform();
        const double u2 = stream.next_uniform();
        const double u3 = stream.next_uniform();
        const BrdfSample s = brdf_sample(brdf, albedo, surface.normal, surface.view, u1, u2, u3);
        if (record) record->push_back(s.pdf > 0.0 ? s.direction : Vec3{});
        if (!(s.pdf > 0.0)) continue;
        const Rgb radiance = env.sample(s.direction);
        const double cosine = dot(surface.normal, s.direction);
        sum += s.value * radiance * (cosine / s.pdf);
    }
    return sum / static_cast<double>(n_samples);
}

Rgb shade_mc_replay(const PixelSurface& surface, const EquirectImage& env,
                    const BrdfParams& brdf, std::span<const Vec3> directions) {
    if (directions.empty()) return Rgb{};
    const Rgb albedo = brdf.albedo_at(surface.uv.x, surface.uv.y);
    Rgb sum;
    for (const Vec3& w : directions) {
        if (length_squared(w) == 0.0) continue;  // null sample
        const double pdf = brdf_pdf(brdf, albedo, surface.normal, w, surface.view);
        if (!(pdf > 0.0)) continue;
        const Rgb value = brdf_eval(brdf, albedo, surface.normal, w, surface.view);
        const Rgb radiance = env.sample(w);
        const double cosine = dot(surface.normal, w);
        sum += value * radiance * (cosine / pdf);
    }
    return sum / static_cast<double>(directions.size());
}

Rgb shade_sg(const PixelSurface& surface, const SgEnvLight& light,
             const BrdfParams& brdf) {
    const Rgb albedo = brdf.albedo_at(surface.uv.x, surface.uv.y);
    const Rgb diffuse_weight = (1.0 - brdf.metalness) * albedo * kInvPi;
    const SgLobe cosine = cosine_sg(surface.normal);
    const SgLobe specular = specular_to_sg(brdf, albedo, surface.normal, surface.view);

    Rgb out;
    for (const SgLobe& lobe : light.lobes) {
        out += diffuse_weight * sg_inner(lobe, cosine);
        out += sg_integral(sg_product(sg_product(specular, lobe), cosine));
    }
    return out;
}

void shade_sg_backward(const PixelSurface& surface, const SgEnvLight& light,
                       const BrdfParams& brdf, const Rgb& albedo, const Rgb& d_out,
                       BrdfAdjoint& brdf_adj, std::vector<SgLobeAdj>& light_adj) {
    const Rgb diffuse_weight = (1.0 - brdf.metalness) * albedo * kInvPi;
    const SgLobe cosine = cosine_sg(surface.normal);
    const SgLobe specular = specular_to_sg(brdf, albedo, surface.normal, surface.view);

    Rgb d_diffuse_weight{};
    SgLobeAdj d_cosine{}, d_specular{};
    for (size_t k = 0; k < light.lobes.size(); ++k) {
        const SgLobe& lobe = light.lobes[k];

        // Diffuse: out += diffuse_weight * sg_inner(lobe, cosine).
        const Rgb inner = sg_inner(lobe, cosine);
        d_diffuse_weight += d_out * inner;
        sg_inner_backward(lobe, cosine, d_out * diffuse_weight, light_adj[k], d_cosine);

        // Specular: out += integral(product(product(specular, lobe), cosine)).
        const SgLobe p1 = sg_product(specular, lobe);
        const SgLobe p2 = sg_product(p1, cosine);
        SgLobeAdj d_p2{}, d_p1{};
        sg_integral_backward(p2, d_out, d_p2);
        sg_product_backward(p1, cosine, p2, d_p2, d_p1, d_cosine);
        sg_product_backward(specular, lobe, p1, d_p1, d_specular, light_adj[k]);
    }

    // diffuse_weight = (1 - m) * albedo / pi.
    brdf_adj.albedo += d_diffuse_weight * (1.0 - brdf.metalness) * kInvPi;
    brdf_adj.metalness -= dot(d_diffuse_weight, albedo) * kInvPi;

    specular_to_sg_backward(brdf, albedo, surface.normal, surface.view, d_specular, brdf_adj);

    // cosine_sg axis is the shading normal; its amplitude/sharpness are fixed.
    brdf_adj.normal += d_cosine.axis;
}

namespace {

PixelSurface surface_at(const GBuffer& gb, int64_t p) {
    return {gb.position[p], gb.normal[p], gb.uv[p], gb.view[p]};
}

Rgb background_at(const Scene& scene, const CameraFrame& frame, int i, int j) {
    if (!scene.background_is_env) return scene.background_color;
    return scene.background_env.sample(frame.pixel_ray(i, j));
}

RenderContext render_impl(const Scene& scene, Backend backend, bool record_mc,
                          const std::vector<uint8_t>* active,
                          const McSampleRecord* replay, const Camera* camera_override,
                          bool threaded) {
    if (backend == Backend::Mc && scene.light_type != LightType::Envmap)
        throw std::runtime_error("render: backend mc requires [envmap] lighting");
    if (backend == Backend::Sg && scene.light_type != LightType::SgMixture)
        throw std::runtime_error("render: backend sg requires [sg_light] lighting");
    if (backend == Backend::Mc && scene.render.samples < 1)
        throw std::runtime_error("render: sample count must be >= 1");

    RenderContext ctx;
    ctx.backend = backend;
    ctx.seed = scene.render.seed;
    ctx.n_samples = scene.render.samples;
    ctx.camera = camera_override ? *camera_override : scene.camera;
    ctx.gbuffer = threaded ? rasterize(scene.mesh, ctx.camera, ctx.sigma)
                           : rasterize_serial(scene.mesh, ctx.camera, ctx.sigma);

    const int w = ctx.gbuffer.width;
    const int h = ctx.gbuffer.height;
    const int64_t n = ctx.gbuffer.pixel_count();
    if (active && static_cast<int64_t>(active->size()) != n)
        throw std::runtime_error("render: active mask shape mismatch");

    const CameraFrame frame(ctx.camera);
    ctx.background = ImageRgb(w, h);
    ctx.fg_shaded = ImageRgb(w, h);
    ctx.output.image = ImageRgb(w, h);
    ctx.output.foreground = ImageRgb(w, h);
    ctx.output.mask = GridF(w, h);
    ctx.output.samples = Grid<int32_t>(w, h, 0);

    const bool use_replay = replay != nullptr;
    if (use_replay && (replay->offset.size() != static_cast<size_t>(n) + 1))
        throw std::runtime_error("render: replay record shape mismatch");
    if (backend == Backend::Mc && record_mc && !use_replay) {
        ctx.mc.offset.assign(static_cast<size_t>(n) + 1, 0);
        for (int64_t p = 0; p < n; ++p) {
            const bool shaded = ctx.gbuffer.visibility[p] && (!active || (*active)[p]);
            ctx.mc.offset[p + 1] = ctx.mc.offset[p] + (shaded ? ctx.n_samples : 0);
        }
        ctx.mc.directions.assign(static_cast<size_t>(ctx.mc.offset[n]), Vec3{});
        ctx.has_mc_record = true;
    }

    auto shade_pixel = [&](int64_t p) {
        const int i = static_cast<int>(p % w);
        const int j = static_cast<int>(p / w);
        const Rgb bg = background_at(scene, frame, i, j);
        ctx.background[p] = bg;

        Rgb color{};
        if (ctx.gbuffer.visibility[p] && (!active || (*active)[p])) {
            const PixelSurface surf = surface_at(ctx.gbuffer, p);
            if (backend == Backend::Sg) {
                color = shade_sg(surf, scene.sg_light, scene.brdf);
            } else if (use_replay) {
                color = shade_mc_replay(surf, scene.envmap, scene.brdf, replay->pixel_samples(p));
                ctx.output.samples[p] = static_cast<int32_t>(replay->pixel_samples(p).size());
            } else {
                RngStream stream(ctx.seed, static_cast<uint64_t>(p));
                if (ctx.has_mc_record) {
                    std::vector<Vec3> dirs;
                    dirs.reserve(ctx.n_samples);
                    color = shade_mc(surf, scene.envmap, scene.brdf, ctx.n_samples, stream, &dirs);
                    std::copy(dirs.begin(), dirs.end(),
                              ctx.mc.directions.begin() + ctx.mc.offset[p]);
                } else {
                    color = shade_mc(surf, scene.envmap, scene.brdf, ctx.n_samples, stream);
                }
                ctx.output.samples[p] = ctx.n_samples;
            }
        }
        ctx.fg_shaded[p] = color;

        const double v = ctx.gbuffer.soft_mask[p];
        ctx.output.mask[p] = v;
        ctx.output.foreground[p] = v * color;
        ctx.output.image[p] = ctx.output.foreground[p] + (1.0 - v) * bg;
    };

    if (threaded) {
        parallel_for(n, shade_pixel);
    } else {
        for (int64_t p = 0; p < n; ++p) shade_pixel(p);
    }
    return ctx;
}

}  // namespace

RenderContext render_with_context(const Scene& scene, Backend backend, bool record_mc,
                                  const std::vector<uint8_t>* active,
                                  const McSampleRecord* replay,
                                  const Camera* camera_override) {
    return render_impl(scene, backend, record_mc, active, replay, camera_override, true);
}

RenderOutput render(const Scene& scene, Backend backend) {
    return render_impl(scene, backend, false, nullptr, nullptr, nullptr, true).output;
}

RenderOutput render_serial(const Scene& scene, Backend backend) {
    return render_impl(scene, backend, false, nullptr, nullptr, nullptr, false).output;
}

std::vector<int64_t> subsample_pixels(const GridF& mask, double fraction,
                                      RngStream stream) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::runtime_error("subsample_pixels: fraction must lie in (0,1]");
    std::vector<int64_t> fg;
    for (int64_t p = 0; p < mask.count(); ++p)
        if (mask[p] > 0.5) fg.push_back(p);
    if (fg.empty()) return {};

    const int64_t want = std::min<int64_t>(
        fg.size(), static_cast<int64_t>(std::ceil(fraction * static_cast<double>(fg.size()))));

    // Partial Fisher-Yates over the foreground list.
    for (int64_t i = 0; i < want; ++i) {
        const int64_t remaining = static_cast<int64_t>(fg.size()) - i;
        const int64_t j = i + std::min<int64_t>(remaining - 1,
                              static_cast<int64_t>(stream.next_uniform() * remaining));
        std::swap(fg[i], fg[j]);
    }
    fg.resize(static_cast<size_t>(want));
    std::sort(fg.begin(), fg.end());
    return fg;
}

}  // namespace glint
