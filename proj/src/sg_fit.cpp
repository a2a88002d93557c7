// SPDX-License-Identifier: Apache-2.0

#include "glint/sg_fit.h"

#include <stdexcept>

#include "glint/adam.h"
#include "glint/parallel.h"

namespace glint {

namespace {

// sin-weighted squared norm of the target, the loss denominator.
double target_energy(const EquirectImage& env) {
    double e = 0.0;
    for (int y = 0; y < env.height(); ++y) {
        const double w = env.row_sin_theta(y);
        for (int x = 0; x < env.width(); ++x)
            e += w * dot(env.pixels.at(x, y), env.pixels.at(x, y));
    }
    return e > 0.0 ? e : 1.0;
}

struct FitPartial {
    double num = 0.0;
    std::vector<SgLobeAdj> grads;
};

double loss_grad_impl(const SgEnvLight& light, const EquirectImage& env,
                      std::vector<SgLobeAdj>* grads, bool threaded) {
    const int k = light.lobe_count();
    const int64_t n = env.pixels.count();
    const double denom = target_energy(env);
    const int64_t nb = block_count(n);

    std::vector<FitPartial> partials(static_cast<size_t>(nb));
    auto block_body = [&](int64_t blk, int64_t lo, int64_t hi) {
        FitPartial& part = partials[static_cast<size_t>(blk)];
        if (grads) part.grads.assign(k, SgLobeAdj{});
        for (int64_t p = lo; p < hi; ++p) {
            const int x = static_cast<int>(p % env.width());
            const int y = static_cast<int>(p / env.width());
            const Direction w = env.pixel_direction(x, y);
            const double weight = env.row_sin_theta(y);

            const Rgb value = sg_env_eval(light, w);
            const Rgb resid = value - env.pixels.at(x, y);
            part.num += weight * dot(resid, resid);
            if (grads) {
                const Rgb d_value = 2.0 * weight / denom * resid;
                for (int l = 0; l < k; ++l)
                    sg_eval_backward(light.lobes[l], w, d_value, part.grads[(size_t)l]);
            }
        }
    };

    if (threaded) {
        parallel_for_blocks(n, kReduceBlock, block_body);
    } else {
        for (int64_t b = 0; b < nb; ++b) {
            const int64_t lo = b * kReduceBlock;
            block_body(b, lo, std::min(n, lo + kReduceBlock));
        }
    }

    double num = 0.0;
    if (grads) grads->assign(k, SgLobeAdj{});
    for (const FitPartial& part : partials) {
        num += part.num;
        if (grads)
            for (int l = 0; l < k; ++l) (*grads)[(size_t)l] += part.grads[(size_t)l];
    }
    return num / denom;
}

}  // namespace

double sg_fit_loss(const SgEnvLight& light, const EquirectImage& env) {
    return loss_grad_impl(light, env, nullptr, true);
}

double sg_fit_loss_grad(const SgEnvLight& light, const EquirectImage& env,
                        std::vector<SgLobeAdj>& grads) {
    return loss_grad_impl(light, env, &grads, true);
}

double sg_fit_loss_grad_serial(const SgEnvLight& light, const EquirectImage& env,
                               std::vector<SgLobeAdj>& grads) {
    return loss_grad_impl(light, env, &grads, false);
}

SgFitResult fit_env_sg(const EquirectImage& env, int lobe_count, int iterations,
                       double learning_rate) {
    if (lobe_count < 1) throw std::runtime_error("fit_env_sg: lobe count must be >= 1");
    if (env.width() < 1 || env.height() < 1)
        throw std::runtime_error("fit_env_sg: empty environment map");

    Rgb mean;
    for (const Rgb& p : env.pixels.data) mean += p;
    mean = mean / static_cast<double>(env.pixels.count());

    SgEnvLight light;
    light.lobes.resize(lobe_count);
    std::vector<double> u_lambda(lobe_count, softplus_inv(0.5 * lobe_count));
    for (int l = 0; l < lobe_count; ++l) {
        light.lobes[l].axis = fibonacci_direction(l, lobe_count);
        light.lobes[l].sharpness = softplus(u_lambda[l]);
        light.lobes[l].amplitude = mean;
    }

    // Parameter layout per lobe: [tangent1, tangent2, softplus^-1(lambda), mu rgb].
    const int stride = 6;
    std::vector<double> params(static_cast<size_t>(lobe_count) * stride, 0.0);
    std::vector<double> grads(params.size(), 0.0);
    for (int l = 0; l < lobe_count; ++l) {
        params[(size_t)l * stride + 2] = u_lambda[l];
        params[(size_t)l * stride + 3] = light.lobes[l].amplitude.r;
        params[(size_t)l * stride + 4] = light.lobes[l].amplitude.g;
        params[(size_t)l * stride + 5] = light.lobes[l].amplitude.b;
    }

    AdamState state;
    AdamConfig config;
    config.lr = learning_rate;

    SgFitResult result;
    result.light = light;
    double best = std::numeric_limits<double>::infinity();
    std::vector<SgLobeAdj> lobe_grads;

    for (int it = 0; it < iterations; ++it) {
        const double loss = sg_fit_loss_grad(light, env, lobe_grads);
        result.trace.push_back(loss);
        if (it == 0) result.initial_loss = loss;
        if (loss < best) {
            best = loss;
            result.light = light;
        }

        for (int l = 0; l < lobe_count; ++l) {
            Vec3 t, b;
            tangent_basis(light.lobes[l].axis, t, b);
            const size_t base = (size_t)l * stride;
            grads[base] = dot(lobe_grads[(size_t)l].axis, t);
            grads[base + 1] = dot(lobe_grads[(size_t)l].axis, b);
            grads[base + 2] = lobe_grads[(size_t)l].sharpness * softplus_deriv(params[base + 2]);
            grads[base + 3] = lobe_grads[(size_t)l].amplitude.r;
            grads[base + 4] = lobe_grads[(size_t)l].amplitude.g;
            grads[base + 5] = lobe_grads[(size_t)l].amplitude.b;
        }
        adam_step(params, grads, state, config);

        for (int l = 0; l < lobe_count; ++l) {
            const size_t base = (size_t)l * stride;
            Vec3 t, b;
            tangent_basis(light.lobes[l].axis, t, b);
            light.lobes[l].axis =
                normalize(light.lobes[l].axis + params[base] * t + params[base + 1] * b);
            params[base] = 0.0;  // tangent offsets are deltas about the new axis
            params[base + 1] = 0.0;
            light.lobes[l].sharpness = softplus(params[base + 2]);
            light.lobes[l].amplitude = Rgb(std::max(params[base + 3], 0.0),
                                           std::max(params[base + 4], 0.0),
                                           std::max(params[base + 5], 0.0));
            params[base + 3] = light.lobes[l].amplitude.r;
            params[base + 4] = light.lobes[l].amplitude.g;
            params[base + 5] = light.lobes[l].amplitude.b;
        }
    }

    const double last = sg_fit_loss(light, env);
    result.trace.push_back(last);
    if (iterations == 0) result.initial_loss = last;
    if (last < best) {
        best = last;
        result.light = light;
    }
    result.final_loss = best;
    return result;
}

EquirectImage sg_env_to_equirect(const SgEnvLight& light, int width, int height) {
    EquirectImage img(width, height);
    parallel_for(img.pixels.count(), [&](int64_t p) {
        const int x = static_cast<int>(p % width);
        const int y = static_cast<int>(p / width);
        img.pixels[p] = sg_env_eval(light, img.pixel_direction(x, y));
    });
    return img;
}

}  // namespace glint
