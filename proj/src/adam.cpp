// SPDX-License-Identifier: Apache-2.0

#include "glint/adam.h"

#include <cmath>
#include <stdexcept>

namespace glint {

namespace {

void step_impl(std::vector<double>& params, const std::vector<double>& grads,
               const std::vector<double>* lr_scale, AdamState& state,
               const AdamConfig& config) {
    if (params.size() != grads.size())
        throw std::runtime_error("adam_step: parameter/gradient shape mismatch");
    if (lr_scale && lr_scale->size() != params.size())
        throw std::runtime_error("adam_step: learning-rate scale shape mismatch");
    if (state.m.size() != params.size()) state.reset(params.size());

    state.t += 1;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        const double lr = lr_scale ? config.lr * (*lr_scale)[i] : config.lr;
        const double delta = lr * m_hat / (std::sqrt(v_hat) + config.eps);
        if (delta != 0.0) params[i] -= delta;
    }
}

}  // namespace

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamConfig& config) {
    step_impl(params, grads, nullptr, state, config);
}

void adam_step_scaled(std::vector<double>& params, const std::vector<double>& grads,
                      const std::vector<double>& lr_scale, AdamState& state,
                      const AdamConfig& config) {
    step_impl(params, grads, &lr_scale, state, config);
}

}  // namespace glint
