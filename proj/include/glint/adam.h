// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

namespace glint {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    int64_t t = 0;

    void reset(size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        t = 0;
    }
};

// Standard Adam with bias correction. Components whose update is exactly
// zero leave the parameter bitwise untouched. Throws on shape mismatch.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamConfig& config);

// Per-parameter learning-rate variant (same semantics).
void adam_step_scaled(std::vector<double>& params, const std::vector<double>& grads,
                      const std::vector<double>& lr_scale, AdamState& state,
                      const AdamConfig& config);

}  // namespace glint
