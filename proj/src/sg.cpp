// SPDX-License-Identifier: Apache-2.0

#include "glint/sg.h"

namespace glint {

namespace {

// A(lambda) = 2*pi*(1 - exp(-2*lambda))/lambda and its derivative, with the
// removable singularity at 0 expanded in series.
double integral_factor(double lambda) {
    if (lambda < 1e-6)
        return kTwoPi * (2.0 - 2.0 * lambda + (4.0 / 3.0) * lambda * lambda);
    return kTwoPi * (1.0 - std::exp(-2.0 * lambda)) / lambda;
}

double integral_factor_deriv(double lambda) {
    if (lambda < 1e-6) return kTwoPi * (-2.0 + (8.0 / 3.0) * lambda);
    const double e = std::exp(-2.0 * lambda);
    return kTwoPi * (2.0 * lambda * e - (1.0 - e)) / (lambda * lambda);
}

}  // namespace

Rgb sg_eval(const SgLobe& lobe, const Direction& w) {
    const double e = std::exp(lobe.sharpness * (dot(lobe.axis, w) - 1.0));
    return lobe.amplitude * e;
}

void sg_eval_backward(const SgLobe& lobe, const Direction& w, const Rgb& d_out,
                      SgLobeAdj& d_lobe, Vec3* d_w) {
    const double c = dot(lobe.axis, w) - 1.0;
    const double e = std::exp(lobe.sharpness * c);
    d_lobe.amplitude += d_out * e;
    const double amp_dot = dot(d_out, lobe.amplitude) * e;
    d_lobe.sharpness += amp_dot * c;
    d_lobe.axis += amp_dot * lobe.sharpness * w;
    if (d_w) *d_w += amp_dot * lobe.sharpness * lobe.axis;
}

Rgb sg_integral(const SgLobe& lobe) {
    return lobe.amplitude * integral_factor(lobe.sharpness);
}

void sg_integral_backward(const SgLobe& lobe, const Rgb& d_out, SgLobeAdj& d_lobe) {
    d_lobe.amplitude += d_out * integral_factor(lobe.sharpness);
    d_lobe.sharpness += dot(d_out, lobe.amplitude) * integral_factor_deriv(lobe.sharpness);
}

SgLobe sg_product(const SgLobe& a, const SgLobe& b) {
    const Vec3 u = a.sharpness * a.axis + b.sharpness * b.axis;
    const double lp = length(u);
    SgLobe p;
    p.axis = lp > 1e-9 ? u / lp : Vec3(0.0, 1.0, 0.0);
    p.sharpness = lp;
    p.amplitude = a.amplitude * b.amplitude * std::exp(lp - a.sharpness - b.sharpness);
    return p;
}

void sg_product_backward(const SgLobe& a, const SgLobe& b, const SgLobe& product,
                         const SgLobeAdj& d_product, SgLobeAdj& d_a, SgLobeAdj& d_b) {
    const double scale = std::exp(product.sharpness - a.sharpness - b.sharpness);

    // amplitude' = mu_a * mu_b * exp(lambda' - lambda_a - lambda_b)
    d_a.amplitude += d_product.amplitude * b.amplitude * scale;
    d_b.amplitude += d_product.amplitude * a.amplitude * scale;
    const double amp_dot = dot(d_product.amplitude, product.amplitude);
    d_a.sharpness -= amp_dot;
    d_b.sharpness -= amp_dot;

    // Total adjoint on lambda' includes the exp factor path.
    const double d_lp = d_product.sharpness + amp_dot;

    // lambda' = |u|, axis' = u / |u| with u = la*xa + lb*xb.
    Vec3 d_u{};
    if (product.sharpness > 1e-9) {
        d_u += d_lp * product.axis;
        d_u += (d_product.axis - dot(product.axis, d_product.axis) * product.axis) /
               product.sharpness;
    }
    d_a.sharpness += dot(a.axis, d_u);
    d_a.axis += a.sharpness * d_u;
    d_b.sharpness += dot(b.axis, d_u);
    d_b.axis += b.sharpness * d_u;
}

Rgb sg_inner(const SgLobe& a, const SgLobe& b) {
    return sg_integral(sg_product(a, b));
}

void sg_inner_backward(const SgLobe& a, const SgLobe& b, const Rgb& d_out,
                       SgLobeAdj& d_a, SgLobeAdj& d_b) {
    const SgLobe p = sg_product(a, b);
    SgLobeAdj d_p;
    sg_integral_backward(p, d_out, d_p);
    sg_product_backward(a, b, p, d_p, d_a, d_b);
}

Rgb sg_env_eval(const SgEnvLight& light, const Direction& w) {
    Rgb sum;
    for (const SgLobe& lobe : light.lobes) sum += sg_eval(lobe, w);
    return sum;
}

}  // namespace glint
