// SPDX-License-Identifier: Apache-2.0

#include "glint/brdf.h"

namespace glint {

namespace {

const Rgb kLumWeights(0.2126, 0.7152, 0.0722);

double clamped_roughness(double beta) { return clamp(beta, kMinRoughness, 1.0); }

bool roughness_interior(double beta) { return beta > kMinRoughness && beta < 1.0; }

// GGX normal distribution in NdotH.
double ggx_d(double ndoth, double alpha) {
    const double a2 = alpha * alpha;
    const double t = ndoth * ndoth * (a2 - 1.0) + 1.0;
    return a2 / (kPi * t * t);
}

// d(D)/d(NdotH) and d(D)/d(alpha)
void ggx_d_grad(double ndoth, double alpha, double& d_ndoth, double& d_alpha) {
    const double a2 = alpha * alpha;
    const double t = ndoth * ndoth * (a2 - 1.0) + 1.0;
    const double common = -2.0 * a2 / (kPi * t * t * t);
    d_ndoth = common * 2.0 * ndoth * (a2 - 1.0);
    d_alpha = 2.0 * alpha / (kPi * t * t) + common * ndoth * ndoth * 2.0 * alpha;
}

// Smith Lambda for GGX; c = cos(theta) > 0.
double smith_lambda(double c, double alpha) {
    const double q = alpha * alpha * (1.0 - c * c) / (c * c);
    return 0.5 * (std::sqrt(1.0 + q) - 1.0);
}

void smith_lambda_grad(double c, double alpha, double& d_c, double& d_alpha) {
    const double a2 = alpha * alpha;
    const double q = a2 * (1.0 - c * c) / (c * c);
    const double s = 0.25 / std::sqrt(1.0 + q);
    d_c = s * a2 * (-2.0 / (c * c * c));
    d_alpha = s * 2.0 * alpha * (1.0 - c * c) / (c * c);
}

double smith_g(double ndotl, double ndotv, double alpha) {
    return 1.0 / (1.0 + smith_lambda(ndotl, alpha) + smith_lambda(ndotv, alpha));
}

double schlick_weight(double c) {
    const double m = clamp(1.0 - c, 0.0, 1.0);
    return m * m * m * m * m;
}

Rgb fresnel_f0(const BrdfParams& p, const Rgb& albedo) {
    const double dielectric = (1.0 - p.metalness) * kDielectricSpecularScale * p.specular;
    return Rgb(dielectric) + p.metalness * albedo;
}

// Grazing reflectance saturate(50 * lum(F0)): ordinary Schlick for any real
// material, and exactly zero specular when F0 is zero.
double fresnel_f90(const Rgb& f0) { return clamp(50.0 * luminance(f0), 0.0, 1.0); }

}  // namespace

Rgb brdf_eval(const BrdfParams& p, const Rgb& albedo, const Direction& n,
              const Direction& wi, const Direction& wo) {
    const double ndotl = dot(n, wi);
    const double ndotv = dot(n, wo);
    if (ndotl <= 0.0 || ndotv <= 0.0) return Rgb{};

    const Rgb diffuse = (1.0 - p.metalness) * albedo * kInvPi;

    const Vec3 hsum = wi + wo;
    const Direction h = normalize(hsum);
    const double ndoth = dot(n, h);
    const double hdotv = dot(h, wo);

    const double alpha = sqr(clamped_roughness(p.roughness));
    const double d = ggx_d(ndoth, alpha);
    const double g = smith_g(ndotl, ndotv, alpha);
    const Rgb f0 = fresnel_f0(p, albedo);
    const double w5 = schlick_weight(hdotv);
    const Rgb fresnel = f0 * (1.0 - w5) + Rgb(fresnel_f90(f0) * w5);

    const double k = d * g / (4.0 * ndotl * ndotv);
    return diffuse + fresnel * k;
}

void brdf_eval_backward(const BrdfParams& p, const Rgb& albedo, const Direction& n,
                        const Direction& wi, const Direction& wo, const Rgb& d_out,
                        BrdfAdjoint& adj) {
    const double ndotl = dot(n, wi);
    const double ndotv = dot(n, wo);
    if (ndotl <= 0.0 || ndotv <= 0.0) return;

    const Vec3 hsum = wi + wo;
    const Direction h = normalize(hsum);
    const double ndoth = dot(n, h);
    const double hdotv = dot(h, wo);

    const double alpha = sqr(clamped_roughness(p.roughness));
    const double d = ggx_d(ndoth, alpha);
    const double g = smith_g(ndotl, ndotv, alpha);
    const Rgb f0 = fresnel_f0(p, albedo);
    const double w5 = schlick_weight(hdotv);
    const double f90 = fresnel_f90(f0);
    const Rgb fresnel = f0 * (1.0 - w5) + Rgb(f90 * w5);
    const double k = d * g / (4.0 * ndotl * ndotv);

    // Diffuse term.
    adj.albedo += d_out * (1.0 - p.metalness) * kInvPi;
    adj.metalness -= dot(d_out, albedo) * kInvPi;

    // Specular term: f_s = k * F.
    const Rgb d_fresnel = d_out * k;
    const double d_k = dot(d_out, fresnel);

    // Fresnel: F = F0 (1 - w5) + F90 w5, F90 = saturate(50 lum(F0)).
    Rgb d_f0 = d_fresnel * (1.0 - w5);
    const double d_f90 = sum(d_fresnel) * w5;
    if (f90 > 0.0 && f90 < 1.0) d_f0 += d_f90 * 50.0 * kLumWeights;
    const double d_w5 = sum(d_fresnel * (Rgb(f90) - f0));
    double d_hdotv = (hdotv < 1.0) ? d_w5 * -5.0 * sqr(sqr(1.0 - hdotv)) : 0.0;

    // F0 = (1-m) 0.08 s + m a.
    adj.specular += sum(d_f0) * (1.0 - p.metalness) * kDielectricSpecularScale;
    adj.metalness += dot(d_f0, albedo - Rgb(kDielectricSpecularScale * p.specular));
    adj.albedo += d_f0 * p.metalness;

    // k = D G / (4 NdotL NdotV).
    const double denom = 4.0 * ndotl * ndotv;
    const double d_d = d_k * g / denom;
    const double d_g = d_k * d / denom;
    double d_ndotl = -d_k * k / ndotl;
    double d_ndotv = -d_k * k / ndotv;

    // D(NdotH, alpha).
    double dd_ndoth, dd_alpha;
    ggx_d_grad(ndoth, alpha, dd_ndoth, dd_alpha);
    double d_ndoth = d_d * dd_ndoth;
    double d_alpha = d_d * dd_alpha;

    // G = 1 / (1 + lambda_l + lambda_v).
    double dl_c, dl_a, dv_c, dv_a;
    smith_lambda_grad(ndotl, alpha, dl_c, dl_a);
    smith_lambda_grad(ndotv, alpha, dv_c, dv_a);
    const double d_lam = -d_g * g * g;
    d_ndotl += d_lam * dl_c;
    d_ndotv += d_lam * dv_c;
    d_alpha += d_lam * (dl_a + dv_a);

    // alpha = clamp(beta)^2.
    if (roughness_interior(p.roughness))
        adj.roughness += d_alpha * 2.0 * clamped_roughness(p.roughness);

    // Geometry chains; wi is held fixed.
    Vec3 d_h = d_ndoth * n + d_hdotv * wo;
    adj.normal += d_ndotl * wi + d_ndotv * wo + d_ndoth * h;
    adj.view += d_ndotv * n + d_hdotv * h;
    adj.view += normalize_backward(hsum, d_h);
}

double brdf_pdf(const BrdfParams& p, const Rgb& albedo, const Direction& n,
                const Direction& wi, const Direction& wo) {
    const double ndotl = dot(n, wi);
    const double ndotv = dot(n, wo);
    if (ndotl <= 0.0 || ndotv <= 0.0) return 0.0;

    const double wd = luminance((1.0 - p.metalness) * albedo);
    const double ws = luminance(fresnel_f0(p, albedo));
    const double pd = wd + ws > 0.0 ? wd / (wd + ws) : 1.0;

    const double pdf_diffuse = ndotl * kInvPi;

    const Vec3 hsum = wi + wo;
    const Direction h = normalize(hsum);
    const double ndoth = dot(n, h);
    const double hdotv = dot(h, wo);
    double pdf_specular = 0.0;
    if (ndoth > 0.0 && hdotv > 0.0) {
        const double alpha = sqr(clamped_roughness(p.roughness));
        pdf_specular = ggx_d(ndoth, alpha) * ndoth / (4.0 * hdotv);
    }
    return pd * pdf_diffuse + (1.0 - pd) * pdf_specular;
}

void brdf_pdf_backward(const BrdfParams& p, const Rgb& albedo, const Direction& n,
                       const Direction& wi, const Direction& wo, double d_pdf,
                       BrdfAdjoint& adj) {
    const double ndotl = dot(n, wi);
    const double ndotv = dot(n, wo);
    if (ndotl <= 0.0 || ndotv <= 0.0) return;

    const double wd = luminance((1.0 - p.metalness) * albedo);
    const double ws = luminance(fresnel_f0(p, albedo));
    const bool degenerate_mix = !(wd + ws > 0.0);
    const double pd = degenerate_mix ? 1.0 : wd / (wd + ws);

    const double pdf_diffuse = ndotl * kInvPi;

    const Vec3 hsum = wi + wo;
    const Direction h = normalize(hsum);
    const double ndoth = dot(n, h);
    const double hdotv = dot(h, wo);
    const double alpha = sqr(clamped_roughness(p.roughness));
    const bool spec_live = ndoth > 0.0 && hdotv > 0.0;
    const double d_ggx = spec_live ? ggx_d(ndoth, alpha) : 0.0;
    const double pdf_specular = spec_live ? d_ggx * ndoth / (4.0 * hdotv) : 0.0;

    // Mixture weight path.
    if (!degenerate_mix) {
        const double d_pd = d_pdf * (pdf_diffuse - pdf_specular);
        const double inv2 = 1.0 / sqr(wd + ws);
        const double d_wd = d_pd * ws * inv2;
        const double d_ws = -d_pd * wd * inv2;
        adj.albedo += (d_wd * (1.0 - p.metalness) + d_ws * p.metalness) * kLumWeights;
        adj.metalness += d_wd * -luminance(albedo);
        adj.metalness += d_ws * (luminance(albedo) - kDielectricSpecularScale * p.specular);
        adj.specular += d_ws * (1.0 - p.metalness) * kDielectricSpecularScale;
    }

    // Diffuse density path.
    const double d_ndotl = d_pdf * pd * kInvPi;
    adj.normal += d_ndotl * wi;

    // Specular density path.
    if (spec_live) {
        const double d_ps = d_pdf * (1.0 - pd);
        double dd_ndoth, dd_alpha;
        ggx_d_grad(ndoth, alpha, dd_ndoth, dd_alpha);
        const double d_ndoth = d_ps * (dd_ndoth * ndoth + d_ggx) / (4.0 * hdotv);
        const double d_alpha = d_ps * dd_alpha * ndoth / (4.0 * hdotv);
        const double d_hdotv = -d_ps * pdf_specular / hdotv;
        if (roughness_interior(p.roughness))
            adj.roughness += d_alpha * 2.0 * clamped_roughness(p.roughness);
        Vec3 d_h = d_ndoth * n + d_hdotv * wo;
        adj.normal += d_ndoth * h;
        adj.view += d_hdotv * h;
        adj.view += normalize_backward(hsum, d_h);
    }
}

BrdfSample brdf_sample(const BrdfParams& p, const Rgb& albedo, const Direction& n,
                       const Direction& wo, double u1, double u2, double u3) {
    const double wd = luminance((1.0 - p.metalness) * albedo);
    const double ws = luminance(fresnel_f0(p, albedo));
    const double pd = wd + ws > 0.0 ? wd / (wd + ws) : 1.0;

    Vec3 t, b;
    tangent_basis(n, t, b);
    const double phi = kTwoPi * u3;

    Direction wi;
    if (u1 < pd) {
        // Cosine-weighted hemisphere about n.
        const double r = std::sqrt(u2);
        const double z = std::sqrt(std::max(0.0, 1.0 - u2));
        wi = normalize(r * std::cos(phi) * t + r * std::sin(phi) * b + z * n);
    } else {
        // GGX half-vector sampling, then reflection of wo.
        const double alpha = sqr(clamped_roughness(p.roughness));
        const double c2 = (1.0 - u2) / (1.0 + (alpha * alpha - 1.0) * u2);
        const double ch = std::sqrt(c2);
        const double sh = std::sqrt(std::max(0.0, 1.0 - c2));
        const Direction h = normalize(sh * std::cos(phi) * t + sh * std::sin(phi) * b + ch * n);
        if (dot(wo, h) <= 0.0) return {};
        wi = reflect(wo, h);
    }
    if (dot(n, wi) <= 0.0) return {};

    BrdfSample s;
    s.direction = wi;
    s.pdf = brdf_pdf(p, albedo, n, wi, wo);
    if (!(s.pdf > 0.0)) return {};
    s.value = brdf_eval(p, albedo, n, wi, wo);
    return s;
}

SgLobe specular_to_sg(const BrdfParams& p, const Rgb& albedo, const Direction& n,
                      const Direction& wo) {
    const double alpha = sqr(clamped_roughness(p.roughness));
    const double lambda_ndf = 2.0 / (alpha * alpha);
    const double amp_ndf = 1.0 / (kPi * alpha * alpha);

    const double ndotv = std::abs(dot(n, wo));
    const Vec3 r = reflect(wo, n);

    const double lambda = lambda_ndf / (4.0 * ndotv + 1e-4);

    // Remaining Cook-Torrance factors at the lobe center wi = r, where the
    // half vector is n and |n.wi| = |n.wo|.
    const double cv = std::max(ndotv, 1e-4);
    const double f0 = luminance(fresnel_f0(p, albedo));
    const double f90 = fresnel_f90(Rgb(f0));
    const double fres = f0 + (f90 - f0) * schlick_weight(cv);
    const double g = smith_g(cv, cv, alpha);
    const double amp = amp_ndf * fres * g / (4.0 * cv * cv);

    SgLobe lobe;
    lobe.axis = normalize(r);
    lobe.sharpness = lambda;
    lobe.amplitude = Rgb(amp);
    return lobe;
}

void specular_to_sg_backward(const BrdfParams& p, const Rgb& albedo, const Direction& n,
                             const Direction& wo, const SgLobeAdj& d_lobe,
                             BrdfAdjoint& adj) {
    const double beta = clamped_roughness(p.roughness);
    const double alpha = sqr(beta);
    const double lambda_ndf = 2.0 / (alpha * alpha);
    const double amp_ndf = 1.0 / (kPi * alpha * alpha);

    const double sdotv = dot(n, wo);
    const double ndotv = std::abs(sdotv);
    const double nv_sign = sdotv < 0.0 ? -1.0 : 1.0;
    const Vec3 r = reflect(wo, n);

    const double den = 4.0 * ndotv + 1e-4;
    const double cv = std::max(ndotv, 1e-4);
    const bool cv_live = ndotv > 1e-4;
    const double f0 = luminance(fresnel_f0(p, albedo));
    const double f90 = fresnel_f90(Rgb(f0));
    const double w5 = schlick_weight(cv);
    const double fres = f0 + (f90 - f0) * w5;
    const double g = smith_g(cv, cv, alpha);
    const double amp_tail = fres * g / (4.0 * cv * cv);

    double d_ndotv = 0.0;

    // axis = normalize(r)
    {
        const Vec3 d_r = normalize_backward(r, d_lobe.axis);
        Vec3 d_wo{}, d_n{};
        reflect_backward(wo, n, d_r, d_wo, d_n);
        adj.view += d_wo;
        adj.normal += d_n;
    }

    // sharpness = lambda_ndf / (4 |n.wo| + 1e-4)
    double d_lambda_ndf = d_lobe.sharpness / den;
    d_ndotv += d_lobe.sharpness * -lambda_ndf / (den * den) * 4.0;

    // amplitude (monochromatic; adjoint summed over channels)
    const double d_amp = sum(d_lobe.amplitude);
    double d_amp_ndf = d_amp * amp_tail;
    const double d_fres = d_amp * amp_ndf * g / (4.0 * cv * cv);
    const double d_g = d_amp * amp_ndf * fres / (4.0 * cv * cv);
    double d_cv = d_amp * amp_ndf * fres * g * -2.0 / (4.0 * cv * cv * cv);

    // Fresnel at center: F = F0 + (F90 - F0) w5.
    double d_f0 = d_fres * (1.0 - w5);
    if (f90 > 0.0 && f90 < 1.0) d_f0 += d_fres * w5 * 50.0;
    d_cv += d_fres * (f90 - f0) * (cv < 1.0 ? -5.0 * sqr(sqr(1.0 - cv)) : 0.0);
    adj.specular += d_f0 * (1.0 - p.metalness) * kDielectricSpecularScale;
    adj.metalness += d_f0 * (luminance(albedo) - kDielectricSpecularScale * p.specular);
    adj.albedo += d_f0 * p.metalness * kLumWeights;

    // Smith G with both cosines equal to cv.
    double dl_c, dl_a;
    smith_lambda_grad(cv, alpha, dl_c, dl_a);
    const double d_lam = -d_g * g * g;
    d_cv += d_lam * 2.0 * dl_c;
    double d_alpha = d_lam * 2.0 * dl_a;

    // NDF constants.
    d_alpha += d_lambda_ndf * -4.0 / (alpha * alpha * alpha);
    d_alpha += d_amp_ndf * -2.0 / (kPi * alpha * alpha * alpha);

    if (cv_live) d_ndotv += d_cv;
    if (roughness_interior(p.roughness)) adj.roughness += d_alpha * 2.0 * beta;

    adj.normal += d_ndotv * nv_sign * wo;
    adj.view += d_ndotv * nv_sign * n;
}

}  // namespace glint
