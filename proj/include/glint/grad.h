// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "glint/shade.h"

namespace glint {

// Families of differentiable scene state, in flat parameter order.
enum class ParamFamily { Vertex, Albedo, Specular, Roughness, Metalness, Env, SgLight };

// Flat ordering over the scene's differentiable state:
//   vertices (xyz per vertex) | albedo texels (rgb) | specular | roughness |
//   metalness | lighting (env texels rgb, or per-lobe
//   [tangent1, tangent2, sharpness, amplitude rgb]).
// SG axis entries are tangent-plane offsets about the current axis: their
// value reads as 0 and writing moves the axis along the tangent basis.
struct ParamLayout {
    int vertex_count = 0;
    int albedo_width = 0, albedo_height = 0;
    LightType light = LightType::SgMixture;
    int env_width = 0, env_height = 0;
    int lobe_count = 0;

    int64_t offset_vertex = 0;
    int64_t offset_albedo = 0;
    int64_t offset_specular = 0;
    int64_t offset_roughness = 0;
    int64_t offset_metalness = 0;
    int64_t offset_light = 0;
    int64_t total = 0;

    ParamFamily family_of(int64_t index) const;
};

ParamLayout param_layout(const Scene& scene);

// dL/d(parameter) in scene space, one entry per layout slot.
struct GradRecord {
    ParamLayout layout;
    std::vector<double> values;

    explicit GradRecord(const ParamLayout& l) : layout(l), values(l.total, 0.0) {}
    GradRecord() = default;

    GradRecord& operator+=(const GradRecord& o);
    GradRecord& operator*=(double s);
};

// Selector syntax (see README): "specular" | "roughness" | "metalness" |
// "vertex:<i>:x|y|z" | "albedo:<x>,<y>:r|g|b" | "albedo:<flat>" |
// "env:<x>,<y>:r|g|b" | "env:<flat>" | "sg:<k>:t1|t2|lambda|mu_r|mu_g|mu_b".
// Prefixes ("albedo", "sg:3") match whole groups.
int64_t param_index(const ParamLayout& layout, const std::string& selector);
std::vector<int64_t> match_params(const ParamLayout& layout, const std::string& pattern,
                                  int64_t max_matches);
std::string param_name(const ParamLayout& layout, int64_t index);

double get_param(const Scene& scene, const ParamLayout& layout, int64_t index);
void set_param(Scene& scene, const ParamLayout& layout, int64_t index, double value);

// Adds deltas to many parameters at once. SG tangent pairs of one lobe are
// applied jointly (a single renormalization in the basis of the current
// axis), so the move is exactly the linearization the gradients refer to.
void apply_param_offsets(Scene& scene, const ParamLayout& layout,
                         const std::vector<int64_t>& indices,
                         const std::vector<double>& deltas);

// Exact adjoint of the implemented forward render. For the MC backend the
// recorded sample directions are replayed and held fixed; the densities and
// integrand factors are differentiated. d_mask_extra adds mask-loss adjoints
// on top of the composition term.
GradRecord render_backward(const Scene& scene, const RenderContext& ctx,
                           const ImageRgb& d_image, const GridF* d_mask_extra = nullptr);

enum class CheckLoss { ImageMean, MaskMean, BackgroundMean };

struct FdReport {
    std::string selector;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
    bool pass = false;
};

// Central finite difference of a scalar loss functional against the
// corresponding GradRecord entry. MC streams (and sampled directions) are
// frozen across the perturbed evaluations.
FdReport finite_diff_check(const Scene& scene, Backend backend,
                           const std::string& selector, double eps, double tol,
                           CheckLoss loss = CheckLoss::ImageMean);

}  // namespace glint
