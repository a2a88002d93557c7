// SPDX-License-Identifier: Apache-2.0

#include "glint/raster.h"

#include <limits>

#include "glint/parallel.h"

namespace glint {

namespace {

constexpr double kNearClip = 1e-4;
constexpr double kMinScreenArea = 1e-14;
constexpr int kTile = 32;
// exp(-44) is small enough that 1 - exp(-d^2/sigma) rounds to 1.0 exactly,
// so pruning faces beyond this radius cannot change any bit of the result.
constexpr double kSoftCutoff = 44.0;

struct ProjTri {
    Vec2 screen[3];
    Vec2 ndc[3];
    double depth[3];
    double area = 0.0;  // signed screen-space area
    bool valid = false;
    double lo_x = 0.0, lo_y = 0.0, hi_x = 0.0, hi_y = 0.0;  // screen bbox
};

std::vector<ProjTri> project_triangles(const Mesh& mesh, const CameraFrame& frame) {
    std::vector<ProjTri> tris(mesh.triangles.size());
    for (size_t f = 0; f < mesh.triangles.size(); ++f) {
        ProjTri& t = tris[f];
        bool in_front = true;
        for (int i = 0; i < 3; ++i) {
            const Vec3& v = mesh.vertices[mesh.triangles[f][i]];
            const CameraFrame::Projected pr = frame.project(v);
            if (!(pr.depth > kNearClip)) { in_front = false; break; }
            t.screen[i] = pr.screen;
            t.ndc[i] = frame.screen_to_ndc(pr.screen);
            t.depth[i] = pr.depth;
        }
        if (!in_front) continue;
        t.area = cross2(t.screen[1] - t.screen[0], t.screen[2] - t.screen[0]);
        if (std::abs(t.area) < kMinScreenArea) continue;
        t.valid = true;
        t.lo_x = std::min({t.screen[0].x, t.screen[1].x, t.screen[2].x});
        t.hi_x = std::max({t.screen[0].x, t.screen[1].x, t.screen[2].x});
        t.lo_y = std::min({t.screen[0].y, t.screen[1].y, t.screen[2].y});
        t.hi_y = std::max({t.screen[0].y, t.screen[1].y, t.screen[2].y});
    }
    return tris;
}

// Screen-space barycentrics at q; true iff q is covered.
bool screen_barycentrics(const ProjTri& t, const Vec2& q, Vec3& b) {
    const double e0 = cross2(t.screen[2] - t.screen[1], q - t.screen[1]);
    const double e1 = cross2(t.screen[0] - t.screen[2], q - t.screen[2]);
    const double e2 = cross2(t.screen[1] - t.screen[0], q - t.screen[0]);
    b = Vec3(e0 / t.area, e1 / t.area, e2 / t.area);
    return b.x >= 0.0 && b.y >= 0.0 && b.z >= 0.0;
}

void perspective_correct(const ProjTri& t, const Vec3& b, Vec3& bary, double& depth) {
    const double r0 = b.x / t.depth[0];
    const double r1 = b.y / t.depth[1];
    const double r2 = b.z / t.depth[2];
    depth = 1.0 / (r0 + r1 + r2);
    bary = Vec3(r0 * depth, r1 * depth, r2 * depth);
}

// Squared distance from q to triangle v in 2D, with the region needed for
// the adjoint: edge < 0 means interior, otherwise (edge, t) names the
// closest point a + t (b - a) on edge (v[edge], v[edge+1]).
struct Dist2 {
    double d2 = 0.0;
    int edge = -1;
    double t = 0.0;
};

Dist2 point_triangle_dist2(const Vec2& q, const Vec2 v[3]) {
    const double c0 = cross2(v[1] - v[0], q - v[0]);
    const double c1 = cross2(v[2] - v[1], q - v[1]);
    const double c2 = cross2(v[0] - v[2], q - v[2]);
    if ((c0 >= 0.0 && c1 >= 0.0 && c2 >= 0.0) || (c0 <= 0.0 && c1 <= 0.0 && c2 <= 0.0))
        return {};
    Dist2 best;
    best.d2 = std::numeric_limits<double>::infinity();
    for (int e = 0; e < 3; ++e) {
        const Vec2 a = v[e];
        const Vec2 edge = v[(e + 1) % 3] - a;
        const Vec2 u = q - a;
        const double len2 = dot(edge, edge);
        const double t = len2 > 0.0 ? clamp(dot(u, edge) / len2, 0.0, 1.0) : 0.0;
        const Vec2 w = u - t * edge;
        const double d2 = dot(w, w);
        if (d2 < best.d2) best = {d2, e, t};
    }
    return best;
}

struct TileBins {
    int tiles_x = 0, tiles_y = 0;
    std::vector<std::vector<int32_t>> cover;  // face ids per tile, face order
    std::vector<std::vector<int32_t>> soft;
};

TileBins build_bins(const std::vector<ProjTri>& tris, int width, int height,
                    double soft_radius_x, double soft_radius_y) {
    TileBins bins;
    bins.tiles_x = (width + kTile - 1) / kTile;
    bins.tiles_y = (height + kTile - 1) / kTile;
    const size_t n_tiles = static_cast<size_t>(bins.tiles_x) * bins.tiles_y;
    bins.cover.resize(n_tiles);
    bins.soft.resize(n_tiles);

    auto insert = [&](std::vector<std::vector<int32_t>>& dst, int32_t f, double lo_x,
                      double hi_x, double lo_y, double hi_y) {
        const int tx0 = std::max(0, static_cast<int>(std::floor((lo_x - 0.5) / kTile)));
        const int tx1 = std::min(bins.tiles_x - 1, static_cast<int>(std::floor((hi_x + 0.5) / kTile)));
        const int ty0 = std::max(0, static_cast<int>(std::floor((lo_y - 0.5) / kTile)));
        const int ty1 = std::min(bins.tiles_y - 1, static_cast<int>(std::floor((hi_y + 0.5) / kTile)));
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                dst[static_cast<size_t>(ty) * bins.tiles_x + tx].push_back(f);
    };

    for (size_t f = 0; f < tris.size(); ++f) {
        const ProjTri& t = tris[f];
        if (!t.valid) continue;
        insert(bins.cover, static_cast<int32_t>(f), t.lo_x, t.hi_x, t.lo_y, t.hi_y);
        insert(bins.soft, static_cast<int32_t>(f), t.lo_x - soft_radius_x,
               t.hi_x + soft_radius_x, t.lo_y - soft_radius_y, t.hi_y + soft_radius_y);
    }
    return bins;
}

// Coverage, depth test and soft mask for one pixel; candidates in face order.
void shade_coverage_pixel(const std::vector<ProjTri>& tris,
                          const std::vector<int32_t>& candidates, const Vec2& q,
                          int32_t& out_tri, Vec3& out_bary, double& out_depth) {
    out_tri = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int32_t f : candidates) {
        const ProjTri& t = tris[f];
        Vec3 b;
        if (!screen_barycentrics(t, q, b)) continue;
        Vec3 bary;
        double depth;
        perspective_correct(t, b, bary, depth);
        if (depth < best) {
            best = depth;
            out_tri = f;
            out_bary = bary;
            out_depth = depth;
        }
    }
}

double soft_mask_pixel(const std::vector<ProjTri>& tris,
                       const std::vector<int32_t>& candidates, const Vec2& q_ndc,
                       double sigma) {
    double transparent = 1.0;
    const double cutoff = kSoftCutoff * sigma;
    for (int32_t f : candidates) {
        const Dist2 d = point_triangle_dist2(q_ndc, tris[f].ndc);
        if (d.d2 >= cutoff) continue;
        transparent *= 1.0 - std::exp(-d.d2 / sigma);
        if (transparent == 0.0) break;  // absorbing; later factors are no-ops
    }
    return 1.0 - transparent;
}

void fill_surface_fields(const Mesh& mesh, const CameraFrame& frame, GBuffer& gb,
                         int64_t p) {
    const int32_t f = gb.triangle[p];
    const auto& tri = mesh.triangles[f];
    const Vec3& b = gb.barycentric[p];

    const Vec3 pos = b.x * mesh.vertices[tri[0]] + b.y * mesh.vertices[tri[1]] +
                     b.z * mesh.vertices[tri[2]];
    const Vec3 raw_n = b.x * mesh.normals[tri[0]] + b.y * mesh.normals[tri[1]] +
                       b.z * mesh.normals[tri[2]];
    const Vec2 uv = b.x * mesh.uvs[tri[0]] + b.y * mesh.uvs[tri[1]] +
                    b.z * mesh.uvs[tri[2]];
    const Vec3 to_eye = frame.eye - pos;
    const Direction view = normalize(to_eye);
    Direction n = normalize(raw_n);
    const bool flip = dot(n, view) < 0.0;  // shade double-sided
    if (flip) n = -n;

    gb.visibility[p] = 1;
    gb.position[p] = pos;
    gb.normal[p] = n;
    gb.normal_flipped[p] = flip ? 1 : 0;
    gb.uv[p] = uv;
    gb.view[p] = view;
}

GBuffer rasterize_impl(const Mesh& mesh, const Camera& camera, double sigma,
                       bool threaded) {
    const CameraFrame frame(camera);
    const int w = camera.width;
    const int h = camera.height;

    GBuffer gb;
    gb.width = w;
    gb.height = h;
    const int64_t n = gb.pixel_count();
    gb.visibility.assign(n, 0);
    gb.triangle.assign(n, -1);
    gb.barycentric.assign(n, Vec3{});
    gb.depth.assign(n, 0.0);
    gb.position.assign(n, Vec3{});
    gb.normal.assign(n, Vec3(0.0, 1.0, 0.0));
    gb.normal_flipped.assign(n, 0);
    gb.uv.assign(n, Vec2{});
    gb.view.assign(n, Vec3(0.0, 0.0, 1.0));
    gb.soft_mask.assign(n, 0.0);

    const std::vector<ProjTri> tris = project_triangles(mesh, frame);
    const double soft_rx = std::sqrt(kSoftCutoff * sigma) * 0.5 * w;
    const double soft_ry = std::sqrt(kSoftCutoff * sigma) * 0.5 * h;
    const TileBins bins = build_bins(tris, w, h, soft_rx, soft_ry);

    const int64_t n_tiles = static_cast<int64_t>(bins.tiles_x) * bins.tiles_y;
    auto tile_body = [&](int64_t tile) {
        const int tx = static_cast<int>(tile % bins.tiles_x);
        const int ty = static_cast<int>(tile / bins.tiles_x);
        const auto& cover = bins.cover[static_cast<size_t>(tile)];
        const auto& soft = bins.soft[static_cast<size_t>(tile)];
        for (int j = ty * kTile; j < std::min(h, (ty + 1) * kTile); ++j) {
            for (int i = tx * kTile; i < std::min(w, (tx + 1) * kTile); ++i) {
                const int64_t p = static_cast<int64_t>(j) * w + i;
                const Vec2 q(i + 0.5, j + 0.5);
                shade_coverage_pixel(tris, cover, q, gb.triangle[p], gb.barycentric[p],
                                     gb.depth[p]);
                if (gb.triangle[p] >= 0) fill_surface_fields(mesh, frame, gb, p);
                gb.soft_mask[p] = soft_mask_pixel(tris, soft, frame.screen_to_ndc(q), sigma);
            }
        }
    };

    if (threaded) {
        parallel_for(n_tiles, tile_body);
    } else {
        for (int64_t t = 0; t < n_tiles; ++t) tile_body(t);
    }
    return gb;
}

}  // namespace

GBuffer rasterize(const Mesh& mesh, const Camera& camera, double sigma) {
    return rasterize_impl(mesh, camera, sigma, true);
}

GBuffer rasterize_serial(const Mesh& mesh, const Camera& camera, double sigma) {
    return rasterize_impl(mesh, camera, sigma, false);
}

GridF soft_silhouette(const Mesh& mesh, const Camera& camera, double sigma) {
    const GBuffer gb = rasterize(mesh, camera, sigma);
    GridF mask(camera.width, camera.height);
    for (int64_t p = 0; p < gb.pixel_count(); ++p) mask[p] = gb.soft_mask[p];
    return mask;
}

MeshGrad& MeshGrad::operator+=(const MeshGrad& o) {
    for (size_t i = 0; i < d_vertices.size(); ++i) {
        d_vertices[i] += o.d_vertices[i];
        d_normals[i] += o.d_normals[i];
        d_uvs[i] += o.d_uvs[i];
    }
    return *this;
}

namespace {

// Adjoint of the perspective-correct barycentrics and of the attribute
// interpolation for one covered pixel. d_bary is the adjoint on the
// perspective-correct weights; the result lands on screen positions/depths,
// pulled back to world vertices by the caller.
void barycentric_backward(const ProjTri& t, const Vec2& q, const Vec3& d_bary,
                          Vec2 d_screen[3], double d_depth[3]) {
    Vec3 b;
    screen_barycentrics(t, q, b);
    const double r0 = b.x / t.depth[0];
    const double r1 = b.y / t.depth[1];
    const double r2 = b.z / t.depth[2];
    const double s = r0 + r1 + r2;
    const Vec3 bary(r0 / s, r1 / s, r2 / s);

    const double mix = dot(d_bary, bary);
    Vec3 d_b;
    for (int k = 0; k < 3; ++k) {
        const double d_r = (d_bary[k] - mix) / s;
        d_b[k] = d_r / t.depth[k];
        d_depth[k] -= d_r * b[k] / (t.depth[k] * t.depth[k]);
    }

    // b_k = e_k / area
    double d_area = 0.0;
    Vec3 d_e;
    for (int k = 0; k < 3; ++k) {
        d_e[k] = d_b[k] / t.area;
        d_area -= d_b[k] * b[k] / t.area;
    }

    // e_i = cross2(p_c - p_b, q - p_b) with (b, c) = (i+1, i+2); the partials
    // follow from expanding the cross product.
    for (int i = 0; i < 3; ++i) {
        const int ib = (i + 1) % 3;
        const int ic = (i + 2) % 3;
        const Vec2& pb = t.screen[ib];
        const Vec2& pc = t.screen[ic];
        d_screen[ib] += d_e[i] * Vec2(pc.y - q.y, q.x - pc.x);
        d_screen[ic] += d_e[i] * Vec2(q.y - pb.y, pb.x - q.x);
    }
    const Vec2& p0 = t.screen[0];
    const Vec2& p1 = t.screen[1];
    const Vec2& p2 = t.screen[2];
    d_screen[0] += d_area * Vec2(p1.y - p2.y, p2.x - p1.x);
    d_screen[1] += d_area * Vec2(p2.y - p0.y, p0.x - p2.x);
    d_screen[2] += d_area * Vec2(p0.y - p1.y, p1.x - p0.x);
}

void soft_backward_pixel(const std::vector<ProjTri>& tris,
                         const std::vector<int32_t>& candidates, const Vec2& q_ndc,
                         double sigma, double d_soft, int width, int height,
                         const Mesh& mesh, const CameraFrame& frame,
                         std::vector<Vec3>& d_vertices) {
    const double cutoff = kSoftCutoff * sigma;

    struct Factor {
        int32_t face;
        double g;
        Dist2 dist;
    };
    std::vector<Factor> factors;
    factors.reserve(8);
    for (int32_t f : candidates) {
        const Dist2 d = point_triangle_dist2(q_ndc, tris[f].ndc);
        if (d.d2 >= cutoff) continue;
        factors.push_back({f, std::exp(-d.d2 / sigma), d});
    }
    if (factors.empty()) return;

    const size_t m = factors.size();
    std::vector<double> prefix(m + 1, 1.0), suffix(m + 1, 1.0);
    for (size_t i = 0; i < m; ++i) prefix[i + 1] = prefix[i] * (1.0 - factors[i].g);
    for (size_t i = m; i-- > 0;) suffix[i] = suffix[i + 1] * (1.0 - factors[i].g);

    for (size_t i = 0; i < m; ++i) {
        const Factor& fac = factors[i];
        if (fac.dist.edge < 0) continue;  // interior: d^2 stationary
        const double loo = prefix[i] * suffix[i + 1];
        const double d_g = d_soft * loo;
        const double d_d2 = d_g * (-fac.g / sigma);
        if (d_d2 == 0.0) continue;

        const ProjTri& t = tris[fac.face];
        const int ea = fac.dist.edge;
        const int eb = (ea + 1) % 3;
        const Vec2 a = t.ndc[ea];
        const Vec2 edge = t.ndc[eb] - a;
        const Vec2 w = q_ndc - a - fac.dist.t * edge;

        Vec2 d_ndc[3] = {};
        d_ndc[ea] += d_d2 * -2.0 * (1.0 - fac.dist.t) * w;
        d_ndc[eb] += d_d2 * -2.0 * fac.dist.t * w;

        for (int k = 0; k < 3; ++k) {
            if (d_ndc[k].x == 0.0 && d_ndc[k].y == 0.0) continue;
            const Vec2 d_screen(d_ndc[k].x * 2.0 / width, -d_ndc[k].y * 2.0 / height);
            const int vi = mesh.triangles[fac.face][k];
            d_vertices[vi] += frame.project_backward(mesh.vertices[vi], d_screen, 0.0);
        }
    }
}

}  // namespace

MeshGrad raster_backward(const Mesh& mesh, const Camera& camera, const GBuffer& gbuffer,
                         const RasterAdjoints& adjoints, double sigma) {
    const int64_t n = gbuffer.pixel_count();
    auto check = [&](size_t have, const char* what) {
        if (have != 0 && static_cast<int64_t>(have) != n)
            throw std::runtime_error(std::string("raster_backward: adjoint shape mismatch for ") + what);
    };
    check(adjoints.d_position.size(), "position");
    check(adjoints.d_normal.size(), "normal");
    check(adjoints.d_uv.size(), "uv");
    check(adjoints.d_soft_mask.size(), "soft_mask");

    const CameraFrame frame(camera);
    const std::vector<ProjTri> tris = project_triangles(mesh, frame);
    const double soft_rx = std::sqrt(kSoftCutoff * sigma) * 0.5 * gbuffer.width;
    const double soft_ry = std::sqrt(kSoftCutoff * sigma) * 0.5 * gbuffer.height;
    const TileBins bins = build_bins(tris, gbuffer.width, gbuffer.height, soft_rx, soft_ry);

    const int64_t nb = block_count(n);
    std::vector<MeshGrad> partials(static_cast<size_t>(nb), MeshGrad(mesh.vertex_count()));

    parallel_for_blocks(n, kReduceBlock, [&](int64_t blk, int64_t lo, int64_t hi) {
        MeshGrad& acc = partials[static_cast<size_t>(blk)];
        for (int64_t p = lo; p < hi; ++p) {
            const int i = static_cast<int>(p % gbuffer.width);
            const int j = static_cast<int>(p / gbuffer.width);
            const Vec2 q(i + 0.5, j + 0.5);

            if (gbuffer.triangle[p] >= 0) {
                const int32_t f = gbuffer.triangle[p];
                const auto& tri = mesh.triangles[f];
                const Vec3& bary = gbuffer.barycentric[p];

                const Vec3 d_pos = adjoints.d_position.empty() ? Vec3{} : adjoints.d_position[p];
                const Vec3 d_n = adjoints.d_normal.empty() ? Vec3{} : adjoints.d_normal[p];
                const Vec2 d_uv = adjoints.d_uv.empty() ? Vec2{} : adjoints.d_uv[p];

                // Normal chain: n = flip * normalize(sum B_i n_i).
                const Vec3 raw_n = bary.x * mesh.normals[tri[0]] +
                                   bary.y * mesh.normals[tri[1]] +
                                   bary.z * mesh.normals[tri[2]];
                const Vec3 d_flipped = gbuffer.normal_flipped[p] ? -d_n : d_n;
                const Vec3 d_raw = normalize_backward(raw_n, d_flipped);

                Vec3 d_bary{};
                for (int k = 0; k < 3; ++k) {
                    const int vi = tri[k];
                    acc.d_vertices[vi] += bary[k] * d_pos;
                    acc.d_normals[vi] += bary[k] * d_raw;
                    acc.d_uvs[vi] += bary[k] * d_uv;
                    d_bary[k] = dot(d_pos, mesh.vertices[vi]) + dot(d_raw, mesh.normals[vi]) +
                                d_uv.x * mesh.uvs[vi].x + d_uv.y * mesh.uvs[vi].y;
                }

                if (!(d_bary.x == 0.0 && d_bary.y == 0.0 && d_bary.z == 0.0)) {
                    Vec2 d_screen[3] = {};
                    double d_depth[3] = {0.0, 0.0, 0.0};
                    barycentric_backward(tris[f], q, d_bary, d_screen, d_depth);
                    for (int k = 0; k < 3; ++k) {
                        const int vi = tri[k];
                        acc.d_vertices[vi] +=
                            frame.project_backward(mesh.vertices[vi], d_screen[k], d_depth[k]);
                    }
                }
            }

            if (!adjoints.d_soft_mask.empty() && adjoints.d_soft_mask[p] != 0.0) {
                const int tx = i / kTile;
                const int ty = j / kTile;
                const auto& soft_bin = bins.soft[static_cast<size_t>(ty) * bins.tiles_x + tx];
                soft_backward_pixel(tris, soft_bin, frame.screen_to_ndc(q), sigma,
                                    adjoints.d_soft_mask[p], gbuffer.width, gbuffer.height,
                                    mesh, frame, acc.d_vertices);
            }
        }
    });

    MeshGrad total(mesh.vertex_count());
    for (const MeshGrad& part : partials) total += part;
    return total;
}

}  // namespace glint
