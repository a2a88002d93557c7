// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "glint/camera.h"
#include "glint/image.h"
#include "glint/mesh.h"

namespace glint {

// Soft-silhouette falloff, in squared NDC units.
constexpr double kDefaultSoftSigma = 1e-4;

// Per-pixel geometry buffers from the rasterization pass. Where visibility
// is 0 the triangle id is -1 and the surface fields are undefined.
struct GBuffer {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> visibility;
    std::vector<int32_t> triangle;
    std::vector<Vec3> barycentric;  // perspective-correct, sums to 1
    std::vector<double> depth;
    std::vector<Vec3> position;
    std::vector<Direction> normal;  // unit, flipped toward the camera
    std::vector<int8_t> normal_flipped;
    std::vector<Vec2> uv;
    std::vector<Direction> view;    // unit, surface -> eye
    std::vector<double> soft_mask;

    int64_t pixel_count() const { return static_cast<int64_t>(width) * height; }
};

// Z-buffered, perspective-correct coverage at pixel centers, plus the soft
// silhouette. Faces are kept double-sided; triangles touching the near plane
// are skipped. Deterministic for any worker count.
GBuffer rasterize(const Mesh& mesh, const Camera& camera,
                  double sigma = kDefaultSoftSigma);

// Single-threaded reference of the same computation (kept for testing; must
// match rasterize() bit for bit).
GBuffer rasterize_serial(const Mesh& mesh, const Camera& camera,
                         double sigma = kDefaultSoftSigma);

// Probabilistic silhouette: 1 - prod_faces (1 - exp(-d^2/sigma)) with d the
// NDC distance from the pixel center to the projected face (0 inside).
GridF soft_silhouette(const Mesh& mesh, const Camera& camera, double sigma);

// Adjoints of per-pixel rasterizer outputs. Empty vectors mean zero.
struct RasterAdjoints {
    std::vector<Vec3> d_position;
    std::vector<Vec3> d_normal;   // w.r.t. the shading normal in the buffer
    std::vector<Vec2> d_uv;
    std::vector<double> d_soft_mask;
};

struct MeshGrad {
    std::vector<Vec3> d_vertices;
    std::vector<Vec3> d_normals;
    std::vector<Vec2> d_uvs;

    explicit MeshGrad(int vertex_count = 0)
        : d_vertices(vertex_count), d_normals(vertex_count), d_uvs(vertex_count) {}

    MeshGrad& operator+=(const MeshGrad& o);
};

// Chain rule from per-pixel adjoints to vertex positions and attributes:
// interior gradients through the perspective-correct barycentric weights,
// boundary gradients through the soft silhouette. Hard visibility is not
// differentiated.
MeshGrad raster_backward(const Mesh& mesh, const Camera& camera, const GBuffer& gbuffer,
                         const RasterAdjoints& adjoints, double sigma = kDefaultSoftSigma);

}  // namespace glint
