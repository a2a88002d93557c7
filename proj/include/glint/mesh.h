// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "glint/math.h"

namespace glint {

// Indexed triangle mesh. One index per corner addresses positions, normals
// and uvs jointly; loaders split OBJ corners with mismatched attribute
// indices into distinct vertices.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<Direction> normals;
    std::vector<Vec2> uvs;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::vector<int>> adjacency;  // per-vertex neighbor lists, sorted

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }

    void build_adjacency();
    void compute_vertex_normals();       // area-weighted face normal average
    void synthesize_sphere_uvs();        // equirect projection about the centroid
    void validate(const std::string& context) const;

    // Uniform graph Laplacian differential: v - mean(neighbors of v).
    Vec3 laplacian_delta(int v) const;
};

// Wavefront OBJ subset: v/vn/vt/f with polygonal faces (fan-triangulated).
// Materials are ignored with a warning. Throws with a line number on parse
// errors; missing normals/uvs are synthesized.
Mesh load_obj(const std::string& path);

void save_obj(const Mesh& mesh, const std::string& path);

// Subdivided icosahedron with unit radius; level 3 gives 642 vertices.
Mesh make_icosphere(int subdivisions);

}  // namespace glint
