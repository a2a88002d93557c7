// SPDX-License-Identifier: Apache-2.0

#include "glint/mesh.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "glint/spherical.h"

namespace glint {

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

struct ObjCorner {
    int v = 0;   // 1-based after resolution; 0 = absent
    int vt = 0;
    int vn = 0;
    bool operator<(const ObjCorner& o) const {
        if (v != o.v) return v < o.v;
        if (vt != o.vt) return vt < o.vt;
        return vn < o.vn;
    }
};

int resolve_index(int idx, int count, const std::string& path, int line) {
    if (idx > 0) {
        if (idx > count) parse_fail(path, line, "face index " + std::to_string(idx) + " out of range");
        return idx;
    }
    if (idx < 0) {
        const int r = count + 1 + idx;
        if (r < 1) parse_fail(path, line, "negative face index out of range");
        return r;
    }
    parse_fail(path, line, "face index 0 is invalid");
}

ObjCorner parse_corner(const std::string& tok, int nv, int nvt, int nvn,
                       const std::string& path, int line) {
    ObjCorner c;
    int slots[3] = {0, 0, 0};
    bool present[3] = {false, false, false};
    size_t start = 0;
    int slot = 0;
    for (size_t i = 0; i <= tok.size(); ++i) {
        if (i == tok.size() || tok[i] == '/') {
            if (i > start) {
                if (slot > 2) parse_fail(path, line, "malformed face corner '" + tok + "'");
                try {
                    slots[slot] = std::stoi(tok.substr(start, i - start));
                } catch (const std::exception&) {
                    parse_fail(path, line, "malformed face corner '" + tok + "'");
                }
                present[slot] = true;
            }
            start = i + 1;
            ++slot;
        }
    }
    if (!present[0]) parse_fail(path, line, "face corner missing a vertex index");
    c.v = resolve_index(slots[0], nv, path, line);
    if (present[1]) c.vt = resolve_index(slots[1], nvt, path, line);
    if (present[2]) c.vn = resolve_index(slots[2], nvn, path, line);
    return c;
}

}  // namespace

void Mesh::build_adjacency() {
    adjacency.assign(vertices.size(), {});
    std::vector<std::set<int>> nb(vertices.size());
    for (const auto& t : triangles) {
        for (int e = 0; e < 3; ++e) {
            const int a = t[e];
            const int b = t[(e + 1) % 3];
            nb[a].insert(b);
            nb[b].insert(a);
        }
    }
    for (size_t i = 0; i < nb.size(); ++i)
        adjacency[i].assign(nb[i].begin(), nb[i].end());
}

void Mesh::compute_vertex_normals() {
    normals.assign(vertices.size(), Vec3{});
    for (const auto& t : triangles) {
        const Vec3 fn = cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]);
        for (int i = 0; i < 3; ++i) normals[t[i]] += fn;  // |fn| = 2*area weights
    }
    for (auto& n : normals) {
        const double len = length(n);
        n = len > 1e-20 ? n / len : Vec3(0.0, 1.0, 0.0);
    }
}

void Mesh::synthesize_sphere_uvs() {
    Vec3 centroid;
    for (const Vec3& v : vertices) centroid += v;
    centroid = centroid / static_cast<double>(vertices.size());
    uvs.resize(vertices.size());
    for (size_t i = 0; i < vertices.size(); ++i) {
        const Vec3 d = vertices[i] - centroid;
        const double len = length(d);
        uvs[i] = len > 1e-12 ? dir_to_equirect(d / len) : Vec2(0.5, 0.5);
    }
}

void Mesh::validate(const std::string& context) const {
    if (triangles.empty() || vertices.empty())
        throw std::runtime_error(context + ": empty mesh");
    const int nv = vertex_count();
    for (const auto& t : triangles) {
        for (int i = 0; i < 3; ++i) {
            if (t[i] < 0 || t[i] >= nv)
                throw std::runtime_error(context + ": triangle index out of range");
        }
        const double area2 = length(cross(vertices[t[1]] - vertices[t[0]],
                                          vertices[t[2]] - vertices[t[0]]));
        if (!(area2 > 2e-12))
            throw std::runtime_error(context + ": degenerate triangle (area <= 1e-12)");
    }
}

Vec3 Mesh::laplacian_delta(int v) const {
    const std::vector<int>& nb = adjacency[v];
    if (nb.empty()) return Vec3{};
    Vec3 mean;
    for (int j : nb) mean += vertices[j];
    return vertices[v] - mean / static_cast<double>(nb.size());
}

Mesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open file");

    std::vector<Vec3> positions;
    std::vector<Vec2> texcoords;
    std::vector<Vec3> objnormals;
    std::vector<std::vector<ObjCorner>> faces;
    bool warned_mtl = false;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x >> p.y >> p.z)) parse_fail(path, lineno, "malformed vertex");
            positions.push_back(p);
        } else if (tag == "vt") {
            Vec2 t;
            if (!(ls >> t.x >> t.y)) parse_fail(path, lineno, "malformed texture coordinate");
            texcoords.push_back(t);
        } else if (tag == "vn") {
            Vec3 n;
            if (!(ls >> n.x >> n.y >> n.z)) parse_fail(path, lineno, "malformed normal");
            objnormals.push_back(n);
        } else if (tag == "f") {
            std::vector<ObjCorner> face;
            std::string tok;
            while (ls >> tok) {
                face.push_back(parse_corner(tok, static_cast<int>(positions.size()),
                                            static_cast<int>(texcoords.size()),
                                            static_cast<int>(objnormals.size()), path, lineno));
            }
            if (face.size() < 3) parse_fail(path, lineno, "face with fewer than 3 corners");
            faces.push_back(std::move(face));
        } else if (tag == "mtllib" || tag == "usemtl") {
            if (!warned_mtl) {
                std::fprintf(stderr, "warning: %s: materials are ignored (%s)\n",
                             path.c_str(), tag.c_str());
                warned_mtl = true;
            }
        }
        // Other statements (o, g, s, ...) are ignored.
    }
    if (faces.empty()) throw std::runtime_error(path + ": empty mesh (no faces)");

    // Split corners into unique (v, vt, vn) vertices.
    Mesh mesh;
    std::map<ObjCorner, int> remap;
    auto corner_index = [&](const ObjCorner& c) {
        auto it = remap.find(c);
        if (it != remap.end()) return it->second;
        const int idx = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(positions[c.v - 1]);
        mesh.uvs.push_back(c.vt > 0 ? texcoords[c.vt - 1] : Vec2{});
        mesh.normals.push_back(c.vn > 0 ? objnormals[c.vn - 1] : Vec3{});
        remap.emplace(c, idx);
        return idx;
    };

    bool any_normals = !objnormals.empty();
    bool any_uvs = !texcoords.empty();
    for (const auto& face : faces) {
        const int i0 = corner_index(face[0]);
        for (size_t k = 1; k + 1 < face.size(); ++k) {
            mesh.triangles.push_back({i0, corner_index(face[k]), corner_index(face[k + 1])});
        }
    }

    if (!any_normals) {
        mesh.compute_vertex_normals();
    } else {
        for (auto& n : mesh.normals) {
            const double len = length(n);
            n = len > 1e-20 ? n / len : Vec3(0.0, 1.0, 0.0);
        }
    }
    if (!any_uvs) mesh.synthesize_sphere_uvs();
    mesh.build_adjacency();
    mesh.validate(path);
    return mesh;
}

void save_obj(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.precision(17);
    for (const Vec3& v : mesh.vertices) out << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const Vec2& t : mesh.uvs) out << "vt " << t.x << " " << t.y << "\n";
    for (const Vec3& n : mesh.normals) out << "vn " << n.x << " " << n.y << " " << n.z << "\n";
    for (const auto& t : mesh.triangles) {
        out << "f";
        for (int i = 0; i < 3; ++i) {
            const int idx = t[i] + 1;
            out << " " << idx << "/" << idx << "/" << idx;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error(path + ": write failure");
}

Mesh make_icosphere(int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
        {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
        {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    for (Vec3& v : verts) v = normalize(v);
    std::vector<std::array<int, 3>> tris = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(verts.size());
            verts.push_back(normalize(verts[a] + verts[b]));
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(tris.size() * 4);
        for (const auto& tri : tris) {
            const int a = mid(tri[0], tri[1]);
            const int b = mid(tri[1], tri[2]);
            const int c = mid(tri[2], tri[0]);
            next.push_back({tri[0], a, c});
            next.push_back({tri[1], b, a});
            next.push_back({tri[2], c, b});
            next.push_back({a, b, c});
        }
        tris = std::move(next);
    }

    Mesh mesh;
    mesh.vertices = std::move(verts);
    mesh.triangles = std::move(tris);
    mesh.normals = mesh.vertices;  // unit sphere: normal == position
    mesh.synthesize_sphere_uvs();
    mesh.build_adjacency();
    return mesh;
}

}  // namespace glint
