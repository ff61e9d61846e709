#pragma once

#include <array>
#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "reflkit/common.hpp"
#include "reflkit/raster.hpp"
#include "reflkit/resample.hpp"
#include "reflkit/vec.hpp"

namespace reflkit {

// Triangle mesh with one UV per vertex; vertices on UV seams are split into
// duplicates that share a position but not a UV.
struct Mesh {
    std::vector<Vec3f> positions;
    std::vector<Vec2f> uvs;
    std::vector<std::array<int, 3>> triangles;

    int vertex_count() const { return int(positions.size()); }
    int triangle_count() const { return int(triangles.size()); }
};

inline void validate_mesh(const Mesh &m, const std::string &what = "mesh") {
    require(!m.positions.empty(), what + ": no vertices");
    require(m.uvs.size() == m.positions.size(), what + ": uv count mismatch");
    require(!m.triangles.empty(), what + ": no triangles");
    int n = m.vertex_count();
    for (const auto &t : m.triangles) {
        for (int k = 0; k < 3; ++k)
            require(t[k] >= 0 && t[k] < n, what + ": triangle index out of range");
        require(t[0] != t[1] && t[1] != t[2] && t[0] != t[2],
                what + ": degenerate triangle");
    }
    const float eps = 1e-5f;
    for (const auto &uv : m.uvs)
        require(uv.x >= -eps && uv.x <= 1.0f + eps && uv.y >= -eps && uv.y <= 1.0f + eps,
                what + ": uv outside [0,1]");
}

inline Mesh load_obj(const std::string &path) {
    std::ifstream in(path);
    require(bool(in), "obj: cannot open " + path);
    std::vector<Vec3f> positions;
    std::vector<Vec2f> uvs;
    std::vector<std::vector<std::pair<int, int>>> faces; // resolved (v, vt) per corner
    auto resolve = [](int idx, size_t count, const char *what) {
        if (idx < 0)
            idx = int(count) + idx;
        else
            idx -= 1;
        require(idx >= 0 && idx < int(count), std::string("obj: ") + what + " index out of range");
        return idx;
    };

    std::string line;
    while (std::getline(in, line)) {
        if (line.size() >= 2 && line[0] == 'v' && line[1] == ' ') {
            Vec3f p;
            require(std::sscanf(line.c_str(), "v %f %f %f", &p.x, &p.y, &p.z) == 3,
                    "obj: malformed vertex line");
            positions.push_back(p);
        } else if (line.size() >= 3 && line[0] == 'v' && line[1] == 't' && line[2] == ' ') {
            Vec2f t;
            require(std::sscanf(line.c_str(), "vt %f %f", &t.x, &t.y) == 2,
                    "obj: malformed uv line");
            uvs.push_back(t);
        } else if (line.size() >= 2 && line[0] == 'f' && line[1] == ' ') {
            std::istringstream ss(line.substr(2));
            std::vector<std::pair<int, int>> face;
            std::string corner;
            while (ss >> corner) {
                int vi = 0, ti = 0;
                bool has_uv = false;
                size_t slash = corner.find('/');
                if (slash == std::string::npos) {
                    vi = std::stoi(corner);
                } else {
                    vi = std::stoi(corner.substr(0, slash));
                    size_t slash2 = corner.find('/', slash + 1);
                    std::string tpart = slash2 == std::string::npos
                                            ? corner.substr(slash + 1)
                                            : corner.substr(slash + 1, slash2 - slash - 1);
                    if (!tpart.empty()) {
                        ti = std::stoi(tpart);
                        has_uv = true;
                    }
                }
                int v = resolve(vi, positions.size(), "vertex");
                int t = has_uv ? resolve(ti, uvs.size(), "uv") : -1;
                face.emplace_back(v, t);
            }
            require(face.size() >= 3, "obj: face with fewer than 3 corners");
            faces.push_back(std::move(face));
        }
    }

    // Files with one UV per vertex and matching indices (what save_obj emits)
    // keep their vertex order; anything else gets corners split per (v, vt).
    bool unified = positions.size() == uvs.size();
    for (const auto &face : faces)
        for (const auto &[v, t] : face)
            unified = unified && t == v;

    Mesh mesh;
    if (unified) {
        mesh.positions = std::move(positions);
        mesh.uvs = std::move(uvs);
        for (const auto &face : faces)
            for (size_t k = 2; k < face.size(); ++k)
                mesh.triangles.push_back({face[0].first, face[k - 1].first, face[k].first});
    } else {
        std::unordered_map<uint64_t, int> corner_cache; // (v index, vt index) -> mesh vertex
        for (const auto &face : faces) {
            std::vector<int> ids;
            for (const auto &[v, t] : face) {
                uint64_t key = uint64_t(uint32_t(v)) << 32 | uint32_t(t + 1);
                auto it = corner_cache.find(key);
                int mv;
                if (it != corner_cache.end()) {
                    mv = it->second;
                } else {
                    mv = int(mesh.positions.size());
                    mesh.positions.push_back(positions[size_t(v)]);
                    mesh.uvs.push_back(t >= 0 ? uvs[size_t(t)] : Vec2f(0.0f, 0.0f));
                    corner_cache.emplace(key, mv);
                }
                ids.push_back(mv);
            }
            for (size_t k = 2; k < ids.size(); ++k)
                mesh.triangles.push_back({ids[0], ids[k - 1], ids[k]});
        }
    }
    validate_mesh(mesh, path);
    return mesh;
}

inline void save_obj(const std::string &path, const Mesh &m) {
    validate_mesh(m, path);
    std::ofstream out(path, std::ios::trunc);
    require(bool(out), "obj: cannot write " + path);
    char buf[128];
    for (const auto &p : m.positions) {
        std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", p.x, p.y, p.z);
        out << buf;
    }
    for (const auto &t : m.uvs) {
        std::snprintf(buf, sizeof buf, "vt %.9g %.9g\n", t.x, t.y);
        out << buf;
    }
    for (const auto &t : m.triangles) {
        std::snprintf(buf, sizeof buf, "f %d/%d %d/%d %d/%d\n",
                      t[0] + 1, t[0] + 1, t[1] + 1, t[1] + 1, t[2] + 1, t[2] + 1);
        out << buf;
    }
    require(bool(out), "obj: short write to " + path);
}

namespace detail {

struct PositionKey {
    uint32_t x, y, z;
    bool operator==(const PositionKey &o) const { return x == o.x && y == o.y && z == o.z; }
};

struct PositionKeyHash {
    size_t operator()(const PositionKey &k) const {
        uint64_t h = uint64_t(k.x) * 0x9e3779b97f4a7c15ull;
        h ^= uint64_t(k.y) + 0x9e3779b9ull + (h << 6) + (h >> 2);
        h ^= uint64_t(k.z) + 0x85ebca6bull + (h << 6) + (h >> 2);
        return size_t(h);
    }
};

inline PositionKey position_key(const Vec3f &p) {
    return {std::bit_cast<uint32_t>(p.x), std::bit_cast<uint32_t>(p.y),
            std::bit_cast<uint32_t>(p.z)};
}

} // namespace detail

// Area-weighted vertex normals. Accumulation welds vertices by exact position
// so UV-seam duplicates see their full one-ring and seams stay smooth.
inline std::vector<Vec3f> shape_normals(const Mesh &m) {
    std::unordered_map<detail::PositionKey, int, detail::PositionKeyHash> weld;
    std::vector<int> group(m.positions.size());
    std::vector<Vec3f> accum;
    for (size_t i = 0; i < m.positions.size(); ++i) {
        auto key = detail::position_key(m.positions[i]);
        auto it = weld.find(key);
        if (it == weld.end()) {
            weld.emplace(key, int(accum.size()));
            group[i] = int(accum.size());
            accum.emplace_back(0.0f, 0.0f, 0.0f);
        } else {
            group[i] = it->second;
        }
    }
    for (const auto &t : m.triangles) {
        Vec3f e1 = m.positions[size_t(t[1])] - m.positions[size_t(t[0])];
        Vec3f e2 = m.positions[size_t(t[2])] - m.positions[size_t(t[0])];
        Vec3f n = cross(e1, e2); // length is twice the triangle area
        for (int k = 0; k < 3; ++k)
            accum[size_t(group[size_t(t[k])])] += n;
    }
    std::vector<Vec3f> normals(m.positions.size());
    for (size_t i = 0; i < m.positions.size(); ++i)
        normals[i] = normalize(accum[size_t(group[i])]);
    return normals;
}

// 1:4 midpoint subdivision; new positions and UVs are edge midpoints. Seam
// duplicates subdivide per side, which keeps their UVs independent.
inline Mesh subdivide_midpoint(const Mesh &m) {
    Mesh out;
    out.positions = m.positions;
    out.uvs = m.uvs;
    std::unordered_map<uint64_t, int> midpoint;
    auto mid = [&](int a, int b) {
        uint64_t key = a < b ? uint64_t(uint32_t(a)) << 32 | uint32_t(b)
                             : uint64_t(uint32_t(b)) << 32 | uint32_t(a);
        auto it = midpoint.find(key);
        if (it != midpoint.end())
            return it->second;
        int idx = int(out.positions.size());
        out.positions.push_back((m.positions[size_t(a)] + m.positions[size_t(b)]) * 0.5f);
        out.uvs.push_back((m.uvs[size_t(a)] + m.uvs[size_t(b)]) * 0.5f);
        midpoint.emplace(key, idx);
        return idx;
    };
    for (const auto &t : m.triangles) {
        int ab = mid(t[0], t[1]);
        int bc = mid(t[1], t[2]);
        int ca = mid(t[2], t[0]);
        out.triangles.push_back({t[0], ab, ca});
        out.triangles.push_back({t[1], bc, ab});
        out.triangles.push_back({t[2], ca, bc});
        out.triangles.push_back({ab, bc, ca});
    }
    return out;
}

// Displaces each vertex along its welded shape normal by scale * d(uv),
// sampling the displacement map bilinearly. Invalid map regions displace by 0.
inline Mesh emboss(const Mesh &m, const RasterMap &displacement, float scale) {
    require(displacement.kind == MapKind::Displacement, "emboss: needs a displacement map");
    auto normals = shape_normals(m);
    Mesh out = m;
    for (size_t i = 0; i < m.positions.size(); ++i) {
        float cx = m.uvs[i].x * float(displacement.width);
        float cy = (1.0f - m.uvs[i].y) * float(displacement.height);
        float d = 0.0f;
        if (!sample_bilinear_masked(displacement, cx, cy, 0, d))
            d = 0.0f;
        out.positions[i] = m.positions[i] + normals[i] * (scale * d);
    }
    return out;
}

struct TangentFrame {
    Vec3f t, b, n;
};

// Per-vertex UV-gradient tangent frames, Gram-Schmidt orthonormalized against
// the vertex normal. Degenerate UV gradients fall back to the branchless basis.
inline std::vector<TangentFrame> tangent_frames(const Mesh &m) {
    auto normals = shape_normals(m);
    std::vector<Vec3f> tan_accum(m.positions.size(), Vec3f(0.0f, 0.0f, 0.0f));
    for (const auto &t : m.triangles) {
        const Vec3f &p0 = m.positions[size_t(t[0])];
        const Vec3f &p1 = m.positions[size_t(t[1])];
        const Vec3f &p2 = m.positions[size_t(t[2])];
        Vec2f w0 = m.uvs[size_t(t[0])], w1 = m.uvs[size_t(t[1])], w2 = m.uvs[size_t(t[2])];
        Vec3f e1 = p1 - p0, e2 = p2 - p0;
        float du1 = w1.x - w0.x, dv1 = w1.y - w0.y;
        float du2 = w2.x - w0.x, dv2 = w2.y - w0.y;
        float det = du1 * dv2 - du2 * dv1;
        if (std::fabs(det) < 1e-12f)
            continue;
        Vec3f tangent = (e1 * dv2 - e2 * dv1) * (1.0f / det);
        float area = 0.5f * length(cross(e1, e2));
        for (int k = 0; k < 3; ++k)
            tan_accum[size_t(t[k])] += tangent * area;
    }
    std::vector<TangentFrame> frames(m.positions.size());
    for (size_t i = 0; i < m.positions.size(); ++i) {
        const Vec3f &n = normals[i];
        Vec3f t = tan_accum[i] - n * dot(n, tan_accum[i]);
        float len = length(t);
        TangentFrame f;
        f.n = n;
        if (len > 1e-8f) {
            f.t = t / len;
            f.b = cross(n, f.t);
        } else {
            orthonormal_basis(n, f.t, f.b);
        }
        frames[i] = f;
    }
    return frames;
}

// Pairwise UV-triangle overlap check (shared edges and vertices allowed).
// Quadratic within coarse grid cells; meant for one-time template validation.
inline bool uv_layout_overlaps(const Mesh &m) {
    struct Tri2 {
        Vec2f a, b, c;
        float minx, miny, maxx, maxy;
    };
    std::vector<Tri2> tris;
    tris.reserve(m.triangles.size());
    for (const auto &t : m.triangles) {
        Tri2 q{m.uvs[size_t(t[0])], m.uvs[size_t(t[1])], m.uvs[size_t(t[2])], 0, 0, 0, 0};
        q.minx = std::fmin(q.a.x, std::fmin(q.b.x, q.c.x));
        q.maxx = std::fmax(q.a.x, std::fmax(q.b.x, q.c.x));
        q.miny = std::fmin(q.a.y, std::fmin(q.b.y, q.c.y));
        q.maxy = std::fmax(q.a.y, std::fmax(q.b.y, q.c.y));
        tris.push_back(q);
    }
    auto orient = [](Vec2f a, Vec2f b, Vec2f p) {
        return double(b.x - a.x) * double(p.y - a.y) - double(b.y - a.y) * double(p.x - a.x);
    };
    auto interior_overlap = [&](const Tri2 &s, const Tri2 &t) {
        // separating-axis test over both triangles' edges
        Vec2f sv[3] = {s.a, s.b, s.c}, tv[3] = {t.a, t.b, t.c};
        for (int pass = 0; pass < 2; ++pass) {
            const Vec2f *a = pass == 0 ? sv : tv;
            const Vec2f *b = pass == 0 ? tv : sv;
            for (int e = 0; e < 3; ++e) {
                Vec2f p = a[e], q = a[(e + 1) % 3];
                double other = orient(p, q, a[(e + 2) % 3]);
                if (other == 0.0)
                    continue;
                double sgn = other > 0 ? 1.0 : -1.0;
                const double eps = 1e-12;
                if (sgn * orient(p, q, b[0]) <= eps && sgn * orient(p, q, b[1]) <= eps &&
                    sgn * orient(p, q, b[2]) <= eps)
                    return false;
            }
        }
        return true;
    };
    const int grid = 32;
    std::vector<std::vector<int>> cells(grid * grid);
    for (int i = 0; i < int(tris.size()); ++i) {
        const Tri2 &q = tris[size_t(i)];
        int x0 = clamp_index(int(q.minx * grid), grid), x1 = clamp_index(int(q.maxx * grid), grid);
        int y0 = clamp_index(int(q.miny * grid), grid), y1 = clamp_index(int(q.maxy * grid), grid);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x)
                cells[size_t(y * grid + x)].push_back(i);
    }
    for (const auto &cell : cells)
        for (size_t i = 0; i < cell.size(); ++i)
            for (size_t j = i + 1; j < cell.size(); ++j) {
                const Tri2 &s = tris[size_t(cell[i])], &t = tris[size_t(cell[j])];
                if (s.minx > t.maxx || t.minx > s.maxx || s.miny > t.maxy || t.miny > s.maxy)
                    continue;
                if (interior_overlap(s, t))
                    return true;
            }
    return false;
}

} // namespace reflkit
