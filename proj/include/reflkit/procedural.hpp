#pragma once

#include <cmath>

#include "reflkit/color.hpp"
#include "reflkit/mesh.hpp"
#include "reflkit/raster.hpp"
#include "reflkit/rng.hpp"

namespace reflkit {

// Regular grid in the XY plane at z = 0, UVs spanning [0,1].
inline Mesh make_plane(int nx, int ny, float width = 1.0f, float height = 1.0f) {
    Mesh m;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            float u = float(i) / float(nx);
            float v = float(j) / float(ny);
            m.positions.emplace_back((u - 0.5f) * width, (v - 0.5f) * height, 0.0f);
            m.uvs.emplace_back(u, v);
        }
    auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            m.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            m.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    return m;
}

namespace detail {

inline float face_height(float u, float v) {
    auto lobe = [](float du, float dv, float su, float sv) {
        return std::exp(-(du * du / su + dv * dv / sv));
    };
    float h = 0.10f * lobe(u - 0.5f, v - 0.5f, 0.09f, 0.11f);       // skull dome
    h += 0.028f * lobe(u - 0.5f, v - 0.45f, 0.0035f, 0.012f);       // nose ridge
    h += 0.012f * lobe(u - 0.32f, v - 0.40f, 0.006f, 0.005f);       // cheeks
    h += 0.012f * lobe(u - 0.68f, v - 0.40f, 0.006f, 0.005f);
    h += 0.008f * lobe(u - 0.5f, v - 0.22f, 0.010f, 0.003f);        // chin
    return h;
}

} // namespace detail

// Smooth face-like height field over a full-coverage UV grid; physical extent
// roughly 30 x 36 cm facing +Z.
inline Mesh make_sphere_face(int segments = 48) {
    Mesh m = make_plane(segments, segments, 0.30f, 0.36f);
    for (size_t i = 0; i < m.positions.size(); ++i)
        m.positions[i].z = detail::face_height(m.uvs[i].x, m.uvs[i].y);
    return m;
}

// Icosphere with per-face UV islands laid out on a 5x4 grid. Shared-edge
// duplicates carry bit-identical positions, so position welding keeps
// normals smooth across islands.
inline Mesh make_icosphere(int subdivisions = 3) {
    const float phi = (1.0f + std::sqrt(5.0f)) / 2.0f;
    std::vector<Vec3f> base = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
    for (auto &p : base)
        p = normalize(p);
    const int faces[20][3] = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};

    Mesh mesh;
    const float cw = 1.0f / 5.0f, ch = 1.0f / 4.0f;
    const float margin = 0.012f;
    for (int f = 0; f < 20; ++f) {
        struct Corner {
            Vec3f p;
            Vec2f uv;
        };
        float cx = float(f % 5) * cw, cy = float(f / 5) * ch;
        std::vector<Corner> verts = {
            {base[size_t(faces[f][0])], {cx + margin, cy + margin}},
            {base[size_t(faces[f][1])], {cx + cw - margin, cy + margin}},
            {base[size_t(faces[f][2])], {cx + cw * 0.5f, cy + ch - margin}}};
        std::vector<std::array<int, 3>> tris = {{0, 1, 2}};
        for (int level = 0; level < subdivisions; ++level) {
            std::unordered_map<uint64_t, int> cache;
            auto mid = [&](int a, int b) {
                uint64_t key = a < b ? uint64_t(uint32_t(a)) << 32 | uint32_t(b)
                                     : uint64_t(uint32_t(b)) << 32 | uint32_t(a);
                auto it = cache.find(key);
                if (it != cache.end())
                    return it->second;
                Corner c;
                c.p = normalize((verts[size_t(a)].p + verts[size_t(b)].p) * 0.5f);
                c.uv = (verts[size_t(a)].uv + verts[size_t(b)].uv) * 0.5f;
                int idx = int(verts.size());
                verts.push_back(c);
                cache.emplace(key, idx);
                return idx;
            };
            std::vector<std::array<int, 3>> next;
            for (const auto &t : tris) {
                int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
                next.push_back({t[0], ab, ca});
                next.push_back({t[1], bc, ab});
                next.push_back({t[2], ca, bc});
                next.push_back({ab, bc, ca});
            }
            tris = std::move(next);
        }
        int off = mesh.vertex_count();
        for (const auto &c : verts) {
            mesh.positions.push_back(c.p);
            mesh.uvs.push_back(c.uv);
        }
        for (const auto &t : tris)
            mesh.triangles.push_back({t[0] + off, t[1] + off, t[2] + off});
    }
    return mesh;
}

// Two parallel quads at z = -0.5 and z = +0.5 on separate UV halves; their
// bbox-normalized depths are exactly -1 and +1.
inline Mesh make_two_plane_block() {
    Mesh m;
    auto add_quad = [&](float z, float u0, float u1) {
        int off = m.vertex_count();
        const float uvs[4][2] = {{u0, 0.05f}, {u1, 0.05f}, {u1, 0.95f}, {u0, 0.95f}};
        const float xy[4][2] = {{-0.5f, -0.5f}, {0.5f, -0.5f}, {0.5f, 0.5f}, {-0.5f, 0.5f}};
        for (int k = 0; k < 4; ++k) {
            m.positions.emplace_back(xy[k][0], xy[k][1], z);
            m.uvs.emplace_back(uvs[k][0], uvs[k][1]);
        }
        m.triangles.push_back({off, off + 1, off + 2});
        m.triangles.push_back({off, off + 2, off + 3});
    };
    add_quad(0.5f, 0.05f, 0.45f);
    add_quad(-0.5f, 0.55f, 0.95f);
    return m;
}

inline RasterMap make_checker_albedo(int w, int h, int tiles = 8,
                                     Vec3f a = {0.8f, 0.65f, 0.55f},
                                     Vec3f b = {0.35f, 0.25f, 0.2f}) {
    RasterMap m = make_map(w, h, MapKind::DiffuseAlbedo, Colorspace::Srgb);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool odd = ((x * tiles / w) + (y * tiles / h)) % 2 != 0;
            Vec3f c = odd ? b : a;
            m.at(x, y, 0) = c.x;
            m.at(x, y, 1) = c.y;
            m.at(x, y, 2) = c.z;
        }
    return m;
}

// Skin-toned albedo: low-frequency blotches plus dark pore speckle, sRGB.
inline RasterMap make_skin_albedo(int w, int h, uint64_t seed = 7) {
    RasterMap m = make_map(w, h, MapKind::DiffuseAlbedo, Colorspace::Srgb);
    CounterRng rng(seed);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float u = (float(x) + 0.5f) / float(w);
            float v = (float(y) + 0.5f) / float(h);
            float blotch = 0.05f * std::sin(6.1f * u + 1.7f) * std::cos(4.3f * v) +
                           0.04f * std::sin(11.0f * u * v + 0.4f);
            uint64_t texel = uint64_t(y) * uint64_t(w) + uint64_t(x);
            float speckle = float(rng.uniform(texel)) < 0.015f ? -0.12f : 0.0f;
            float r = 0.78f + blotch + speckle;
            float g = 0.58f + 0.8f * blotch + speckle;
            float b = 0.47f + 0.6f * blotch + speckle;
            m.at(x, y, 0) = clamp01(r);
            m.at(x, y, 1) = clamp01(g);
            m.at(x, y, 2) = clamp01(b);
        }
    return m;
}

inline RasterMap make_uniform_env(float value = 1.0f) {
    RasterMap m = make_map(1, 1, MapKind::Texture, Colorspace::Linear, value);
    return m;
}

// Lat-long environment: sky-to-ground gradient with one bright lobe, linear
// radiance, overall level around `scale`.
inline RasterMap make_gradient_env(int w, int h, float scale = 0.75f, uint64_t variant = 0) {
    RasterMap m = make_map(w, h, MapKind::Texture, Colorspace::Linear);
    float lobe_u = variant % 2 == 0 ? 0.3f : 0.7f;
    float lobe_v = 0.25f + 0.1f * float(variant % 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float u = (float(x) + 0.5f) / float(w);
            float v = (float(y) + 0.5f) / float(h); // v = 0 at the zenith row
            float sky = 1.0f - 0.75f * v;
            float du = std::fmin(std::fabs(u - lobe_u), 1.0f - std::fabs(u - lobe_u));
            float dv = v - lobe_v;
            float lobe = 0.9f * std::exp(-(du * du / 0.01f + dv * dv / 0.02f));
            m.at(x, y, 0) = scale * (sky * 1.0f + lobe);
            m.at(x, y, 1) = scale * (sky * 0.95f + lobe * 0.95f);
            m.at(x, y, 2) = scale * (sky * 0.85f + lobe * 0.8f);
        }
    return m;
}

} // namespace reflkit
