#pragma once

#include <cmath>
#include <vector>

#include "reflkit/mesh.hpp"
#include "reflkit/parallel.hpp"
#include "reflkit/raster.hpp"

namespace reflkit {

// Rasterizes UV triangles over texel centers ((x+0.5)/W, 1-(y+0.5)/H), first
// triangle in index order wins shared texels. Triangles are binned per row so
// rows can shade in parallel with identical results at any thread count.
// shade(x, y, tri, w1, w2) receives barycentric weights of vertices 1 and 2.
template<typename F>
void rasterize_uv(const Mesh &m, int width, int height, F &&shade) {
    struct TriUv {
        double x0, y0, x1, y1, x2, y2; // pixel space
        double denom;
        int min_x, max_x;
    };
    std::vector<TriUv> tris(m.triangles.size());
    std::vector<std::vector<int>> rows(static_cast<size_t>(height));
    for (int i = 0; i < m.triangle_count(); ++i) {
        const auto &t = m.triangles[size_t(i)];
        TriUv &q = tris[size_t(i)];
        auto to_px = [&](const Vec2f &uv, double &px, double &py) {
            px = double(uv.x) * width;
            py = (1.0 - double(uv.y)) * height;
        };
        to_px(m.uvs[size_t(t[0])], q.x0, q.y0);
        to_px(m.uvs[size_t(t[1])], q.x1, q.y1);
        to_px(m.uvs[size_t(t[2])], q.x2, q.y2);
        q.denom = (q.x1 - q.x0) * (q.y2 - q.y0) - (q.x2 - q.x0) * (q.y1 - q.y0);
        if (q.denom == 0.0)
            continue;
        double min_px = std::fmin(q.x0, std::fmin(q.x1, q.x2));
        double max_px = std::fmax(q.x0, std::fmax(q.x1, q.x2));
        double min_py = std::fmin(q.y0, std::fmin(q.y1, q.y2));
        double max_py = std::fmax(q.y0, std::fmax(q.y1, q.y2));
        q.min_x = std::max(0, int(std::ceil(min_px - 0.5)));
        q.max_x = std::min(width - 1, int(std::floor(max_px - 0.5)));
        int y0 = std::max(0, int(std::ceil(min_py - 0.5)));
        int y1 = std::min(height - 1, int(std::floor(max_py - 0.5)));
        for (int y = y0; y <= y1; ++y)
            rows[size_t(y)].push_back(i);
    }
    parallel_for(0, height, [&](int64_t y) {
        std::vector<uint8_t> claimed(size_t(width), 0);
        double py = double(y) + 0.5;
        for (int i : rows[size_t(y)]) {
            const TriUv &q = tris[size_t(i)];
            for (int x = q.min_x; x <= q.max_x; ++x) {
                if (claimed[size_t(x)])
                    continue;
                double px = double(x) + 0.5;
                double w1 = ((px - q.x0) * (q.y2 - q.y0) - (q.x2 - q.x0) * (py - q.y0)) / q.denom;
                double w2 = ((q.x1 - q.x0) * (py - q.y0) - (px - q.x0) * (q.y1 - q.y0)) / q.denom;
                double w0 = 1.0 - w1 - w2;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0)
                    continue;
                claimed[size_t(x)] = 1;
                shade(x, int(y), i, float(w1), float(w2));
            }
        }
    });
}

// a0 + w1*(a1-a0) + w2*(a2-a0): exact for constant attributes and exact at
// vertices, where the weights are exactly 0/1.
template<typename T>
T interpolate_attribute(const T &a0, const T &a1, const T &a2, float w1, float w2) {
    return a0 + (a1 - a0) * w1 + (a2 - a0) * w2;
}

inline RasterMap rasterize_scalar_attribute(const Mesh &m, const std::vector<float> &values,
                                            int width, int height, MapKind kind,
                                            Colorspace cs) {
    require(values.size() == m.positions.size(), "rasterize: one value per vertex expected");
    RasterMap out = make_map(width, height, kind, cs);
    out.mask.assign(out.texel_count(), 0);
    rasterize_uv(m, width, height, [&](int x, int y, int tri, float w1, float w2) {
        const auto &t = m.triangles[size_t(tri)];
        out.at(x, y) = interpolate_attribute(values[size_t(t[0])], values[size_t(t[1])],
                                             values[size_t(t[2])], w1, w2);
        out.mask[size_t(y) * size_t(width) + size_t(x)] = 1;
    });
    return out;
}

// Per-texel surface data rasterized in UV space: positions, welded smooth
// normals, tangent frames, and bbox-normalized depth in [-1, 1].
struct GeometryMaps {
    int width = 0, height = 0;
    bool flat = false; // all vertices share one z; depth is undefined
    std::vector<uint8_t> mask;
    std::vector<Vec3f> position;
    std::vector<Vec3f> normal;
    std::vector<TangentFrame> frame;
    std::vector<float> depth;

    bool valid(int x, int y) const {
        return mask[size_t(y) * size_t(width) + size_t(x)] != 0;
    }

    size_t index(int x, int y) const { return size_t(y) * size_t(width) + size_t(x); }

    RasterMap normal_map() const {
        RasterMap out = make_map(width, height, MapKind::NormalsObject, Colorspace::SignedUnit);
        out.mask = mask;
        for (size_t i = 0; i < normal.size(); ++i) {
            out.data[3 * i + 0] = normal[i].x;
            out.data[3 * i + 1] = normal[i].y;
            out.data[3 * i + 2] = normal[i].z;
        }
        return out;
    }

    RasterMap depth_map() const {
        require(!flat, "depth: degenerate depth range");
        RasterMap out = make_map(width, height, MapKind::Depth, Colorspace::SignedUnit);
        out.mask = mask;
        out.data = depth;
        return out;
    }

    RasterMap mask_map() const {
        RasterMap out = make_map(width, height, MapKind::Gray, Colorspace::Raw);
        for (size_t i = 0; i < mask.size(); ++i)
            out.data[i] = mask[i] ? 1.0f : 0.0f;
        return out;
    }
};

inline GeometryMaps rasterize_geometry(const Mesh &m, int width, int height) {
    auto normals = shape_normals(m);
    auto frames = tangent_frames(m);
    float zmin = m.positions[0].z, zmax = m.positions[0].z;
    for (const auto &p : m.positions) {
        zmin = std::fmin(zmin, p.z);
        zmax = std::fmax(zmax, p.z);
    }
    float zrange = zmax - zmin;
    std::vector<float> dvals(m.positions.size(), 0.0f);
    if (zrange > 0.0f)
        for (size_t i = 0; i < m.positions.size(); ++i)
            dvals[i] = 2.0f * (m.positions[i].z - zmin) / zrange - 1.0f;

    GeometryMaps g;
    g.flat = zrange <= 0.0f;
    g.width = width;
    g.height = height;
    g.mask.assign(size_t(width) * size_t(height), 0);
    g.position.resize(g.mask.size());
    g.normal.resize(g.mask.size());
    g.frame.resize(g.mask.size());
    g.depth.assign(g.mask.size(), 0.0f);

    rasterize_uv(m, width, height, [&](int x, int y, int tri, float w1, float w2) {
        const auto &t = m.triangles[size_t(tri)];
        size_t i = g.index(x, y);
        g.mask[i] = 1;
        g.position[i] = interpolate_attribute(m.positions[size_t(t[0])],
                                              m.positions[size_t(t[1])],
                                              m.positions[size_t(t[2])], w1, w2);
        Vec3f n = normalize(interpolate_attribute(normals[size_t(t[0])], normals[size_t(t[1])],
                                                  normals[size_t(t[2])], w1, w2));
        g.normal[i] = n;
        const TangentFrame &f0 = frames[size_t(t[0])];
        const TangentFrame &f1 = frames[size_t(t[1])];
        const TangentFrame &f2 = frames[size_t(t[2])];
        Vec3f ti = interpolate_attribute(f0.t, f1.t, f2.t, w1, w2);
        Vec3f bi = interpolate_attribute(f0.b, f1.b, f2.b, w1, w2);
        TangentFrame f;
        f.n = n;
        Vec3f tt = ti - n * dot(n, ti);
        float len = length(tt);
        if (len > 1e-8f) {
            f.t = tt / len;
            f.b = cross(n, f.t);
            if (dot(f.b, bi) < 0.0f)
                f.b = -f.b;
        } else {
            orthonormal_basis(n, f.t, f.b);
        }
        g.frame[i] = f;
        g.depth[i] = interpolate_attribute(dvals[size_t(t[0])], dvals[size_t(t[1])],
                                           dvals[size_t(t[2])], w1, w2);
    });
    return g;
}

inline RasterMap tangent_to_object(const RasterMap &nt, const GeometryMaps &g) {
    require(is_normal_kind(nt.kind), "tangent_to_object: needs a normal map");
    require(nt.width == g.width && nt.height == g.height,
            "tangent_to_object: dimension mismatch with geometry");
    RasterMap out = make_map(nt.width, nt.height, MapKind::NormalsObject, Colorspace::SignedUnit);
    out.mask = g.mask;
    for (int y = 0; y < nt.height; ++y)
        for (int x = 0; x < nt.width; ++x) {
            if (!g.valid(x, y))
                continue;
            const TangentFrame &f = g.frame[g.index(x, y)];
            Vec3f v = f.t * nt.at(x, y, 0) + f.b * nt.at(x, y, 1) + f.n * nt.at(x, y, 2);
            v = normalize(v);
            out.at(x, y, 0) = v.x;
            out.at(x, y, 1) = v.y;
            out.at(x, y, 2) = v.z;
        }
    return out;
}

inline RasterMap object_to_tangent(const RasterMap &no, const GeometryMaps &g) {
    require(is_normal_kind(no.kind), "object_to_tangent: needs a normal map");
    require(no.width == g.width && no.height == g.height,
            "object_to_tangent: dimension mismatch with geometry");
    RasterMap out = make_map(no.width, no.height, MapKind::NormalsTangent, Colorspace::SignedUnit);
    out.mask = g.mask;
    for (int y = 0; y < no.height; ++y)
        for (int x = 0; x < no.width; ++x) {
            if (!g.valid(x, y))
                continue;
            const TangentFrame &f = g.frame[g.index(x, y)];
            Vec3f v(no.at(x, y, 0), no.at(x, y, 1), no.at(x, y, 2));
            Vec3f t = normalize(Vec3f(dot(v, f.t), dot(v, f.b), dot(v, f.n)));
            out.at(x, y, 0) = t.x;
            out.at(x, y, 1) = t.y;
            out.at(x, y, 2) = t.z;
        }
    return out;
}

} // namespace reflkit
