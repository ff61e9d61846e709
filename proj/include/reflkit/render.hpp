#pragma once

#include <cmath>

#include "reflkit/shading.hpp"

namespace reflkit {

// The four reflectance maps driving the renderer. Normals are tangent-space.
struct ReflectanceSet {
    RasterMap diffuse_albedo;
    RasterMap specular_albedo;
    RasterMap normals_diffuse;
    RasterMap normals_specular;
};

inline void validate_reflectance(const ReflectanceSet &r) {
    validate(r.diffuse_albedo, "diffuse albedo");
    validate(r.specular_albedo, "specular albedo");
    validate(r.normals_diffuse, "diffuse normals");
    validate(r.normals_specular, "specular normals");
    require(r.diffuse_albedo.kind == MapKind::DiffuseAlbedo, "reflectance: wrong albedo kind");
    require(r.specular_albedo.kind == MapKind::SpecularAlbedo,
            "reflectance: wrong specular albedo kind");
    require(r.normals_diffuse.kind == MapKind::NormalsDiffuse &&
                r.normals_specular.kind == MapKind::NormalsSpecular,
            "reflectance: wrong normal kinds");
}

struct Camera {
    Vec3f position{0.0f, 0.0f, 1.0f};
    Vec3f look_at{0.0f, 0.0f, 0.0f};
    Vec3f up{0.0f, 1.0f, 0.0f};
    float vfov_deg = 35.0f;
    int width = 256;
    int height = 256;
};

struct RenderResult {
    RasterMap image;    // linear radiance
    RasterMap coverage; // 1 where a surface was hit
    bool camera_inside = false;
    int64_t degenerate_pixels = 0;
};

// Ray-cast render: per-pixel UV from barycentrics, tangent-space normal maps
// decoded through the interpolated frame, diffuse lit with N_D and specular
// with N_S. Deterministic for a fixed seed at any thread count.
inline RenderResult render_view(const Mesh &mesh, const ReflectanceSet &refl,
                                const Camera &camera, const LightingRig &rig,
                                const ShadeSettings &settings) {
    validate_reflectance(refl);
    auto frames = tangent_frames(mesh);
    Bvh bvh(mesh);
    Shader shader(rig, settings, &bvh);

    RasterMap albedo_lin = to_linear(refl.diffuse_albedo);
    RasterMap spec_lin = to_linear(refl.specular_albedo);

    RenderResult out;
    out.image = make_map(camera.width, camera.height, MapKind::Texture, Colorspace::Linear);
    out.coverage = make_map(camera.width, camera.height, MapKind::Gray, Colorspace::Raw);

    Vec3f forward = normalize(camera.look_at - camera.position);
    Vec3f right = normalize(cross(forward, camera.up));
    Vec3f upv = cross(right, forward);
    float tan_half = std::tan(0.5f * camera.vfov_deg * float(M_PI) / 180.0f);
    float aspect = float(camera.width) / float(camera.height);

    // parity probe along a direction unlikely to graze shared edges
    {
        Ray probe;
        probe.origin = camera.position;
        probe.dir = normalize(Vec3f(0.2137f, 0.5311f, 0.8209f));
        probe.tmin = 0.0f;
        out.camera_inside = bvh.count_intersections(probe) % 2 == 1;
    }

    std::vector<int64_t> degenerate_rows(size_t(camera.height), 0);
    parallel_for(0, camera.height, [&](int64_t y) {
        for (int x = 0; x < camera.width; ++x) {
            float sx = (2.0f * (float(x) + 0.5f) / float(camera.width) - 1.0f) * tan_half * aspect;
            float sy = (1.0f - 2.0f * (float(y) + 0.5f) / float(camera.height)) * tan_half;
            Ray ray;
            ray.origin = camera.position;
            ray.dir = normalize(forward + right * sx + upv * sy);
            ray.tmin = 1e-4f;
            RayHit hit;
            if (!bvh.intersect(ray, hit))
                continue;
            const auto &tri = mesh.triangles[size_t(hit.tri)];
            Vec2f uv = interpolate_attribute(mesh.uvs[size_t(tri[0])], mesh.uvs[size_t(tri[1])],
                                             mesh.uvs[size_t(tri[2])], hit.w1, hit.w2);
            Vec3f pos = ray.origin + ray.dir * hit.t;
            const TangentFrame &f0 = frames[size_t(tri[0])];
            const TangentFrame &f1 = frames[size_t(tri[1])];
            const TangentFrame &f2 = frames[size_t(tri[2])];
            Vec3f n = normalize(interpolate_attribute(f0.n, f1.n, f2.n, hit.w1, hit.w2));
            Vec3f ti = interpolate_attribute(f0.t, f1.t, f2.t, hit.w1, hit.w2);
            Vec3f tt = ti - n * dot(n, ti);
            float tlen = length(tt);
            TangentFrame frame;
            frame.n = n;
            if (tlen > 1e-8f) {
                frame.t = tt / tlen;
                frame.b = cross(n, frame.t);
                Vec3f bi = interpolate_attribute(f0.b, f1.b, f2.b, hit.w1, hit.w2);
                if (dot(frame.b, bi) < 0.0f)
                    frame.b = -frame.b;
            } else {
                orthonormal_basis(n, frame.t, frame.b);
            }

            auto decode_normal = [&](const RasterMap &nm) {
                Vec3f v(sample_bilinear_uv(nm, uv.x, uv.y, 0),
                        sample_bilinear_uv(nm, uv.x, uv.y, 1),
                        sample_bilinear_uv(nm, uv.x, uv.y, 2));
                return normalize(frame.t * v.x + frame.b * v.y + frame.n * v.z);
            };
            Vec3f nd = decode_normal(refl.normals_diffuse);
            Vec3f ns = decode_normal(refl.normals_specular);
            Vec3f kd(sample_bilinear_uv(albedo_lin, uv.x, uv.y, 0),
                     sample_bilinear_uv(albedo_lin, uv.x, uv.y, 1),
                     sample_bilinear_uv(albedo_lin, uv.x, uv.y, 2));
            float ks = sample_bilinear_uv(spec_lin, uv.x, uv.y, 0);
            Vec3f view = -ray.dir;

            uint64_t key = hash_combine(settings.seed,
                                        uint64_t(y) * uint64_t(camera.width) + uint64_t(x));
            Vec3f radiance = kd * shader.irradiance(pos, nd, n, key) +
                             shader.specular(pos, ns, n, view, key) * ks;
            if (!std::isfinite(radiance.x) || !std::isfinite(radiance.y) ||
                !std::isfinite(radiance.z)) {
                radiance = Vec3f(0.0f);
                degenerate_rows[size_t(y)] += 1;
            }
            out.image.at(x, int(y), 0) = radiance.x;
            out.image.at(x, int(y), 1) = radiance.y;
            out.image.at(x, int(y), 2) = radiance.z;
            out.coverage.at(x, int(y)) = 1.0f;
        }
    });
    for (int64_t c : degenerate_rows)
        out.degenerate_pixels += c;
    return out;
}

} // namespace reflkit
