#pragma once

#include <cmath>

#include "reflkit/bvh.hpp"
#include "reflkit/color.hpp"
#include "reflkit/mesh.hpp"
#include "reflkit/parallel.hpp"
#include "reflkit/raster.hpp"
#include "reflkit/resample.hpp"
#include "reflkit/rng.hpp"
#include "reflkit/uv_raster.hpp"
#include "reflkit/vec.hpp"

namespace reflkit {

struct PointLight {
    Vec3f position;
    Vec3f intensity; // radiant intensity; irradiance falls off as 1/r^2
};

struct LightingRig {
    std::vector<PointLight> lights;
    RasterMap environment; // lat-long, linear RGB; width 0 = no environment
    float env_scale = 1.0f;
    float jitter_sigma = 0.0f; // light position jitter, applied once per bake
    uint64_t seed = 0;
};

inline std::vector<PointLight> jittered_lights(const LightingRig &rig) {
    std::vector<PointLight> out = rig.lights;
    if (rig.jitter_sigma > 0.0f) {
        CounterRng rng(rig.seed, 0x4c49u); // light-jitter stream
        for (size_t i = 0; i < out.size(); ++i) {
            out[i].position.x += rig.jitter_sigma * float(rng.gaussian(3 * i + 0));
            out[i].position.y += rig.jitter_sigma * float(rng.gaussian(3 * i + 1));
            out[i].position.z += rig.jitter_sigma * float(rng.gaussian(3 * i + 2));
        }
    }
    return out;
}

struct ShadeSettings {
    float ggx_alpha = 0.35f;
    int env_samples = 64;           // rounded down to a square number
    bool shadows = true;            // point-light shadow rays
    bool env_shadows = false;       // environment visibility rays
    float shadow_bias = 3e-4f;
    float bake_specular_albedo = 0.25f;
    uint64_t seed = 0;              // sampling jitter seed
};

// --- GGX microfacet pieces -------------------------------------------------

inline float ggx_d(float cos_h, float alpha) {
    if (cos_h <= 0.0f)
        return 0.0f;
    float a2 = alpha * alpha;
    float d = cos_h * cos_h * (a2 - 1.0f) + 1.0f;
    return a2 / (float(M_PI) * d * d);
}

inline float smith_g1(float cos_v, float alpha) {
    if (cos_v <= 0.0f)
        return 0.0f;
    float a2 = alpha * alpha;
    return 2.0f * cos_v / (cos_v + std::sqrt(a2 + (1.0f - a2) * cos_v * cos_v));
}

// Specular lobe without the albedo scale: D * G1(v) * G1(l) / (4 (n.v)(n.l)).
// The albedo map replaces the Fresnel factor.
inline float ggx_specular(const Vec3f &n, const Vec3f &v, const Vec3f &l, float alpha) {
    float nv = dot(n, v);
    float nl = dot(n, l);
    if (nv <= 0.0f || nl <= 0.0f)
        return 0.0f;
    Vec3f h = normalize(v + l);
    float d = ggx_d(dot(n, h), alpha);
    float g = smith_g1(nv, alpha) * smith_g1(nl, alpha);
    return d * g / (4.0f * nv * nl);
}

namespace detail {

// Samples the GGX distribution of visible normals (Heitz 2018). v is in the
// local frame with n = +z; returns the half vector.
inline Vec3f sample_vndf(const Vec3f &v, float alpha, float xi1, float xi2) {
    Vec3f vh = normalize(Vec3f(alpha * v.x, alpha * v.y, v.z));
    float lensq = vh.x * vh.x + vh.y * vh.y;
    Vec3f t1 = lensq > 1e-12f ? Vec3f(-vh.y, vh.x, 0.0f) / std::sqrt(lensq)
                              : Vec3f(1.0f, 0.0f, 0.0f);
    Vec3f t2 = cross(vh, t1);
    float r = std::sqrt(xi1);
    float phi = 2.0f * float(M_PI) * xi2;
    float p1 = r * std::cos(phi);
    float p2 = r * std::sin(phi);
    float s = 0.5f * (1.0f + vh.z);
    p2 = (1.0f - s) * std::sqrt(std::fmax(0.0f, 1.0f - p1 * p1)) + s * p2;
    Vec3f nh = t1 * p1 + t2 * p2 +
               vh * std::sqrt(std::fmax(0.0f, 1.0f - p1 * p1 - p2 * p2));
    return normalize(Vec3f(alpha * nh.x, alpha * nh.y, std::fmax(1e-6f, nh.z)));
}

} // namespace detail

// Hemisphere quadrature of f_spec * cos via a grid x grid stratified
// change of variables to visible-normal space, where each term reduces to
// G1(n.l) in [0, 1]; the mean is the directional albedo and cannot exceed 1.
inline double specular_directional_albedo(float alpha, float cos_v, int grid = 64) {
    float sin_v = std::sqrt(std::fmax(0.0f, 1.0f - cos_v * cos_v));
    Vec3f v(sin_v, 0.0f, cos_v);
    double sum = 0.0;
    for (int j = 0; j < grid; ++j)
        for (int i = 0; i < grid; ++i) {
            float xi1 = (float(i) + 0.5f) / float(grid);
            float xi2 = (float(j) + 0.5f) / float(grid);
            Vec3f h = detail::sample_vndf(v, alpha, xi1, xi2);
            Vec3f l = h * (2.0f * dot(v, h)) - v;
            if (l.z > 0.0f)
                sum += double(smith_g1(l.z, alpha));
        }
    return sum / (double(grid) * double(grid));
}

// --- environment lookup ----------------------------------------------------

// Lat-long convention: +Y is the zenith (row 0), u wraps around atan2(x, -z).
inline Vec3f env_radiance(const RasterMap &env, float scale, const Vec3f &dir) {
    if (env.width == 0)
        return Vec3f(0.0f);
    if (env.width == 1 && env.height == 1)
        return Vec3f(env.at(0, 0, 0), env.at(0, 0, 1), env.at(0, 0, 2)) * scale;
    float u = 0.5f + std::atan2(dir.x, -dir.z) / (2.0f * float(M_PI));
    float v = std::acos(std::fmax(-1.0f, std::fmin(1.0f, dir.y))) / float(M_PI);
    float cx = u * float(env.width) - 0.5f;
    float cy = v * float(env.height) - 0.5f;
    int x0 = int(std::floor(cx));
    int y0 = int(std::floor(cy));
    float tx = cx - float(x0);
    float ty = cy - float(y0);
    auto wrap = [&](int x) {
        x %= env.width;
        return x < 0 ? x + env.width : x;
    };
    int x1 = wrap(x0 + 1);
    x0 = wrap(x0);
    int y1 = clamp_index(y0 + 1, env.height);
    y0 = clamp_index(y0, env.height);
    Vec3f out;
    for (int c = 0; c < 3; ++c) {
        float a = env.at(x0, y0, c) + tx * (env.at(x1, y0, c) - env.at(x0, y0, c));
        float b = env.at(x0, y1, c) + tx * (env.at(x1, y1, c) - env.at(x0, y1, c));
        out[c] = a + ty * (b - a);
    }
    return out * scale;
}

// --- per-point shading core ------------------------------------------------

// Shared by bake, de-light, and render so that identical inputs shade
// identically. Occluder may be null (no shadow rays).
class Shader {
public:
    Shader(const LightingRig &rig, const ShadeSettings &settings, const Bvh *occluder)
        : rig_(&rig), settings_(settings), occluder_(occluder),
          lights_(jittered_lights(rig)) {
        strata_ = 1;
        while ((strata_ + 1) * (strata_ + 1) <= settings.env_samples)
            ++strata_;
    }

    const std::vector<PointLight> &lights() const { return lights_; }
    const ShadeSettings &settings() const { return settings_; }

    // Diffuse irradiance around nd, per channel, Lambert-normalized: a unit
    // uniform environment yields exactly (1,1,1).
    Vec3f irradiance(const Vec3f &pos, const Vec3f &nd, const Vec3f &gn,
                     uint64_t texel_key) const {
        Vec3f e(0.0f);
        for (const auto &light : lights_) {
            Vec3f to_light = light.position - pos;
            float r2 = length_sq(to_light);
            if (r2 <= 0.0f)
                continue;
            Vec3f dir = to_light / std::sqrt(r2);
            float cosine = dot(nd, dir);
            if (cosine <= 0.0f)
                continue;
            if (settings_.shadows && occluder_ &&
                occluder_->occluded(pos + gn * settings_.shadow_bias, light.position))
                continue;
            e += light.intensity * (cosine / (float(M_PI) * r2));
        }
        if (rig_->environment.width > 0) {
            CounterRng rng(texel_key, 0xD1FFu);
            Vec3f t, b;
            orthonormal_basis(nd, t, b);
            Vec3f acc(0.0f);
            int n = strata_ * strata_;
            for (int s = 0; s < n; ++s) {
                float xi1 = (float(s % strata_) + float(rng.uniform(2 * uint64_t(s)))) / float(strata_);
                float xi2 = (float(s / strata_) + float(rng.uniform(2 * uint64_t(s) + 1))) / float(strata_);
                float r = std::sqrt(xi1);
                float phi = 2.0f * float(M_PI) * xi2;
                float z = std::sqrt(std::fmax(0.0f, 1.0f - xi1));
                Vec3f dir = t * (r * std::cos(phi)) + b * (r * std::sin(phi)) + nd * z;
                if (settings_.env_shadows && occluder_ &&
                    occluder_->occluded(pos + gn * settings_.shadow_bias,
                                        pos + dir * 1e4f))
                    continue;
                acc += env_radiance(rig_->environment, rig_->env_scale, dir);
            }
            e += acc * (1.0f / float(n));
        }
        return e;
    }

    // Specular radiance toward `view` without the albedo scale.
    Vec3f specular(const Vec3f &pos, const Vec3f &ns, const Vec3f &gn, const Vec3f &view,
                   uint64_t texel_key) const {
        Vec3f s(0.0f);
        for (const auto &light : lights_) {
            Vec3f to_light = light.position - pos;
            float r2 = length_sq(to_light);
            if (r2 <= 0.0f)
                continue;
            Vec3f dir = to_light / std::sqrt(r2);
            float cosine = dot(ns, dir);
            if (cosine <= 0.0f)
                continue;
            if (settings_.shadows && occluder_ &&
                occluder_->occluded(pos + gn * settings_.shadow_bias, light.position))
                continue;
            float f = ggx_specular(ns, view, dir, settings_.ggx_alpha);
            s += light.intensity * (f * cosine / r2);
        }
        if (rig_->environment.width > 0 && dot(ns, view) > 0.0f) {
            CounterRng rng(texel_key, 0x5BECu);
            Vec3f t, b;
            orthonormal_basis(ns, t, b);
            // view in the local frame of ns
            Vec3f lv(dot(view, t), dot(view, b), dot(view, ns));
            Vec3f acc(0.0f);
            int n = strata_ * strata_;
            for (int k = 0; k < n; ++k) {
                float xi1 = (float(k % strata_) + float(rng.uniform(2 * uint64_t(k)))) / float(strata_);
                float xi2 = (float(k / strata_) + float(rng.uniform(2 * uint64_t(k) + 1))) / float(strata_);
                Vec3f h = detail::sample_vndf(lv, settings_.ggx_alpha, xi1, xi2);
                Vec3f ll = h * (2.0f * dot(lv, h)) - lv;
                if (ll.z <= 0.0f)
                    continue;
                Vec3f dir = t * ll.x + b * ll.y + ns * ll.z;
                if (settings_.env_shadows && occluder_ &&
                    occluder_->occluded(pos + gn * settings_.shadow_bias,
                                        pos + dir * 1e4f))
                    continue;
                acc += env_radiance(rig_->environment, rig_->env_scale, dir) *
                       smith_g1(ll.z, settings_.ggx_alpha);
            }
            s += acc * (1.0f / float(n));
        }
        return s;
    }

    // True when every point light with positive geometric incidence is
    // unoccluded at pos.
    bool fully_lit(const Vec3f &pos, const Vec3f &gn) const {
        if (!settings_.shadows || !occluder_)
            return true;
        for (const auto &light : lights_) {
            Vec3f dir = light.position - pos;
            if (dot(gn, dir) <= 0.0f)
                continue;
            if (occluder_->occluded(pos + gn * settings_.shadow_bias, light.position))
                return false;
        }
        return true;
    }

private:
    const LightingRig *rig_;
    ShadeSettings settings_;
    const Bvh *occluder_;
    std::vector<PointLight> lights_;
    int strata_ = 1;
};

// --- UV-space bake ----------------------------------------------------------

struct IrradianceMaps {
    RasterMap e;           // diffuse irradiance, 3ch
    RasterMap s;           // baked specular radiance (frontal view), 3ch
    RasterMap shadow_mask; // 1 where no point light is occluded
    RasterMap coverage;    // 1 where the mesh covers the texel
};

// Per-texel lighting terms at the given resolution, frontal +Z view for the
// specular term. The de-light reference consumes exactly these maps, so bake
// followed by de-light cancels up to float rounding.
inline IrradianceMaps irradiance_components(const GeometryMaps &geom, const Bvh &bvh,
                                            const LightingRig &rig,
                                            const ShadeSettings &settings) {
    int width = geom.width, height = geom.height;
    Shader shader(rig, settings, &bvh);

    IrradianceMaps maps;
    maps.e = make_map(width, height, MapKind::Irradiance, Colorspace::Raw);
    maps.s = make_map(width, height, MapKind::Irradiance, Colorspace::Raw);
    maps.shadow_mask = make_map(width, height, MapKind::Gray, Colorspace::Raw);
    maps.coverage = geom.mask_map();
    maps.e.mask = geom.mask;
    maps.s.mask = geom.mask;

    const Vec3f view(0.0f, 0.0f, 1.0f);
    float spec_scale = settings.bake_specular_albedo;
    parallel_for(0, int64_t(width) * int64_t(height), [&](int64_t i) {
        if (!geom.mask[size_t(i)])
            return;
        int x = int(i % width);
        int y = int(i / width);
        const Vec3f &pos = geom.position[size_t(i)];
        const Vec3f &n = geom.normal[size_t(i)];
        uint64_t key = hash_combine(settings.seed, uint64_t(i));
        Vec3f e = shader.irradiance(pos, n, n, key);
        Vec3f s = shader.specular(pos, n, n, view, key) * spec_scale;
        maps.e.at(x, y, 0) = e.x;
        maps.e.at(x, y, 1) = e.y;
        maps.e.at(x, y, 2) = e.z;
        maps.s.at(x, y, 0) = s.x;
        maps.s.at(x, y, 1) = s.y;
        maps.s.at(x, y, 2) = s.z;
        maps.shadow_mask.at(x, y) = shader.fully_lit(pos, n) ? 1.0f : 0.0f;
    });
    return maps;
}

inline IrradianceMaps irradiance_components(const Mesh &mesh, int width, int height,
                                            const LightingRig &rig,
                                            const ShadeSettings &settings) {
    GeometryMaps geom = rasterize_geometry(mesh, width, height);
    Bvh bvh(mesh);
    return irradiance_components(geom, bvh, rig, settings);
}

// Bakes illumination into an albedo: srgb(clamp(A_D * E + S)).
inline RasterMap bake_texture(const RasterMap &albedo, const IrradianceMaps &irr) {
    require(albedo.width == irr.e.width && albedo.height == irr.e.height,
            "bake: albedo and irradiance dimensions differ");
    RasterMap lin = to_linear(albedo);
    RasterMap out = make_map(albedo.width, albedo.height, MapKind::BakedTexture, Colorspace::Srgb);
    out.mask = irr.e.mask;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            if (!out.valid(x, y))
                continue;
            for (int c = 0; c < 3; ++c) {
                float v = lin.at(x, y, c) * irr.e.at(x, y, c) + irr.s.at(x, y, c);
                out.at(x, y, c) = srgb_encode(clamp01(v));
            }
        }
    return out;
}

} // namespace reflkit
