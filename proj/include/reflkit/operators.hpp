#pragma once

#include <exception>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "reflkit/color.hpp"
#include "reflkit/patch.hpp"
#include "reflkit/raster.hpp"
#include "reflkit/resample.hpp"
#include "reflkit/shading.hpp"

namespace reflkit {

// --- reference translation maps --------------------------------------------

// Super-resolves a texture by an integer factor with Lanczos-3 resampling.
// The canonical template texture is 576x384; other sizes need any_size.
inline RasterMap sr_zeta(const RasterMap &texture, int scale = 8, bool any_size = false) {
    require(texture.channels == 3, "zeta: texture must have 3 channels");
    require(scale >= 1, "zeta: scale must be positive");
    if (!any_size)
        require(texture.width == 576 && texture.height == 384,
                "zeta: expected a 576x384 texture (pass any_size to lift this)");
    return resize_lanczos(texture, texture.width * scale, texture.height * scale);
}

// Linear-luma gray of an albedo or texture map.
// Luma on the sRGB-encoded values (luma, not luminance).
inline RasterMap luma_gray(const RasterMap &color) {
    require(color.channels == 3, "gray: need a 3-channel map");
    require(color.colorspace == Colorspace::Srgb, "gray: expected an srgb-encoded map");
    return to_gray(color);
}

struct DelightResult {
    RasterMap albedo;   // sRGB-encoded diffuse albedo, mask = coverage
    RasterMap filled;   // 1 where irradiance was too low and the texel was filled
};

// Inverts the bake: A_D = clamp((srgb_decode(T) - S) / E). Texels where any
// irradiance channel falls below epsilon are filled from the nearest stable
// texel and flagged.
inline DelightResult delight_delta(const RasterMap &baked, const IrradianceMaps &irr,
                                   float epsilon = 0.02f) {
    require(baked.channels == 3, "delight: baked texture must have 3 channels");
    require(baked.width == irr.e.width && baked.height == irr.e.height,
            "delight: texture and irradiance dimensions differ");
    require(baked.colorspace == Colorspace::Srgb, "delight: baked texture must be srgb");

    int w = baked.width, h = baked.height;
    RasterMap lin = to_linear(baked);
    RasterMap out = make_map(w, h, MapKind::DiffuseAlbedo, Colorspace::Linear);
    RasterMap filled = make_map(w, h, MapKind::Gray, Colorspace::Raw);

    out.mask.assign(out.texel_count(), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool covered = irr.coverage.at(x, y) > 0.5f;
            if (!covered)
                continue;
            float e0 = irr.e.at(x, y, 0), e1 = irr.e.at(x, y, 1), e2 = irr.e.at(x, y, 2);
            float emin = std::min(e0, std::min(e1, e2));
            if (emin < epsilon) {
                filled.at(x, y) = 1.0f;
                continue;
            }
            out.at(x, y, 0) = clamp01((lin.at(x, y, 0) - irr.s.at(x, y, 0)) / e0);
            out.at(x, y, 1) = clamp01((lin.at(x, y, 1) - irr.s.at(x, y, 1)) / e1);
            out.at(x, y, 2) = clamp01((lin.at(x, y, 2) - irr.s.at(x, y, 2)) / e2);
            out.set_valid(x, y, true);
        }

    out = fill_nearest_valid(out);
    out.mask.assign(out.texel_count(), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (irr.coverage.at(x, y) > 0.5f)
                out.mask[size_t(y) * size_t(w) + size_t(x)] = 1;

    DelightResult res;
    res.albedo = to_srgb(out);
    res.filled = std::move(filled);
    return res;
}

// --- psi: specular albedo from diffuse albedo -------------------------------

struct PsiSettings {
    float s0 = 0.3f;      // base specular albedo
    float kappa = 1.0f;   // occlusion strength
    float sigma_b = 4.0f; // high-pass blur radius, texels
    float h_norm = 0.25f; // high-pass magnitude mapped to full occlusion
};

// A_S = clamp(s0 * (1 - kappa * H)) where H is the normalized high-pass
// magnitude of the gray albedo: pores and hair darken the specular response.
inline RasterMap spec_albedo_psi(const RasterMap &albedo, const PsiSettings &cfg = {}) {
    RasterMap g = luma_gray(albedo);
    RasterMap low = gaussian_blur(g, cfg.sigma_b);
    RasterMap out = make_map(g.width, g.height, MapKind::SpecularAlbedo, Colorspace::Linear);
    out.mask = albedo.mask;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            float hp = std::fabs(g.at(x, y) - low.at(x, y)) / cfg.h_norm;
            float occ = hp < 1.0f ? hp : 1.0f;
            out.at(x, y) = clamp01(cfg.s0 * (1.0f - cfg.kappa * occ));
        }
    return out;
}

// --- rho: specular normals from gray albedo + tangent normals ---------------

struct RhoSettings {
    float beta = 0.8f;       // gradient injection strength
    float sigma_fine = 1.0f; // pre-smoothing of the gray input
    float sigma_coarse = 0.0f; // optional band limit; 0 keeps low frequencies
};

// N_S = normalize(N_T + beta * (-dg/dx, -dg/dy, 0)): dark features recess.
inline RasterMap spec_normals_rho(const RasterMap &gray, const RasterMap &normals_tangent,
                                  const RhoSettings &cfg = {}) {
    require(gray.channels == 1, "rho: gray input must have 1 channel");
    require(normals_tangent.channels == 3, "rho: normals input must have 3 channels");
    require(gray.width == normals_tangent.width && gray.height == normals_tangent.height,
            "rho: input dimensions differ");

    RasterMap g = cfg.sigma_fine > 0.0f ? gaussian_blur(gray, cfg.sigma_fine) : gray;
    if (cfg.sigma_coarse > 0.0f) {
        RasterMap low = gaussian_blur(gray, cfg.sigma_coarse);
        for (size_t i = 0; i < g.data.size(); ++i)
            g.data[i] -= low.data[i];
    }
    RasterMap gx = gradient_x(g);
    RasterMap gy = gradient_y(g);

    RasterMap out = make_map(g.width, g.height, MapKind::NormalsSpecular,
                             Colorspace::SignedUnit);
    out.mask = normals_tangent.mask;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            Vec3f n(normals_tangent.at(x, y, 0) - cfg.beta * gx.at(x, y),
                    normals_tangent.at(x, y, 1) - cfg.beta * gy.at(x, y),
                    normals_tangent.at(x, y, 2));
            float len = length(n);
            n = len > 0.0f ? n * (1.0f / len) : Vec3f(0.0f, 0.0f, 1.0f);
            out.at(x, y, 0) = n.x;
            out.at(x, y, 1) = n.y;
            out.at(x, y, 2) = n.z;
        }
    return out;
}

// --- sigma: diffuse normals from gray albedo + object normals ---------------

struct SigmaSettings {
    float gamma = 0.2f;   // low-frequency gradient strength
    float sigma_d = 6.0f; // smoothing radius for both normals and gray
};

// N_D = normalize(blur(N_O, sigma_d) + gamma * (-dG/dx, -dG/dy, 0)) with G the
// sigma_d-blurred gray: diffuse shading follows smoothed shape plus broad
// albedo structure. Computed channelwise in the normals' own space.
inline RasterMap diff_normals_sigma(const RasterMap &gray, const RasterMap &normals,
                                    const SigmaSettings &cfg = {}) {
    require(gray.channels == 1, "sigma: gray input must have 1 channel");
    require(normals.channels == 3, "sigma: normals input must have 3 channels");
    require(gray.width == normals.width && gray.height == normals.height,
            "sigma: input dimensions differ");

    RasterMap base = cfg.sigma_d > 0.0f ? gaussian_blur(normals, cfg.sigma_d) : normals;
    RasterMap glow = cfg.sigma_d > 0.0f ? gaussian_blur(gray, cfg.sigma_d) : gray;
    RasterMap gx = gradient_x(glow);
    RasterMap gy = gradient_y(glow);

    RasterMap out = make_map(gray.width, gray.height, MapKind::NormalsDiffuse,
                             Colorspace::SignedUnit);
    out.mask = normals.mask;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            Vec3f n(base.at(x, y, 0) - cfg.gamma * gx.at(x, y),
                    base.at(x, y, 1) - cfg.gamma * gy.at(x, y),
                    base.at(x, y, 2));
            float len = length(n);
            if (len > 0.0f) {
                n = n * (1.0f / len);
            } else {
                n = Vec3f(normals.at(x, y, 0), normals.at(x, y, 1), normals.at(x, y, 2));
            }
            out.at(x, y, 0) = n.x;
            out.at(x, y, 1) = n.y;
            out.at(x, y, 2) = n.z;
        }
    return out;
}

// --- patch operator abstraction ---------------------------------------------

// A translation map applied to channel stacks, patch by patch or whole-image.
// scale() is the output/input resolution ratio.
class PatchOperator {
public:
    virtual ~PatchOperator() = default;
    virtual std::string name() const = 0;
    virtual std::vector<std::string> input_layout() const = 0;
    virtual std::vector<std::string> output_layout() const = 0;
    virtual int scale() const { return 1; }
    virtual MapStack apply(const MapStack &in) const = 0;

    // One worker's context; external backends keep a child process here.
    class Session {
    public:
        virtual ~Session() = default;
        virtual MapStack run(const MapStack &in) = 0;
    };

    virtual std::unique_ptr<Session> open_session() const;
};

namespace detail {

class CallSession final : public PatchOperator::Session {
public:
    explicit CallSession(const PatchOperator &op) : op_(&op) {}
    MapStack run(const MapStack &in) override { return op_->apply(in); }

private:
    const PatchOperator *op_;
};

} // namespace detail

inline std::unique_ptr<PatchOperator::Session> PatchOperator::open_session() const {
    return std::make_unique<detail::CallSession>(*this);
}

class LambdaOperator final : public PatchOperator {
public:
    LambdaOperator(std::string name, std::vector<std::string> in_layout,
                   std::vector<std::string> out_layout, int scale,
                   std::function<MapStack(const MapStack &)> fn)
        : name_(std::move(name)), in_(std::move(in_layout)), out_(std::move(out_layout)),
          scale_(scale), fn_(std::move(fn)) {}

    std::string name() const override { return name_; }
    std::vector<std::string> input_layout() const override { return in_; }
    std::vector<std::string> output_layout() const override { return out_; }
    int scale() const override { return scale_; }
    MapStack apply(const MapStack &in) const override { return fn_(in); }

private:
    std::string name_;
    std::vector<std::string> in_, out_;
    int scale_;
    std::function<MapStack(const MapStack &)> fn_;
};

inline LambdaOperator make_zeta_operator(int scale = 8) {
    return LambdaOperator(
        "zeta", {"R", "G", "B"}, {"R", "G", "B"}, scale,
        [scale](const MapStack &in) {
            return single_layer_stack(sr_zeta(in.layers[0], scale, true));
        });
}

inline LambdaOperator make_psi_operator(PsiSettings cfg = {}) {
    return LambdaOperator(
        "psi", {"R", "G", "B"}, {"S"}, 1,
        [cfg](const MapStack &in) {
            return single_layer_stack(spec_albedo_psi(in.layers[0], cfg));
        });
}

inline LambdaOperator make_rho_operator(RhoSettings cfg = {}) {
    return LambdaOperator(
        "rho", {"G", "X", "Y", "Z"}, {"X", "Y", "Z"}, 1,
        [cfg](const MapStack &in) {
            return single_layer_stack(spec_normals_rho(in.layers[0], in.layers[1], cfg));
        });
}

inline LambdaOperator make_sigma_operator(SigmaSettings cfg = {}) {
    return LambdaOperator(
        "sigma", {"G", "X", "Y", "Z"}, {"X", "Y", "Z"}, 1,
        [cfg](const MapStack &in) {
            return single_layer_stack(diff_normals_sigma(in.layers[0], in.layers[1], cfg));
        });
}

// --- tiled application -------------------------------------------------------

// Splits the stack into overlapping patches, runs the operator on each (one
// session per worker, contiguous patch ranges), and stitches the outputs.
// Operator failures carry the patch origin in source coordinates.
inline MapStack apply_tiled(const PatchOperator &op, const MapStack &input, int patch,
                            int stride, int margin = -1) {
    require(input.layout == op.input_layout(),
            "operator " + op.name() + ": input layout mismatch");
    PatchGrid grid = plan_patch_grid(input.width, input.height, patch, stride);
    if (margin < 0)
        margin = default_blend_margin(grid);

    MapStack padded = pad_reflect(input, grid);
    std::vector<MapStack> patches = extract_patches(padded, grid);
    std::vector<MapStack> outputs(patches.size());

    int count = grid.count();
    auto origin_text = [&](int idx) {
        int i = idx % grid.nx, j = idx / grid.nx;
        return "(" + std::to_string(grid.origin_x(i) - grid.pad_left) + ", " +
               std::to_string(grid.origin_y(j) - grid.pad_top) + ")";
    };
    auto run_range = [&](int lo, int hi, int &failed_idx, std::string &message) {
        std::unique_ptr<PatchOperator::Session> session;
        try {
            session = op.open_session();
        } catch (const std::exception &e) {
            failed_idx = lo;
            message = "operator " + op.name() + ": " + e.what();
            return;
        }
        for (int idx = lo; idx < hi; ++idx) {
            try {
                MapStack out = session->run(patches[size_t(idx)]);
                int want = grid.patch * op.scale();
                require(out.width == want && out.height == want,
                        "expected a " + std::to_string(want) + "x" + std::to_string(want) +
                            " output, got " + std::to_string(out.width) + "x" +
                            std::to_string(out.height));
                require(out.layout == op.output_layout(), "output layout mismatch");
                outputs[size_t(idx)] = std::move(out);
            } catch (const std::exception &e) {
                failed_idx = idx;
                message = "operator " + op.name() + ": " + e.what() + " (patch at " +
                          origin_text(idx) + ")";
                return;
            }
        }
    };

    int workers = thread_count();
    if (workers > count)
        workers = count;
    std::vector<int> failed(size_t(workers), -1);
    std::vector<std::string> messages(static_cast<size_t>(workers));
    if (workers <= 1) {
        run_range(0, count, failed[0], messages[0]);
    } else {
        int chunk = (count + workers - 1) / workers;
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) {
            int lo = t * chunk;
            int hi = std::min(lo + chunk, count);
            if (lo >= hi)
                break;
            pool.emplace_back([&, lo, hi, t] { run_range(lo, hi, failed[size_t(t)],
                                                         messages[size_t(t)]); });
        }
        for (auto &th : pool)
            th.join();
    }
    int first = -1;
    for (size_t t = 0; t < failed.size(); ++t)
        if (failed[t] >= 0 && (first < 0 || failed[t] < failed[size_t(first)]))
            first = int(t);
    if (first >= 0)
        fail(messages[size_t(first)]);

    return stitch_patches(outputs, grid, margin, op.scale());
}

} // namespace reflkit
