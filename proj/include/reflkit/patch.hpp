#pragma once

#include <cmath>
#include <vector>

#include "reflkit/raster.hpp"

namespace reflkit {

// Sliding-window lattice over a reflect-padded source. Origins live in padded
// coordinates and step by stride; the last origin ends exactly at the padded
// edge.
struct PatchGrid {
    int source_w = 0, source_h = 0;
    int patch = 0, stride = 0;
    int pad_left = 0, pad_top = 0, pad_right = 0, pad_bottom = 0;
    int padded_w = 0, padded_h = 0;
    int nx = 0, ny = 0;

    int count() const { return nx * ny; }
    int origin_x(int i) const { return i * stride; }
    int origin_y(int j) const { return j * stride; }
};

inline int floor_div(int a, int b) {
    int q = a / b, r = a % b;
    return (r != 0 && (r < 0) != (b < 0)) ? q - 1 : q;
}

// reflect-101: ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
inline int reflect_index(int i, int n) {
    if (n == 1)
        return 0;
    int period = 2 * n - 2;
    i %= period;
    if (i < 0)
        i += period;
    return i < n ? i : period - i;
}

inline PatchGrid plan_patch_grid(int w, int h, int patch, int stride) {
    require(patch >= 1 && stride >= 1, "grid: patch and stride must be positive");
    require(patch >= stride, "grid: stride must not exceed patch");
    require(w >= 1 && h >= 1, "grid: source dimensions must be positive");
    PatchGrid g;
    g.source_w = w;
    g.source_h = h;
    g.patch = patch;
    g.stride = stride;
    auto pad_axis = [&](int n, int &lo, int &hi, int &padded) {
        int need;
        if (n >= patch) {
            int rem = (n - patch) % stride;
            need = rem == 0 ? 0 : stride - rem;
        } else {
            need = patch - n;
        }
        require(need <= 2 * (n - 1),
                "grid: source too small to pad up to the patch size by reflection");
        lo = need / 2;
        hi = need - lo;
        padded = n + need;
    };
    pad_axis(w, g.pad_left, g.pad_right, g.padded_w);
    pad_axis(h, g.pad_top, g.pad_bottom, g.padded_h);
    g.nx = (g.padded_w - patch) / stride + 1;
    g.ny = (g.padded_h - patch) / stride + 1;
    return g;
}

inline int default_blend_margin(const PatchGrid &g) {
    int overlap = g.patch - g.stride;
    return overlap < g.patch / 2 ? overlap : g.patch / 2;
}

inline RasterMap pad_reflect(const RasterMap &m, const PatchGrid &g) {
    RasterMap out = m;
    out.width = g.padded_w;
    out.height = g.padded_h;
    out.mask.clear();
    out.data.assign(size_t(g.padded_w) * size_t(g.padded_h) * size_t(m.channels), 0.0f);
    for (int y = 0; y < g.padded_h; ++y) {
        int sy = reflect_index(y - g.pad_top, m.height);
        for (int x = 0; x < g.padded_w; ++x) {
            int sx = reflect_index(x - g.pad_left, m.width);
            for (int c = 0; c < m.channels; ++c)
                out.at(x, y, c) = m.at(sx, sy, c);
        }
    }
    return out;
}

inline MapStack pad_reflect(const MapStack &s, const PatchGrid &g) {
    std::vector<RasterMap> layers;
    layers.reserve(s.layers.size());
    for (const auto &m : s.layers)
        layers.push_back(pad_reflect(m, g));
    return stack_maps(std::move(layers));
}

// Bit-exact crops of the padded stack, row-major origin order.
inline std::vector<MapStack> extract_patches(const MapStack &padded, const PatchGrid &g) {
    require(padded.width == g.padded_w && padded.height == g.padded_h,
            "extract: stack does not match the padded grid");
    std::vector<MapStack> patches;
    patches.reserve(size_t(g.count()));
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int ox = g.origin_x(i), oy = g.origin_y(j);
            std::vector<RasterMap> layers;
            layers.reserve(padded.layers.size());
            for (const auto &m : padded.layers) {
                RasterMap p = m;
                p.width = g.patch;
                p.height = g.patch;
                p.mask.clear();
                p.data.resize(size_t(g.patch) * size_t(g.patch) * size_t(m.channels));
                for (int y = 0; y < g.patch; ++y)
                    for (int x = 0; x < g.patch; ++x)
                        for (int c = 0; c < m.channels; ++c)
                            p.at(x, y, c) = m.at(ox + x, oy + y, c);
                layers.push_back(std::move(p));
            }
            patches.push_back(stack_maps(std::move(layers)));
        }
    return patches;
}

// Separable raised-cosine blend weights: ramps over `margin` texels at each
// border, never exactly zero, flat 1 in the interior.
inline std::vector<float> blend_window(int patch, int margin) {
    require(margin >= 0 && 2 * margin <= patch, "blend: margin too large for patch");
    std::vector<float> w(size_t(patch), 1.0f);
    for (int i = 0; i < margin; ++i) {
        float v = 0.5f - 0.5f * std::cos(float(M_PI) * (float(i) + 0.5f) / float(margin));
        w[size_t(i)] = v;
        w[size_t(patch - 1 - i)] = v;
    }
    return w;
}

// Weighted overlap-add of patch stacks, normalized per texel (partition of
// unity), padding cropped. `scale` stitches operator outputs that are an
// integer multiple of the input patch size. Gather-based: each output texel
// sums its covering patches in fixed order, so the result is independent of
// patch processing order and thread count.
inline MapStack stitch_patches(const std::vector<MapStack> &patches, const PatchGrid &g,
                               int blend_margin, int scale = 1) {
    require(int(patches.size()) == g.count(), "stitch: patch count mismatch");
    require(scale >= 1, "stitch: scale must be >= 1");
    int ps = g.patch * scale;
    int ss = g.stride * scale;
    for (const auto &p : patches)
        require(p.width == ps && p.height == ps,
                "stitch: patch stack has wrong dimensions");
    auto window = blend_window(ps, blend_margin * scale);

    int out_w = g.source_w * scale;
    int out_h = g.source_h * scale;
    int off_x = g.pad_left * scale;
    int off_y = g.pad_top * scale;
    const MapStack &proto = patches[0];

    MapStack out;
    out.width = out_w;
    out.height = out_h;
    out.total_channels = proto.total_channels;
    out.layout = proto.layout;
    for (const auto &m : proto.layers) {
        RasterMap layer;
        layer.width = out_w;
        layer.height = out_h;
        layer.channels = m.channels;
        layer.kind = m.kind;
        layer.colorspace = m.colorspace;
        layer.data.assign(size_t(out_w) * size_t(out_h) * size_t(m.channels), 0.0f);
        out.layers.push_back(std::move(layer));
    }

    for (int y = 0; y < out_h; ++y) {
        int py = y + off_y;
        int j_min = std::max(0, floor_div(py - ps, ss) + 1);
        int j_max = std::min(g.ny - 1, py / ss);
        for (int x = 0; x < out_w; ++x) {
            int px = x + off_x;
            int i_min = std::max(0, floor_div(px - ps, ss) + 1);
            int i_max = std::min(g.nx - 1, px / ss);
            double wsum = 0.0;
            for (int j = j_min; j <= j_max; ++j)
                for (int i = i_min; i <= i_max; ++i)
                    wsum += double(window[size_t(px - i * ss)]) *
                            double(window[size_t(py - j * ss)]);
            require(wsum > 0.0, "stitch: texel with zero blend weight");
            for (size_t l = 0; l < out.layers.size(); ++l) {
                RasterMap &dst = out.layers[l];
                for (int c = 0; c < dst.channels; ++c) {
                    double acc = 0.0;
                    for (int j = j_min; j <= j_max; ++j)
                        for (int i = i_min; i <= i_max; ++i) {
                            double w = double(window[size_t(px - i * ss)]) *
                                       double(window[size_t(py - j * ss)]);
                            acc += w * double(patches[size_t(j * g.nx + i)].layers[l].at(
                                           px - i * ss, py - j * ss, c));
                        }
                    dst.at(x, y, c) = float(acc / wsum);
                }
            }
        }
    }
    return out;
}

} // namespace reflkit
