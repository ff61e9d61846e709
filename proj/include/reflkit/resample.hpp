#pragma once

#include <cmath>
#include <queue>

#include "reflkit/parallel.hpp"
#include "reflkit/raster.hpp"

namespace reflkit {

inline int clamp_index(int i, int n) {
    return i < 0 ? 0 : (i >= n ? n - 1 : i);
}

// Bilinear sample at continuous texel coordinates; texel i has center i + 0.5.
// Clamp-to-edge outside the raster.
inline float sample_bilinear(const RasterMap &m, float cx, float cy, int c = 0) {
    float fx = cx - 0.5f;
    float fy = cy - 0.5f;
    int x0 = int(std::floor(fx));
    int y0 = int(std::floor(fy));
    float tx = fx - float(x0);
    float ty = fy - float(y0);
    int x1 = clamp_index(x0 + 1, m.width);
    int y1 = clamp_index(y0 + 1, m.height);
    x0 = clamp_index(x0, m.width);
    y0 = clamp_index(y0, m.height);
    float v00 = m.at(x0, y0, c), v10 = m.at(x1, y0, c);
    float v01 = m.at(x0, y1, c), v11 = m.at(x1, y1, c);
    float a = v00 + tx * (v10 - v00);
    float b = v01 + tx * (v11 - v01);
    return a + ty * (b - a);
}

// UV convention: u right, v up, texel (x, y) center at ((x+0.5)/W, 1-(y+0.5)/H).
inline float sample_bilinear_uv(const RasterMap &m, float u, float v, int c = 0) {
    return sample_bilinear(m, u * float(m.width), (1.0f - v) * float(m.height), c);
}

// Mask-aware bilinear: invalid corners are dropped and weights renormalized.
// Returns false when no valid corner covers the sample.
inline bool sample_bilinear_masked(const RasterMap &m, float cx, float cy, int c, float &out) {
    if (m.mask.empty()) {
        out = sample_bilinear(m, cx, cy, c);
        return true;
    }
    float fx = cx - 0.5f;
    float fy = cy - 0.5f;
    int x0 = int(std::floor(fx));
    int y0 = int(std::floor(fy));
    float tx = fx - float(x0);
    float ty = fy - float(y0);
    int xs[2] = {clamp_index(x0, m.width), clamp_index(x0 + 1, m.width)};
    int ys[2] = {clamp_index(y0, m.height), clamp_index(y0 + 1, m.height)};
    float ws[2][2] = {{(1 - tx) * (1 - ty), tx * (1 - ty)}, {(1 - tx) * ty, tx * ty}};
    double num = 0.0, den = 0.0;
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i)
            if (m.valid(xs[i], ys[j])) {
                num += double(ws[j][i]) * double(m.at(xs[i], ys[j], c));
                den += double(ws[j][i]);
            }
    if (den <= 0.0) {
        out = 0.0f;
        return false;
    }
    out = float(num / den);
    return true;
}

namespace detail {

inline double lanczos3(double x) {
    x = std::fabs(x);
    if (x < 1e-9)
        return 1.0;
    if (x >= 3.0)
        return 0.0;
    double px = M_PI * x;
    return 3.0 * std::sin(px) * std::sin(px / 3.0) / (px * px);
}

struct ResampleTaps {
    std::vector<int> start;     // first source index per output index
    std::vector<float> weights; // taps_per flattened
    int taps_per = 0;
};

inline ResampleTaps plan_lanczos(int src, int dst) {
    ResampleTaps plan;
    double scale = double(src) / double(dst);
    double support = scale > 1.0 ? 3.0 * scale : 3.0;
    plan.taps_per = int(std::ceil(support)) * 2 + 1;
    plan.start.resize(size_t(dst));
    plan.weights.resize(size_t(dst) * size_t(plan.taps_per));
    double kscale = scale > 1.0 ? 1.0 / scale : 1.0;
    for (int i = 0; i < dst; ++i) {
        double center = (double(i) + 0.5) * scale - 0.5;
        int lo = int(std::ceil(center - support));
        plan.start[size_t(i)] = lo;
        double sum = 0.0;
        std::vector<double> w(size_t(plan.taps_per), 0.0);
        for (int t = 0; t < plan.taps_per; ++t) {
            double x = (double(lo + t) - center) * kscale;
            w[size_t(t)] = lanczos3(x);
            sum += w[size_t(t)];
        }
        for (int t = 0; t < plan.taps_per; ++t)
            plan.weights[size_t(i) * size_t(plan.taps_per) + size_t(t)] = float(w[size_t(t)] / sum);
    }
    return plan;
}

} // namespace detail

// Separable Lanczos-3 resize with clamp-to-edge and normalized taps, so a
// constant map stays exactly constant. Kernel support scales when minifying.
inline RasterMap resize_lanczos(const RasterMap &m, int dst_w, int dst_h) {
    require(dst_w > 0 && dst_h > 0, "resize: target dimensions must be positive");
    auto hplan = detail::plan_lanczos(m.width, dst_w);
    auto vplan = detail::plan_lanczos(m.height, dst_h);

    RasterMap mid = m;
    mid.width = dst_w;
    mid.mask.clear();
    mid.data.assign(size_t(dst_w) * size_t(m.height) * size_t(m.channels), 0.0f);
    parallel_for(0, m.height, [&](int64_t y) {
        for (int x = 0; x < dst_w; ++x) {
            int lo = hplan.start[size_t(x)];
            const float *w = &hplan.weights[size_t(x) * size_t(hplan.taps_per)];
            for (int c = 0; c < m.channels; ++c) {
                double acc = 0.0;
                for (int t = 0; t < hplan.taps_per; ++t)
                    acc += double(w[t]) * double(m.at(clamp_index(lo + t, m.width), int(y), c));
                mid.at(x, int(y), c) = float(acc);
            }
        }
    });

    RasterMap out = mid;
    out.height = dst_h;
    out.data.assign(size_t(dst_w) * size_t(dst_h) * size_t(m.channels), 0.0f);
    parallel_for(0, dst_h, [&](int64_t y) {
        int lo = vplan.start[size_t(y)];
        const float *w = &vplan.weights[size_t(y) * size_t(vplan.taps_per)];
        for (int x = 0; x < dst_w; ++x)
            for (int c = 0; c < m.channels; ++c) {
                double acc = 0.0;
                for (int t = 0; t < vplan.taps_per; ++t)
                    acc += double(w[t]) * double(mid.at(x, clamp_index(lo + t, m.height), c));
                out.at(x, int(y), c) = float(acc);
            }
    });
    if (m.colorspace == Colorspace::Srgb || m.colorspace == Colorspace::Linear)
        for (auto &v : out.data)
            v = clamp01(v);
    return out;
}

// Exact block mean over factor x factor tiles; dimensions must divide evenly.
inline RasterMap downsample_box(const RasterMap &m, int factor) {
    require(factor >= 1, "downsample: factor must be >= 1");
    require(m.width % factor == 0 && m.height % factor == 0,
            "downsample: dimensions must be divisible by factor");
    RasterMap out = m;
    out.width = m.width / factor;
    out.height = m.height / factor;
    out.mask.clear();
    out.data.assign(size_t(out.width) * size_t(out.height) * size_t(m.channels), 0.0f);
    double inv = 1.0 / (double(factor) * double(factor));
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < m.channels; ++c) {
                double acc = 0.0;
                for (int dy = 0; dy < factor; ++dy)
                    for (int dx = 0; dx < factor; ++dx)
                        acc += double(m.at(x * factor + dx, y * factor + dy, c));
                out.at(x, y, c) = float(acc * inv);
            }
    return out;
}

// Separable Gaussian, radius ceil(3 sigma), discrete taps normalized. With a
// mask this is normalized convolution: invalid texels contribute nothing and
// the weight sum is renormalized per texel.
inline RasterMap gaussian_blur(const RasterMap &m, float sigma) {
    if (sigma <= 0.0f)
        return m;
    int radius = int(std::ceil(3.0f * sigma));
    std::vector<float> kernel(size_t(radius) * 2 + 1);
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        double w = std::exp(-0.5 * double(t) * double(t) / (double(sigma) * double(sigma)));
        kernel[size_t(t + radius)] = float(w);
        sum += w;
    }
    for (auto &w : kernel)
        w = float(double(w) / sum);

    bool masked = !m.mask.empty();
    RasterMap mid = m;
    parallel_for(0, m.height, [&](int64_t y) {
        for (int x = 0; x < m.width; ++x) {
            for (int c = 0; c < m.channels; ++c) {
                double acc = 0.0, wsum = 0.0;
                for (int t = -radius; t <= radius; ++t) {
                    int sx = clamp_index(x + t, m.width);
                    if (masked && !m.valid(sx, int(y)))
                        continue;
                    double w = double(kernel[size_t(t + radius)]);
                    acc += w * double(m.at(sx, int(y), c));
                    wsum += w;
                }
                mid.at(x, int(y), c) = wsum > 0.0 ? float(acc / wsum) : 0.0f;
            }
        }
    });
    RasterMap out = mid;
    parallel_for(0, m.height, [&](int64_t y) {
        for (int x = 0; x < m.width; ++x) {
            for (int c = 0; c < m.channels; ++c) {
                double acc = 0.0, wsum = 0.0;
                for (int t = -radius; t <= radius; ++t) {
                    int sy = clamp_index(int(y) + t, m.height);
                    if (masked && !m.valid(x, sy))
                        continue;
                    double w = double(kernel[size_t(t + radius)]);
                    acc += w * double(mid.at(x, sy, c));
                    wsum += w;
                }
                out.at(x, int(y), c) = wsum > 0.0 ? float(acc / wsum) : 0.0f;
            }
        }
    });
    return out;
}

// Central differences inside, one-sided at borders, so a linear ramp yields
// its exact slope everywhere.
inline RasterMap gradient_x(const RasterMap &m, int c = 0) {
    RasterMap out = make_map(m.width, m.height, MapKind::Gray, Colorspace::Raw);
    out.mask = m.mask;
    if (m.width < 2)
        return out;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (x == 0)
                out.at(x, y) = m.at(1, y, c) - m.at(0, y, c);
            else if (x == m.width - 1)
                out.at(x, y) = m.at(x, y, c) - m.at(x - 1, y, c);
            else
                out.at(x, y) = 0.5f * (m.at(x + 1, y, c) - m.at(x - 1, y, c));
        }
    return out;
}

inline RasterMap gradient_y(const RasterMap &m, int c = 0) {
    RasterMap out = make_map(m.width, m.height, MapKind::Gray, Colorspace::Raw);
    out.mask = m.mask;
    if (m.height < 2)
        return out;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (y == 0)
                out.at(x, y) = m.at(x, 1, c) - m.at(x, 0, c);
            else if (y == m.height - 1)
                out.at(x, y) = m.at(x, y, c) - m.at(x, y - 1, c);
            else
                out.at(x, y) = 0.5f * (m.at(x, y + 1, c) - m.at(x, y - 1, c));
        }
    return out;
}

// Fills invalid texels with the value of the nearest valid texel (multi-source
// BFS over the 4-neighborhood; ties resolved by scanline seeding order).
// The mask is preserved on the result.
inline RasterMap fill_nearest_valid(const RasterMap &m) {
    if (m.mask.empty())
        return m;
    RasterMap out = m;
    std::vector<int32_t> source(m.texel_count(), -1);
    std::queue<int32_t> frontier;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.valid(x, y)) {
                int32_t i = int32_t(y) * m.width + x;
                source[size_t(i)] = i;
                frontier.push(i);
            }
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    while (!frontier.empty()) {
        int32_t i = frontier.front();
        frontier.pop();
        int x = i % m.width, y = i / m.width;
        for (int k = 0; k < 4; ++k) {
            int nx = x + dx[k], ny = y + dy[k];
            if (nx < 0 || nx >= m.width || ny < 0 || ny >= m.height)
                continue;
            int32_t j = int32_t(ny) * m.width + nx;
            if (source[size_t(j)] >= 0)
                continue;
            source[size_t(j)] = source[size_t(i)];
            frontier.push(j);
        }
    }
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            int32_t i = int32_t(y) * m.width + x;
            int32_t s = source[size_t(i)];
            if (s >= 0 && s != i)
                for (int c = 0; c < m.channels; ++c)
                    out.data[size_t(i) * size_t(m.channels) + size_t(c)] =
                        m.data[size_t(s) * size_t(m.channels) + size_t(c)];
        }
    return out;
}

} // namespace reflkit
