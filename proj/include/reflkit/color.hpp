#pragma once

#include <cmath>

#include "reflkit/raster.hpp"

namespace reflkit {

inline float srgb_encode(float linear) {
    double v = double(linear);
    double e = v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
    return float(e);
}

inline float srgb_decode(float encoded) {
    double v = double(encoded);
    double d = v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
    return float(d);
}

// [-1, 1] -> [0, 1] and back, used when signed maps cross an unsigned
// storage boundary (PNG). Dyadic values map exactly; everything else is
// round-trip stable to 1 ulp.
inline float normalize_signed(float v) { return (v + 1.0f) * 0.5f; }
inline float denormalize_signed(float u) { return u * 2.0f - 1.0f; }

constexpr float kLumaR = 0.2126f;
constexpr float kLumaG = 0.7152f;
constexpr float kLumaB = 0.0722f;

inline float luma(float r, float g, float b) {
    return kLumaR * r + kLumaG * g + kLumaB * b;
}

inline RasterMap to_linear(const RasterMap &m) {
    if (m.colorspace != Colorspace::Srgb)
        return m;
    RasterMap out = m;
    out.colorspace = Colorspace::Linear;
    for (auto &v : out.data)
        v = srgb_decode(v);
    return out;
}

inline RasterMap to_srgb(const RasterMap &m) {
    if (m.colorspace != Colorspace::Linear)
        return m;
    RasterMap out = m;
    out.colorspace = Colorspace::Srgb;
    for (auto &v : out.data)
        v = srgb_encode(v);
    return out;
}

// Luma grayscale of a 3-channel map, computed on the stored values.
inline RasterMap to_gray(const RasterMap &m) {
    require(m.channels == 3, "to_gray: needs a 3-channel map");
    RasterMap out;
    out.width = m.width;
    out.height = m.height;
    out.channels = 1;
    out.kind = MapKind::Gray;
    out.colorspace = m.colorspace;
    out.mask = m.mask;
    out.data.resize(m.texel_count());
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            out.at(x, y) = luma(m.at(x, y, 0), m.at(x, y, 1), m.at(x, y, 2));
    return out;
}

} // namespace reflkit
