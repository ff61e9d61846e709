#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "reflkit/common.hpp"

namespace reflkit {

enum class Colorspace : uint32_t {
    Linear = 0,
    Srgb = 1,
    SignedUnit = 2, // values in [-1, 1], stored as-is in float rasters
    Raw = 3,        // unbounded (displacement, weights)
};

enum class MapKind {
    Texture,
    DiffuseAlbedo,
    BakedTexture,
    SpecularAlbedo,
    NormalsObject,
    NormalsTangent,
    NormalsDiffuse,
    NormalsSpecular,
    Depth,
    Displacement,
    Irradiance, // per-texel incident light terms; unbounded, linear radiometry
    Gray,
};

inline const char *colorspace_name(Colorspace cs) {
    switch (cs) {
    case Colorspace::Linear: return "linear";
    case Colorspace::Srgb: return "srgb";
    case Colorspace::SignedUnit: return "signed_unit";
    case Colorspace::Raw: return "raw";
    }
    return "?";
}

inline const char *kind_name(MapKind k) {
    switch (k) {
    case MapKind::Texture: return "texture";
    case MapKind::DiffuseAlbedo: return "diffuse_albedo";
    case MapKind::BakedTexture: return "baked_texture";
    case MapKind::SpecularAlbedo: return "specular_albedo";
    case MapKind::NormalsObject: return "normals_object";
    case MapKind::NormalsTangent: return "normals_tangent";
    case MapKind::NormalsDiffuse: return "normals_diffuse";
    case MapKind::NormalsSpecular: return "normals_specular";
    case MapKind::Depth: return "depth";
    case MapKind::Displacement: return "displacement";
    case MapKind::Irradiance: return "irradiance";
    case MapKind::Gray: return "gray";
    }
    return "?";
}

inline bool is_normal_kind(MapKind k) {
    return k == MapKind::NormalsObject || k == MapKind::NormalsTangent ||
           k == MapKind::NormalsDiffuse || k == MapKind::NormalsSpecular;
}

inline int expected_channels(MapKind k) {
    switch (k) {
    case MapKind::Texture:
    case MapKind::DiffuseAlbedo:
    case MapKind::BakedTexture:
    case MapKind::Irradiance:
        return 3;
    case MapKind::SpecularAlbedo:
    case MapKind::Depth:
    case MapKind::Displacement:
    case MapKind::Gray:
        return 1;
    default:
        return 3; // normals
    }
}

inline bool colorspace_ok(MapKind k, Colorspace cs) {
    switch (k) {
    case MapKind::Texture:
    case MapKind::DiffuseAlbedo:
    case MapKind::BakedTexture:
    case MapKind::SpecularAlbedo:
        return cs == Colorspace::Srgb || cs == Colorspace::Linear;
    case MapKind::NormalsObject:
    case MapKind::NormalsTangent:
    case MapKind::NormalsDiffuse:
    case MapKind::NormalsSpecular:
    case MapKind::Depth:
        return cs == Colorspace::SignedUnit;
    case MapKind::Displacement:
        return cs == Colorspace::Raw;
    case MapKind::Irradiance:
        return cs == Colorspace::Raw || cs == Colorspace::Linear;
    case MapKind::Gray:
        return true;
    }
    return false;
}

struct RasterMap {
    int width = 0;
    int height = 0;
    int channels = 0;
    MapKind kind = MapKind::Gray;
    Colorspace colorspace = Colorspace::Linear;
    std::vector<float> data;
    std::vector<uint8_t> mask; // empty = every texel valid; else 1 byte per texel

    size_t texel_count() const { return size_t(width) * size_t(height); }

    size_t index(int x, int y, int c) const {
        return (size_t(y) * size_t(width) + size_t(x)) * size_t(channels) + size_t(c);
    }

    float at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
    float &at(int x, int y, int c = 0) { return data[index(x, y, c)]; }

    bool valid(int x, int y) const {
        return mask.empty() || mask[size_t(y) * size_t(width) + size_t(x)] != 0;
    }

    void set_valid(int x, int y, bool v) {
        if (mask.empty())
            mask.assign(texel_count(), 1);
        mask[size_t(y) * size_t(width) + size_t(x)] = v ? 1 : 0;
    }
};

inline RasterMap make_map(int w, int h, MapKind kind, Colorspace cs, float fill = 0.0f) {
    RasterMap m;
    m.width = w;
    m.height = h;
    m.channels = expected_channels(kind);
    m.kind = kind;
    m.colorspace = cs;
    m.data.assign(size_t(w) * size_t(h) * size_t(m.channels), fill);
    return m;
}

inline void validate(const RasterMap &m, const std::string &what = "map") {
    require(m.width > 0 && m.height > 0, what + ": dimensions must be positive");
    require(m.channels == 1 || m.channels == 3 || m.channels == 4,
            what + ": channels must be 1, 3, or 4");
    require(m.data.size() == size_t(m.width) * size_t(m.height) * size_t(m.channels),
            what + ": data size mismatch");
    require(m.mask.empty() || m.mask.size() == m.texel_count(),
            what + ": mask size mismatch");
    require(colorspace_ok(m.kind, m.colorspace),
            what + ": colorspace " + colorspace_name(m.colorspace) +
                " not valid for kind " + kind_name(m.kind));
}

// Channel letters used in stack layouts, e.g. [R,G,B,D] or [G,X,Y,Z].
inline std::vector<std::string> channel_letters(const RasterMap &m) {
    if (is_normal_kind(m.kind))
        return {"X", "Y", "Z"};
    switch (m.kind) {
    case MapKind::Depth: return {"D"};
    case MapKind::Displacement: return {"H"};
    case MapKind::SpecularAlbedo: return {"S"};
    case MapKind::Gray: return {"G"};
    default: break;
    }
    if (m.channels == 1)
        return {"G"};
    if (m.channels == 4)
        return {"R", "G", "B", "A"};
    return {"R", "G", "B"};
}

struct MapStack {
    std::vector<RasterMap> layers;
    std::vector<std::string> layout; // one letter per channel across all layers
    int width = 0;
    int height = 0;
    int total_channels = 0;
};

inline MapStack stack_maps(std::vector<RasterMap> layers) {
    require(!layers.empty(), "stack: needs at least one layer");
    MapStack s;
    s.width = layers[0].width;
    s.height = layers[0].height;
    for (const auto &m : layers) {
        validate(m, "stack layer");
        require(m.width == s.width && m.height == s.height,
                "stack: all layers must share dimensions");
        auto letters = channel_letters(m);
        s.layout.insert(s.layout.end(), letters.begin(), letters.end());
        s.total_channels += m.channels;
    }
    s.layers = std::move(layers);
    return s;
}

// Inverse of stack_maps; layers come back bit-exact.
inline std::vector<RasterMap> unstack_maps(const MapStack &s) {
    return s.layers;
}

inline MapStack single_layer_stack(RasterMap m) {
    std::vector<RasterMap> layers;
    layers.push_back(std::move(m));
    return stack_maps(std::move(layers));
}

// Interleaves every layer channel per texel, in layout order.
inline std::vector<float> flatten(const MapStack &s) {
    std::vector<float> out(size_t(s.width) * size_t(s.height) * size_t(s.total_channels));
    size_t pos = 0;
    for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x)
            for (const auto &m : s.layers)
                for (int c = 0; c < m.channels; ++c)
                    out[pos++] = m.at(x, y, c);
    return out;
}

// Rebuilds a stack shaped like `proto` (kinds, colorspaces, masks) from an
// interleaved buffer, e.g. one returned by an external operator.
inline MapStack unflatten(const std::vector<float> &buf, const MapStack &proto,
                          int width, int height) {
    require(buf.size() == size_t(width) * size_t(height) * size_t(proto.total_channels),
            "unflatten: buffer size mismatch");
    MapStack s;
    s.width = width;
    s.height = height;
    s.total_channels = proto.total_channels;
    s.layout = proto.layout;
    for (const auto &m : proto.layers) {
        RasterMap layer;
        layer.width = width;
        layer.height = height;
        layer.channels = m.channels;
        layer.kind = m.kind;
        layer.colorspace = m.colorspace;
        layer.data.resize(size_t(width) * size_t(height) * size_t(m.channels));
        s.layers.push_back(std::move(layer));
    }
    size_t pos = 0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (auto &m : s.layers)
                for (int c = 0; c < m.channels; ++c)
                    m.at(x, y, c) = buf[pos++];
    return s;
}

} // namespace reflkit
