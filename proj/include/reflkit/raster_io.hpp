#pragma once

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "reflkit/color.hpp"
#include "reflkit/raster.hpp"

namespace reflkit {

// RMAP: "RMAP" magic, then width/height/channels/colorspace as u32 little
// endian, then row-major float32 little endian. Same framing is used on the
// external-operator wire, so serialization works on in-memory buffers.

namespace detail {

inline void put_u32le(std::vector<uint8_t> &out, uint32_t v) {
    out.push_back(uint8_t(v & 0xff));
    out.push_back(uint8_t((v >> 8) & 0xff));
    out.push_back(uint8_t((v >> 16) & 0xff));
    out.push_back(uint8_t((v >> 24) & 0xff));
}

inline uint32_t get_u32le(const uint8_t *p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

} // namespace detail

constexpr size_t kRmapHeaderSize = 20;
constexpr int kRmapMaxDim = 1 << 20;
constexpr int kRmapMaxChannels = 64;

inline std::vector<uint8_t> serialize_rmap(const RasterMap &m) {
    std::vector<uint8_t> out;
    out.reserve(kRmapHeaderSize + m.data.size() * 4);
    out.push_back('R');
    out.push_back('M');
    out.push_back('A');
    out.push_back('P');
    detail::put_u32le(out, uint32_t(m.width));
    detail::put_u32le(out, uint32_t(m.height));
    detail::put_u32le(out, uint32_t(m.channels));
    detail::put_u32le(out, uint32_t(m.colorspace));
    for (float f : m.data)
        detail::put_u32le(out, std::bit_cast<uint32_t>(f));
    return out;
}

struct RmapHeader {
    int width = 0;
    int height = 0;
    int channels = 0;
    Colorspace colorspace = Colorspace::Linear;

    size_t payload_bytes() const {
        return size_t(width) * size_t(height) * size_t(channels) * 4;
    }
};

inline RmapHeader parse_rmap_header(const uint8_t *p, size_t n) {
    require(n >= kRmapHeaderSize, "rmap: truncated header");
    require(std::memcmp(p, "RMAP", 4) == 0, "rmap: bad magic");
    RmapHeader h;
    h.width = int(detail::get_u32le(p + 4));
    h.height = int(detail::get_u32le(p + 8));
    h.channels = int(detail::get_u32le(p + 12));
    uint32_t cs = detail::get_u32le(p + 16);
    require(h.width > 0 && h.width <= kRmapMaxDim && h.height > 0 && h.height <= kRmapMaxDim,
            "rmap: dimensions out of range");
    require(h.channels > 0 && h.channels <= kRmapMaxChannels, "rmap: channels out of range");
    require(cs <= uint32_t(Colorspace::Raw), "rmap: unknown colorspace code");
    h.colorspace = Colorspace(cs);
    return h;
}

// Parses a full RMAP blob. Header sanity only; callers assign a kind and run
// validate() when the map enters typed code.
inline RasterMap parse_rmap(const uint8_t *p, size_t n) {
    RmapHeader h = parse_rmap_header(p, n);
    require(n == kRmapHeaderSize + h.payload_bytes(), "rmap: payload size mismatch");
    RasterMap m;
    m.width = h.width;
    m.height = h.height;
    m.channels = h.channels;
    m.colorspace = h.colorspace;
    m.data.resize(size_t(h.width) * size_t(h.height) * size_t(h.channels));
    const uint8_t *q = p + kRmapHeaderSize;
    for (auto &f : m.data) {
        f = std::bit_cast<float>(detail::get_u32le(q));
        q += 4;
    }
    return m;
}

inline RasterMap load_rmap(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    require(bool(in), "rmap: cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return parse_rmap(bytes.data(), bytes.size());
}

inline void save_rmap(const std::string &path, const RasterMap &m) {
    auto bytes = serialize_rmap(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(bool(out), "rmap: cannot write " + path);
    out.write(reinterpret_cast<const char *>(bytes.data()), std::streamsize(bytes.size()));
    require(bool(out), "rmap: short write to " + path);
}

// PNG load: 8/16-bit gray, RGB, or RGBA; values normalized by v / (2^bits - 1).
inline RasterMap load_png(const std::string &path) {
    FILE *fp = std::fopen(path.c_str(), "rb");
    require(fp != nullptr, "png: cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail("png: init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        fail("png: failed to read " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    int channels = png_get_channels(png, info);
    size_t rowbytes = png_get_rowbytes(png, info);

    std::vector<uint8_t> raw(rowbytes * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = raw.data() + size_t(y) * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    RasterMap m;
    m.width = int(w);
    m.height = int(h);
    m.channels = channels;
    m.colorspace = Colorspace::Srgb;
    m.kind = channels == 1 ? MapKind::Gray : MapKind::Texture;
    m.data.resize(size_t(w) * size_t(h) * size_t(channels));
    float scale = bit_depth == 16 ? 1.0f / 65535.0f : 1.0f / 255.0f;
    size_t i = 0;
    for (png_uint_32 y = 0; y < h; ++y) {
        const uint8_t *row = raw.data() + size_t(y) * rowbytes;
        if (bit_depth == 16) {
            for (size_t k = 0; k < size_t(w) * size_t(channels); ++k) {
                uint16_t v = uint16_t(row[2 * k]) << 8 | uint16_t(row[2 * k + 1]);
                m.data[i++] = float(v) * scale;
            }
        } else {
            for (size_t k = 0; k < size_t(w) * size_t(channels); ++k)
                m.data[i++] = float(row[k]) * scale;
        }
    }
    return m;
}

inline void save_png(const std::string &path, const RasterMap &m, int bit_depth = 16) {
    require(bit_depth == 8 || bit_depth == 16, "png: bit depth must be 8 or 16");
    require(m.channels == 1 || m.channels == 3 || m.channels == 4,
            "png: channels must be 1, 3, or 4");
    FILE *fp = std::fopen(path.c_str(), "wb");
    require(fp != nullptr, "png: cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        fail("png: init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        fail("png: failed to write " + path);
    }
    int color_type = m.channels == 1 ? PNG_COLOR_TYPE_GRAY
                   : m.channels == 3 ? PNG_COLOR_TYPE_RGB
                                     : PNG_COLOR_TYPE_RGBA;
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(m.width), png_uint_32(m.height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    float maxval = bit_depth == 16 ? 65535.0f : 255.0f;
    size_t row_values = size_t(m.width) * size_t(m.channels);
    std::vector<uint8_t> row(row_values * (bit_depth == 16 ? 2 : 1));
    for (int y = 0; y < m.height; ++y) {
        for (size_t k = 0; k < row_values; ++k) {
            float v = m.data[size_t(y) * row_values + k];
            float q = std::lround(double(clamp01(v)) * maxval);
            auto u = uint32_t(q);
            if (bit_depth == 16) {
                row[2 * k] = uint8_t(u >> 8);
                row[2 * k + 1] = uint8_t(u & 0xff);
            } else {
                row[k] = uint8_t(u);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

inline bool has_suffix(const std::string &s, const std::string &suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline Colorspace default_colorspace(MapKind kind) {
    if (is_normal_kind(kind) || kind == MapKind::Depth)
        return Colorspace::SignedUnit;
    if (kind == MapKind::Displacement)
        return Colorspace::Raw;
    return Colorspace::Srgb;
}

// Typed load: .rmap keeps header colorspace; .png decodes the unit range,
// with signed kinds (normals, depth) mapped through 2v - 1.
inline RasterMap load_raster(const std::string &path, MapKind kind) {
    RasterMap m;
    if (has_suffix(path, ".rmap")) {
        m = load_rmap(path);
    } else if (has_suffix(path, ".png")) {
        m = load_png(path);
        Colorspace cs = default_colorspace(kind);
        if (cs == Colorspace::SignedUnit) {
            for (auto &v : m.data)
                v = denormalize_signed(v);
        }
        m.colorspace = cs;
    } else {
        fail("load: unsupported extension on " + path);
    }
    m.kind = kind;
    validate(m, path);
    return m;
}

inline void save_raster(const std::string &path, const RasterMap &m, int bit_depth = 16) {
    validate(m, path);
    if (has_suffix(path, ".rmap")) {
        save_rmap(path, m);
    } else if (has_suffix(path, ".png")) {
        if (m.colorspace == Colorspace::SignedUnit) {
            RasterMap enc = m;
            for (auto &v : enc.data)
                v = normalize_signed(v);
            save_png(path, enc, bit_depth);
        } else {
            save_png(path, m, bit_depth);
        }
    } else {
        fail("save: unsupported extension on " + path);
    }
}

} // namespace reflkit
