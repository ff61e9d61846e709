#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "reflkit/parallel.hpp"
#include "reflkit/raster.hpp"

namespace reflkit {

struct PsnrResult {
    double db = 0.0;     // +infinity when the maps are identical
    long texels = 0;     // mutually valid texels compared
    bool exact = false;  // zero MSE
};

// Peak signal-to-noise ratio with MAX = 1.0 over mutually valid texels.
// Signed-unit maps are compared in their (v+1)/2 encoding so the unit range
// assumption holds for every kind.
inline PsnrResult psnr(const RasterMap &a, const RasterMap &b) {
    require(a.width == b.width && a.height == b.height, "psnr: resolution mismatch");
    require(a.channels == b.channels, "psnr: channel count mismatch");
    bool signed_a = a.colorspace == Colorspace::SignedUnit;
    bool signed_b = b.colorspace == Colorspace::SignedUnit;
    require(signed_a == signed_b, "psnr: colorspace encoding mismatch");
    double unit = signed_a ? 0.5 : 1.0;

    size_t n = size_t(a.width) * size_t(a.height);
    std::vector<uint8_t> both(n, 0);
    long texels = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x)
            if (a.valid(x, y) && b.valid(x, y)) {
                both[size_t(y) * size_t(a.width) + size_t(x)] = 1;
                ++texels;
            }
    require(texels > 0, "psnr: no mutually valid texels");

    int ch = a.channels;
    double sq = deterministic_sum(int64_t(n), [&](int64_t i) {
        if (!both[size_t(i)])
            return 0.0;
        double s = 0.0;
        for (int c = 0; c < ch; ++c) {
            double d = (double(a.data[size_t(i) * size_t(ch) + size_t(c)]) -
                        double(b.data[size_t(i) * size_t(ch) + size_t(c)])) *
                       unit;
            s += d * d;
        }
        return s;
    });
    double mse = sq / (double(texels) * double(ch));

    PsnrResult r;
    r.texels = texels;
    if (mse == 0.0) {
        r.db = std::numeric_limits<double>::infinity();
        r.exact = true;
    } else {
        r.db = -10.0 * std::log10(mse);
    }
    return r;
}

struct MetricEntry {
    std::string name;
    PsnrResult result;
};

struct MetricReport {
    std::vector<MetricEntry> entries;

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto &e : entries) {
            nlohmann::json item;
            if (e.result.exact)
                item["psnr_db"] = nullptr;
            else
                item["psnr_db"] = e.result.db;
            item["texels"] = e.result.texels;
            item["exact"] = e.result.exact;
            j[e.name] = item;
        }
        return j;
    }
};

inline MetricReport compare_maps(const std::vector<std::pair<std::string, const RasterMap *>> &a,
                                 const std::vector<std::pair<std::string, const RasterMap *>> &b) {
    require(a.size() == b.size(), "compare: map list size mismatch");
    MetricReport rep;
    for (size_t i = 0; i < a.size(); ++i) {
        require(a[i].first == b[i].first, "compare: map name mismatch");
        rep.entries.push_back({a[i].first, psnr(*a[i].second, *b[i].second)});
    }
    return rep;
}

} // namespace reflkit
