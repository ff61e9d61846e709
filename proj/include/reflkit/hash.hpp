#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "reflkit/common.hpp"

namespace reflkit {

// FNV-1a, 64-bit.
inline uint64_t fnv1a64(const void *data, size_t size, uint64_t seed = 0xcbf29ce484222325ull) {
    const unsigned char *p = static_cast<const unsigned char *>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < size; ++i) {
        h ^= uint64_t(p[i]);
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

inline std::string hash_bytes(const void *data, size_t size) {
    return hex64(fnv1a64(data, size));
}

inline std::string hash_file(const std::string &path) {
    std::FILE *f = std::fopen(path.c_str(), "rb");
    require(f != nullptr, "hash: cannot open " + path);
    uint64_t h = 0xcbf29ce484222325ull;
    std::vector<unsigned char> buf(1 << 16);
    size_t got;
    while ((got = std::fread(buf.data(), 1, buf.size(), f)) > 0)
        h = fnv1a64(buf.data(), got, h);
    bool err = std::ferror(f) != 0;
    std::fclose(f);
    require(!err, "hash: read error on " + path);
    return hex64(h);
}

} // namespace reflkit
