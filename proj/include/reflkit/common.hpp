#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace reflkit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string &msg) {
    throw Error(msg);
}

inline void require(bool cond, const std::string &msg) {
    if (!cond)
        fail(msg);
}

template<typename T>
T clamp01(T v) {
    return v < T(0) ? T(0) : (v > T(1) ? T(1) : v);
}

} // namespace reflkit
