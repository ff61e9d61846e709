#pragma once

#include <cmath>
#include <ostream>

namespace reflkit {

struct Vec2f {
    float x = 0.0f, y = 0.0f;

    Vec2f() = default;
    Vec2f(float x_, float y_) : x(x_), y(y_) {}

    Vec2f operator+(const Vec2f &o) const { return {x + o.x, y + o.y}; }
    Vec2f operator-(const Vec2f &o) const { return {x - o.x, y - o.y}; }
    Vec2f operator*(float s) const { return {x * s, y * s}; }
};

struct Vec3f {
    float x = 0.0f, y = 0.0f, z = 0.0f;

    Vec3f() = default;
    explicit Vec3f(float v) : x(v), y(v), z(v) {}
    Vec3f(float x_, float y_, float z_) : x(x_), y(y_), z(z_) {}

    Vec3f operator+(const Vec3f &o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3f operator-(const Vec3f &o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3f operator-() const { return {-x, -y, -z}; }
    Vec3f operator*(float s) const { return {x * s, y * s, z * s}; }
    Vec3f operator*(const Vec3f &o) const { return {x * o.x, y * o.y, z * o.z}; }
    Vec3f operator/(float s) const { return {x / s, y / s, z / s}; }
    Vec3f &operator+=(const Vec3f &o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3f &operator*=(float s) { x *= s; y *= s; z *= s; return *this; }
    bool operator==(const Vec3f &o) const { return x == o.x && y == o.y && z == o.z; }

    float operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    float &operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3f operator*(float s, const Vec3f &v) { return v * s; }

inline float dot(const Vec3f &a, const Vec3f &b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Vec3f cross(const Vec3f &a, const Vec3f &b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline float length_sq(const Vec3f &v) { return dot(v, v); }
inline float length(const Vec3f &v) { return std::sqrt(dot(v, v)); }

inline Vec3f normalize(const Vec3f &v) {
    float len = length(v);
    return len > 0.0f ? v / len : Vec3f(0.0f, 0.0f, 0.0f);
}

inline float max_component(const Vec3f &v) {
    return std::fmax(v.x, std::fmax(v.y, v.z));
}

inline std::ostream &operator<<(std::ostream &os, const Vec3f &v) {
    return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
}

// Branchless orthonormal basis, robust for any unit n (Duff et al.).
inline void orthonormal_basis(const Vec3f &n, Vec3f &t, Vec3f &b) {
    float sign = std::copysign(1.0f, n.z);
    float a = -1.0f / (sign + n.z);
    float c = n.x * n.y * a;
    t = Vec3f(1.0f + sign * n.x * n.x * a, sign * c, -sign * n.x);
    b = Vec3f(c, sign + n.y * n.y * a, -n.y);
}

} // namespace reflkit
