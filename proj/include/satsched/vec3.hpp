#pragma once

#include <cmath>

namespace satsched {

/// Minimal 3-vector for orbital geometry (kilometres throughout).
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }

    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }

    double norm() const { return std::sqrt(dot(*this)); }

    Vec3 normalized() const {
        const double n = norm();
        return {x / n, y / n, z / n};
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

} // namespace satsched
