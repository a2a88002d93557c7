// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace glint {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kFourPi = 4.0 * kPi;
constexpr double kInvPi = 1.0 / kPi;

inline double sqr(double x) { return x * x; }

inline double clamp(double x, double lo, double hi) {
    return x < lo ? lo : (x > hi ? hi : x);
}

inline double clamp01(double x) { return clamp(x, 0.0, 1.0); }

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3D cross product of two in-plane vectors
inline double cross2(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return *this * (1.0 / s); }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length_squared(const Vec3& v) { return dot(v, v); }
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3& v) { return v / length(v); }
inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Unit direction on S^2. Constructors normalize; callers may assume unit length.
using Direction = Vec3;

inline Direction make_direction(double x, double y, double z) {
    return normalize(Vec3(x, y, z));
}

inline bool is_unit(const Vec3& v, double tol = 1e-6) {
    return std::abs(length(v) - 1.0) <= tol;
}

// Mirror reflection of w about unit axis n.
inline Vec3 reflect(const Vec3& w, const Vec3& n) {
    return 2.0 * dot(n, w) * n - w;
}

// Adjoint of r = 2 (n.w) n - w for given dr.
inline void reflect_backward(const Vec3& w, const Vec3& n, const Vec3& dr,
                             Vec3& dw, Vec3& dn) {
    const double ndw = dot(n, w);
    const double ndr = dot(n, dr);
    dn += 2.0 * (ndr * w + ndw * dr);
    dw += 2.0 * ndr * n - dr;
}

// Adjoint of u = v/|v| for given du: dv += (I - u u^T) du / |v|.
inline Vec3 normalize_backward(const Vec3& v, const Vec3& du) {
    const double len = length(v);
    const Vec3 u = v / len;
    return (du - dot(u, du) * u) / len;
}

// Deterministic orthonormal basis around unit n (branchless, Duff et al. style).
inline void tangent_basis(const Vec3& n, Vec3& t, Vec3& b) {
    const double sign = std::copysign(1.0, n.z);
    const double a = -1.0 / (sign + n.z);
    const double c = n.x * n.y * a;
    t = Vec3(1.0 + sign * n.x * n.x * a, sign * c, -sign * n.x);
    b = Vec3(c, sign + n.y * n.y * a, -n.y);
}

struct Rgb {
    double r = 0.0, g = 0.0, b = 0.0;

    Rgb() = default;
    explicit Rgb(double v) : r(v), g(v), b(v) {}
    Rgb(double r_, double g_, double b_) : r(r_), g(g_), b(b_) {}

    Rgb operator+(const Rgb& o) const { return {r + o.r, g + o.g, b + o.b}; }
    Rgb operator-(const Rgb& o) const { return {r - o.r, g - o.g, b - o.b}; }
    Rgb operator*(const Rgb& o) const { return {r * o.r, g * o.g, b * o.b}; }
    Rgb operator*(double s) const { return {r * s, g * s, b * s}; }
    Rgb operator/(double s) const { return *this * (1.0 / s); }
    Rgb& operator+=(const Rgb& o) { r += o.r; g += o.g; b += o.b; return *this; }
    Rgb& operator-=(const Rgb& o) { r -= o.r; g -= o.g; b -= o.b; return *this; }
    Rgb& operator*=(double s) { r *= s; g *= s; b *= s; return *this; }

    double operator[](int i) const { return i == 0 ? r : (i == 1 ? g : b); }
    double& operator[](int i) { return i == 0 ? r : (i == 1 ? g : b); }
};

inline Rgb operator*(double s, const Rgb& c) { return c * s; }
inline double sum(const Rgb& c) { return c.r + c.g + c.b; }
inline double dot(const Rgb& a, const Rgb& b) { return a.r * b.r + a.g * b.g + a.b * b.b; }
inline double max_component(const Rgb& c) { return std::max(c.r, std::max(c.g, c.b)); }
inline double luminance(const Rgb& c) {
    return 0.2126 * c.r + 0.7152 * c.g + 0.0722 * c.b;
}
inline bool is_finite(const Rgb& c) {
    return std::isfinite(c.r) && std::isfinite(c.g) && std::isfinite(c.b);
}
inline Rgb abs(const Rgb& c) { return {std::abs(c.r), std::abs(c.g), std::abs(c.b)}; }
inline Rgb max(const Rgb& c, double v) {
    return {std::max(c.r, v), std::max(c.g, v), std::max(c.b, v)};
}

// Smooth positivity reparameterization and its inverse/derivative.
inline double softplus(double x) {
    return x > 30.0 ? x : std::log1p(std::exp(x));
}
inline double softplus_inv(double y) {
    // expm1 underflows to -1 for tiny y; guard keeps the inverse finite.
    return y > 30.0 ? y : std::log(std::max(std::expm1(y), 1e-300));
}
inline double softplus_deriv(double x) {
    return x > 30.0 ? 1.0 : 1.0 / (1.0 + std::exp(-x));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double sigmoid_inv(double y) {
    const double yc = clamp(y, 1e-12, 1.0 - 1e-12);
    return std::log(yc / (1.0 - yc));
}
inline double sigmoid_deriv(double x) {
    const double s = sigmoid(x);
    return s * (1.0 - s);
}

}  // namespace glint
