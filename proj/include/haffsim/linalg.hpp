#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace haffsim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double a) const { return {a * x, a * y}; }
    constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
    /// Counterclockwise rotation by a right angle.
    constexpr Vec2 perp() const { return {-y, x}; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double a, Vec2 v) { return v * a; }

/// Fixed-size row-major matrix; only what the map derivatives need.
template <std::size_t N>
struct Mat {
    std::array<std::array<double, N>, N> a{};

    double& operator()(std::size_t i, std::size_t j) { return a[i][j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i][j]; }

    static Mat identity() {
        Mat m;
        for (std::size_t i = 0; i < N; ++i) m.a[i][i] = 1.0;
        return m;
    }

    Mat operator*(const Mat& o) const {
        Mat r;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < N; ++k) s += a[i][k] * o.a[k][j];
                r.a[i][j] = s;
            }
        return r;
    }

    std::array<double, N> operator*(const std::array<double, N>& v) const {
        std::array<double, N> r{};
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t k = 0; k < N; ++k) r[i] += a[i][k] * v[k];
        return r;
    }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < N; ++i) t += a[i][i];
        return t;
    }
};

using Mat2 = Mat<2>;
using Mat3 = Mat<3>;

inline double det(const Mat2& m) { return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0); }

}  // namespace haffsim
