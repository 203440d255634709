// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace bmpaw {

/// Forward-mode derivative scalar carrying a value and two partials.
/// The reward expressions are rational, so +,-,*,/ is the whole algebra
/// needed to get exact gradients with respect to (r1, r2).
struct Dual2 {
    double v = 0.0;
    double dx = 0.0;
    double dy = 0.0;

    constexpr Dual2() = default;
    constexpr Dual2(double value) : v(value) {}
    constexpr Dual2(double value, double d1, double d2) : v(value), dx(d1), dy(d2) {}

    static constexpr Dual2 var_x(double value) { return {value, 1.0, 0.0}; }
    static constexpr Dual2 var_y(double value) { return {value, 0.0, 1.0}; }
};

constexpr Dual2 operator+(Dual2 a, Dual2 b) { return {a.v + b.v, a.dx + b.dx, a.dy + b.dy}; }
constexpr Dual2 operator-(Dual2 a, Dual2 b) { return {a.v - b.v, a.dx - b.dx, a.dy - b.dy}; }
constexpr Dual2 operator-(Dual2 a) { return {-a.v, -a.dx, -a.dy}; }
constexpr Dual2 operator*(Dual2 a, Dual2 b)
{
    return {a.v * b.v, a.dx * b.v + a.v * b.dx, a.dy * b.v + a.v * b.dy};
}
constexpr Dual2 operator/(Dual2 a, Dual2 b)
{
    const double inv = 1.0 / b.v;
    const double q = a.v * inv;
    return {q, (a.dx - q * b.dx) * inv, (a.dy - q * b.dy) * inv};
}

constexpr Dual2 operator+(Dual2 a, double b) { return {a.v + b, a.dx, a.dy}; }
constexpr Dual2 operator+(double a, Dual2 b) { return b + a; }
constexpr Dual2 operator-(Dual2 a, double b) { return {a.v - b, a.dx, a.dy}; }
constexpr Dual2 operator-(double a, Dual2 b) { return {a - b.v, -b.dx, -b.dy}; }
constexpr Dual2 operator*(Dual2 a, double b) { return {a.v * b, a.dx * b, a.dy * b}; }
constexpr Dual2 operator*(double a, Dual2 b) { return b * a; }
constexpr Dual2 operator/(Dual2 a, double b) { return {a.v / b, a.dx / b, a.dy / b}; }
constexpr Dual2 operator/(double a, Dual2 b) { return Dual2(a) / b; }

}  // namespace bmpaw
