#pragma once

#include <cmath>
#include <numbers>

namespace mfe {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct Point {
    double x = 0.0;
    double y = 0.0;

    constexpr Point& operator+=(Point o) { x += o.x; y += o.y; return *this; }
    constexpr Point& operator-=(Point o) { x -= o.x; y -= o.y; return *this; }
    constexpr Point& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Point operator-(Point a) { return {-a.x, -a.y}; }
    friend constexpr Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
    friend constexpr Point operator*(Point a, double s) { return {s * a.x, s * a.y}; }
    friend constexpr Point operator/(Point a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(Point a, Point b) = default;
};

constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
constexpr double norm2(Point a) { return a.x * a.x + a.y * a.y; }
inline double distance(Point a, Point b) { return norm(a - b); }

inline Point rotate(Point p, double angle)
{
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
constexpr double orient2d(Point a, Point b, Point c) { return cross(b - a, c - a); }

/// Distance from p to the closed segment [a, b].
inline double segment_distance(Point p, Point a, Point b)
{
    const Point ab = b - a;
    const double len2 = norm2(ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    return distance(p, a + t * ab);
}

} // namespace mfe
