#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fraclab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator-() const { return {-x, -y}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double squared_norm() const { return x * x + y * y; }
    Vec2 perp() const { return {-y, x}; }  // rotate +90 degrees
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }
inline double dist(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// Twice the signed area of triangle (a,b,c); > 0 for counterclockwise.
inline double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b - a).cross(c - a);
}

/// Signed polygon area by the shoelace formula (positive = CCW).
double polygon_area(std::span<const Vec2> poly);

/// Strict convexity test (collinear vertices tolerated, reflex not).
bool polygon_is_convex(std::span<const Vec2> poly);

bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly);

/// Distance from p to the closed segment [a,b].
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

/// Proper or touching intersection of segments [a,b] and [c,d].
bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d,
                        double eps = 1e-14);

/// Clip a convex polygon against another convex polygon (Sutherland-Hodgman).
/// Returns the (possibly empty) intersection polygon.
std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);

/// Length of [a,b] inside the open disk B(center, r); exact chord arithmetic.
double segment_disk_overlap(const Vec2& a, const Vec2& b, const Vec2& center, double r);

}  // namespace fraclab
