#include "fraclab/geometry.hpp"

#include <algorithm>

namespace fraclab {

double polygon_area(std::span<const Vec2> poly) {
    double twice = 0.0;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        twice += p.cross(q);
    }
    return 0.5 * twice;
}

bool polygon_is_convex(std::span<const Vec2> poly) {
    const size_t n = poly.size();
    if (n < 3) return false;
    double scale = 0.0;
    for (size_t i = 0; i < n; ++i) scale = std::max(scale, poly[i].norm());
    const double tol = 1e-12 * std::max(1.0, scale * scale);
    int sign = 0;
    for (size_t i = 0; i < n; ++i) {
        const double c = orient2d(poly[i], poly[(i + 1) % n], poly[(i + 2) % n]);
        if (std::abs(c) <= tol) continue;  // collinear triple
        const int s = c > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return sign != 0;
}

bool point_in_polygon(const Vec2& p, std::span<const Vec2> poly) {
    // Crossing-number test; boundary points count as inside.
    const size_t n = poly.size();
    bool inside = false;
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[j];
        const Vec2& b = poly[i];
        if (point_segment_distance(p, a, b) < 1e-14) return true;
        if ((b.y > p.y) != (a.y > p.y)) {
            const double xi = b.x + (p.y - b.y) / (a.y - b.y) * (a.x - b.x);
            if (p.x < xi) inside = !inside;
        }
    }
    return inside;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double l2 = ab.squared_norm();
    if (l2 == 0.0) return dist(p, a);
    const double t = std::clamp((p - a).dot(ab) / l2, 0.0, 1.0);
    return dist(p, a + t * ab);
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d,
                        double eps) {
    const double d1 = orient2d(c, d, a);
    const double d2 = orient2d(c, d, b);
    const double d3 = orient2d(a, b, c);
    const double d4 = orient2d(a, b, d);
    if (((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) &&
        ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps)))
        return true;
    auto on_segment = [&](const Vec2& p, const Vec2& q, const Vec2& r) {
        return std::abs(orient2d(p, q, r)) <= eps &&
               r.x <= std::max(p.x, q.x) + eps && r.x >= std::min(p.x, q.x) - eps &&
               r.y <= std::max(p.y, q.y) + eps && r.y >= std::min(p.y, q.y) - eps;
    };
    if (on_segment(c, d, a)) return true;
    if (on_segment(c, d, b)) return true;
    if (on_segment(a, b, c)) return true;
    if (on_segment(a, b, d)) return true;
    return false;
}

std::vector<Vec2> clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
    std::vector<Vec2> out(subject.begin(), subject.end());
    const size_t nc = clip.size();
    // Clip polygon must be CCW for the half-plane orientation below.
    std::vector<Vec2> cc(clip.begin(), clip.end());
    if (polygon_area(cc) < 0) std::reverse(cc.begin(), cc.end());
    for (size_t i = 0; i < nc && !out.empty(); ++i) {
        const Vec2 e0 = cc[i];
        const Vec2 e1 = cc[(i + 1) % nc];
        std::vector<Vec2> in;
        in.swap(out);
        const size_t n = in.size();
        for (size_t j = 0; j < n; ++j) {
            const Vec2& cur = in[j];
            const Vec2& nxt = in[(j + 1) % n];
            const double sc = orient2d(e0, e1, cur);
            const double sn = orient2d(e0, e1, nxt);
            auto intersect = [&]() {
                const double t = sc / (sc - sn);
                return cur + t * (nxt - cur);
            };
            if (sc >= 0) {
                out.push_back(cur);
                if (sn < 0) out.push_back(intersect());
            } else if (sn >= 0) {
                out.push_back(intersect());
            }
        }
    }
    return out;
}

double segment_disk_overlap(const Vec2& a, const Vec2& b, const Vec2& center, double r) {
    const Vec2 d = b - a;
    const double len = d.norm();
    if (len == 0.0) return 0.0;
    // Solve |a + t d - center|^2 = r^2 for t.
    const Vec2 f = a - center;
    const double A = d.squared_norm();
    const double B = 2.0 * f.dot(d);
    const double C = f.squared_norm() - r * r;
    const double disc = B * B - 4.0 * A * C;
    if (disc <= 0.0) return 0.0;
    const double sq = std::sqrt(disc);
    const double t0 = std::clamp((-B - sq) / (2.0 * A), 0.0, 1.0);
    const double t1 = std::clamp((-B + sq) / (2.0 * A), 0.0, 1.0);
    return (t1 - t0) * len;
}

}  // namespace fraclab
