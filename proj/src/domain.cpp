#include "fraclab/domain.hpp"

#include <algorithm>
#include <cmath>

#include "fraclab/error.hpp"

namespace fraclab {

void BoundarySpec::validate(std::span<const Vec2> base) const {
    if (pieces.size() != base.size())
        throw ConfigError("boundary spec needs one piece per base polygon edge");
    double dirichlet_len = 0.0;
    const size_t n = base.size();
    for (size_t i = 0; i < n; ++i)
        if (pieces[i].tag == BoundaryTag::Dirichlet)
            dirichlet_len += dist(base[i], base[(i + 1) % n]);
    if (dirichlet_len <= 0.0)
        throw ConfigError("the Dirichlet boundary piece must have positive length");
}

void PolygonalDomain::validate() const {
    if (loop.size() < 3) throw ConfigError("domain polygon needs at least 3 vertices");
    if (piece_of_segment.size() != loop.size())
        throw ConfigError("domain polygon is missing segment piece tags");
    if (polygon_area(loop) <= 0.0)
        throw ConfigError("domain polygon must be counterclockwise with positive area");
}

namespace {

/// Affine placement of the canonical base segment (0,0)-(1,0) onto p -> q.
/// flip mirrors the curve to the other side of the edge.
Vec2 place(const Vec2& p, const Vec2& q, const Vec2& c, bool flip) {
    const Vec2 d = q - p;
    const Vec2 nrm = flip ? -d.perp() : d.perp();
    return p + c.x * d + c.y * nrm;
}

}  // namespace

PolygonalDomain build_domain(const std::vector<Vec2>& base, const BoundarySpec& spec,
                             const IfsSystem& ifs, int level) {
    if (base.size() < 3) throw ConfigError("base polygon needs at least 3 vertices");
    spec.validate(base);
    std::vector<Vec2> ccw = base;
    if (polygon_area(ccw) < 0.0)
        throw ConfigError("base polygon must be counterclockwise");

    PolygonalDomain dom;
    dom.pieces = spec.pieces;
    dom.level = level;

    const size_t n = ccw.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2 p = ccw[i];
        const Vec2 q = ccw[(i + 1) % n];
        const BoundaryPiece& piece = spec.pieces[i];
        if (!piece.prefractal) {
            dom.loop.push_back(p);
            dom.piece_of_segment.push_back(static_cast<int>(i));
            continue;
        }
        // The canonical generator bulges to +y; with the interior on the left of
        // p->q, +y maps to inward, so outward placement mirrors the curve.
        const PrefractalCurve curve = generate_prefractal(ifs, level);
        const auto pts = curve.polyline();
        for (size_t k = 0; k + 1 < pts.size(); ++k) {
            dom.loop.push_back(place(p, q, pts[k], piece.bulge_outward));
            dom.piece_of_segment.push_back(static_cast<int>(i));
        }
    }

    // Reject self-intersecting results, reporting the first intersecting pair.
    // Sweep over x with an active list pruned by the x extents.
    const size_t m = dom.loop.size();
    struct SegBox {
        size_t idx;
        double x0, x1, y0, y1;
    };
    std::vector<SegBox> boxes(m);
    for (size_t i = 0; i < m; ++i) {
        const Vec2& a = dom.loop[i];
        const Vec2& b = dom.loop[(i + 1) % m];
        boxes[i] = {i, std::min(a.x, b.x), std::max(a.x, b.x), std::min(a.y, b.y),
                    std::max(a.y, b.y)};
    }
    std::vector<SegBox> order = boxes;
    std::sort(order.begin(), order.end(),
              [](const SegBox& u, const SegBox& v) { return u.x0 < v.x0; });
    std::vector<size_t> active;
    for (const SegBox& sb : order) {
        std::erase_if(active, [&](size_t j) { return boxes[j].x1 < sb.x0; });
        for (size_t j : active) {
            const size_t i = sb.idx;
            const size_t lo = std::min(i, j), hi = std::max(i, j);
            if (hi == lo + 1 || (lo == 0 && hi + 1 == m)) continue;  // adjacent
            if (boxes[j].y1 < sb.y0 || sb.y1 < boxes[j].y0) continue;
            if (segments_intersect(dom.loop[i], dom.loop[(i + 1) % m], dom.loop[j],
                                   dom.loop[(j + 1) % m], 1e-14)) {
                throw ConfigError("prefractal replacement self-intersects: segments " +
                                  std::to_string(lo) + " and " + std::to_string(hi));
            }
        }
        active.push_back(sb.idx);
    }
    if (polygon_area(dom.loop) <= 0.0)
        throw ConfigError("constructed domain has non-positive area");
    return dom;
}

PolygonalDomain square_with_fractal_bottom(const IfsSystem& ifs, int level, bool outward) {
    const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    BoundarySpec spec;
    spec.pieces = {
        {BoundaryTag::Robin, true, outward},    // bottom
        {BoundaryTag::Dirichlet, false, true},  // right
        {BoundaryTag::Neumann, false, true},    // top
        {BoundaryTag::Dirichlet, false, true},  // left
    };
    return build_domain(square, spec, ifs, level);
}

}  // namespace fraclab
