#pragma once

#include <vector>

#include "fraclab/geometry.hpp"
#include "fraclab/ifs.hpp"
#include "fraclab/mesh.hpp"

namespace fraclab {

/// Per base-polygon edge: its condition tag and whether the edge is replaced
/// by the prefractal curve (bulging outward unless stated otherwise).
struct BoundaryPiece {
    BoundaryTag tag = BoundaryTag::Dirichlet;
    bool prefractal = false;
    bool bulge_outward = true;
};

struct BoundarySpec {
    std::vector<BoundaryPiece> pieces;  // one per base polygon edge, in order

    void validate(std::span<const Vec2> base) const;
};

/// Simple polygon whose boundary segments each belong to a tagged piece.
struct PolygonalDomain {
    std::vector<Vec2> loop;              // CCW, not closed (last connects to first)
    std::vector<int> piece_of_segment;   // loop segment i -> piece index
    std::vector<BoundaryPiece> pieces;
    int level = 0;

    double area() const { return polygon_area(loop); }
    void validate() const;
};

/// Replace the designated base edges by the level-m prefractal and propagate tags.
PolygonalDomain build_domain(const std::vector<Vec2>& base, const BoundarySpec& spec,
                             const IfsSystem& ifs, int level);

/// The default study layout: unit square, bottom edge -> prefractal Robin piece,
/// left and right Dirichlet, top Neumann.
PolygonalDomain square_with_fractal_bottom(const IfsSystem& ifs, int level,
                                           bool outward = true);

/// Conforming constrained-Delaunay triangulation with every edge at most h_max.
/// Boundary subsegments longer than h_max are split along their carrier segment.
TaggedMesh triangulate(const PolygonalDomain& domain, double h_max);

}  // namespace fraclab
