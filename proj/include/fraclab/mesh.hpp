#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "fraclab/geometry.hpp"

namespace fraclab {

enum class BoundaryTag { Dirichlet, Neumann, Robin };

std::string to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(const std::string& s);

struct BoundaryEdge {
    int a = -1;
    int b = -1;
    BoundaryTag tag = BoundaryTag::Dirichlet;
    int piece = -1;  // index of the boundary piece this edge came from
};

/// Simplicial 2-D mesh with tagged boundary edges.
struct TaggedMesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> triangles;  // CCW
    std::vector<BoundaryEdge> boundary;
    double h_max = 0.0;          // largest edge length
    double min_angle_deg = 0.0;  // smallest interior angle
    bool quality_warning = false;

    double triangle_area(int t) const;
    double total_area() const;
    double boundary_length(BoundaryTag tag) const;
    void recompute_metrics();
    void validate() const;
};

/// All edges carrying the tag, with their Euclidean lengths.
std::vector<std::pair<BoundaryEdge, double>> boundary_mass_support(const TaggedMesh& mesh,
                                                                   BoundaryTag tag);

/// Uniform red refinement: every triangle into four, tags inherited.
TaggedMesh refine(const TaggedMesh& mesh);

/// Plain-text mesh format with NODES / TRIANGLES / BOUNDARY sections.
void write_mesh(const TaggedMesh& mesh, std::ostream& os);
TaggedMesh read_mesh(std::istream& is);

}  // namespace fraclab
