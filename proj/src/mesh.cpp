#include "fraclab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "fraclab/error.hpp"

namespace fraclab {

std::string to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::Dirichlet: return "dirichlet";
        case BoundaryTag::Neumann: return "neumann";
        case BoundaryTag::Robin: return "robin";
    }
    return "?";
}

BoundaryTag boundary_tag_from_string(const std::string& s) {
    if (s == "dirichlet") return BoundaryTag::Dirichlet;
    if (s == "neumann") return BoundaryTag::Neumann;
    if (s == "robin") return BoundaryTag::Robin;
    throw ConfigError("unknown boundary tag '" + s + "'");
}

double TaggedMesh::triangle_area(int t) const {
    const auto& tri = triangles[t];
    return 0.5 * orient2d(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
}

double TaggedMesh::total_area() const {
    double a = 0.0;
    for (int t = 0; t < static_cast<int>(triangles.size()); ++t) a += triangle_area(t);
    return a;
}

double TaggedMesh::boundary_length(BoundaryTag tag) const {
    double len = 0.0;
    for (const auto& e : boundary)
        if (e.tag == tag) len += dist(nodes[e.a], nodes[e.b]);
    return len;
}

void TaggedMesh::recompute_metrics() {
    h_max = 0.0;
    double min_angle = std::numbers::pi;
    for (const auto& tri : triangles) {
        for (int k = 0; k < 3; ++k) {
            const Vec2& p = nodes[tri[k]];
            const Vec2& q = nodes[tri[(k + 1) % 3]];
            const Vec2& r = nodes[tri[(k + 2) % 3]];
            h_max = std::max(h_max, dist(p, q));
            const Vec2 u = q - p;
            const Vec2 v = r - p;
            const double ang = std::atan2(std::abs(u.cross(v)), u.dot(v));
            min_angle = std::min(min_angle, ang);
        }
    }
    min_angle_deg = min_angle * 180.0 / std::numbers::pi;
    quality_warning = min_angle_deg < 20.0;
}

void TaggedMesh::validate() const {
    for (const auto& tri : triangles)
        for (int k = 0; k < 3; ++k)
            if (tri[k] < 0 || tri[k] >= static_cast<int>(nodes.size()))
                throw SolverError("triangle references a missing node");
    for (int t = 0; t < static_cast<int>(triangles.size()); ++t)
        if (triangle_area(t) <= 1e-14)
            throw SolverError("non-positive triangle at index " + std::to_string(t));
    // Every boundary edge must belong to exactly one triangle.
    std::map<std::pair<int, int>, int> count;
    for (const auto& tri : triangles) {
        for (int k = 0; k < 3; ++k) {
            int a = tri[k], b = tri[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            count[{a, b}]++;
        }
    }
    for (const auto& e : boundary) {
        int a = e.a, b = e.b;
        if (a > b) std::swap(a, b);
        const auto it = count.find({a, b});
        if (it == count.end())
            throw SolverError("boundary edge not present in the triangulation");
        if (it->second != 1)
            throw SolverError("boundary edge shared by " + std::to_string(it->second) +
                              " triangles");
    }
}

std::vector<std::pair<BoundaryEdge, double>> boundary_mass_support(const TaggedMesh& mesh,
                                                                   BoundaryTag tag) {
    std::vector<std::pair<BoundaryEdge, double>> out;
    for (const auto& e : mesh.boundary)
        if (e.tag == tag) out.emplace_back(e, dist(mesh.nodes[e.a], mesh.nodes[e.b]));
    return out;
}

TaggedMesh refine(const TaggedMesh& mesh) {
    mesh.validate();
    TaggedMesh out;
    out.nodes = mesh.nodes;
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        int lo = a, hi = b;
        if (lo > hi) std::swap(lo, hi);
        const auto it = midpoint.find({lo, hi});
        if (it != midpoint.end()) return it->second;
        const int idx = static_cast<int>(out.nodes.size());
        out.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
        midpoint[{lo, hi}] = idx;
        return idx;
    };
    for (const auto& tri : mesh.triangles) {
        const int a = tri[0], b = tri[1], c = tri[2];
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        out.triangles.push_back({a, ab, ca});
        out.triangles.push_back({ab, b, bc});
        out.triangles.push_back({ca, bc, c});
        out.triangles.push_back({ab, bc, ca});
    }
    for (const auto& e : mesh.boundary) {
        const int m = mid(e.a, e.b);
        out.boundary.push_back({e.a, m, e.tag, e.piece});
        out.boundary.push_back({m, e.b, e.tag, e.piece});
    }
    out.recompute_metrics();
    return out;
}

void write_mesh(const TaggedMesh& mesh, std::ostream& os) {
    char buf[160];
    os << "NODES " << mesh.nodes.size() << "\n";
    for (size_t i = 0; i < mesh.nodes.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", i, mesh.nodes[i].x,
                      mesh.nodes[i].y);
        os << buf;
    }
    os << "TRIANGLES " << mesh.triangles.size() << "\n";
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        std::snprintf(buf, sizeof buf, "%zu %d %d %d\n", t, tri[0], tri[1], tri[2]);
        os << buf;
    }
    os << "BOUNDARY " << mesh.boundary.size() << "\n";
    for (const auto& e : mesh.boundary) {
        std::snprintf(buf, sizeof buf, "%d %d %s %d\n", e.a, e.b,
                      to_string(e.tag).c_str(), e.piece);
        os << buf;
    }
}

TaggedMesh read_mesh(std::istream& is) {
    TaggedMesh mesh;
    std::string section;
    size_t count = 0;
    if (!(is >> section >> count) || section != "NODES")
        throw ConfigError("mesh file must start with a NODES section");
    mesh.nodes.resize(count);
    for (size_t i = 0; i < count; ++i) {
        size_t id;
        double x, y;
        if (!(is >> id >> x >> y) || id != i)
            throw ConfigError("malformed NODES entry " + std::to_string(i));
        mesh.nodes[i] = {x, y};
    }
    if (!(is >> section >> count) || section != "TRIANGLES")
        throw ConfigError("mesh file missing TRIANGLES section");
    mesh.triangles.resize(count);
    for (size_t t = 0; t < count; ++t) {
        size_t id;
        int a, b, c;
        if (!(is >> id >> a >> b >> c) || id != t)
            throw ConfigError("malformed TRIANGLES entry " + std::to_string(t));
        mesh.triangles[t] = {a, b, c};
    }
    if (!(is >> section >> count) || section != "BOUNDARY")
        throw ConfigError("mesh file missing BOUNDARY section");
    mesh.boundary.resize(count);
    for (size_t i = 0; i < count; ++i) {
        int a, b, piece;
        std::string tag;
        if (!(is >> a >> b >> tag >> piece))
            throw ConfigError("malformed BOUNDARY entry " + std::to_string(i));
        mesh.boundary[i] = {a, b, boundary_tag_from_string(tag), piece};
    }
    mesh.recompute_metrics();
    mesh.validate();
    return mesh;
}

}  // namespace fraclab
