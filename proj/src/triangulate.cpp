#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "fraclab/domain.hpp"
#include "fraclab/error.hpp"

namespace fraclab {
namespace {

struct Constraint {
    BoundaryTag tag;
    int piece;
};

struct Tri {
    std::array<int, 3> v{-1, -1, -1};  // CCW
    std::array<int, 3> n{-1, -1, -1};  // n[i] shares edge (v[(i+1)%3], v[(i+2)%3])
    bool inside = false;
};

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;
    const double ad = adx * adx + ady * ady;
    const double bd = bdx * bdx + bdy * bdy;
    const double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
           ad * (bdx * cdy - bdy * cdx);
}

class Triangulator {
public:
    explicit Triangulator(double scale) {
        orient_eps_ = 1e-13 * std::max(1.0, scale * scale);
        coincide_eps_ = 1e-12 * std::max(1.0, scale);
    }

    std::vector<Vec2> pts;
    std::vector<Tri> tris;
    std::unordered_map<std::uint64_t, Constraint> constraints;

    void init_box(const Vec2& lo, const Vec2& hi) {
        pts = {lo, {hi.x, lo.y}, hi, {lo.x, hi.y}};
        vert2tri_ = {0, 0, 0, 1};
        tris.push_back({{0, 1, 2}, {-1, 1, -1}, false});   // diagonal (2,0) faces tri 1
        tris.push_back({{0, 2, 3}, {-1, -1, 0}, false});   // diagonal (0,2) faces tri 0
    }

    int insert_point(const Vec2& p) {
        auto [t, where, idx] = locate(p);
        if (where == Where::Vertex) return idx;
        const int vp = static_cast<int>(pts.size());
        pts.push_back(p);
        vert2tri_.push_back(-1);
        if (where == Where::Interior)
            split_triangle(t, vp);
        else
            split_edge(t, idx, vp);
        return vp;
    }

    bool is_constrained(int a, int b) const {
        return constraints.count(edge_key(a, b)) > 0;
    }

    void constrain(int a, int b, BoundaryTag tag, int piece) {
        if (!edge_exists(a, b)) recover_edge(a, b);
        constraints[edge_key(a, b)] = {tag, piece};
    }

    /// Triangles reachable from the super-box corners without crossing a
    /// constrained edge are outside; everything else is inside.
    void classify_inside() {
        std::vector<char> outside(tris.size(), 0);
        std::vector<int> stack;
        for (int t = 0; t < static_cast<int>(tris.size()); ++t)
            for (int k = 0; k < 3; ++k)
                if (tris[t].v[k] < 4 && !outside[t]) {
                    outside[t] = 1;
                    stack.push_back(t);
                }
        while (!stack.empty()) {
            const int t = stack.back();
            stack.pop_back();
            for (int e = 0; e < 3; ++e) {
                const int nb = tris[t].n[e];
                if (nb < 0 || outside[nb]) continue;
                if (is_constrained(tris[t].v[(e + 1) % 3], tris[t].v[(e + 2) % 3])) continue;
                outside[nb] = 1;
                stack.push_back(nb);
            }
        }
        for (size_t t = 0; t < tris.size(); ++t) tris[t].inside = !outside[t];
    }

    /// Split inside edges longer than h by midpoint insertion until none remain.
    void refine_to(double h) {
        const double bound = h * (1.0 + 1e-9);
        for (int pass = 0; pass < 200; ++pass) {
            std::vector<std::pair<std::uint64_t, Vec2>> mids;
            for (const auto& tri : tris) {
                if (!tri.inside) continue;
                for (int e = 0; e < 3; ++e) {
                    const int a = tri.v[(e + 1) % 3];
                    const int b = tri.v[(e + 2) % 3];
                    if (dist(pts[a], pts[b]) > bound)
                        mids.emplace_back(edge_key(a, b), 0.5 * (pts[a] + pts[b]));
                }
            }
            if (mids.empty()) return;
            std::sort(mids.begin(), mids.end(),
                      [](const auto& x, const auto& y) { return x.first < y.first; });
            mids.erase(std::unique(mids.begin(), mids.end(),
                                   [](const auto& x, const auto& y) {
                                       return x.first == y.first;
                                   }),
                       mids.end());
            for (const auto& [key, mid] : mids) insert_point(mid);
        }
        throw SolverError("mesh refinement did not terminate");
    }

    void extract(TaggedMesh& mesh) const {
        std::vector<int> remap(pts.size(), -1);
        for (const auto& tri : tris) {
            if (!tri.inside) continue;
            std::array<int, 3> tv{};
            for (int k = 0; k < 3; ++k) {
                const int v = tri.v[k];
                if (remap[v] < 0) {
                    remap[v] = static_cast<int>(mesh.nodes.size());
                    mesh.nodes.push_back(pts[v]);
                }
                tv[k] = remap[v];
            }
            mesh.triangles.push_back(tv);
        }
        std::unordered_map<std::uint64_t, int> seen;
        for (const auto& tri : tris) {
            if (!tri.inside) continue;
            for (int e = 0; e < 3; ++e) {
                const int a = tri.v[(e + 1) % 3];
                const int b = tri.v[(e + 2) % 3];
                const auto it = constraints.find(edge_key(a, b));
                if (it == constraints.end()) continue;
                if (++seen[edge_key(a, b)] > 1)
                    throw SolverError("constrained edge shared by two interior triangles");
                mesh.boundary.push_back({remap[a], remap[b], it->second.tag, it->second.piece});
            }
        }
        if (seen.size() != constraints.size())
            throw SolverError("lost constrained edges during triangulation");
    }

private:
    enum class Where { Interior, Edge, Vertex };
    double orient_eps_;
    double coincide_eps_;
    int hint_ = 0;
    std::vector<int> vert2tri_;

    int vertex_index(int t, int v) const {
        for (int k = 0; k < 3; ++k)
            if (tris[t].v[k] == v) return k;
        throw SolverError("vertex lookup failure");
    }

    void store(int t, const Tri& tri) {
        tris[t] = tri;
        for (int k = 0; k < 3; ++k) vert2tri_[tri.v[k]] = t;
    }

    int push(const Tri& tri) {
        const int t = static_cast<int>(tris.size());
        tris.push_back(tri);
        for (int k = 0; k < 3; ++k) vert2tri_[tri.v[k]] = t;
        return t;
    }

    /// Walks the fan around vertex a; true if (a,b) is a current edge.
    bool edge_exists(int a, int b) const {
        const int t0 = vert2tri_[a];
        if (t0 < 0) return false;
        for (int dir = 0; dir < 2; ++dir) {
            int t = t0;
            for (int guard = 0; guard < 1 << 20; ++guard) {
                const int k = vertex_index(t, a);
                if (tris[t].v[(k + 1) % 3] == b || tris[t].v[(k + 2) % 3] == b) return true;
                // Rotate around a: neighbor across the edge (a, v[k+1]) or (v[k+2], a).
                const int next = dir == 0 ? tris[t].n[(k + 2) % 3] : tris[t].n[(k + 1) % 3];
                if (next < 0) break;
                if (next == t0) return false;  // closed fan fully scanned
                t = next;
            }
        }
        return false;
    }

    std::tuple<int, Where, int> locate(const Vec2& p) {
        int t = hint_ >= 0 && hint_ < static_cast<int>(tris.size()) ? hint_ : 0;
        const int cap = static_cast<int>(tris.size()) + 64;
        for (int step = 0; step < cap; ++step) {
            const auto cls = classify(t, p);
            if (cls) {
                hint_ = t;
                return *cls;
            }
            int best_e = -1;
            double best_o = -orient_eps_;
            for (int e = 0; e < 3; ++e) {
                const double o = orient2d(pts[tris[t].v[(e + 1) % 3]],
                                          pts[tris[t].v[(e + 2) % 3]], p);
                if (o < best_o) {
                    best_o = o;
                    best_e = e;
                }
            }
            if (best_e < 0 || tris[t].n[best_e] < 0) break;
            t = tris[t].n[best_e];
        }
        for (int tt = 0; tt < static_cast<int>(tris.size()); ++tt) {
            const auto cls = classify(tt, p);
            if (cls) {
                hint_ = tt;
                return *cls;
            }
        }
        throw SolverError("point location failed; point outside the bounding box?");
    }

    std::optional<std::tuple<int, Where, int>> classify(int t, const Vec2& p) const {
        for (int k = 0; k < 3; ++k)
            if (dist(pts[tris[t].v[k]], p) <= coincide_eps_)
                return std::tuple{t, Where::Vertex, tris[t].v[k]};
        std::array<double, 3> o{};
        for (int e = 0; e < 3; ++e)
            o[e] = orient2d(pts[tris[t].v[(e + 1) % 3]], pts[tris[t].v[(e + 2) % 3]], p);
        if (o[0] < -orient_eps_ || o[1] < -orient_eps_ || o[2] < -orient_eps_)
            return std::nullopt;
        for (int e = 0; e < 3; ++e)
            if (std::abs(o[e]) <= orient_eps_) return std::tuple{t, Where::Edge, e};
        return std::tuple{t, Where::Interior, -1};
    }

    void set_neighbor(int t, int va, int vb, int nb) {
        if (t < 0) return;
        for (int e = 0; e < 3; ++e) {
            if ((tris[t].v[(e + 1) % 3] == va && tris[t].v[(e + 2) % 3] == vb) ||
                (tris[t].v[(e + 1) % 3] == vb && tris[t].v[(e + 2) % 3] == va)) {
                tris[t].n[e] = nb;
                return;
            }
        }
        throw SolverError("adjacency bookkeeping failure");
    }

    int opposite_vertex(int t, int a, int b) const {
        for (int k = 0; k < 3; ++k)
            if (tris[t].v[k] != a && tris[t].v[k] != b) return tris[t].v[k];
        throw SolverError("degenerate triangle in opposite_vertex");
    }

    int edge_index(int t, int va, int vb) const {
        for (int e = 0; e < 3; ++e)
            if ((tris[t].v[(e + 1) % 3] == va && tris[t].v[(e + 2) % 3] == vb) ||
                (tris[t].v[(e + 1) % 3] == vb && tris[t].v[(e + 2) % 3] == va))
                return e;
        throw SolverError("edge lookup failure");
    }

    void split_triangle(int t, int vp) {
        const int a = tris[t].v[0], b = tris[t].v[1], c = tris[t].v[2];
        const int na = tris[t].n[0], nb = tris[t].n[1], nc = tris[t].n[2];
        const bool ins = tris[t].inside;
        const int t1 = static_cast<int>(tris.size());
        const int t2 = t1 + 1;
        store(t, {{a, b, vp}, {t1, t2, nc}, ins});
        push({{b, c, vp}, {t2, t, na}, ins});
        push({{c, a, vp}, {t, t1, nb}, ins});
        set_neighbor(na, b, c, t1);
        set_neighbor(nb, c, a, t2);
        legalize(t, 2);
        legalize(t1, 2);
        legalize(t2, 2);
    }

    /// Split edge e of t (between a = v[e+1] and b = v[e+2]) at the new vertex.
    void split_edge(int t, int e, int vp) {
        const int a = tris[t].v[(e + 1) % 3];
        const int b = tris[t].v[(e + 2) % 3];
        const int c = tris[t].v[e];
        const int t2 = tris[t].n[e];
        const int n_bc = tris[t].n[(e + 1) % 3];
        const int n_ca = tris[t].n[(e + 2) % 3];
        const bool ins1 = tris[t].inside;

        const auto cit = constraints.find(edge_key(a, b));
        if (cit != constraints.end()) {
            const Constraint con = cit->second;
            constraints.erase(cit);
            constraints[edge_key(a, vp)] = con;
            constraints[edge_key(vp, b)] = con;
        }

        const int tn = static_cast<int>(tris.size());
        store(t, {{a, vp, c}, {tn, n_ca, -1}, ins1});
        push({{vp, b, c}, {n_bc, t, -1}, ins1});
        set_neighbor(n_bc, b, c, tn);

        if (t2 >= 0) {
            const int f = vertex_index(t2, opposite_vertex(t2, a, b));
            const int d = tris[t2].v[f];
            const int n_ad = tris[t2].n[edge_index(t2, a, d)];
            const int n_db = tris[t2].n[edge_index(t2, d, b)];
            const bool ins2 = tris[t2].inside;
            const int tn2 = static_cast<int>(tris.size());
            store(t2, {{b, vp, d}, {tn2, n_db, tn}, ins2});
            push({{vp, a, d}, {n_ad, t2, t}, ins2});
            tris[t].n[2] = tn2;
            tris[tn].n[2] = t2;
            set_neighbor(n_ad, a, d, tn2);
            legalize(t, 1);
            legalize(tn, 0);
            legalize(t2, 1);
            legalize(tn2, 0);
        } else {
            legalize(t, 1);
            legalize(tn, 0);
        }
    }

    /// Delaunay legalization of edge e of triangle t (recursive flips).
    void legalize(int t, int e) {
        const int nb = tris[t].n[e];
        if (nb < 0) return;
        const int a = tris[t].v[(e + 1) % 3];
        const int b = tris[t].v[(e + 2) % 3];
        if (is_constrained(a, b)) return;
        const int c = tris[t].v[e];
        const int d = opposite_vertex(nb, a, b);
        if (incircle(pts[a], pts[b], pts[c], pts[d]) <= orient_eps_) return;
        // Only flip across a strictly convex quad.
        if (orient2d(pts[c], pts[d], pts[a]) >= -orient_eps_ ||
            orient2d(pts[c], pts[d], pts[b]) <= orient_eps_)
            return;
        flip(t, e);
        // After the flip t = (a,d,c) and nb = (d,b,c); recheck the edges opposite c.
        legalize(t, vertex_index(t, c));
        legalize(nb, vertex_index(nb, c));
    }

    void flip(int t, int e) {
        const int nb = tris[t].n[e];
        const int a = tris[t].v[(e + 1) % 3];
        const int b = tris[t].v[(e + 2) % 3];
        const int c = tris[t].v[e];
        const int d = opposite_vertex(nb, a, b);
        const bool ins = tris[t].inside;

        const int n_t_ca = tris[t].n[edge_index(t, c, a)];
        const int n_t_bc = tris[t].n[edge_index(t, b, c)];
        const int n_nb_ad = tris[nb].n[edge_index(nb, a, d)];
        const int n_nb_db = tris[nb].n[edge_index(nb, d, b)];

        store(t, {{a, d, c}, {nb, n_t_ca, n_nb_ad}, ins});
        store(nb, {{d, b, c}, {n_t_bc, t, n_nb_db}, ins});
        set_neighbor(n_t_bc, b, c, nb);
        set_neighbor(n_nb_ad, a, d, t);
    }

    /// Make (a,b) an edge by flipping the edges crossing the open segment.
    void recover_edge(int a, int b) {
        for (int guard = 0; guard < 100000; ++guard) {
            if (edge_exists(a, b)) return;
            bool flipped = false;
            for (int t = 0; t < static_cast<int>(tris.size()) && !flipped; ++t) {
                for (int e = 0; e < 3; ++e) {
                    const int u = tris[t].v[(e + 1) % 3];
                    const int v = tris[t].v[(e + 2) % 3];
                    if (u == a || u == b || v == a || v == b) continue;
                    if (!crosses(pts[a], pts[b], pts[u], pts[v])) continue;
                    if (is_constrained(u, v))
                        throw SolverError("boundary constraints cross each other");
                    const int nbt = tris[t].n[e];
                    if (nbt < 0) continue;
                    const int c = tris[t].v[e];
                    const int d = opposite_vertex(nbt, u, v);
                    if (orient2d(pts[c], pts[d], pts[u]) >= -orient_eps_ ||
                        orient2d(pts[c], pts[d], pts[v]) <= orient_eps_)
                        continue;
                    flip(t, e);
                    flipped = true;
                    break;
                }
            }
            if (!flipped) throw SolverError("constraint edge recovery failed");
        }
        throw SolverError("constraint edge recovery did not terminate");
    }

    bool crosses(const Vec2& a, const Vec2& b, const Vec2& u, const Vec2& v) const {
        const double o1 = orient2d(a, b, u);
        const double o2 = orient2d(a, b, v);
        const double o3 = orient2d(u, v, a);
        const double o4 = orient2d(u, v, b);
        return ((o1 > orient_eps_ && o2 < -orient_eps_) ||
                (o1 < -orient_eps_ && o2 > orient_eps_)) &&
               ((o3 > orient_eps_ && o4 < -orient_eps_) ||
                (o3 < -orient_eps_ && o4 > orient_eps_));
    }
};

}  // namespace

TaggedMesh triangulate(const PolygonalDomain& domain, double h_max) {
    if (!(h_max > 0.0)) throw ConfigError("h_max must be positive");
    domain.validate();

    // Boundary chain: split each loop segment into equal pieces of length <= h_max.
    std::vector<Vec2> chain;
    std::vector<Constraint> chain_con;  // constraint of chain[i] -> chain[i+1]
    const size_t n = domain.loop.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2 p = domain.loop[i];
        const Vec2 q = domain.loop[(i + 1) % n];
        const int piece = domain.piece_of_segment[i];
        const BoundaryTag tag = domain.pieces[piece].tag;
        const double len = dist(p, q);
        const int parts = std::max(1, static_cast<int>(std::ceil(len / h_max - 1e-9)));
        for (int k = 0; k < parts; ++k) {
            chain.push_back(p + (static_cast<double>(k) / parts) * (q - p));
            chain_con.push_back({tag, piece});
        }
    }

    Vec2 lo = chain[0], hi = chain[0];
    for (const Vec2& p : chain) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    const double extent = std::max({hi.x - lo.x, hi.y - lo.y, 1e-6});
    const Vec2 margin{10.0 * extent, 10.0 * extent};

    Triangulator tr(extent * 21.0);
    tr.init_box(lo - margin, hi + margin);

    std::vector<int> chain_idx;
    chain_idx.reserve(chain.size());
    for (const Vec2& p : chain) chain_idx.push_back(tr.insert_point(p));
    for (size_t i = 0; i < chain.size(); ++i) {
        const int a = chain_idx[i];
        const int b = chain_idx[(i + 1) % chain.size()];
        if (a == b) throw SolverError("degenerate boundary subsegment");
        tr.constrain(a, b, chain_con[i].tag, chain_con[i].piece);
    }
    tr.classify_inside();

    // Interior seeds on a centered grid of spacing h/sqrt(2) (grid diagonals <= h),
    // lexicographic insertion order, kept clear of the boundary.
    const double s = h_max / std::numbers::sqrt2;
    const double clearance = 0.45 * s;
    const int nx = static_cast<int>(std::floor((hi.x - lo.x) / s));
    const int ny = static_cast<int>(std::floor((hi.y - lo.y) / s));
    const double x0 = lo.x + 0.5 * ((hi.x - lo.x) - nx * s);
    const double y0 = lo.y + 0.5 * ((hi.y - lo.y) - ny * s);
    // Bin the boundary segments for the clearance queries.
    const int bins = std::max(1, static_cast<int>(std::floor(extent / std::max(s, 1e-9))));
    std::vector<std::vector<int>> bin(static_cast<size_t>(bins) * bins);
    auto bin_of = [&](double x, double y) {
        int ix = std::clamp(static_cast<int>((x - lo.x) / extent * bins), 0, bins - 1);
        int iy = std::clamp(static_cast<int>((y - lo.y) / extent * bins), 0, bins - 1);
        return iy * bins + ix;
    };
    for (size_t k = 0; k < chain.size(); ++k) {
        const Vec2& p = chain[k];
        const Vec2& q = chain[(k + 1) % chain.size()];
        const int b0 = bin_of(std::min(p.x, q.x) - clearance, std::min(p.y, q.y) - clearance);
        const int b1 = bin_of(std::max(p.x, q.x) + clearance, std::max(p.y, q.y) + clearance);
        for (int iy = b0 / bins; iy <= b1 / bins; ++iy)
            for (int ix = b0 % bins; ix <= b1 % bins; ++ix)
                bin[iy * bins + ix].push_back(static_cast<int>(k));
    }
    for (int i = 0; i <= nx; ++i) {
        for (int j = 0; j <= ny; ++j) {
            const Vec2 p{x0 + i * s, y0 + j * s};
            if (!point_in_polygon(p, domain.loop)) continue;
            bool clear = true;
            for (int k : bin[bin_of(p.x, p.y)]) {
                if (point_segment_distance(p, chain[k], chain[(k + 1) % chain.size()]) <=
                    clearance) {
                    clear = false;
                    break;
                }
            }
            if (clear) tr.insert_point(p);
        }
    }

    tr.refine_to(h_max);

    TaggedMesh mesh;
    tr.extract(mesh);
    mesh.recompute_metrics();
    mesh.validate();
    return mesh;
}

}  // namespace fraclab
