#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "fraclab/domain.hpp"
#include "fraclab/error.hpp"
#include "fraclab/ifs.hpp"
#include "fraclab/mesh.hpp"

using namespace fraclab;

TEST_CASE("build_domain: level 0 replacement is the identity") {
    const auto dom = square_with_fractal_bottom(IfsSystem::koch(), 0);
    CHECK(dom.loop.size() == 4);
    CHECK(dom.area() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("build_domain: koch m=2 outward area") {
    const auto dom = square_with_fractal_bottom(IfsSystem::koch(), 2);
    CHECK(dom.loop.size() == 3 + 16);
    const double bump = std::sqrt(3.0) / 36.0 * (1.0 + 4.0 / 9.0);
    CHECK(dom.area() == doctest::Approx(1.0 + bump).epsilon(1e-12));
}

TEST_CASE("build_domain: minkowski m=1 keeps the area") {
    const auto dom = square_with_fractal_bottom(IfsSystem::minkowski(), 1);
    CHECK(dom.loop.size() == 3 + 8);
    CHECK(dom.area() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("build_domain: self-intersection rejected with witness") {
    // Thin box with an inward Koch bump taller than the box.
    const std::vector<Vec2> thin{{0, 0}, {1, 0}, {1, 0.1}, {0, 0.1}};
    BoundarySpec spec;
    spec.pieces = {
        {BoundaryTag::Robin, true, false},  // inward bulge
        {BoundaryTag::Dirichlet, false, true},
        {BoundaryTag::Neumann, false, true},
        {BoundaryTag::Dirichlet, false, true},
    };
    CHECK_THROWS_WITH_AS(build_domain(thin, spec, IfsSystem::koch(), 1),
                         doctest::Contains("self-intersects"), ConfigError);
}

TEST_CASE("triangulate: unit square at h=2 gives the minimal split") {
    const auto dom = square_with_fractal_bottom(IfsSystem::koch(), 0);
    const auto mesh = triangulate(dom, 2.0);
    CHECK(mesh.triangles.size() == 2);
    CHECK(mesh.nodes.size() == 4);
    CHECK(mesh.total_area() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("triangulate: unit square at h=1/8") {
    const auto dom = square_with_fractal_bottom(IfsSystem::koch(), 0);
    const auto mesh = triangulate(dom, 0.125);
    CHECK(mesh.nodes.size() >= 81);
    CHECK(mesh.nodes.size() <= 400);
    CHECK(mesh.h_max <= 0.125 * (1 + 1e-9));
    CHECK(mesh.total_area() == doctest::Approx(1.0).epsilon(1e-10));
    // Tag partition covers the perimeter.
    const double tagged = mesh.boundary_length(BoundaryTag::Dirichlet) +
                          mesh.boundary_length(BoundaryTag::Neumann) +
                          mesh.boundary_length(BoundaryTag::Robin);
    CHECK(tagged == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("triangulate: robin conformity at the conforming h") {
    const auto ifs = IfsSystem::koch();
    const auto dom = square_with_fractal_bottom(ifs, 2);
    const auto mesh = triangulate(dom, 1.0 / 9.0);
    const auto robin = boundary_mass_support(mesh, BoundaryTag::Robin);
    CHECK(robin.size() == 16);
    for (const auto& [edge, len] : robin)
        CHECK(len == doctest::Approx(1.0 / 9.0).epsilon(1e-12));

    // Multiset of Robin endpoints equals the prefractal vertex multiset.
    const auto curve = generate_prefractal(ifs, 2);
    std::multiset<std::pair<long long, long long>> expect, got;
    auto key = [](double x, double y) {
        return std::pair{static_cast<long long>(std::llround(x * 1e12)),
                         static_cast<long long>(std::llround(y * 1e12))};
    };
    // The outward placement maps the canonical curve point (x, y) to (x, -y).
    for (const auto& s : curve.segments) {
        expect.insert(key(s.p0.x, -s.p0.y));
        expect.insert(key(s.p1.x, -s.p1.y));
    }
    for (const auto& [edge, len] : robin) {
        got.insert(key(mesh.nodes[edge.a].x, mesh.nodes[edge.a].y));
        got.insert(key(mesh.nodes[edge.b].x, mesh.nodes[edge.b].y));
    }
    CHECK(expect == got);
}

TEST_CASE("triangulate: area and tagged perimeter match the polygon") {
    auto perimeter = [](const PolygonalDomain& dom) {
        double len = 0.0;
        for (size_t i = 0; i < dom.loop.size(); ++i)
            len += dist(dom.loop[i], dom.loop[(i + 1) % dom.loop.size()]);
        return len;
    };
    auto tagged_length = [](const TaggedMesh& mesh) {
        return mesh.boundary_length(BoundaryTag::Dirichlet) +
               mesh.boundary_length(BoundaryTag::Neumann) +
               mesh.boundary_length(BoundaryTag::Robin);
    };
    for (int m = 0; m <= 3; ++m) {
        const auto dk = square_with_fractal_bottom(IfsSystem::koch(), m);
        const auto mk = triangulate(dk, std::max(1.0 / 9.0, std::pow(3.0, -m)));
        CHECK(mk.total_area() == doctest::Approx(dk.area()).epsilon(1e-10));
        CHECK(tagged_length(mk) == doctest::Approx(perimeter(dk)).epsilon(1e-10));

        const auto dm = square_with_fractal_bottom(IfsSystem::minkowski(), m);
        const auto mm = triangulate(dm, std::max(1.0 / 16.0, std::pow(4.0, -m)));
        CHECK(mm.total_area() == doctest::Approx(dm.area()).epsilon(1e-10));
        CHECK(tagged_length(mm) == doctest::Approx(perimeter(dm)).epsilon(1e-10));
    }
}

TEST_CASE("refine: red refinement counts, nesting, h halving") {
    const auto dom = square_with_fractal_bottom(IfsSystem::koch(), 0);
    const auto coarse = triangulate(dom, 2.0);
    const auto fine = refine(coarse);
    CHECK(fine.triangles.size() == 8);
    CHECK(fine.boundary.size() == coarse.boundary.size() * 2);

    const auto finer = refine(fine);
    CHECK(finer.h_max == doctest::Approx(coarse.h_max / 4.0).epsilon(1e-12));
    CHECK(finer.total_area() == doctest::Approx(1.0).epsilon(1e-10));

    // Nodes of the coarse mesh are a prefix of the refined mesh's nodes.
    for (size_t i = 0; i < coarse.nodes.size(); ++i) {
        CHECK(fine.nodes[i].x == coarse.nodes[i].x);
        CHECK(fine.nodes[i].y == coarse.nodes[i].y);
    }
}

TEST_CASE("boundary_mass_support") {
    const auto dom = square_with_fractal_bottom(IfsSystem::koch(), 0);
    const auto mesh = triangulate(dom, 0.5);
    const auto robin = boundary_mass_support(mesh, BoundaryTag::Robin);
    CHECK(robin.size() == 2);
    for (const auto& [e, len] : robin) CHECK(len == doctest::Approx(0.5).epsilon(1e-12));

    // Koch m=1 at conforming h, once red-refined: 4*2 edges summing to 4/3.
    const auto dk = square_with_fractal_bottom(IfsSystem::koch(), 1);
    const auto mk = refine(triangulate(dk, 1.0 / 3.0));
    const auto rk = boundary_mass_support(mk, BoundaryTag::Robin);
    CHECK(rk.size() == 8);
    double sum = 0.0;
    for (const auto& [e, len] : rk) sum += len;
    CHECK(sum == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

    // All-Dirichlet domain: a Neumann query is empty.
    const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    BoundarySpec alldir;
    alldir.pieces = {{BoundaryTag::Dirichlet, false, true},
                     {BoundaryTag::Dirichlet, false, true},
                     {BoundaryTag::Dirichlet, false, true},
                     {BoundaryTag::Dirichlet, false, true}};
    const auto md = triangulate(build_domain(square, alldir, IfsSystem::koch(), 0), 0.5);
    CHECK(boundary_mass_support(md, BoundaryTag::Neumann).empty());
}

TEST_CASE("degenerate polygon rejected") {
    PolygonalDomain dom;
    dom.loop = {{0, 0}, {1, 0}, {2, 0}};  // collinear, zero area
    dom.piece_of_segment = {0, 0, 0};
    dom.pieces = {{BoundaryTag::Dirichlet, false, true}};
    CHECK_THROWS_AS(triangulate(dom, 0.5), ConfigError);
}

TEST_CASE("boundary spec validation") {
    const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    BoundarySpec nodirichlet;
    nodirichlet.pieces = {{BoundaryTag::Robin, true, true},
                          {BoundaryTag::Neumann, false, true},
                          {BoundaryTag::Neumann, false, true},
                          {BoundaryTag::Neumann, false, true}};
    CHECK_THROWS_AS(build_domain(square, nodirichlet, IfsSystem::koch(), 1), ConfigError);
}

TEST_CASE("mesh file round-trip is bit exact") {
    const auto dom = square_with_fractal_bottom(IfsSystem::koch(), 1);
    const auto mesh = triangulate(dom, 1.0 / 3.0);

    std::ostringstream first;
    write_mesh(mesh, first);
    std::istringstream in(first.str());
    const auto back = read_mesh(in);
    std::ostringstream second;
    write_mesh(back, second);
    CHECK(first.str() == second.str());
    CHECK(back.nodes.size() == mesh.nodes.size());
    CHECK(back.triangles.size() == mesh.triangles.size());
    CHECK(back.boundary.size() == mesh.boundary.size());
}

TEST_CASE("triangulation quality is tracked") {
    const auto dom = square_with_fractal_bottom(IfsSystem::minkowski(), 2);
    const auto mesh = triangulate(dom, 1.0 / 16.0);
    CHECK(mesh.min_angle_deg > 0.0);
    CHECK(mesh.total_area() == doctest::Approx(dom.area()).epsilon(1e-10));
    // Every node of the prefractal survives in the mesh boundary.
    const auto robin = boundary_mass_support(mesh, BoundaryTag::Robin);
    CHECK(robin.size() == 64);
}
