#pragma once

#include <array>
#include <string>

#include "fraclab/convergence.hpp"

namespace fraclab {

/// One configuration tree for every pipeline; all fields carry defaults and
/// the manifest echoes the fully materialized tree.
struct RunConfig {
    // ifs
    std::string generator = "koch";  // koch | minkowski | koch-l | koch-mixture
    double l1 = 3.0;                 // ratio denominator (koch-l, koch-mixture)
    double l2 = 3.5;
    std::string env_rule = "constant";  // constant | periodic | frequency
    int env_constant = 0;
    std::vector<int> env_pattern{0, 1};
    std::vector<double> env_p{0.5, 0.5};
    double env_c0 = 1.0;
    int env_length = 16;
    bool outward = true;

    // domain: unit square; tags for bottom, right, top, left edges
    std::array<std::string, 4> square_tags{"robin", "dirichlet", "neumann", "dirichlet"};

    // physics
    double c = 1.0;
    double nu = 1.0;
    double alpha = 0.01;
    double robin_a = 1.0;
    bool sigma_scaled = true;  // a_m = a sigma_m

    // discretization
    double h = 1.0 / 16.0;
    double dt = 0.01;
    double T = 1.0;
    int background_n = 256;

    // study / stage selection
    std::string study = "trace";  // trace | uniform-trace | solution | poincare | density
    int level = 2;                // single-level stages
    int level_min = 1;
    int level_max = 4;
    std::string g = "x";          // named test field
    double amplitude = 1e-2;
    int eigen_count = 6;
    int trials = 5;
    double picard_tol = 1e-9;
    int picard_max_iters = 40;

    std::uint64_t seed = 1234;
    std::string out_dir = "out";
    int threads = 1;

    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_file(const std::string& path);
    /// Canonical serialization (sorted keys, every default materialized);
    /// from_json_text(to_json_text()) round-trips byte-identically.
    std::string to_json_text() const;

    void validate() const;
    IfsSystem make_ifs() const;
    BoundarySpec make_boundary_spec() const;
    TestField make_test_field() const;
    WesterveltParams make_physics() const;
    StudyConfig make_study() const;
};

}  // namespace fraclab
