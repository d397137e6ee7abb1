#pragma once

#include <map>
#include <optional>
#include <string>

#include "fraclab/domain.hpp"
#include "fraclab/westervelt.hpp"

namespace fraclab {

/// Scalar test field with an analytic gradient, defined on a neighborhood of
/// the curves under study.
struct TestField {
    std::string name;
    std::function<double(double, double)> f;
    std::function<double(double, double)> fx;
    std::function<double(double, double)> fy;
};

struct StudyConfig {
    IfsSystem ifs;
    int level_min = 1;
    int level_max = 4;
    double h = 1.0 / 27.0;      // interior mesh size shared by every level
    WesterveltParams physics;   // includes alpha and the wave parameters
    double robin_a = 1.0;
    bool sigma_scaled = true;   // a_m = a sigma_m; false is the ablation mode
    bool outward = true;
    int background_n = 256;     // background grid for cross-level comparison
    double data_amplitude = 1e-2;
    std::uint64_t seed = 1234;
    double picard_tol = 1e-9;
    int picard_max_iters = 40;
};

/// One table of per-level scalars plus human-readable verdicts.
struct ConvergenceReport {
    std::string study;
    std::vector<std::string> columns;  // first column is the level
    std::vector<std::vector<double>> rows;
    std::vector<std::string> verdicts;
    bool pass = true;

    void add_verdict(bool ok, const std::string& text);
};

/// sigma_m-weighted trace integrals I_m of g over K_m against the cell-sum
/// measure oracle at depth max level + oracle_extra.
ConvergenceReport trace_convergence_study(const IfsSystem& ifs, const TestField& g,
                                          int level_max, int oracle_extra = 4);

/// The measure oracle on its own: sum over level-M words of
/// cell_measure(word) * g(word anchor).
double trace_measure_oracle(const IfsSystem& ifs, const TestField& g, int depth);

/// sigma_m ||Tr u||^2_{L2(K_m)} / ||u||^2_{H1(Omega*)} across levels for each
/// test field; the verdict bounds max/min over m.
ConvergenceReport uniform_trace_ratio(const StudyConfig& config,
                                      std::span<const TestField> fields,
                                      double max_over_min_bound = 10.0);

/// Discrete F_m[u, phi]: time quadrature of the weak-form residual with the
/// nonlinear terms collocated nodally. phi contributes its u samples only.
double mosco_residual(const FemSystem& sys, const WesterveltParams& params,
                      const Trajectory& traj, const Trajectory& phi, const TimeForcing& f);

/// Test trajectories: first `count` eigenfunctions times {1, t, sin t}.
std::vector<Trajectory> make_test_trajectories(const FemSystem& sys,
                                               const SpectralBasis& basis,
                                               const WaveParams& params, int count = 5);

/// Westervelt solves across prefractal levels with a_m = a sigma_m, compared
/// pairwise on the shared background grid over the bounding box. on_level, when
/// set, receives each level's system and trajectory (for artifact export).
using LevelCallback = std::function<void(int level, const FemSystem& sys,
                                         const Trajectory& traj,
                                         const ContractionReport& picard)>;
ConvergenceReport solution_convergence_study(const StudyConfig& config,
                                             const LevelCallback& on_level = {});

/// Per-level sharp Poincare constants; verdict max/min <= bound.
ConvergenceReport poincare_uniformity_study(const StudyConfig& config,
                                            double max_over_min_bound = 2.0);

/// Per-level max measure-density ratio over seeded on-curve samples.
ConvergenceReport density_uniformity_study(const IfsSystem& ifs, int level_max,
                                           int samples_per_level, std::uint64_t seed,
                                           double max_over_min_bound = 10.0);

/// Shared plumbing for the study pipelines (exposed for tests and the CLI).
FemSystem build_level_system(const StudyConfig& config, int level);

/// P1 sampler onto an n x n background grid over a fixed bounding box;
/// zero outside the mesh.
class GridSampler {
public:
    GridSampler(const TaggedMesh& mesh, Vec2 lo, Vec2 hi, int n);
    Eigen::VectorXd sample(const Eigen::VectorXd& nodal) const;
    int n() const { return n_; }
    Vec2 lo() const { return lo_; }
    Vec2 hi() const { return hi_; }

private:
    int n_;
    Vec2 lo_, hi_;
    struct Entry {
        int tri = -1;
        std::array<int, 3> nodes{};
        std::array<double, 3> w{};
    };
    std::vector<Entry> entries_;
};

/// Trapezoid-weighted L2 norm of a grid field over the sampler's box.
double grid_l2(const GridSampler& sampler, const Eigen::VectorXd& grid_values);

}  // namespace fraclab
