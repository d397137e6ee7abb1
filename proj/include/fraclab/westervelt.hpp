#pragma once

#include <optional>

#include "fraclab/error.hpp"
#include "fraclab/wave.hpp"

namespace fraclab {

struct WesterveltParams {
    WaveParams wave;
    double alpha = 0.0;  // quadratic nonlinearity coefficient

    void validate() const;
};

/// Empirically sampled contraction constants; all maxima are lower bounds of
/// the true constants.
struct ConstantsReport {
    double B1 = 0.0;
    double B2 = 0.0;
    double B = 0.0;
    double C_nu = 0.0;
    double r_star = 0.0;  // 1/(8 B C_nu alpha); +inf when alpha = 0
    int trials = 0;
    std::uint64_t seed = 0;
};

struct ContractionReport {
    std::vector<double> correction_norms;  // X-norms of v_{k+1} - v_k
    std::vector<double> ratios;            // successive correction ratios
    bool converged = false;
    int iterations = 0;
    double u_star_x_norm = 0.0;  // linear part
    double final_x_norm = 0.0;
    double data_norm = 0.0;      // ||f||_Y + ||u0||_lap + ||u1||_V
    bool smallness_warning = false;
    std::optional<ConstantsReport> constants;
};

/// Thrown when the Picard iteration diverges; carries the partial report.
struct PicardDivergence : SolverError {
    ContractionReport report;
    explicit PicardDivergence(const std::string& msg, ContractionReport rep)
        : SolverError(msg), report(std::move(rep)) {}
};

/// Nodal samples of alpha (u u_tt + u_t^2) along a trajectory (P1 collocation).
std::vector<Eigen::VectorXd> nonlinear_source(const Trajectory& traj, double alpha);

/// Fixed-point solve u = u* + v, v_{k+1} = L^{-1} Phi(v_k + u*): the linear
/// solver is reapplied with zero data and the collocated quadratic source.
/// When a constants estimate is supplied it is folded into the report and the
/// smallness of the data is diagnosed against it.
std::pair<Trajectory, ContractionReport> picard_solve(
    const FemSystem& sys, const WesterveltParams& params, const DiscreteField& u0,
    const DiscreteField& u1, const TimeForcing& f, double tol = 1e-9, int max_iters = 40,
    const std::optional<ConstantsReport>& constants = std::nullopt);

/// Per-step Newton on the Newmark-discretized nonlinear system
/// M((1 - alpha u) a) - alpha M(v^2) + nu S v + c^2 S u = M f.
Trajectory newton_step_solve(const FemSystem& sys, const WesterveltParams& params,
                             const DiscreteField& u0, const DiscreteField& u1,
                             const TimeForcing& f, double newton_tol = 1e-10,
                             int max_newton = 25);

/// Seeded sampling of the proof constants: C_nu from zero-data linear solves,
/// B from bilinear ratios over X-normalized separable trajectories.
ConstantsReport estimate_constants(const FemSystem& sys, const WesterveltParams& params,
                                   int trials, std::uint64_t seed);

/// CSV rows (iter, correction-norm, ratio) plus one summary line.
void write_contraction_csv(const ContractionReport& rep, std::ostream& os);

Trajectory operator+(const Trajectory& x, const Trajectory& y);

}  // namespace fraclab
