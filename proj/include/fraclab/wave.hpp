#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fraclab/fem.hpp"

namespace fraclab {

struct WaveParams {
    double c = 1.0;    // wave speed
    double nu = 1.0;   // strong damping coefficient
    double T = 1.0;    // time horizon
    double dt = 0.01;

    int steps() const;
    void validate(bool allow_zero_nu = false) const;
};

/// Nodal forcing sampled on the time grid.
struct TimeForcing {
    std::function<Eigen::VectorXd(int step, double t)> eval;

    static TimeForcing zero(int node_count);
    static TimeForcing of(const FemSystem& sys,
                          const std::function<double(double, double, double)>& f);
    static TimeForcing samples(std::shared_ptr<const std::vector<Eigen::VectorXd>> data);
};

/// Discrete space-time field: u, u_t and u_tt samples on a uniform grid.
struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> u, v, a;  // full nodal vectors

    int steps() const { return static_cast<int>(times.size()); }
    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

Trajectory operator-(const Trajectory& x, const Trajectory& y);
Trajectory scaled(const Trajectory& x, double factor);

/// One damped mode d'' + nu_lambda d' + c2_lambda d = f(t): exact exponential
/// integrator with piecewise-linear forcing. nu_lambda = 0 is allowed as a
/// diagnostic (pure oscillator).
struct ModeTrace {
    std::vector<double> d, dp, dpp;
};
ModeTrace solve_damped_mode(double nu_lambda, double c2_lambda, double d0, double dp0,
                            std::span<const double> f_samples, double dt);

/// Galerkin solution on the eigenbasis: per-mode exact integration of
/// d'' + nu lambda_k d' + c^2 lambda_k d = (f, w_k), reassembled nodally.
Trajectory spectral_galerkin_solve(const FemSystem& sys, const SpectralBasis& basis,
                                   const WaveParams& params, const DiscreteField& u0,
                                   const DiscreteField& u1, const TimeForcing& f);

/// Trapezoidal Newmark (beta = 1/4, gamma = 1/2) on M a + nu S v + c^2 S u = M f.
Trajectory implicit_time_integrate(const FemSystem& sys, const WaveParams& params,
                                   const DiscreteField& u0, const DiscreteField& u1,
                                   const TimeForcing& f);

struct EnergyBreakdown {
    double kinetic = 0.0;
    double potential = 0.0;
    double total = 0.0;
};

EnergyBreakdown energy(const FemSystem& sys, const WaveParams& params,
                       const Eigen::VectorXd& u_nodal, const Eigen::VectorXd& v_nodal);

/// Trapezoidal time quadrature of the squared L2 norms: ||f||_{L2(0,T;L2)}.
double y_norm(const FemSystem& sys, const std::vector<Eigen::VectorXd>& samples, double dt);

/// Discrete X-norm: H^1-in-time of the Riesz laplacian norm plus H^2-in-time
/// of L2, using the stored u, u_t, u_tt samples.
double x_norm(const FemSystem& sys, const Trajectory& traj);

struct AprioriReport {
    double lhs = 0.0;        // sup lap(u)^2 + sup v-norm(u_t)^2 + int lap(u_t)^2 + int lap(u)^2
    double rhs = 0.0;        // ||f||_Y^2 + lap(u0)^2 + v-norm(u1)^2
    double ratio = 0.0;
    bool applicable = false;
};

AprioriReport apriori_check(const FemSystem& sys, const Trajectory& traj,
                            const DiscreteField& u0, const DiscreteField& u1,
                            const TimeForcing& f);

/// CSV with columns t, l2(u), v-norm(u), l2(v), energy-total, laplacian-l2(u).
void write_trajectory_csv(const FemSystem& sys, const WaveParams& params,
                          const Trajectory& traj, std::ostream& os);

}  // namespace fraclab
