#include "fraclab/westervelt.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <numbers>
#include <ostream>

#include "fraclab/rng.hpp"

namespace fraclab {

void WesterveltParams::validate() const {
    wave.validate();
    if (alpha < 0.0) throw ConfigError("nonlinearity coefficient alpha must be >= 0");
}

Trajectory operator+(const Trajectory& x, const Trajectory& y) {
    if (x.steps() != y.steps()) throw ConfigError("trajectory length mismatch");
    Trajectory out;
    out.times = x.times;
    for (int n = 0; n < x.steps(); ++n) {
        out.u.push_back(x.u[n] + y.u[n]);
        out.v.push_back(x.v[n] + y.v[n]);
        out.a.push_back(x.a[n] + y.a[n]);
    }
    return out;
}

std::vector<Eigen::VectorXd> nonlinear_source(const Trajectory& traj, double alpha) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(traj.steps());
    for (int n = 0; n < traj.steps(); ++n)
        out.push_back(alpha * (traj.u[n].cwiseProduct(traj.a[n]) +
                               traj.v[n].cwiseProduct(traj.v[n])));
    return out;
}

namespace {

Trajectory zero_trajectory(const FemSystem& sys, const WaveParams& params) {
    Trajectory traj;
    const int steps = params.steps();
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(sys.node_count());
    traj.times.resize(steps);
    for (int n = 0; n < steps; ++n) {
        traj.times[n] = n * params.dt;
        traj.u.push_back(z);
        traj.v.push_back(z);
        traj.a.push_back(z);
    }
    return traj;
}

double data_norm(const FemSystem& sys, const DiscreteField& u0, const DiscreteField& u1,
                 const TimeForcing& f, const WaveParams& params) {
    std::vector<Eigen::VectorXd> fs;
    fs.reserve(params.steps());
    for (int n = 0; n < params.steps(); ++n) fs.push_back(f.eval(n, n * params.dt));
    const auto n0 = norms(sys, u0);
    const auto n1 = norms(sys, u1);
    return y_norm(sys, fs, params.dt) + n0.laplacian_l2 + n1.v;
}

}  // namespace

std::pair<Trajectory, ContractionReport> picard_solve(
    const FemSystem& sys, const WesterveltParams& params, const DiscreteField& u0,
    const DiscreteField& u1, const TimeForcing& f, double tol, int max_iters,
    const std::optional<ConstantsReport>& constants) {
    params.validate();
    if (max_iters < 1) throw ConfigError("picard needs at least one iteration");

    ContractionReport rep;
    rep.constants = constants;
    rep.data_norm = data_norm(sys, u0, u1, f, params.wave);

    const Trajectory u_star = implicit_time_integrate(sys, params.wave, u0, u1, f);
    rep.u_star_x_norm = x_norm(sys, u_star);
    if (constants && std::isfinite(constants->r_star))
        rep.smallness_warning = rep.u_star_x_norm > constants->r_star;

    const DiscreteField zero{Eigen::VectorXd::Zero(sys.node_count())};
    Trajectory v = zero_trajectory(sys, params.wave);
    Trajectory u = u_star;

    int grew = 0;
    for (int k = 0; k < max_iters; ++k) {
        auto source = std::make_shared<std::vector<Eigen::VectorXd>>(
            nonlinear_source(u, params.alpha));
        const Trajectory v_next = implicit_time_integrate(sys, params.wave, zero, zero,
                                                          TimeForcing::samples(source));
        const double corr = x_norm(sys, v_next - v);
        if (!rep.correction_norms.empty()) {
            const double prev = rep.correction_norms.back();
            rep.ratios.push_back(prev > 0.0 ? corr / prev : 0.0);
            grew = corr > prev ? grew + 1 : 0;
        }
        rep.correction_norms.push_back(corr);
        rep.iterations = k + 1;
        v = v_next;
        u = u_star + v;
        if (corr <= tol) {
            rep.converged = true;
            break;
        }
        if (grew >= 3) {
            rep.final_x_norm = x_norm(sys, u);
            throw PicardDivergence(
                "picard iteration diverging: correction norms grew three times in a row",
                rep);
        }
    }
    rep.final_x_norm = x_norm(sys, u);
    if (!rep.converged) {
        throw PicardDivergence("picard iteration exhausted " + std::to_string(max_iters) +
                                   " iterations without reaching tolerance",
                               rep);
    }
    return {u, rep};
}

Trajectory newton_step_solve(const FemSystem& sys, const WesterveltParams& params,
                             const DiscreteField& u0, const DiscreteField& u1,
                             const TimeForcing& f, double newton_tol, int max_newton) {
    params.validate();
    const WaveParams& wp = params.wave;
    const double dt = wp.dt;
    const double c2 = wp.c * wp.c;
    const double nu = wp.nu;
    const double alpha = params.alpha;
    constexpr double beta = 0.25;
    constexpr double gamma = 0.5;

    auto check_degeneracy = [&](const Eigen::VectorXd& u_free) {
        const double worst = (1.0 - alpha * u_free.array()).abs().minCoeff();
        if (worst < 0.1)
            throw SolverError("newton stepper degenerate: |1 - alpha u| < 0.1 somewhere "
                              "(smallness regime violated)");
    };

    auto project = [&](int n, double t) {
        return sys.restrict_to_free((sys.M_nodes * f.eval(n, t)).eval()).eval();
    };

    Eigen::VectorXd u = sys.restrict_to_free(u0.values);
    Eigen::VectorXd v = sys.restrict_to_free(u1.values);
    check_degeneracy(u);

    // Consistent initial acceleration: M((1-alpha u0) a0) = M f0 + alpha M(u1^2)
    //                                  - nu S u1 - c^2 S u0.
    const Eigen::VectorXd rhs0 = project(0, 0.0) + alpha * (sys.M * v.cwiseProduct(v)) -
                                 nu * (sys.S * v) - c2 * (sys.S * u);
    SpMat M0 = sys.M * Eigen::VectorXd(1.0 - alpha * u.array()).asDiagonal();
    Eigen::SparseLU<SpMat> lu0(M0);
    if (lu0.info() != Eigen::Success)
        throw SolverError("newton initial acceleration factorization failed");
    Eigen::VectorXd a = lu0.solve(rhs0);

    const int steps = wp.steps();
    Trajectory traj;
    traj.times.resize(steps);
    traj.times[0] = 0.0;
    traj.u.push_back(sys.prolong(u));
    traj.v.push_back(sys.prolong(v));
    traj.a.push_back(sys.prolong(a));

    for (int n = 1; n < steps; ++n) {
        const double t = n * dt;
        const Eigen::VectorXd u_pred = u + dt * v + dt * dt * (0.5 - beta) * a;
        const Eigen::VectorXd v_pred = v + dt * (1.0 - gamma) * a;
        const Eigen::VectorXd mf = project(n, t);

        Eigen::VectorXd an = a;  // warm start from the previous acceleration
        bool converged = false;
        for (int it = 0; it < max_newton; ++it) {
            const Eigen::VectorXd un = u_pred + beta * dt * dt * an;
            const Eigen::VectorXd vn = v_pred + gamma * dt * an;
            const Eigen::VectorXd one_minus = 1.0 - alpha * un.array();
            const Eigen::VectorXd residual = sys.M * one_minus.cwiseProduct(an) -
                                             alpha * (sys.M * vn.cwiseProduct(vn)) +
                                             nu * (sys.S * vn) + c2 * (sys.S * un) - mf;
            const Eigen::VectorXd w =
                one_minus - alpha * beta * dt * dt * an - 2.0 * alpha * gamma * dt * vn;
            SpMat J = sys.M * w.asDiagonal();
            J += (gamma * dt * nu + beta * dt * dt * c2) * sys.S;
            Eigen::SparseLU<SpMat> lu(J);
            if (lu.info() != Eigen::Success)
                throw SolverError("newton jacobian factorization failed at step " +
                                  std::to_string(n));
            const Eigen::VectorXd delta = lu.solve(residual);
            an -= delta;
            if (delta.norm() <= newton_tol * (1.0 + an.norm())) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw SolverError("newton did not converge at step " + std::to_string(n));

        a = an;
        u = u_pred + beta * dt * dt * a;
        v = v_pred + gamma * dt * a;
        check_degeneracy(u);
        traj.times[n] = t;
        traj.u.push_back(sys.prolong(u));
        traj.v.push_back(sys.prolong(v));
        traj.a.push_back(sys.prolong(a));
    }
    return traj;
}

ConstantsReport estimate_constants(const FemSystem& sys, const WesterveltParams& params,
                                   int trials, std::uint64_t seed) {
    params.wave.validate();
    if (trials < 1) throw ConfigError("estimate_constants needs at least one trial");

    ConstantsReport rep;
    rep.trials = trials;
    rep.seed = seed;
    Rng rng(seed);

    const double lambda1 = solve_eigen(sys, 1).eigenvalues[0];
    const double omega_res = params.wave.c * std::sqrt(lambda1);
    const DiscreteField zero{Eigen::VectorXd::Zero(sys.node_count())};
    const int steps = params.wave.steps();
    const double dt = params.wave.dt;

    // C_nu: worst X/Y response of the zero-data linear solver, probing near the
    // first resonance where the damping term controls the response.
    const double omega_factor[3] = {0.7, 1.0, 1.4};
    for (int t = 0; t < trials; ++t) {
        Eigen::VectorXd g(sys.node_count());
        for (int i = 0; i < sys.node_count(); ++i) g[i] = rng.uniform(-1.0, 1.0);
        const double omega = omega_factor[t % 3] * omega_res;
        auto data = std::make_shared<std::vector<Eigen::VectorXd>>();
        data->reserve(steps);
        for (int n = 0; n < steps; ++n)
            data->push_back(std::sin(omega * n * dt) * g);
        const double fy = y_norm(sys, *data, dt);
        if (fy == 0.0) continue;
        const Trajectory traj = implicit_time_integrate(sys, params.wave, zero, zero,
                                                        TimeForcing::samples(data));
        rep.C_nu = std::max(rep.C_nu, x_norm(sys, traj) / fy);
    }

    // B1, B2: bilinear ratios over X-normalized separable trajectories
    // u = g(x) p(t) with closed-form time derivatives.
    auto separable = [&](const Eigen::VectorXd& g, double omega, double phase) {
        Trajectory traj;
        traj.times.resize(steps);
        for (int n = 0; n < steps; ++n) {
            const double t = n * dt;
            traj.times[n] = t;
            traj.u.push_back(std::sin(omega * t + phase) * g);
            traj.v.push_back(omega * std::cos(omega * t + phase) * g);
            traj.a.push_back(-omega * omega * std::sin(omega * t + phase) * g);
        }
        const double nx = x_norm(sys, traj);
        return scaled(traj, 1.0 / nx);
    };
    for (int t = 0; t < trials; ++t) {
        Eigen::VectorXd g1(sys.node_count()), g2(sys.node_count());
        for (int i = 0; i < sys.node_count(); ++i) g1[i] = rng.uniform(-1.0, 1.0);
        for (int i = 0; i < sys.node_count(); ++i) g2[i] = rng.uniform(-1.0, 1.0);
        // Keep the sample fields V-conforming.
        for (int i = 0; i < sys.node_count(); ++i)
            if (sys.free_of_node[i] < 0) g1[i] = g2[i] = 0.0;
        const double w1 = rng.uniform(0.5, 2.0) * omega_res;
        const double w2 = rng.uniform(0.5, 2.0) * omega_res;
        const Trajectory P = separable(g1, w1, rng.uniform(0.0, 2.0 * std::numbers::pi));
        const Trajectory Q = separable(g2, w2, rng.uniform(0.0, 2.0 * std::numbers::pi));
        std::vector<Eigen::VectorXd> g_btt(steps), gt_bt(steps);
        for (int n = 0; n < steps; ++n) {
            g_btt[n] = P.u[n].cwiseProduct(Q.a[n]);
            gt_bt[n] = P.v[n].cwiseProduct(Q.v[n]);
        }
        rep.B1 = std::max(rep.B1, y_norm(sys, g_btt, dt));
        rep.B2 = std::max(rep.B2, y_norm(sys, gt_bt, dt));
    }
    rep.B = std::max(rep.B1, rep.B2);
    rep.r_star = params.alpha > 0.0
                     ? 1.0 / (8.0 * rep.B * rep.C_nu * params.alpha)
                     : std::numeric_limits<double>::infinity();
    return rep;
}

void write_contraction_csv(const ContractionReport& rep, std::ostream& os) {
    os << "iter,correction_norm,ratio\n";
    char buf[160];
    for (size_t k = 0; k < rep.correction_norms.size(); ++k) {
        if (k == 0)
            std::snprintf(buf, sizeof buf, "%zu,%.17g,\n", k + 1, rep.correction_norms[k]);
        else
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k + 1,
                          rep.correction_norms[k], rep.ratios[k - 1]);
        os << buf;
    }
    const double B = rep.constants ? rep.constants->B : std::nan("");
    const double C = rep.constants ? rep.constants->C_nu : std::nan("");
    const double r = rep.constants ? rep.constants->r_star : std::nan("");
    std::snprintf(buf, sizeof buf, "# B=%.17g C_nu=%.17g r_star=%.17g converged=%d\n", B, C,
                  r, rep.converged ? 1 : 0);
    os << buf;
    if (rep.constants)
        os << "# sampled maxima: B, C_nu are empirical lower bounds of the true constants\n";
}

}  // namespace fraclab
