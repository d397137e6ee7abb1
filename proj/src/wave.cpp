#include "fraclab/wave.hpp"

#include <cmath>
#include <ostream>

#include "fraclab/error.hpp"

namespace fraclab {

int WaveParams::steps() const {
    return static_cast<int>(std::llround(T / dt)) + 1;
}

void WaveParams::validate(bool allow_zero_nu) const {
    if (!(c > 0.0)) throw ConfigError("wave speed must be positive");
    if (!(nu > 0.0) && !(allow_zero_nu && nu == 0.0))
        throw ConfigError("damping coefficient must be positive");
    if (!(dt > 0.0 && dt <= T)) throw ConfigError("need 0 < dt <= T");
    if (std::abs(T / dt - std::llround(T / dt)) > 1e-9)
        throw ConfigError("T must be an integer multiple of dt");
}

TimeForcing TimeForcing::zero(int node_count) {
    return {[node_count](int, double) { return Eigen::VectorXd::Zero(node_count).eval(); }};
}

TimeForcing TimeForcing::of(const FemSystem& sys,
                            const std::function<double(double, double, double)>& f) {
    const auto nodes = sys.mesh.nodes;
    return {[nodes, f](int, double t) {
        Eigen::VectorXd out(static_cast<int>(nodes.size()));
        for (size_t i = 0; i < nodes.size(); ++i) out[i] = f(nodes[i].x, nodes[i].y, t);
        return out;
    }};
}

TimeForcing TimeForcing::samples(std::shared_ptr<const std::vector<Eigen::VectorXd>> data) {
    return {[data](int step, double) {
        if (step < 0 || step >= static_cast<int>(data->size()))
            throw SolverError("forcing samples exhausted at step " + std::to_string(step));
        return (*data)[step];
    }};
}

Trajectory operator-(const Trajectory& x, const Trajectory& y) {
    if (x.steps() != y.steps()) throw ConfigError("trajectory length mismatch");
    Trajectory out;
    out.times = x.times;
    out.u.reserve(x.steps());
    for (int n = 0; n < x.steps(); ++n) {
        out.u.push_back(x.u[n] - y.u[n]);
        out.v.push_back(x.v[n] - y.v[n]);
        out.a.push_back(x.a[n] - y.a[n]);
    }
    return out;
}

Trajectory scaled(const Trajectory& x, double factor) {
    Trajectory out;
    out.times = x.times;
    for (int n = 0; n < x.steps(); ++n) {
        out.u.push_back(factor * x.u[n]);
        out.v.push_back(factor * x.v[n]);
        out.a.push_back(factor * x.a[n]);
    }
    return out;
}

ModeTrace solve_damped_mode(double nu_lambda, double c2_lambda, double d0, double dp0,
                            std::span<const double> f_samples, double dt) {
    if (!(c2_lambda > 0.0))
        throw SolverError("mode stiffness c^2 lambda must be positive");
    if (nu_lambda < 0.0) throw SolverError("mode damping nu lambda must be >= 0");
    const int n = static_cast<int>(f_samples.size());
    if (n < 1) throw ConfigError("mode forcing needs at least one sample");

    ModeTrace out;
    out.d.resize(n);
    out.dp.resize(n);
    out.dpp.resize(n);
    out.d[0] = d0;
    out.dp[0] = dp0;
    out.dpp[0] = f_samples[0] - nu_lambda * dp0 - c2_lambda * d0;

    const double p = nu_lambda;
    const double q = c2_lambda;
    const double disc = p * p - 4.0 * q;
    const double scale = std::max(p * p, 4.0 * q);

    for (int i = 0; i + 1 < n; ++i) {
        const double fa = f_samples[i];
        const double slope = (f_samples[i + 1] - fa) / dt;
        // Particular affine solution alpha + beta tau.
        const double beta = slope / q;
        const double alpha = (fa - p * beta) / q;
        const double h0 = out.d[i] - alpha;       // homogeneous value at tau = 0
        const double h1 = out.dp[i] - beta;       // homogeneous slope at tau = 0
        double d_end, dp_end;
        if (disc > 1e-12 * scale) {
            const double rt = std::sqrt(disc);
            const double s1 = 0.5 * (-p + rt);
            const double s2 = 0.5 * (-p - rt);
            const double c2 = (h1 - s1 * h0) / (s2 - s1);
            const double c1 = h0 - c2;
            d_end = c1 * std::exp(s1 * dt) + c2 * std::exp(s2 * dt);
            dp_end = c1 * s1 * std::exp(s1 * dt) + c2 * s2 * std::exp(s2 * dt);
        } else if (disc < -1e-12 * scale) {
            const double s = -0.5 * p;
            const double w = 0.5 * std::sqrt(-disc);
            const double c1 = h0;
            const double c2 = (h1 - s * h0) / w;
            const double e = std::exp(s * dt);
            const double cw = std::cos(w * dt);
            const double sw = std::sin(w * dt);
            d_end = e * (c1 * cw + c2 * sw);
            dp_end = e * (s * (c1 * cw + c2 * sw) + w * (-c1 * sw + c2 * cw));
        } else {
            const double s = -0.5 * p;
            const double c1 = h0;
            const double c2 = h1 - s * h0;
            const double e = std::exp(s * dt);
            d_end = e * (c1 + c2 * dt);
            dp_end = e * (s * (c1 + c2 * dt) + c2);
        }
        out.d[i + 1] = d_end + alpha + beta * dt;
        out.dp[i + 1] = dp_end + beta;
        out.dpp[i + 1] =
            f_samples[i + 1] - p * out.dp[i + 1] - q * out.d[i + 1];
    }
    return out;
}

Trajectory spectral_galerkin_solve(const FemSystem& sys, const SpectralBasis& basis,
                                   const WaveParams& params, const DiscreteField& u0,
                                   const DiscreteField& u1, const TimeForcing& f) {
    params.validate(/*allow_zero_nu=*/true);
    const int k = static_cast<int>(basis.eigenvalues.size());
    for (int j = 0; j < k; ++j)
        if (!(basis.eigenvalues[j] > 0.0))
            throw SolverError("spectral basis carries a non-positive eigenvalue");

    const int steps = params.steps();
    // Modal projections of data and forcing: (g, w_k)_{L2}.
    const Eigen::VectorXd mu0 = sys.M * sys.restrict_to_free(u0.values);
    const Eigen::VectorXd mu1 = sys.M * sys.restrict_to_free(u1.values);
    Eigen::VectorXd d0 = basis.modes.transpose() * mu0;
    Eigen::VectorXd dp0 = basis.modes.transpose() * mu1;

    Eigen::MatrixXd fk(k, steps);
    for (int n = 0; n < steps; ++n) {
        const double t = n * params.dt;
        const Eigen::VectorXd fn = sys.restrict_to_free(sys.M_nodes * f.eval(n, t));
        fk.col(n) = basis.modes.transpose() * fn;
    }

    std::vector<ModeTrace> traces;
    traces.reserve(k);
    for (int j = 0; j < k; ++j) {
        std::vector<double> fj(steps);
        for (int n = 0; n < steps; ++n) fj[n] = fk(j, n);
        traces.push_back(solve_damped_mode(params.nu * basis.eigenvalues[j],
                                           params.c * params.c * basis.eigenvalues[j],
                                           d0[j], dp0[j], fj, params.dt));
    }

    Trajectory traj;
    traj.times.resize(steps);
    for (int n = 0; n < steps; ++n) {
        traj.times[n] = n * params.dt;
        Eigen::VectorXd uu = Eigen::VectorXd::Zero(sys.free_count());
        Eigen::VectorXd vv = uu, aa = uu;
        for (int j = 0; j < k; ++j) {
            uu += traces[j].d[n] * basis.modes.col(j);
            vv += traces[j].dp[n] * basis.modes.col(j);
            aa += traces[j].dpp[n] * basis.modes.col(j);
        }
        traj.u.push_back(sys.prolong(uu));
        traj.v.push_back(sys.prolong(vv));
        traj.a.push_back(sys.prolong(aa));
    }
    return traj;
}

Trajectory implicit_time_integrate(const FemSystem& sys, const WaveParams& params,
                                   const DiscreteField& u0, const DiscreteField& u1,
                                   const TimeForcing& f) {
    params.validate();
    const double dt = params.dt;
    const double c2 = params.c * params.c;
    const double nu = params.nu;
    constexpr double beta = 0.25;
    constexpr double gamma = 0.5;

    const int steps = params.steps();
    Eigen::VectorXd u = sys.restrict_to_free(u0.values);
    Eigen::VectorXd v = sys.restrict_to_free(u1.values);

    auto project = [&](int n, double t) {
        return sys.restrict_to_free((sys.M_nodes * f.eval(n, t)).eval()).eval();
    };

    // Consistent initial acceleration: M a0 = M f(0) - nu S u1 - c^2 S u0.
    Eigen::VectorXd a =
        sys.M_factorization().solve(project(0, 0.0) - nu * (sys.S * v) - c2 * (sys.S * u));

    const SpMat K_eff = sys.M + (gamma * dt * nu + beta * dt * dt * c2) * sys.S;
    Eigen::SimplicialLDLT<SpMat> solver(K_eff);
    if (solver.info() != Eigen::Success)
        throw SolverError("Newmark effective matrix factorization failed");

    Trajectory traj;
    traj.times.resize(steps);
    traj.u.reserve(steps);
    traj.times[0] = 0.0;
    traj.u.push_back(sys.prolong(u));
    traj.v.push_back(sys.prolong(v));
    traj.a.push_back(sys.prolong(a));

    for (int n = 1; n < steps; ++n) {
        const double t = n * dt;
        const Eigen::VectorXd u_pred = u + dt * v + dt * dt * (0.5 - beta) * a;
        const Eigen::VectorXd v_pred = v + dt * (1.0 - gamma) * a;
        const Eigen::VectorXd rhs =
            project(n, t) - nu * (sys.S * v_pred) - c2 * (sys.S * u_pred);
        a = solver.solve(rhs);
        u = u_pred + beta * dt * dt * a;
        v = v_pred + gamma * dt * a;
        traj.times[n] = t;
        traj.u.push_back(sys.prolong(u));
        traj.v.push_back(sys.prolong(v));
        traj.a.push_back(sys.prolong(a));
    }
    return traj;
}

EnergyBreakdown energy(const FemSystem& sys, const WaveParams& params,
                       const Eigen::VectorXd& u_nodal, const Eigen::VectorXd& v_nodal) {
    const Eigen::VectorXd uf = sys.restrict_to_free(u_nodal);
    const Eigen::VectorXd vf = sys.restrict_to_free(v_nodal);
    EnergyBreakdown e;
    e.kinetic = 0.5 * vf.dot(sys.M * vf);
    e.potential = 0.5 * params.c * params.c * uf.dot(sys.S * uf);
    e.total = e.kinetic + e.potential;
    return e;
}

namespace {

double trapezoid(std::span<const double> values, double dt) {
    double acc = 0.0;
    for (size_t i = 0; i + 1 < values.size(); ++i) acc += 0.5 * (values[i] + values[i + 1]);
    return acc * dt;
}

double riesz_lap_sq(const FemSystem& sys, const Eigen::VectorXd& nodal) {
    const Eigen::VectorXd uf = sys.restrict_to_free(nodal);
    const Eigen::VectorXd g = sys.M_factorization().solve((sys.S * uf).eval());
    return g.dot(sys.M * g);
}

}  // namespace

double y_norm(const FemSystem& sys, const std::vector<Eigen::VectorXd>& samples, double dt) {
    std::vector<double> sq(samples.size());
    for (size_t n = 0; n < samples.size(); ++n) {
        const Eigen::VectorXd ff = sys.restrict_to_free(samples[n]);
        sq[n] = ff.dot(sys.M * ff);
    }
    return std::sqrt(trapezoid(sq, dt));
}

double x_norm(const FemSystem& sys, const Trajectory& traj) {
    const double dt = traj.dt();
    std::vector<double> h1_lap(traj.steps()), h2_l2(traj.steps());
    for (int n = 0; n < traj.steps(); ++n) {
        const double lap_u = riesz_lap_sq(sys, traj.u[n]);
        const double lap_v = riesz_lap_sq(sys, traj.v[n]);
        const Eigen::VectorXd uf = sys.restrict_to_free(traj.u[n]);
        const Eigen::VectorXd vf = sys.restrict_to_free(traj.v[n]);
        const Eigen::VectorXd af = sys.restrict_to_free(traj.a[n]);
        h1_lap[n] = lap_u + lap_v;
        h2_l2[n] = uf.dot(sys.M * uf) + vf.dot(sys.M * vf) + af.dot(sys.M * af);
    }
    return std::sqrt(trapezoid(h1_lap, dt) + trapezoid(h2_l2, dt));
}

AprioriReport apriori_check(const FemSystem& sys, const Trajectory& traj,
                            const DiscreteField& u0, const DiscreteField& u1,
                            const TimeForcing& f) {
    AprioriReport rep;
    const double dt = traj.dt();
    double sup_lap_u = 0.0, sup_v_ut = 0.0;
    std::vector<double> lap_ut(traj.steps()), lap_u(traj.steps());
    for (int n = 0; n < traj.steps(); ++n) {
        lap_u[n] = riesz_lap_sq(sys, traj.u[n]);
        lap_ut[n] = riesz_lap_sq(sys, traj.v[n]);
        const Eigen::VectorXd vf = sys.restrict_to_free(traj.v[n]);
        sup_lap_u = std::max(sup_lap_u, lap_u[n]);
        sup_v_ut = std::max(sup_v_ut, vf.dot(sys.S * vf));
    }
    rep.lhs = sup_lap_u + sup_v_ut + trapezoid(lap_ut, dt) + trapezoid(lap_u, dt);

    std::vector<Eigen::VectorXd> fsamples;
    fsamples.reserve(traj.steps());
    for (int n = 0; n < traj.steps(); ++n) fsamples.push_back(f.eval(n, traj.times[n]));
    const double fy = y_norm(sys, fsamples, dt);
    const Eigen::VectorXd u1f = sys.restrict_to_free(u1.values);
    rep.rhs = fy * fy + riesz_lap_sq(sys, u0.values) + u1f.dot(sys.S * u1f);

    rep.applicable = rep.rhs > 0.0;
    rep.ratio = rep.applicable ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

void write_trajectory_csv(const FemSystem& sys, const WaveParams& params,
                          const Trajectory& traj, std::ostream& os) {
    os << "t,l2_u,v_norm_u,l2_v,energy_total,laplacian_l2_u\n";
    char buf[256];
    for (int n = 0; n < traj.steps(); ++n) {
        const auto nu = norms(sys, {traj.u[n]});
        const Eigen::VectorXd vf = sys.restrict_to_free(traj.v[n]);
        const double l2v = std::sqrt(std::max(0.0, vf.dot(sys.M * vf)));
        const auto e = energy(sys, params, traj.u[n], traj.v[n]);
        std::snprintf(buf, sizeof buf, "%.12g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      traj.times[n], nu.l2, nu.v, l2v, e.total, nu.laplacian_l2);
        os << buf;
    }
}

}  // namespace fraclab
