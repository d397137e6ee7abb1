// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code = number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fraclab/config.hpp"
#include "fraclab/convergence.hpp"
#include "fraclab/report.hpp"
#include "fraclab/rng.hpp"

using namespace fraclab;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Harness {
    int failures = 0;

    void criterion(int n, bool ok, const std::string& what, const std::string& detail,
                   double seconds) {
        std::printf("[%s] criterion %2d: %s (%s) [%.2fs]\n", ok ? "PASS" : "FAIL", n,
                    what.c_str(), detail.c_str(), seconds);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

TaggedMesh dirichlet_square_mesh(double h) {
    const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    BoundarySpec spec;
    spec.pieces = {{BoundaryTag::Dirichlet, false, true},
                   {BoundaryTag::Dirichlet, false, true},
                   {BoundaryTag::Dirichlet, false, true},
                   {BoundaryTag::Dirichlet, false, true}};
    return triangulate(build_domain(square, spec, IfsSystem::koch(), 0), h);
}

double l2_error(const FemSystem& sys, const DiscreteField& uh, const ScalarField& exact) {
    double acc = 0.0;
    for (const auto& tri : sys.mesh.triangles) {
        const Vec2& p0 = sys.mesh.nodes[tri[0]];
        const Vec2& p1 = sys.mesh.nodes[tri[1]];
        const Vec2& p2 = sys.mesh.nodes[tri[2]];
        const double area = 0.5 * orient2d(p0, p1, p2);
        const Vec2 mids[3] = {0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)};
        const double vals[3] = {0.5 * (uh.values[tri[0]] + uh.values[tri[1]]),
                                0.5 * (uh.values[tri[1]] + uh.values[tri[2]]),
                                0.5 * (uh.values[tri[2]] + uh.values[tri[0]])};
        for (int k = 0; k < 3; ++k) {
            const double d = vals[k] - exact(mids[k].x, mids[k].y);
            acc += area / 3.0 * d * d;
        }
    }
    return std::sqrt(acc);
}

// --- criteria -------------------------------------------------------------

void c1_sigma_tables(Harness& h) {
    Timer timer;
    const auto koch = IfsSystem::koch();
    const auto mink = IfsSystem::minkowski();
    double worst = 0.0;
    for (int m = 0; m <= 8; ++m) {
        worst = std::max(worst, std::abs(sigma(koch, m) - std::pow(0.75, m)));
        worst = std::max(worst, std::abs(sigma(mink, m) - std::pow(0.5, m)));
    }
    const double t = timer.seconds();
    h.criterion(1, worst <= 1e-12 && t < 1.0, "sigma tables exact for koch and minkowski",
                fmt("max |sigma_m - exact| = %.3g, runtime %.3fs", worst, t), t);
}

void c2_trace_convergence(Harness& h) {
    Timer timer;
    const auto koch = IfsSystem::koch();
    const TestField one{"one", [](double, double) { return 1.0; }, nullptr, nullptr};
    const TestField x{"x", [](double xx, double) { return xx; }, nullptr, nullptr};
    const TestField x2{"x2", [](double xx, double) { return xx * xx; }, nullptr, nullptr};

    const auto rep1 = trace_convergence_study(koch, one, 8);
    double worst_one = 0.0;
    for (const auto& row : rep1.rows) worst_one = std::max(worst_one, std::abs(row[1] - 1.0));

    const auto repx = trace_convergence_study(koch, x, 8);
    const double err_x8 = repx.rows[8][2];  // |I_8 - oracle|
    const double err_half = std::abs(repx.rows[8][1] - 0.5);

    const auto repx2 = trace_convergence_study(koch, x2, 8);
    bool decreasing = true;
    for (int m = 3; m < 8; ++m)
        decreasing = decreasing && repx2.rows[m + 1][3] < repx2.rows[m][3];

    const double t = timer.seconds();
    const bool ok = worst_one <= 1e-12 && err_x8 <= 1e-3 && err_half <= 1e-3 &&
                    decreasing && t < 10.0;
    h.criterion(2, ok, "trace convergence on the koch boundary",
                fmt("max |I_m(1)-1| = %.2g, |I_8(x)-oracle| = %.2g, |I_8(x)-1/2| = %.2g, "
                    "x^2 increments decreasing = %d, runtime %.2fs",
                    worst_one, err_x8, err_half, static_cast<int>(decreasing), t),
                t);
}

void c3_spectral_accuracy(Harness& h) {
    Timer timer;
    const auto sys = assemble(dirichlet_square_mesh(1.0 / 64.0), 0.0);
    const auto basis = solve_eigen(sys, 3);
    const double r1 = std::abs(basis.eigenvalues[0] / (2.0 * kPi * kPi) - 1.0);
    const double r2 = std::abs(basis.eigenvalues[1] / (5.0 * kPi * kPi) - 1.0);
    const double r3 = std::abs(basis.eigenvalues[2] / (5.0 * kPi * kPi) - 1.0);
    const double t = timer.seconds();
    const bool ok = r1 < 0.01 && r2 < 0.01 && r3 < 0.01 && t < 60.0;
    h.criterion(3, ok, "dirichlet square spectrum at h = 1/64",
                fmt("lambda errors %.3g%%, %.3g%%, %.3g%%, runtime %.1fs", 100 * r1, 100 * r2,
                    100 * r3, t),
                t);
}

void c4_p1_order(Harness& h) {
    Timer timer;
    const ScalarField f = [](double x, double y) {
        return 2.0 * kPi * kPi * std::sin(kPi * x) * std::sin(kPi * y);
    };
    const ScalarField exact = [](double x, double y) {
        return std::sin(kPi * x) * std::sin(kPi * y);
    };
    const auto coarse_mesh = dirichlet_square_mesh(1.0 / 32.0);
    const auto sys_c = assemble(coarse_mesh, 0.0);
    const auto sys_f = assemble(refine(coarse_mesh), 0.0);
    const double e_c = l2_error(sys_c, solve_poisson(sys_c, f), exact);
    const double e_f = l2_error(sys_f, solve_poisson(sys_f, f), exact);
    const double ratio = e_c / e_f;
    const double t = timer.seconds();
    h.criterion(4, ratio >= 3.5 && ratio <= 4.5, "P1 L2 convergence order (h=1/32 vs 1/64)",
                fmt("error ratio %.3f in [3.5, 4.5]", ratio), t);
}

void c5_dissipativity(Harness& h) {
    Timer timer;
    bool dissipative = true;
    std::string detail;

    struct Case {
        std::string name;
        FemSystem sys;
    };
    std::vector<Case> cases;
    cases.push_back({"square", assemble(dirichlet_square_mesh(1.0 / 16.0), 0.0)});
    const auto dom = square_with_fractal_bottom(IfsSystem::koch(), 2);
    cases.push_back(
        {"koch m=2", assemble(triangulate(dom, 1.0 / 9.0), 1.0, sigma(IfsSystem::koch(), 2))});

    WaveParams params{1.0, 1.0, 1.0, 0.01};
    for (auto& c : cases) {
        const DiscreteField u0 = c.sys.interpolate_v(
            [](double x, double y) { return std::sin(kPi * x) * (y + 0.2) * (1 - y); });
        const DiscreteField u1 = c.sys.interpolate_v(
            [](double x, double y) { return x * (1 - x) * std::cos(kPi * y); });
        const auto traj = implicit_time_integrate(c.sys, params, u0, u1,
                                                  TimeForcing::zero(c.sys.node_count()));
        const double e0 = energy(c.sys, params, traj.u[0], traj.v[0]).total;
        double prev = e0;
        double worst_gain = 0.0;
        for (int n = 1; n < traj.steps(); ++n) {
            const double en = energy(c.sys, params, traj.u[n], traj.v[n]).total;
            worst_gain = std::max(worst_gain, (en - prev) / e0);
            prev = en;
        }
        dissipative = dissipative && worst_gain <= 1e-10;
        detail += fmt("%s worst gain %.2g; ", c.name.c_str(), worst_gain);
    }

    // O(dt^2) cross-solver agreement on a 10-mode truncation.
    const auto& sys = cases[0].sys;
    const auto basis = solve_eigen(sys, 10);
    Eigen::VectorXd c0(10), c1(10);
    for (int j = 0; j < 10; ++j) {
        c0[j] = 1.0 / (1 + j);
        c1[j] = 0.3 / (1 + j * j);
    }
    DiscreteField u0{sys.prolong(basis.modes * c0)};
    DiscreteField u1{sys.prolong(basis.modes * c1)};
    double errs[2];
    int idx = 0;
    for (const double dt : {0.02, 0.01}) {
        WaveParams p{1.0, 0.3, 1.0, dt};
        const auto spectral = spectral_galerkin_solve(sys, basis, p, u0, u1,
                                                      TimeForcing::zero(sys.node_count()));
        const auto implicit_run = implicit_time_integrate(
            sys, p, u0, u1, TimeForcing::zero(sys.node_count()));
        errs[idx++] = (implicit_run.u.back() - spectral.u.back()).norm();
    }
    const double rate = errs[0] / errs[1];
    detail += fmt("dt-halving error ratio %.2f", rate);
    const double t = timer.seconds();
    h.criterion(5, dissipative && rate > 3.0 && rate < 5.0,
                "damped-wave dissipativity and O(dt^2) solver agreement", detail, t);
}

struct WesterveltFixture {
    FemSystem sys;
    DiscreteField u0, u1;
    TimeForcing f;

    explicit WesterveltFixture(double amplitude) {
        const auto dom = square_with_fractal_bottom(IfsSystem::koch(), 1);
        sys = assemble(triangulate(dom, 1.0 / 6.0), 1.0, sigma(IfsSystem::koch(), 1));
        u0 = sys.interpolate_v([amplitude](double x, double y) {
            return amplitude * std::sin(kPi * x) * y * (1 - y);
        });
        u1 = sys.interpolate_v([amplitude](double x, double y) {
            return amplitude * x * (1 - x) * std::sin(kPi * y);
        });
        f = TimeForcing::of(sys, [amplitude](double x, double y, double t) {
            return amplitude * std::exp(-t) * std::sin(kPi * x) * (y + 0.2);
        });
    }
};

void c6_westervelt_consistency(Harness& h) {
    Timer timer;
    std::string detail;
    bool ok = true;

    {
        WesterveltFixture fx(0.1);
        WesterveltParams params{{1.0, 1.0, 0.5, 0.01}, 0.0};
        const auto [traj, rep] = picard_solve(fx.sys, params, fx.u0, fx.u1, fx.f);
        const auto linear = implicit_time_integrate(fx.sys, params.wave, fx.u0, fx.u1, fx.f);
        const Trajectory diff = traj - linear;
        const double rel =
            y_norm(fx.sys, diff.u, diff.dt()) / y_norm(fx.sys, linear.u, linear.dt());
        ok = ok && rel <= 1e-10;
        detail += fmt("alpha=0 deviation %.2g; ", rel);
    }

    double picard_newton_gap = 0.0;
    {
        WesterveltFixture fx(0.05);
        WesterveltParams params{{1.0, 1.0, 0.5, 0.01}, 0.5};
        const auto [traj, rep] = picard_solve(fx.sys, params, fx.u0, fx.u1, fx.f, 1e-12, 40);
        bool ratios_ok = rep.ratios.size() >= 2;
        for (size_t k = 0; k + 1 < rep.ratios.size(); ++k)
            ratios_ok = ratios_ok && rep.ratios[k] < 1.0;
        double spread = 0.0;
        if (rep.ratios.size() >= 3) {
            for (size_t k = 1; k + 1 < rep.ratios.size(); ++k)
                spread = std::max(spread,
                                  std::abs(rep.ratios[k] - rep.ratios[0]) / rep.ratios[0]);
            ratios_ok = ratios_ok && spread <= 0.2;
        }
        ok = ok && ratios_ok;
        detail += fmt("contraction ratio ~%.3f (spread %.0f%%); ",
                      rep.ratios.empty() ? 0.0 : rep.ratios[0], 100 * spread);

        const auto newton = newton_step_solve(fx.sys, params, fx.u0, fx.u1, fx.f);
        const Trajectory diff = traj - newton;
        picard_newton_gap = y_norm(fx.sys, diff.u, diff.dt());
        ok = ok && picard_newton_gap <= 1e-6;
        detail += fmt("picard-newton L2L2 gap %.2g; ", picard_newton_gap);
    }

    {
        WesterveltParams params{{1.0, 1.0, 0.5, 0.01}, 0.5};
        WesterveltFixture fx1(0.04), fx2(0.08);
        const auto lin1 =
            implicit_time_integrate(fx1.sys, params.wave, fx1.u0, fx1.u1, fx1.f);
        const auto lin2 =
            implicit_time_integrate(fx2.sys, params.wave, fx2.u0, fx2.u1, fx2.f);
        const auto [nl1, r1] = picard_solve(fx1.sys, params, fx1.u0, fx1.u1, fx1.f, 1e-12, 40);
        const auto [nl2, r2] = picard_solve(fx2.sys, params, fx2.u0, fx2.u1, fx2.f, 1e-12, 40);
        const Trajectory d1 = nl1 - lin1;
        const Trajectory d2 = nl2 - lin2;
        const double ratio = y_norm(fx2.sys, d2.u, d2.dt()) / y_norm(fx1.sys, d1.u, d1.dt());
        ok = ok && ratio >= 3.5 && ratio <= 4.5;
        detail += fmt("quadratic-scaling ratio %.3f", ratio);
    }
    h.criterion(6, ok, "westervelt solver consistency", detail, timer.seconds());
}

void c7_rstar_report(Harness& h) {
    Timer timer;
    WesterveltFixture fx(0.05);
    WesterveltParams params{{1.0, 1.0, 0.5, 0.01}, 0.5};
    const auto rep = estimate_constants(fx.sys, params, 3, 11);
    const bool identity = rep.r_star == 1.0 / (8.0 * rep.B * rep.C_nu * params.alpha);
    const double product = rep.r_star * 8.0 * rep.B * rep.C_nu * params.alpha;

    WesterveltParams twice{{1.0, 2.0, 0.5, 0.01}, 0.5};
    const auto rep2 = estimate_constants(fx.sys, twice, 3, 11);
    const double shrink = rep2.C_nu / rep.C_nu;
    const bool ok = identity && shrink >= 0.35 && shrink <= 0.65;
    h.criterion(7, ok, "r* report identity and C_nu ~ 1/nu",
                fmt("r*.8BC_nu.alpha = %.17g (bit-exact recompute: %d), C_nu shrink at 2nu "
                    "= %.3f",
                    product, static_cast<int>(identity), shrink),
                timer.seconds());
}

void c8_uniformity(Harness& h) {
    Timer timer;
    std::string detail;

    const auto dens_koch = density_uniformity_study(IfsSystem::koch(), 6, 200, 31337, 10.0);
    const auto dens_mink =
        density_uniformity_study(IfsSystem::minkowski(), 6, 200, 31337, 10.0);
    bool ok = dens_koch.pass && dens_mink.pass;
    detail += fmt("density spread pass: koch %d, minkowski %d; ",
                  static_cast<int>(dens_koch.pass), static_cast<int>(dens_mink.pass));

    StudyConfig cfg;
    cfg.ifs = IfsSystem::koch();
    cfg.level_min = 0;
    cfg.level_max = 6;
    Rng rng(777);
    std::vector<TestField> polys;
    for (int i = 0; i < 10; ++i) {
        const double c0 = rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        const double c1 = rng.uniform(-1.0, 1.0);
        const double c2 = rng.uniform(-1.0, 1.0);
        const double c3 = rng.uniform(-1.0, 1.0);
        const double c4 = rng.uniform(-1.0, 1.0);
        const double c5 = rng.uniform(-1.0, 1.0);
        polys.push_back(TestField{
            "p" + std::to_string(i),
            [=](double x, double y) {
                return c0 + c1 * x + c2 * y + c3 * x * x + c4 * x * y + c5 * y * y;
            },
            [=](double x, double y) { return c1 + 2 * c3 * x + c4 * y; },
            [=](double x, double y) { return c2 + c4 * x + 2 * c5 * y; }});
    }
    const auto trace_rep = uniform_trace_ratio(cfg, polys, 10.0);
    ok = ok && trace_rep.pass;
    detail += fmt("trace-ratio spread pass: %d; ", static_cast<int>(trace_rep.pass));

    StudyConfig pcfg = cfg;
    pcfg.level_min = 0;
    pcfg.level_max = 4;
    pcfg.h = 1.0 / 12.0;
    pcfg.robin_a = 1.0;
    const auto poin = poincare_uniformity_study(pcfg, 2.0);
    ok = ok && poin.pass;
    double pmin = 1e300, pmax = 0.0;
    for (const auto& row : poin.rows) {
        pmin = std::min(pmin, row[1]);
        pmax = std::max(pmax, row[1]);
    }
    detail += fmt("poincare spread %.3f <= 2", pmax / pmin);
    h.criterion(8, ok, "uniformity diagnostics across levels", detail, timer.seconds());
}

StudyConfig cauchy_fixture(const IfsSystem& ifs, double h) {
    StudyConfig cfg;
    cfg.ifs = ifs;
    cfg.level_min = 1;
    cfg.level_max = 4;
    cfg.h = h;
    cfg.physics = WesterveltParams{{1.0, 1.0, 2.0, 0.01}, 0.3};
    cfg.robin_a = 1.0;
    cfg.background_n = 256;
    cfg.data_amplitude = 5e-3;
    cfg.picard_tol = 1e-10;
    return cfg;
}

void c9_solution_cauchy(Harness& h) {
    Timer timer;
    std::string detail;
    bool ok = true;
    struct Entry {
        std::string name;
        StudyConfig cfg;
    };
    const std::vector<Entry> entries = {
        {"koch", cauchy_fixture(IfsSystem::koch(), 1.0 / 27.0)},
        {"minkowski", cauchy_fixture(IfsSystem::minkowski(), 1.0 / 64.0)},
    };
    for (const auto& e : entries) {
        const auto rep = solution_convergence_study(e.cfg);
        std::vector<double> es;
        for (const auto& row : rep.rows)
            if (!std::isnan(row[4])) es.push_back(row[4]);
        bool decreasing = es.size() >= 2;
        for (size_t k = 0; k + 1 < es.size(); ++k)
            decreasing = decreasing && es[k + 1] < es[k];
        ok = ok && decreasing;
        detail += e.name + " e_m:";
        for (double v : es) detail += fmt(" %.3g", v);
        detail += fmt(" decreasing=%d; ", static_cast<int>(decreasing));
    }
    const double t = timer.seconds();
    ok = ok && t < 600.0;
    h.criterion(9, ok, "prefractal-to-fractal solution cauchy convergence",
                detail + fmt("runtime %.0fs < 600s", t), t);
}

void c10_determinism(Harness& h) {
    Timer timer;
    bool ok = true;
    std::string detail;

    const auto d1 = density_uniformity_study(IfsSystem::koch(), 5, 100, 2222, 10.0);
    const auto d2 = density_uniformity_study(IfsSystem::koch(), 5, 100, 2222, 10.0);
    ok = ok && report_csv(d1) == report_csv(d2);

    auto cfg = cauchy_fixture(IfsSystem::koch(), 1.0 / 9.0);
    cfg.level_max = 2;
    cfg.physics.wave.T = 0.5;
    cfg.background_n = 64;
    const auto s1 = solution_convergence_study(cfg);
    const auto s2 = solution_convergence_study(cfg);
    ok = ok && report_csv(s1) == report_csv(s2);
    detail += fmt("library reruns identical: %d; ", static_cast<int>(ok));

#ifdef FRACLAB_CLI_PATH
    const fs::path dir = fs::temp_directory_path() / "fraclab_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    RunConfig rc;
    rc.study = "trace";
    rc.g = "x2";
    rc.level_max = 5;
    atomic_write(dir / "config.json", rc.to_json_text());
    auto run = [&](const std::string& out) {
        const std::string cmd = std::string(FRACLAB_CLI_PATH) + " --config " +
                                (dir / "config.json").string() + " --out " +
                                (dir / out).string() + " run >/dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str())) == 0;
    };
    const bool both = run("a") && run("b");
    auto slurp = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    const bool same =
        both && slurp(dir / "a" / "study.csv") == slurp(dir / "b" / "study.csv");
    ok = ok && same;
    detail += fmt("cli reruns identical: %d", static_cast<int>(same));
    fs::remove_all(dir);
#endif
    h.criterion(10, ok, "determinism of seeded studies", detail, timer.seconds());
}

}  // namespace

int main() {
    Harness h;
    c1_sigma_tables(h);
    c2_trace_convergence(h);
    c3_spectral_accuracy(h);
    c4_p1_order(h);
    c5_dissipativity(h);
    c6_westervelt_consistency(h);
    c7_rstar_report(h);
    c8_uniformity(h);
    c9_solution_cauchy(h);
    c10_determinism(h);
    std::printf("%d of 10 criteria passed\n", 10 - h.failures);
    return h.failures;
}
