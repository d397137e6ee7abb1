#include "fraclab/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fraclab/error.hpp"
#include "fraclab/rng.hpp"

namespace fraclab {

void ConvergenceReport::add_verdict(bool ok, const std::string& text) {
    verdicts.push_back(std::string(ok ? "PASS " : "FAIL ") + text);
    pass = pass && ok;
}

namespace {

constexpr double kGauss = 0.28867513459481287;  // 1/(2 sqrt(3)): 2-point offsets

/// Two-point Gauss quadrature of g along the segment.
double segment_integral(const TestField& g, const Vec2& a, const Vec2& b) {
    const Vec2 mid = 0.5 * (a + b);
    const Vec2 half = 0.5 * (b - a);
    const Vec2 p = mid - 2.0 * kGauss * half;
    const Vec2 q = mid + 2.0 * kGauss * half;
    return 0.5 * dist(a, b) * (g.f(p.x, p.y) + g.f(q.x, q.y));
}

struct Affine {
    // x -> L x + t
    double l00 = 1, l01 = 0, l10 = 0, l11 = 1;
    Vec2 t{0, 0};

    Vec2 apply(const Vec2& p) const {
        return {l00 * p.x + l01 * p.y + t.x, l10 * p.x + l11 * p.y + t.y};
    }
    Affine compose(const Similitude& psi) const {
        // this ∘ psi
        const double c = std::cos(psi.angle), s = std::sin(psi.angle);
        const double refl = psi.reflect ? -1.0 : 1.0;
        const double m00 = psi.ratio * c, m01 = -psi.ratio * s * refl;
        const double m10 = psi.ratio * s, m11 = psi.ratio * c * refl;
        Affine out;
        out.l00 = l00 * m00 + l01 * m10;
        out.l01 = l00 * m01 + l01 * m11;
        out.l10 = l10 * m00 + l11 * m10;
        out.l11 = l10 * m01 + l11 * m11;
        out.t = apply(psi.translation);
        return out;
    }
};

void oracle_descend(const IfsSystem& ifs, const TestField& g, const Affine& transform,
                    double weight, int level, int depth, double& acc) {
    if (level > depth) {
        const Vec2 anchor = transform.apply(ifs.base_a);
        acc += weight * g.f(anchor.x, anchor.y);
        return;
    }
    const GeneratorFamily& fam = ifs.family_at_level(level);
    const double D = fam.contraction_sum(2);
    for (const auto& psi : fam.maps)
        oracle_descend(ifs, g, transform.compose(psi), weight * psi.ratio / D, level + 1,
                       depth, acc);
}

}  // namespace

double trace_measure_oracle(const IfsSystem& ifs, const TestField& g, int depth) {
    ifs.validate();
    double leaves = 1.0;
    for (int t = 1; t <= depth; ++t)
        leaves *= static_cast<double>(ifs.family_at_level(t).maps.size());
    if (leaves > 7e7)
        throw ConfigError("measure oracle depth too deep: " + std::to_string(depth));
    double acc = 0.0;
    oracle_descend(ifs, g, Affine{}, 1.0, 1, depth, acc);
    return acc;
}

ConvergenceReport trace_convergence_study(const IfsSystem& ifs, const TestField& g,
                                          int level_max, int oracle_extra) {
    ConvergenceReport rep;
    rep.study = "trace-convergence[" + g.name + "]";
    rep.columns = {"level", "I_m", "err_vs_oracle", "increment"};

    // Cap the oracle depth by the leaf budget; the level cap already bounds m.
    int depth = level_max + oracle_extra;
    {
        double leaves = 1.0;
        int feasible = 0;
        for (int t = 1; t <= depth; ++t) {
            leaves *= static_cast<double>(ifs.family_at_level(t).maps.size());
            if (leaves > 7e7) break;
            feasible = t;
        }
        depth = feasible;
    }
    const double reference = trace_measure_oracle(ifs, g, depth);

    std::vector<double> I(level_max + 1);
    for (int m = 0; m <= level_max; ++m) {
        const auto curve = generate_prefractal(ifs, m);
        double integral = 0.0;
        for (const auto& seg : curve.segments) integral += segment_integral(g, seg.p0, seg.p1);
        I[m] = sigma(ifs, m) * integral;
        const double inc = m > 0 ? std::abs(I[m] - I[m - 1])
                                 : std::numeric_limits<double>::quiet_NaN();
        rep.rows.push_back({static_cast<double>(m), I[m], std::abs(I[m] - reference), inc});
    }
    return rep;
}

ConvergenceReport uniform_trace_ratio(const StudyConfig& config,
                                      std::span<const TestField> fields,
                                      double max_over_min_bound) {
    ConvergenceReport rep;
    rep.study = "uniform-trace-ratio";
    rep.columns = {"level"};
    for (const auto& g : fields) rep.columns.push_back("ratio[" + g.name + "]");

    // Bounding box of the whole family of domains: H1 norms live on it.
    Vec2 lo{0, 0}, hi{1, 1};
    for (int m = config.level_min; m <= config.level_max; ++m) {
        const auto dom = square_with_fractal_bottom(config.ifs, m, config.outward);
        for (const Vec2& p : dom.loop) {
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
        }
    }

    // H1(Omega*) norms by 32x32 tensor Gauss-Legendre panels.
    auto h1_norm_sq = [&](const TestField& g) {
        const int panels = 32;
        const double gp[2] = {-kGauss * 2.0, kGauss * 2.0};
        const double dx = (hi.x - lo.x) / panels;
        const double dy = (hi.y - lo.y) / panels;
        double acc = 0.0;
        for (int i = 0; i < panels; ++i) {
            for (int j = 0; j < panels; ++j) {
                for (const double ox : gp) {
                    for (const double oy : gp) {
                        const double x = lo.x + (i + 0.5 + 0.5 * ox) * dx;
                        const double y = lo.y + (j + 0.5 + 0.5 * oy) * dy;
                        const double v = g.f(x, y);
                        const double vx = g.fx(x, y);
                        const double vy = g.fy(x, y);
                        acc += 0.25 * dx * dy * (v * v + vx * vx + vy * vy);
                    }
                }
            }
        }
        return acc;
    };

    std::vector<double> h1sq;
    for (const auto& g : fields) h1sq.push_back(h1_norm_sq(g));

    std::vector<std::vector<double>> ratios(fields.size());
    for (int m = config.level_min; m <= config.level_max; ++m) {
        std::vector<double> row{static_cast<double>(m)};
        const auto curve = generate_prefractal(config.ifs, m);
        const double sg = sigma(config.ifs, m);
        for (size_t k = 0; k < fields.size(); ++k) {
            // Trace integral of u^2 along the embedded curve (outward = y flip).
            const TestField& g = fields[k];
            const double flip = config.outward ? -1.0 : 1.0;
            TestField gsq{g.name,
                          [&](double x, double y) {
                              const double v = g.f(x, flip * y);
                              return v * v;
                          },
                          nullptr, nullptr};
            double tr = 0.0;
            for (const auto& seg : curve.segments)
                tr += segment_integral(gsq, seg.p0, seg.p1);
            const double ratio = sg * tr / h1sq[k];
            ratios[k].push_back(ratio);
            row.push_back(ratio);
        }
        rep.rows.push_back(row);
    }
    for (size_t k = 0; k < fields.size(); ++k) {
        const auto [mn, mx] = std::minmax_element(ratios[k].begin(), ratios[k].end());
        const double spread = *mn > 0.0 ? *mx / *mn : std::numeric_limits<double>::infinity();
        rep.add_verdict(spread <= max_over_min_bound,
                        "field " + fields[k].name + ": max/min trace ratio " +
                            std::to_string(spread) + " <= " +
                            std::to_string(max_over_min_bound));
    }
    return rep;
}

double mosco_residual(const FemSystem& sys, const WesterveltParams& params,
                      const Trajectory& traj, const Trajectory& phi, const TimeForcing& f) {
    if (traj.steps() != phi.steps())
        throw ConfigError("trajectory and test function live on different time grids");
    if (traj.u.front().size() != phi.u.front().size() ||
        traj.u.front().size() != sys.node_count())
        throw ConfigError("trajectory and test function live on different meshes");

    const double c2 = params.wave.c * params.wave.c;
    const double nu = params.wave.nu;
    const double alpha = params.alpha;
    const double a = sys.robin_a;  // R already carries the sigma weight
    const double dt = traj.dt();

    std::vector<double> integrand(traj.steps());
    for (int n = 0; n < traj.steps(); ++n) {
        const Eigen::VectorXd ph = sys.restrict_to_free(phi.u[n]);
        const Eigen::VectorXd uu = sys.restrict_to_free(traj.u[n]);
        const Eigen::VectorXd vv = sys.restrict_to_free(traj.v[n]);
        const Eigen::VectorXd aa = sys.restrict_to_free(traj.a[n]);
        const Eigen::VectorXd nl = sys.restrict_to_free(
            (traj.u[n].cwiseProduct(traj.a[n]) + traj.v[n].cwiseProduct(traj.v[n])).eval());
        const Eigen::VectorXd fn =
            sys.restrict_to_free((sys.M_nodes * f.eval(n, traj.times[n])).eval());
        double val = ph.dot(sys.M * aa);
        val += c2 * ph.dot(sys.A * uu) + nu * ph.dot(sys.A * vv);
        val += c2 * a * ph.dot(sys.R * uu) + nu * a * ph.dot(sys.R * vv);
        val -= alpha * ph.dot(sys.M * nl);
        val -= ph.dot(fn);
        integrand[n] = val;
    }
    double acc = 0.0;
    for (int n = 0; n + 1 < traj.steps(); ++n)
        acc += 0.5 * (integrand[n] + integrand[n + 1]);
    return acc * dt;
}

std::vector<Trajectory> make_test_trajectories(const FemSystem& sys,
                                               const SpectralBasis& basis,
                                               const WaveParams& params, int count) {
    count = std::min<int>(count, static_cast<int>(basis.eigenvalues.size()));
    std::vector<Trajectory> out;
    const int steps = params.steps();
    struct Profile {
        std::function<double(double)> p, dp, ddp;
    };
    const Profile profiles[3] = {
        {[](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }},
        {[](double t) { return t; }, [](double) { return 1.0; }, [](double) { return 0.0; }},
        {[](double t) { return std::sin(t); }, [](double t) { return std::cos(t); },
         [](double t) { return -std::sin(t); }}};
    for (int j = 0; j < count; ++j) {
        const Eigen::VectorXd w = sys.prolong(basis.modes.col(j));
        for (const auto& prof : profiles) {
            Trajectory traj;
            traj.times.resize(steps);
            for (int n = 0; n < steps; ++n) {
                const double t = n * params.dt;
                traj.times[n] = t;
                traj.u.push_back(prof.p(t) * w);
                traj.v.push_back(prof.dp(t) * w);
                traj.a.push_back(prof.ddp(t) * w);
            }
            out.push_back(std::move(traj));
        }
    }
    return out;
}

FemSystem build_level_system(const StudyConfig& config, int level) {
    const auto dom = square_with_fractal_bottom(config.ifs, level, config.outward);
    const auto mesh = triangulate(dom, config.h);
    const double weight = config.sigma_scaled ? sigma(config.ifs, level) : 1.0;
    return assemble(mesh, config.robin_a, weight);
}

GridSampler::GridSampler(const TaggedMesh& mesh, Vec2 lo, Vec2 hi, int n)
    : n_(n), lo_(lo), hi_(hi) {
    if (n < 2) throw ConfigError("background grid needs at least 2 points per side");
    entries_.resize(static_cast<size_t>(n) * n);

    // Bin triangles for point location.
    const int bins = std::max(8, n / 4);
    std::vector<std::vector<int>> bin(static_cast<size_t>(bins) * bins);
    const double bw = (hi.x - lo.x) / bins;
    const double bh = (hi.y - lo.y) / bins;
    auto clampi = [](int v, int n2) { return std::min(std::max(v, 0), n2 - 1); };
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        Vec2 tlo = mesh.nodes[mesh.triangles[t][0]], thi = tlo;
        for (int k = 1; k < 3; ++k) {
            const Vec2& p = mesh.nodes[mesh.triangles[t][k]];
            tlo.x = std::min(tlo.x, p.x);
            tlo.y = std::min(tlo.y, p.y);
            thi.x = std::max(thi.x, p.x);
            thi.y = std::max(thi.y, p.y);
        }
        const int ix0 = clampi(static_cast<int>((tlo.x - lo.x) / bw), bins);
        const int ix1 = clampi(static_cast<int>((thi.x - lo.x) / bw), bins);
        const int iy0 = clampi(static_cast<int>((tlo.y - lo.y) / bh), bins);
        const int iy1 = clampi(static_cast<int>((thi.y - lo.y) / bh), bins);
        for (int iy = iy0; iy <= iy1; ++iy)
            for (int ix = ix0; ix <= ix1; ++ix) bin[iy * bins + ix].push_back(t);
    }

    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Vec2 p{lo.x + (hi.x - lo.x) * i / (n - 1.0),
                         lo.y + (hi.y - lo.y) * j / (n - 1.0)};
            Entry& e = entries_[static_cast<size_t>(j) * n + i];
            const int ix = clampi(static_cast<int>((p.x - lo.x) / bw), bins);
            const int iy = clampi(static_cast<int>((p.y - lo.y) / bh), bins);
            for (int t : bin[iy * bins + ix]) {
                const auto& tri = mesh.triangles[t];
                const Vec2& a = mesh.nodes[tri[0]];
                const Vec2& b = mesh.nodes[tri[1]];
                const Vec2& c = mesh.nodes[tri[2]];
                const double A = orient2d(a, b, c);
                const double w0 = orient2d(p, b, c) / A;
                const double w1 = orient2d(a, p, c) / A;
                const double w2 = orient2d(a, b, p) / A;
                if (w0 >= -1e-12 && w1 >= -1e-12 && w2 >= -1e-12) {
                    e.tri = t;
                    e.nodes = tri;
                    e.w = {w0, w1, w2};
                    break;
                }
            }
        }
    }
}

Eigen::VectorXd GridSampler::sample(const Eigen::VectorXd& nodal) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<int>(entries_.size()));
    for (size_t k = 0; k < entries_.size(); ++k) {
        const Entry& e = entries_[k];
        if (e.tri < 0) continue;  // zero extension outside the domain
        out[k] = e.w[0] * nodal[e.nodes[0]] + e.w[1] * nodal[e.nodes[1]] +
                 e.w[2] * nodal[e.nodes[2]];
    }
    return out;
}

double grid_l2(const GridSampler& sampler, const Eigen::VectorXd& grid_values) {
    const int n = sampler.n();
    const double dx = (sampler.hi().x - sampler.lo().x) / (n - 1.0);
    const double dy = (sampler.hi().y - sampler.lo().y) / (n - 1.0);
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
            const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
            const double v = grid_values[j * n + i];
            acc += wi * wj * v * v;
        }
    }
    return std::sqrt(acc * dx * dy);
}

namespace {

double boundary_term(const FemSystem& sys, const WesterveltParams& params,
                     const Trajectory& traj) {
    const double c2 = params.wave.c * params.wave.c;
    const double nu = params.wave.nu;
    std::vector<double> vals(traj.steps());
    for (int n = 0; n < traj.steps(); ++n) {
        const Eigen::VectorXd uu = sys.restrict_to_free(traj.u[n]);
        const Eigen::VectorXd vv = sys.restrict_to_free(traj.v[n]);
        vals[n] = sys.robin_a * (c2 * uu.dot(sys.R * uu) + nu * std::abs(vv.dot(sys.R * uu)));
    }
    double acc = 0.0;
    for (int n = 0; n + 1 < traj.steps(); ++n) acc += 0.5 * (vals[n] + vals[n + 1]);
    return acc * traj.dt();
}

}  // namespace

ConvergenceReport solution_convergence_study(const StudyConfig& config,
                                             const LevelCallback& on_level) {
    ConvergenceReport rep;
    rep.study = "solution-convergence";
    rep.columns = {"level", "x_norm", "boundary_term", "picard_iters", "e_m"};

    // Shared bounding box over all levels.
    Vec2 lo{0, 0}, hi{1, 1};
    for (int m = config.level_min; m <= config.level_max; ++m) {
        const auto dom = square_with_fractal_bottom(config.ifs, m, config.outward);
        for (const Vec2& p : dom.loop) {
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
        }
    }

    const double amp = config.data_amplitude;
    const auto g_shared = [amp](double x, double y) {
        return amp * std::sin(std::numbers::pi * x) * (y + 0.5);
    };
    const auto u1_shared = [amp](double x, double y) {
        return amp * x * (1.0 - x) * std::cos(0.5 * std::numbers::pi * y);
    };
    const auto f_shared = [amp](double x, double y, double t) {
        return amp * std::exp(-t) * std::sin(std::numbers::pi * x) * (1.0 - y);
    };

    std::optional<GridSampler> prev_sampler;
    std::vector<Eigen::VectorXd> prev_samples;
    std::vector<double> e_values;
    double dt = 0.0;

    for (int m = config.level_min; m <= config.level_max; ++m) {
        FemSystem sys = build_level_system(config, m);
        // Initial data per the shared-source recipe: u0 solves the level-m
        // Poisson problem driven by g, u1 is the V-conforming restriction.
        const DiscreteField u0 = solve_poisson(sys, g_shared);
        const DiscreteField u1 = sys.interpolate_v(u1_shared);
        const TimeForcing f = TimeForcing::of(sys, f_shared);

        auto [traj, picard] = picard_solve(sys, config.physics, u0, u1, f, config.picard_tol,
                                           config.picard_max_iters);
        if (on_level) on_level(m, sys, traj, picard);

        dt = traj.dt();
        GridSampler sampler(sys.mesh, lo, hi, config.background_n);
        std::vector<Eigen::VectorXd> samples;
        samples.reserve(traj.steps());
        for (int n = 0; n < traj.steps(); ++n) samples.push_back(sampler.sample(traj.u[n]));

        double e_m = std::numeric_limits<double>::quiet_NaN();
        if (prev_sampler) {
            // ||u_m - u_{m-1}||_{L2(0,T;L2(Omega*))} by time trapezoid.
            std::vector<double> sq(samples.size());
            for (size_t nidx = 0; nidx < samples.size(); ++nidx) {
                const double d = grid_l2(sampler, samples[nidx] - prev_samples[nidx]);
                sq[nidx] = d * d;
            }
            double acc = 0.0;
            for (size_t nidx = 0; nidx + 1 < sq.size(); ++nidx)
                acc += 0.5 * (sq[nidx] + sq[nidx + 1]);
            e_m = std::sqrt(acc * dt);
            e_values.push_back(e_m);
        }

        rep.rows.push_back({static_cast<double>(m), x_norm(sys, traj),
                            boundary_term(sys, config.physics, traj),
                            static_cast<double>(picard.iterations), e_m});
        prev_sampler.emplace(std::move(sampler));
        prev_samples = std::move(samples);
    }

    // Cauchy signature: successive differences strictly decreasing.
    bool decreasing = e_values.size() >= 2;
    for (size_t k = 0; k + 1 < e_values.size(); ++k)
        decreasing = decreasing && e_values[k + 1] < e_values[k];
    if (e_values.size() >= 2) {
        std::string seq;
        for (double e : e_values) seq += " " + std::to_string(e);
        rep.add_verdict(decreasing, "successive differences strictly decreasing:" + seq);
    }
    return rep;
}

ConvergenceReport poincare_uniformity_study(const StudyConfig& config,
                                            double max_over_min_bound) {
    ConvergenceReport rep;
    rep.study = "poincare-uniformity";
    rep.columns = {"level", "poincare_constant"};
    std::vector<double> constants;
    for (int m = config.level_min; m <= config.level_max; ++m) {
        const FemSystem sys = build_level_system(config, m);
        const double c = poincare_constant(sys);
        constants.push_back(c);
        rep.rows.push_back({static_cast<double>(m), c});
    }
    const auto [mn, mx] = std::minmax_element(constants.begin(), constants.end());
    const double spread = *mx / *mn;
    rep.add_verdict(spread <= max_over_min_bound,
                    "max/min poincare constant " + std::to_string(spread) + " <= " +
                        std::to_string(max_over_min_bound));
    return rep;
}

ConvergenceReport density_uniformity_study(const IfsSystem& ifs, int level_max,
                                           int samples_per_level, std::uint64_t seed,
                                           double max_over_min_bound) {
    ConvergenceReport rep;
    rep.study = "measure-density-uniformity";
    rep.columns = {"level", "max_ratio"};
    Rng rng(seed);
    std::vector<double> maxima;
    for (int m = 0; m <= level_max; ++m) {
        const auto curve = generate_prefractal(ifs, m);
        std::vector<DensitySample> probes;
        probes.reserve(samples_per_level);
        for (int k = 0; k < samples_per_level; ++k) {
            const auto& seg = curve.segments[rng.uniform_int(
                0, static_cast<int>(curve.segments.size()) - 1)];
            const double t = rng.uniform();
            probes.push_back({seg.p0 + t * (seg.p1 - seg.p0), rng.uniform(0.02, 1.0), 0.0});
        }
        const auto out = measure_density_ratio(ifs, curve, probes);
        double mx = 0.0;
        for (const auto& s : out) mx = std::max(mx, s.ratio);
        maxima.push_back(mx);
        rep.rows.push_back({static_cast<double>(m), mx});
    }
    const auto [mn, mx] = std::minmax_element(maxima.begin(), maxima.end());
    const double spread = *mn > 0.0 ? *mx / *mn : std::numeric_limits<double>::infinity();
    rep.add_verdict(spread <= max_over_min_bound,
                    "max/min density ratio " + std::to_string(spread) + " <= " +
                        std::to_string(max_over_min_bound));
    return rep;
}

}  // namespace fraclab
