#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fraclab/config.hpp"
#include "fraclab/error.hpp"
#include "fraclab/report.hpp"

namespace fs = std::filesystem;
using namespace fraclab;

namespace {

constexpr const char* kVersion = "fraclab 1.0.0";

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

struct Stage {
    RunConfig cfg;
    RunManifest manifest;
    fs::path out;

    explicit Stage(const RunConfig& c) : cfg(c), out(c.out_dir) {
        manifest.tool_version = kVersion;
        manifest.config_echo = cfg.to_json_text();
        manifest.config_hash = fnv1a(manifest.config_echo);
    }

    void finish() { manifest.emit(out, "manifest.json", manifest.to_json()); }
};

std::string mesh_file_name(int level) { return "mesh_m" + std::to_string(level) + ".txt"; }

TaggedMesh require_mesh(const Stage& stage, int level) {
    const fs::path path = stage.out / mesh_file_name(level);
    std::ifstream is(path);
    if (!is)
        throw ConfigError("missing upstream artifact '" + path.string() +
                          "'; run the mesh stage first");
    return read_mesh(is);
}

TaggedMesh build_mesh(const RunConfig& cfg, int level) {
    const std::vector<Vec2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const auto dom = build_domain(square, cfg.make_boundary_spec(), cfg.make_ifs(), level);
    return triangulate(dom, cfg.h);
}

FemSystem assemble_for(const RunConfig& cfg, const TaggedMesh& mesh, int level) {
    const double weight = cfg.sigma_scaled ? sigma(cfg.make_ifs(), level) : 1.0;
    return assemble(mesh, cfg.robin_a, weight);
}

std::string poisson_csv(const FemSystem& sys, const DiscreteField& u) {
    std::string text = "x,y,u\n";
    char buf[120];
    for (int i = 0; i < sys.node_count(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", sys.mesh.nodes[i].x,
                      sys.mesh.nodes[i].y, u.values[i]);
        text += buf;
    }
    return text;
}

void run_geometry(Stage& stage) {
    Timer timer;
    const auto ifs = stage.cfg.make_ifs();
    const auto curve = generate_prefractal(ifs, stage.cfg.level);
    std::ostringstream os;
    write_curve(curve, ifs, os);
    stage.manifest.emit(stage.out, "curve_m" + std::to_string(stage.cfg.level) + ".txt",
                        os.str());
    stage.manifest.timings_seconds.emplace_back("geometry", timer.seconds());
}

void run_mesh(Stage& stage) {
    Timer timer;
    const auto mesh = build_mesh(stage.cfg, stage.cfg.level);
    std::ostringstream os;
    write_mesh(mesh, os);
    stage.manifest.emit(stage.out, mesh_file_name(stage.cfg.level), os.str());
    stage.manifest.timings_seconds.emplace_back("mesh", timer.seconds());
}

void run_eigs(Stage& stage) {
    Timer timer;
    const auto mesh = require_mesh(stage, stage.cfg.level);
    const auto sys = assemble_for(stage.cfg, mesh, stage.cfg.level);
    const auto basis = solve_eigen(sys, stage.cfg.eigen_count);
    std::string csv = "k,lambda\n";
    char buf[64];
    for (int k = 0; k < basis.eigenvalues.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%d,%.17g\n", k + 1, basis.eigenvalues[k]);
        csv += buf;
    }
    stage.manifest.emit(stage.out, "eigs.csv", csv);
    // Triplet exports for cross-checking the assembled forms externally.
    std::ostringstream ms, mm;
    write_matrix(sys.S, ms);
    write_matrix(sys.M, mm);
    stage.manifest.emit(stage.out, "matrix_S.txt", ms.str());
    stage.manifest.emit(stage.out, "matrix_M.txt", mm.str());
    stage.manifest.timings_seconds.emplace_back("eigs", timer.seconds());
}

void run_poisson(Stage& stage, bool standalone) {
    Timer timer;
    TaggedMesh mesh;
    if (standalone) {
        mesh = require_mesh(stage, stage.cfg.level);
    } else {
        mesh = build_mesh(stage.cfg, stage.cfg.level);
        std::ostringstream os;
        write_mesh(mesh, os);
        stage.manifest.emit(stage.out, mesh_file_name(stage.cfg.level), os.str());
    }
    const auto sys = assemble_for(stage.cfg, mesh, stage.cfg.level);
    const auto field = stage.cfg.make_test_field();
    const double amp = stage.cfg.amplitude;
    const auto u = solve_poisson(sys, [&](double x, double y) { return amp * field.f(x, y); });
    stage.manifest.emit(stage.out, "poisson.csv", poisson_csv(sys, u));
    stage.manifest.timings_seconds.emplace_back("poisson", timer.seconds());
}

std::pair<FemSystem, std::tuple<DiscreteField, DiscreteField, TimeForcing>> wave_setup(
    Stage& stage) {
    const auto mesh = require_mesh(stage, stage.cfg.level);
    FemSystem sys = assemble_for(stage.cfg, mesh, stage.cfg.level);
    const auto field = stage.cfg.make_test_field();
    const double amp = stage.cfg.amplitude;
    DiscreteField u0 =
        solve_poisson(sys, [&](double x, double y) { return amp * field.f(x, y); });
    DiscreteField u1{Eigen::VectorXd::Zero(sys.node_count())};
    TimeForcing f = TimeForcing::zero(sys.node_count());
    return {std::move(sys), {std::move(u0), std::move(u1), std::move(f)}};
}

void run_wave(Stage& stage) {
    Timer timer;
    auto [sys, data] = wave_setup(stage);
    auto& [u0, u1, f] = data;
    const WaveParams params{stage.cfg.c, stage.cfg.nu, stage.cfg.T, stage.cfg.dt};
    const auto traj = implicit_time_integrate(sys, params, u0, u1, f);
    std::ostringstream os;
    write_trajectory_csv(sys, params, traj, os);
    stage.manifest.emit(stage.out, "trajectory.csv", os.str());
    stage.manifest.timings_seconds.emplace_back("wave", timer.seconds());
}

void run_westervelt(Stage& stage) {
    Timer timer;
    auto [sys, data] = wave_setup(stage);
    auto& [u0, u1, f] = data;
    const WesterveltParams params = stage.cfg.make_physics();
    const auto constants = estimate_constants(sys, params, stage.cfg.trials, stage.cfg.seed);
    const auto [traj, rep] = picard_solve(sys, params, u0, u1, f, stage.cfg.picard_tol,
                                          stage.cfg.picard_max_iters, constants);
    std::ostringstream traj_os;
    write_trajectory_csv(sys, params.wave, traj, traj_os);
    stage.manifest.emit(stage.out, "trajectory.csv", traj_os.str());
    std::ostringstream rep_os;
    write_contraction_csv(rep, rep_os);
    stage.manifest.emit(stage.out, "contraction.csv", rep_os.str());
    stage.manifest.timings_seconds.emplace_back("westervelt", timer.seconds());
}

void emit_study_outputs(Stage& stage, const ConvergenceReport& rep,
                        std::span<const std::string> plot_columns) {
    stage.manifest.emit(stage.out, "study.csv", report_csv(rep));
    stage.manifest.emit(stage.out, "study_summary.txt", report_summary(rep));
    std::vector<PlotSeries> series;
    for (const auto& col : plot_columns) series.push_back(report_series(rep, col));
    stage.manifest.emit(stage.out, "study.svg", svg_plot(rep.study, series));
}

void run_study(Stage& stage) {
    Timer timer;
    const RunConfig& cfg = stage.cfg;
    if (cfg.study == "poisson") {
        run_poisson(stage, /*standalone=*/false);
        return;
    }
    if (cfg.study == "trace") {
        const auto rep =
            trace_convergence_study(cfg.make_ifs(), cfg.make_test_field(), cfg.level_max);
        const std::string cols[] = {"I_m", "err_vs_oracle"};
        emit_study_outputs(stage, rep, cols);
    } else if (cfg.study == "uniform-trace") {
        const TestField fields[] = {cfg.make_test_field()};
        const auto rep = uniform_trace_ratio(cfg.make_study(), fields);
        const std::string cols[] = {rep.columns[1]};
        emit_study_outputs(stage, rep, cols);
    } else if (cfg.study == "solution") {
        const auto on_level = [&](int level, const FemSystem& sys, const Trajectory& traj,
                                  const ContractionReport& picard) {
            std::ostringstream os;
            write_trajectory_csv(sys, cfg.make_physics().wave, traj, os);
            stage.manifest.emit(stage.out, "trajectory_m" + std::to_string(level) + ".csv",
                                os.str());
            std::ostringstream rep_os;
            write_contraction_csv(picard, rep_os);
            stage.manifest.emit(stage.out, "contraction_m" + std::to_string(level) + ".csv",
                                rep_os.str());
        };
        const auto rep = solution_convergence_study(cfg.make_study(), on_level);
        const std::string cols[] = {"e_m", "boundary_term"};
        emit_study_outputs(stage, rep, cols);
    } else if (cfg.study == "poincare") {
        const auto rep = poincare_uniformity_study(cfg.make_study());
        const std::string cols[] = {"poincare_constant"};
        emit_study_outputs(stage, rep, cols);
    } else if (cfg.study == "density") {
        const auto rep =
            density_uniformity_study(cfg.make_ifs(), cfg.level_max, 200, cfg.seed);
        const std::string cols[] = {"max_ratio"};
        emit_study_outputs(stage, rep, cols);
    }
    stage.manifest.timings_seconds.emplace_back("study", timer.seconds());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prefractal-boundary wave laboratory"};
    app.set_version_flag("--version", kVersion);

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    int threads_override = 0;
    app.add_option("--config", config_path, "JSON configuration file")->required();
    app.add_option("--out", out_override, "output directory (overrides the config)");
    auto* seed_opt = app.add_option("--seed", seed_override, "seed (overrides the config)");
    app.add_option("--threads", threads_override, "thread count (overrides the config)");

    app.require_subcommand(1);
    const char* names[] = {"run",     "geometry", "mesh",       "eigs",
                           "poisson", "wave",     "westervelt", "study"};
    for (const char* name : names) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        RunConfig cfg = RunConfig::from_file(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_opt->count() > 0) cfg.seed = seed_override;
        if (threads_override > 0) cfg.threads = threads_override;
        cfg.validate();

        Stage stage(cfg);
        const std::string sub = app.get_subcommands().front()->get_name();
        try {
            if (sub == "run" || sub == "study") run_study(stage);
            else if (sub == "geometry") run_geometry(stage);
            else if (sub == "mesh") run_mesh(stage);
            else if (sub == "eigs") run_eigs(stage);
            else if (sub == "poisson") run_poisson(stage, /*standalone=*/true);
            else if (sub == "wave") run_wave(stage);
            else if (sub == "westervelt") run_westervelt(stage);
        } catch (const SolverError& e) {
            // Keep the partial artifacts and record the failure in the manifest.
            stage.manifest.errors.push_back(e.what());
            stage.finish();
            throw;
        }
        stage.finish();
        std::cout << "wrote " << (fs::path(cfg.out_dir) / "manifest.json").string() << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
