// Command-line front end: scenario runs, the two built-in experiments, and
// the wave-speed calibration check.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lbfrac/experiments.hpp"
#include "lbfrac/output.hpp"
#include "lbfrac/scenario.hpp"
#include "lbfrac/simulation.hpp"

namespace fs = std::filesystem;
using namespace lbfrac;

namespace {

struct SnapshotWriter {
    fs::path dir;
    int every = 0;
    int count = 0;

    void maybe_write(const Simulation& sim) {
        if (every <= 0) return;
        if (sim.step_count() % every != 0) return;
        char name[64];
        std::snprintf(name, sizeof(name), "snapshot_%06ld.vtk", sim.step_count());
        write_vtk_snapshot(dir / name, sim.grid(),
                           "w field at t=" + std::to_string(sim.time()));
        ++count;
    }
};

void print_stats(const char* label, const StatsSummary& st) {
    std::printf("%s: n=%d mean=%.6g sigma=%.6g median=%.6g -25%%=%.6g +75%%=%.6g\n", label, st.n,
                st.mean, st.stddev, st.median, st.d25, st.d75);
}

int run_config(const std::string& path, int snapshot_every) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ScenarioConfig cfg;
    try {
        cfg = j.get<ScenarioConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }

    Simulation sim = build_simulation(cfg);
    fs::create_directories(cfg.run.out_dir);
    SnapshotWriter snap{cfg.run.out_dir,
                        snapshot_every > 0 ? snapshot_every : cfg.run.snapshot_every};
    while (sim.time() < cfg.run.t_max - 0.5 * sim.grid().spec.dt) {
        sim.step();
        snap.maybe_write(sim);
    }
    const fs::path csv = fs::path(cfg.run.out_dir) / cfg.run.csv;
    write_csv(csv, sim.series);
    std::printf("steps=%ld sites=%zu boundary=%zu csv=%s\n", sim.step_count(), sim.grid().n,
                sim.boundary().size(), csv.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lbfrac - lattice Boltzmann dynamic mode-III fracture"};
    app.require_subcommand(1);
    int snapshot_every = 0;
    app.add_option("--snapshot-every", snapshot_every,
                   "write a VTK displacement snapshot every N steps");

    std::string config_path;
    auto* cmd_run = app.add_subcommand("run", "run a scenario from a JSON config");
    cmd_run->add_option("config", config_path, "scenario config (JSON)")->required();

    double v = 0.0;
    SteadyOverrides sov;
    double rmin_dh = 0.0, sdh = 0.0;
    std::string out_dir = "out";
    auto* cmd_steady = app.add_subcommand("steady", "steady crack growth in a strip, SIF statistics vs. the analytic value");
    cmd_steady->add_option("--v", v, "relative crack speed in (0,1)")->required();
    cmd_steady->add_option("--rmin", rmin_dh, "SIF evaluation distance r_min in units of dh");
    cmd_steady->add_option("--dh", sdh, "lattice spacing (default L/16)");
    cmd_steady->add_option("--out", out_dir, "output directory");

    KcritOverrides kov;
    double kw0 = 0.0, kdh = 0.0, ktmax = 0.0;
    std::string kout_dir = "out";
    auto* cmd_kcrit = app.add_subcommand("kcrit", "K-criterion crack growth experiment");
    cmd_kcrit->add_option("--w0", kw0, "loading amplitude of the top edge");
    cmd_kcrit->add_option("--dh", kdh, "lattice spacing (default L/64)");
    cmd_kcrit->add_option("--tmax", ktmax, "simulated duration (default 14 L/cs)");
    cmd_kcrit->add_option("--out", kout_dir, "output directory");

    double ckappa = kDefaultKappa;
    auto* cmd_cal = app.add_subcommand("calibrate", "measure the recovered wave speed");
    cmd_cal->add_option("--kappa", ckappa, "lattice-to-shear speed ratio");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_run) return run_config(config_path, snapshot_every);

        if (*cmd_steady) {
            if (rmin_dh > 0.0) sov.r_min_dh = rmin_dh;
            if (sdh > 0.0) sov.dh = sdh;
            fs::create_directories(out_dir);
            SnapshotWriter snap{out_dir, snapshot_every};
            const SteadyResult res = experiment_steady_strip(
                v, sov, [&snap](Simulation& sim) { snap.maybe_write(sim); });
            char name[64];
            std::snprintf(name, sizeof(name), "steady_v%.4g.csv", v);
            write_csv(fs::path(out_dir) / name, res.series);
            std::printf("v=%.4g K_theo=%.6g r_min/dh=%.4g grid=%dx%d b=%.6g t_f=%.6g\n", res.v,
                        res.k_theo, res.r_min / res.dh, res.nx, res.ny, res.b, res.t_f);
            print_stats("K samples", res.stats);
            std::printf("median/K_theo=%.6g\n", res.stats.median / res.k_theo);
            return 0;
        }

        if (*cmd_kcrit) {
            if (kw0 > 0.0) kov.w0 = kw0;
            if (kdh > 0.0) kov.dh = kdh;
            if (ktmax > 0.0) kov.t_max = ktmax;
            fs::create_directories(kout_dir);
            SnapshotWriter snap{kout_dir, snapshot_every};
            const KcritResult res = experiment_k_criterion(
                kov, [&snap](Simulation& sim) { snap.maybe_write(sim); });
            write_csv(fs::path(kout_dir) / "kcrit.csv", res.series);
            double da_l = 0.0, da_r = 0.0;
            if (!res.series.empty()) {
                da_l = res.series.back().left.da;
                da_r = res.series.back().right.da;
            }
            std::printf("sites=%ld grid=%dx%d K_C=%.6g w0=%.4g da_left=%.6g da_right=%.6g\n",
                        res.n_sites, res.nx, res.ny, res.k_c, res.w0, da_l, da_r);
            return 0;
        }

        if (*cmd_cal) {
            const Calibration cal = calibrate_wave_speed(ckappa);
            std::printf("kappa=%.6g measured=%.8g expected=%.8g ratio=%.8g travel=%.4g\n",
                        cal.kappa, cal.measured, cal.expected, cal.ratio, cal.travel);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
