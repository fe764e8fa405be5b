#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "lbfrac/analytic.hpp"
#include "lbfrac/errors.hpp"
#include "lbfrac/scenario.hpp"
#include "lbfrac/simulation.hpp"

namespace lbfrac {

struct StatsSummary {
    double mean = 0.0;
    double stddev = 0.0; // population standard deviation
    double median = 0.0;
    double d25 = 0.0; // median - 25th percentile
    double d75 = 0.0; // 75th percentile - median
    int n = 0;
};

/// Mean, population sigma, and median with percentile deltas. Percentiles use
/// linear interpolation between order statistics.
inline StatsSummary stats_summary(std::vector<double> xs) {
    if (xs.size() < 2) throw ConfigError("stats_summary: need at least 2 samples");
    StatsSummary st;
    st.n = static_cast<int>(xs.size());
    st.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / st.n;
    double acc = 0.0;
    for (const double x : xs) acc += (x - st.mean) * (x - st.mean);
    st.stddev = std::sqrt(acc / st.n);

    std::sort(xs.begin(), xs.end());
    auto quantile = [&xs](double q) {
        const double h = q * (xs.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, xs.size() - 1);
        return xs[lo] + (h - lo) * (xs[hi] - xs[lo]);
    };
    st.median = quantile(0.5);
    st.d25 = st.median - quantile(0.25);
    st.d75 = quantile(0.75) - st.median;
    return st;
}

using StepCallback = std::function<void(Simulation&)>;

/// Tabulated r_min/dh used for the steady-growth measurements, or 0 when the
/// speed is not one of the tabulated ones.
inline double table_r_min_dh(double v) {
    constexpr struct {
        double v, rmin;
    } rows[] = {{0.2, 1.50}, {0.4, 2.25}, {0.6, 4.00}, {0.8, 8.00}};
    for (const auto& r : rows)
        if (std::abs(v - r.v) < 1e-9) return r.rmin;
    return 0.0;
}

struct SteadyOverrides {
    std::optional<double> r_min_dh; // SIF evaluation distance in units of dh
    std::optional<double> dh;
    std::optional<double> kappa;
    std::optional<double> t0;
    std::optional<double> w0;
    std::optional<double> t_extra; // extra quasi-stationary time beyond t0 (default 15 L/cs)
};

struct SteadyResult {
    double v = 0.0;
    double k_theo = 0.0;
    double dh = 0.0, dt = 0.0, t0 = 0.0, t_f = 0.0, b = 0.0, r_min = 0.0;
    int nx = 0, ny = 0;
    StatsSummary stats;
    std::vector<double> samples;
    std::vector<TimeSeriesRecord> series;
};

/// Steady crack growth in a finite strip: height 2L with ramped Dirichlet
/// displacement +-w0/2 on top/bottom, traction-free sides and crack faces, and
/// a crack of initial length L/2 entering from the left edge at mid-height
/// that grows rightward at constant speed v*cs. Samples 300 SIF values over
/// the final quasi-stationary window of 15 L/cs.
inline SteadyResult experiment_steady_strip(double v, const SteadyOverrides& ov = {},
                                            const StepCallback& after_step = {}) {
    if (!(v > 0.0 && v < 1.0)) throw ConfigError("steady strip: need 0 < v < 1");
    const double L = 1.0;
    const double cs = 1.0; // mu = rho = 1
    const double w0 = ov.w0.value_or(0.2);
    const double dh = ov.dh.value_or(L / 16.0);
    const double t0 = ov.t0.value_or(5.0 * (1.0 + v) * L / cs);
    const double window = ov.t_extra.value_or(15.0) * L / cs;
    const double t_f = t0 + window;
    const double b_min = v * cs * t_f + 2.0 * L;
    const double b = (std::floor(b_min / dh) + 1.0) * dh;
    if (!(b > b_min))
        throw ConfigError("steady strip: strip length too short for the requested speed");

    ScenarioConfig cfg;
    cfg.material = {1.0, 1.0};
    cfg.lattice.dh = dh;
    cfg.lattice.kappa = ov.kappa.value_or(kDefaultKappa);
    cfg.domain.vertices = {{0.0, -L}, {b, -L}, {b, L}, {0.0, L}};
    cfg.domain.edges = {
        {BcKind::dirichlet, {BcValueDesc::Type::sin2_ramp, -0.5 * w0, t0}}, // bottom
        {BcKind::neumann, {BcValueDesc::Type::constant, 0.0, 0.0}},         // right
        {BcKind::dirichlet, {BcValueDesc::Type::sin2_ramp, +0.5 * w0, t0}}, // top
        {BcKind::neumann, {BcValueDesc::Type::constant, 0.0, 0.0}},         // left
    };
    cfg.crack = CrackDesc{{{0.0, 0.0}, {0.5 * L, 0.0}}, false, true};
    cfg.criterion.mode = CriterionDesc::Mode::steady;
    cfg.criterion.a_dot = v * cs;
    cfg.sif.r0 = 0.07 * L;
    const double r_min_dh = ov.r_min_dh.value_or(table_r_min_dh(v));
    if (r_min_dh > 0.0) cfg.sif.r_min = r_min_dh * dh;
    cfg.run.t_max = t_f;

    Simulation sim = build_simulation(cfg);
    while (sim.time() < t_f - 0.5 * sim.grid().spec.dt) {
        sim.step();
        if (after_step) after_step(sim);
    }

    SteadyResult res;
    res.v = v;
    res.k_theo = std::abs(mandal_sif(make_strip_problem(L, w0, 1.0, v)));
    res.dh = dh;
    res.dt = sim.grid().spec.dt;
    res.t0 = t0;
    res.t_f = t_f;
    res.b = b;
    res.r_min = cfg.sif.r_min.value_or(r_min_of_v(v, cfg.sif.r0));
    res.nx = sim.grid().spec.nx;
    res.ny = sim.grid().spec.ny;
    res.series = sim.series;

    std::vector<double> in_window;
    for (const auto& rec : sim.series)
        if (rec.t >= t_f - window - 1e-9) in_window.push_back(std::abs(rec.right.K));
    if (in_window.size() < 300)
        throw NumericalError("steady strip: fewer than 300 samples in the stationary window");
    res.samples.reserve(300);
    for (int k = 0; k < 300; ++k) {
        const auto i = static_cast<std::size_t>(
            std::floor(k * (in_window.size() - 1.0) / 299.0));
        res.samples.push_back(in_window[i]);
    }
    res.stats = stats_summary(res.samples);
    return res;
}

struct KcritOverrides {
    std::optional<double> w0;
    std::optional<double> dh;
    std::optional<double> t_max;
    std::optional<double> kappa;
    bool skip_startup_check = false;
};

struct KcritResult {
    double k_c = 0.0;
    double w0 = 0.0;
    double dh = 0.0, dt = 0.0;
    double t_load_end = 0.0;
    double first_arrival = 0.0; // travel time of the loading wave to the crack
    int nx = 0, ny = 0;
    long n_sites = 0;
    std::vector<TimeSeriesRecord> series;
};

/// K-criterion validation: a 3L x 8L rectangle, initial crack of length L
/// centered on the x axis 1L below the top edge. A half-sine displacement
/// pulse on the top edge excites a wave that drives both tips. K_C =
/// 0.006 mu sqrt(L), v_max = 0.85. The default loading amplitude keeps K
/// close to K_C during growth episodes; larger w0 drives the tips at v_max
/// until they halt near the side edges (see --w0).
inline KcritResult experiment_k_criterion(const KcritOverrides& ov = {},
                                          const StepCallback& after_step = {}) {
    const double L = 1.0;
    const double cs = 1.0; // mu = rho = 1
    const double mu = 1.0;
    const double w0 = ov.w0.value_or(0.01);
    const double dh = ov.dh.value_or(L / 64.0);
    const double t_max = ov.t_max.value_or(14.0 * L / cs);
    const double t_load = 8.0 * L / cs;
    const double k_c = 0.006 * mu * std::sqrt(L);

    ScenarioConfig cfg;
    cfg.material = {mu, 1.0};
    cfg.lattice.dh = dh;
    cfg.lattice.kappa = ov.kappa.value_or(kDefaultKappa);
    cfg.domain.vertices = {{-4.0 * L, -2.0 * L}, {4.0 * L, -2.0 * L}, {4.0 * L, L}, {-4.0 * L, L}};
    cfg.domain.edges = {
        {BcKind::dirichlet, {BcValueDesc::Type::constant, 0.0, 0.0}},      // bottom
        {BcKind::neumann, {BcValueDesc::Type::constant, 0.0, 0.0}},        // right
        {BcKind::dirichlet, {BcValueDesc::Type::half_sine, w0, t_load}},   // top
        {BcKind::neumann, {BcValueDesc::Type::constant, 0.0, 0.0}},        // left
    };
    cfg.crack = CrackDesc{{{-0.5 * L, 0.0}, {0.5 * L, 0.0}}, true, true};
    cfg.criterion.mode = CriterionDesc::Mode::k_criterion;
    cfg.criterion.K_C = k_c;
    cfg.criterion.v_max = 0.85;
    cfg.criterion.r0 = 0.07 * L;
    cfg.run.t_max = t_max;

    Simulation sim = build_simulation(cfg);
    KcritResult res;
    res.k_c = k_c;
    res.w0 = w0;
    res.dh = dh;
    res.dt = sim.grid().spec.dt;
    res.t_load_end = t_load;
    res.first_arrival = 1.0 * L / cs;
    res.nx = sim.grid().spec.nx;
    res.ny = sim.grid().spec.ny;
    res.n_sites = static_cast<long>(sim.grid().n);

    bool k_exceeded = false;
    bool startup_checked = false;
    while (sim.time() < t_max - 0.5 * sim.grid().spec.dt) {
        sim.step();
        if (!sim.series.empty()) {
            const auto& rec = sim.series.back();
            if (std::max(rec.left.K, rec.right.K) > k_c) k_exceeded = true;
        }
        if (!startup_checked && !ov.skip_startup_check && sim.time() >= 4.0 * L / cs) {
            startup_checked = true;
            if (!k_exceeded)
                throw NumericalError(
                    "k-criterion: the incident wave never drove K above K_C during startup; "
                    "raise w0 (--w0)");
        }
        if (after_step) after_step(sim);
    }
    res.series = sim.series;
    return res;
}

struct Calibration {
    double measured = 0.0;
    double expected = 0.0;
    double ratio = 0.0;
    double kappa = 0.0;
    double travel = 0.0; // distance covered between the two measurements
};

/// Propagates a resting Gaussian displacement pulse on a periodic strip and
/// measures the speed of the two split pulses over >= 200 dh of travel.
/// Verifies that the lattice reproduces cs for the configured kappa.
inline Calibration calibrate_wave_speed(double kappa = kDefaultKappa, double dh = 1.0 / 16.0,
                                        int nx = 1024) {
    const MaterialParams mat = make_material(1.0, 1.0);
    LatticeSpec spec = make_lattice_spec(nx, 4, dh, mat, kappa);
    spec.periodic_x = true;
    spec.periodic_y = true;
    Grid g(spec);

    const double x0 = (nx / 2) * dh;
    const double sigma = 6.0 * dh;
    g.initialize_fields(
        [&](Vec2 p) {
            const double d = p.x - x0;
            return std::exp(-0.5 * d * d / (sigma * sigma));
        },
        [](Vec2) { return 0.0; });

    auto run_steps = [&](int steps) {
        for (int s = 0; s < steps; ++s) {
            g.compute_feq_all();
            g.stream_collide();
            g.integrate_all();
            g.swap_buffers();
        }
    };
    auto peak_separation = [&]() {
        auto refine = [&](int i) {
            const double ym = g.w[g.idx(i - 1, 0)], y0 = g.w[g.idx(i, 0)],
                         yp = g.w[g.idx(i + 1, 0)];
            const double denom = ym - 2.0 * y0 + yp;
            const double off = denom != 0.0 ? 0.5 * (ym - yp) / denom : 0.0;
            return (i + off) * dh;
        };
        auto argmax = [&](int lo, int hi) {
            int best = lo;
            for (int i = lo; i <= hi; ++i)
                if (g.w[g.idx(i, 0)] > g.w[g.idx(best, 0)]) best = i;
            return best;
        };
        const int c = nx / 2;
        const int ir = argmax(c + 5, nx - 2);
        const int il = argmax(1, c - 5);
        const double amplitude = g.w[g.idx(ir, 0)];
        if (amplitude < 0.25)
            throw NumericalError("calibrate: pulse dispersed below the peak-detection threshold");
        return refine(ir) - refine(il);
    };

    const int steps_a = static_cast<int>(std::lround(40.0 * kappa));
    const int steps_b = static_cast<int>(std::lround(240.0 * kappa));
    run_steps(steps_a);
    const double sep_a = peak_separation();
    run_steps(steps_b);
    const double sep_b = peak_separation();

    Calibration cal;
    cal.kappa = kappa;
    cal.expected = mat.cs;
    cal.travel = 0.5 * (sep_b - sep_a);
    cal.measured = 0.5 * (sep_b - sep_a) / (steps_b * g.spec.dt);
    cal.ratio = cal.measured / cal.expected;
    return cal;
}

} // namespace lbfrac
