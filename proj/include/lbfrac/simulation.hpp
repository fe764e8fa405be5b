#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lbfrac/boundary.hpp"
#include "lbfrac/errors.hpp"
#include "lbfrac/fracture.hpp"
#include "lbfrac/geometry.hpp"
#include "lbfrac/lattice.hpp"

namespace lbfrac {

/// Phases of one time step, in execution order. Hooks observe them for
/// instrumentation and loop-order tests.
enum class StepPhase {
    feq_computed,
    streamed,
    boundary_solved,
    reconstructed,
    integrated,
    crack_processed,
};

struct TipRecord {
    double K = 0.0;
    double v = 0.0;
    double da = 0.0; // cumulative extension
};

struct TimeSeriesRecord {
    double t = 0.0;
    TipRecord left, right;
};

/// Marks every site outside the outline dead, severs links crossing the
/// outline or the initial crack (exhaustive scan), and seeds each tip's
/// previous-boundary-pair from the last link the initial crack cut.
inline void setup_domain(Grid& g, const DomainOutline& outline, CrackPath* crack) {
    for (std::size_t s = 0; s < g.n; ++s)
        if (!outline.contains(g.pos(static_cast<int>(s)))) g.mark_dead(static_cast<int>(s));

    for (std::size_t s = 0; s < g.n; ++s) {
        if (!g.alive(static_cast<int>(s))) continue;
        for (const int a : {1, 2}) {
            if (!g.link_intact(static_cast<int>(s), a)) continue;
            const int nb = g.neighbor(static_cast<int>(s), a);
            if (nb < 0 || !g.alive(nb)) continue;
            for (const auto& e : outline.edges())
                if (segments_properly_cross(g.pos(static_cast<int>(s)), g.pos(nb), e.a, e.b)) {
                    g.sever_link(static_cast<int>(s), a);
                    break;
                }
        }
    }

    if (!crack) return;
    std::vector<int> cut_all;
    for (const Segment& seg : crack->segments()) {
        const auto cut = sever_links_full_scan(g, seg);
        cut_all.insert(cut_all.end(), cut.begin(), cut.end());
    }
    std::sort(cut_all.begin(), cut_all.end());
    cut_all.erase(std::unique(cut_all.begin(), cut_all.end()), cut_all.end());
    if (cut_all.empty())
        throw ConfigError("setup_domain: initial crack does not cross any lattice link");

    for (CrackTip& tip : crack->tips()) {
        // The last pair cut toward this tip: the severed-link sites that
        // reach farthest along the tip direction.
        double best = -std::numeric_limits<double>::infinity();
        std::vector<int> pair;
        for (const int s : cut_all) {
            for (int a = 1; a < kQ; ++a) {
                if (g.link_intact(s, a)) continue;
                const int nb = g.neighbor(s, a);
                if (nb < 0 || !g.alive(nb) || nb < s) continue;
                const Vec2 mid = 0.5 * (g.pos(s) + g.pos(nb));
                const double along = dot(mid, tip.dir);
                if (along > best + 1e-12 * g.spec.dh) {
                    best = along;
                    pair = {s, nb};
                }
            }
        }
        if (pair.empty())
            throw ConfigError("setup_domain: could not seed the previous boundary pair of a tip");
        std::sort(pair.begin(), pair.end());
        tip.b_prev = std::move(pair);
    }
}

/// Runs the LBM loop: equilibrium -> advance time -> stream-collide ->
/// boundary solve -> reconstruct missing distributions -> integrate ->
/// process dynamic crack. Fully deterministic; no RNG anywhere.
class Simulation {
public:
    Simulation(Grid grid, DomainOutline outline, std::optional<CrackPath> crack,
               std::optional<FractureCriterion> criterion, MaterialParams material,
               SifEvalConfig sif = {})
        : grid_(std::move(grid)),
          outline_(std::move(outline)),
          crack_(std::move(crack)),
          criterion_(std::move(criterion)),
          material_(material),
          sif_(sif) {
        setup_domain(grid_, outline_, crack_ ? &*crack_ : nullptr);
        bsys_.build(grid_, outline_, crack_ ? &*crack_ : nullptr, material_.mu);
    }

    using Hook = std::function<void(StepPhase, Simulation&)>;
    void set_hook(Hook h) { hook_ = std::move(h); }

    void step() {
        grid_.compute_feq_all();
        fire(StepPhase::feq_computed);

        t_ += grid_.spec.dt;
        grid_.stream_collide();
        fire(StepPhase::streamed);

        last_wb_ = bsys_.solve(t_, [this](int s) { return grid_.projected_w(s); });
        fire(StepPhase::boundary_solved);

        bsys_.reconstruct(grid_, last_wb_);
        fire(StepPhase::reconstructed);

        grid_.integrate_all();
        fire(StepPhase::integrated);
        grid_.swap_buffers();

        GrowthOutcome outcome{};
        if (crack_ && criterion_)
            outcome = crack_growth_step(grid_, *crack_, *criterion_, bsys_, outline_, material_,
                                        sif_);
        fire(StepPhase::crack_processed);

        ++step_no_;
        if (sample_stride > 0 && step_no_ % sample_stride == 0) record(outcome);
    }

    void run(double t_max) {
        while (t_ < t_max - 0.5 * grid_.spec.dt) step();
    }

    Grid& grid() { return grid_; }
    const Grid& grid() const { return grid_; }
    const DomainOutline& outline() const { return outline_; }
    const CrackPath* crack() const { return crack_ ? &*crack_ : nullptr; }
    CrackPath* crack() { return crack_ ? &*crack_ : nullptr; }
    BoundarySystem& boundary() { return bsys_; }
    const BoundarySystem& boundary() const { return bsys_; }
    const MaterialParams& material() const { return material_; }
    const SifEvalConfig& sif_config() const { return sif_; }
    const FractureCriterion* criterion() const { return criterion_ ? &*criterion_ : nullptr; }
    double time() const { return t_; }
    long step_count() const { return step_no_; }
    const Eigen::VectorXd& last_boundary_solution() const { return last_wb_; }

    int sample_stride = 1;
    std::vector<TimeSeriesRecord> series;

private:
    void fire(StepPhase p) {
        if (hook_) hook_(p, *this);
    }

    void record(const GrowthOutcome& outcome) {
        TimeSeriesRecord rec;
        rec.t = t_;
        if (crack_) {
            for (std::size_t k = 0; k < crack_->tips().size(); ++k) {
                const CrackTip& tip = crack_->tips()[k];
                const TipStepResult& res = outcome.tips[k];
                TipRecord& slot = tip.dir.x < 0.0 ? rec.left : rec.right;
                slot.K = res.K;
                slot.v = res.v;
                slot.da = tip.extension;
            }
        }
        series.push_back(rec);
    }

    Grid grid_;
    DomainOutline outline_;
    std::optional<CrackPath> crack_;
    std::optional<FractureCriterion> criterion_;
    MaterialParams material_;
    SifEvalConfig sif_;
    BoundarySystem bsys_;
    Hook hook_;
    Eigen::VectorXd last_wb_;
    double t_ = 0.0;
    long step_no_ = 0;
};

} // namespace lbfrac
