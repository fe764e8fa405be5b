#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include "lbfrac/boundary.hpp"
#include "lbfrac/errors.hpp"
#include "lbfrac/geometry.hpp"
#include "lbfrac/lattice.hpp"

namespace lbfrac {

/// Prescribed growth at constant tip speed a_dot < cs.
struct SteadyGrowth {
    double a_dot = 0.0;
};

/// SIF-based criterion: grow when K exceeds k_c, with the regularized speed
/// v = v_max * tanh(sqrt((K/k_c)^4 - 1)).
struct KCriterion {
    double k_c = 0.0;
    double v_max = 0.0;
    double r0 = 0.0; // r_min at v = 0
};

using FractureCriterion = std::variant<SteadyGrowth, KCriterion>;

/// SIF measurement controls. r_min defaults to r0/(1-v); steady-growth runs
/// typically override it with the tabulated per-velocity values.
struct SifEvalConfig {
    double r0 = 0.0;
    std::optional<double> r_min_override;
};

/// Minimum SIF evaluation distance r_min = r0 / (1 - v).
inline double r_min_of_v(double v, double r0) {
    if (!(v >= 0.0 && v < 1.0)) throw ConfigError("r_min_of_v: need 0 <= v < 1");
    return r0 / (1.0 - v);
}

/// Regularized crack speed: 0 for K <= k_c, saturating at v_max.
inline double crack_speed_of_k(double K, double k_c, double v_max) {
    if (!(k_c > 0.0)) throw ConfigError("crack_speed_of_k: k_c must be positive");
    if (K <= k_c) return 0.0;
    const double ratio = K / k_c;
    const double arg = ratio * ratio * ratio * ratio - 1.0;
    return std::min(v_max, v_max * std::tanh(std::sqrt(arg)));
}

/// K = delta * (mu/4) * sqrt(2*pi/r) with delta = |w_up - w_down|.
inline double evaluate_sif(double w_up, double w_down, double r, double mu) {
    const double delta = std::abs(w_up - w_down);
    return delta * 0.25 * mu * std::sqrt(2.0 * std::numbers::pi / r);
}

struct EvalPair {
    int up = -1;
    int down = -1;
    double r = 0.0; // along-crack distance from the tip
};

/// Picks the site pair straddling the crack whose along-crack distance to the
/// tip lies in [r_min, r_min + dh]; the smallest admissible r wins. Returns
/// nothing when the severed crack portion behind the tip is too short.
inline std::optional<EvalPair> select_evaluation_pair(const Grid& g, const CrackTip& tip,
                                                      double r_min) {
    const Vec2 d = tip.dir;
    const double dh = g.spec.dh;
    const double eps = 1e-9 * dh;

    const Vec2 c0 = tip.pos - r_min * d;
    const Vec2 c1 = tip.pos - (r_min + dh) * d;
    const double xlo = std::min(c0.x, c1.x) - 1.2 * dh, xhi = std::max(c0.x, c1.x) + 1.2 * dh;
    const double ylo = std::min(c0.y, c1.y) - 1.2 * dh, yhi = std::max(c0.y, c1.y) + 1.2 * dh;
    const int ilo = std::max(0, static_cast<int>(std::floor((xlo - g.spec.origin.x) / dh)));
    const int ihi = std::min(g.spec.nx - 1, static_cast<int>(std::ceil((xhi - g.spec.origin.x) / dh)));
    const int jlo = std::max(0, static_cast<int>(std::floor((ylo - g.spec.origin.y) / dh)));
    const int jhi = std::min(g.spec.ny - 1, static_cast<int>(std::ceil((yhi - g.spec.origin.y) / dh)));

    std::optional<EvalPair> best;
    for (int j = jlo; j <= jhi; ++j)
        for (int i = ilo; i <= ihi; ++i) {
            const int s = g.idx(i, j);
            if (!g.alive(s)) continue;
            const Vec2 ps = g.pos(s);
            if (cross(d, ps - tip.pos) <= 0.0) continue; // upper-side sites only
            for (int a = 1; a < kQ; ++a) {
                if (g.link_intact(s, a)) continue;
                const int nb = g.neighbor(s, a);
                if (nb < 0 || !g.alive(nb)) continue;
                const Vec2 pn = g.pos(nb);
                if (cross(d, pn - tip.pos) >= 0.0) continue; // partner below the crack
                const Vec2 mid = 0.5 * (ps + pn);
                const double r = dot(tip.pos - mid, d);
                if (r < r_min - eps || r > r_min + dh + eps) continue;
                if (!best || r < best->r - eps ||
                    (std::abs(r - best->r) <= eps && s < best->up))
                    best = EvalPair{s, nb, r};
            }
        }
    return best;
}

/// Severs every intact link crossed by `seg`, searching outward from the
/// neighbors of the previous boundary pair (localized BFS). Returns the
/// sorted set of sites adjacent to newly severed links.
inline std::vector<int> sever_links(Grid& g, const Segment& seg, const std::vector<int>& b_prev) {
    std::deque<int> queue;
    std::vector<char> visited(g.n, 0), queued(g.n, 0);
    auto enqueue_neighbors_of = [&](int s) {
        for (int a = 1; a < kQ; ++a) {
            if (!g.link_intact(s, a)) continue;
            const int nb = g.neighbor(s, a);
            if (nb >= 0 && !visited[nb] && !queued[nb]) {
                queue.push_back(nb);
                queued[nb] = 1;
            }
        }
    };
    for (const int s : b_prev) enqueue_neighbors_of(s);

    std::vector<int> found;
    while (!queue.empty()) {
        const int p = queue.front();
        queue.pop_front();
        queued[p] = 0;
        if (visited[p]) continue;
        visited[p] = 1;
        for (int a = 1; a < kQ; ++a) {
            if (!g.link_intact(p, a)) continue;
            const int nb = g.neighbor(p, a);
            if (nb < 0) continue;
            if (segment_intersects_link(seg, g.pos(p), g.pos(nb))) {
                g.sever_link(p, a);
                found.push_back(p);
                found.push_back(nb);
                enqueue_neighbors_of(nb);
            }
        }
    }
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end()), found.end());
    return found;
}

/// Exhaustive variant used during scenario setup to cut the initial crack
/// (needs no seed). Checks every link of the lattice once.
inline std::vector<int> sever_links_full_scan(Grid& g, const Segment& seg) {
    std::vector<int> found;
    for (std::size_t s = 0; s < g.n; ++s) {
        if (!g.alive(static_cast<int>(s))) continue;
        for (const int a : {1, 2}) { // +x and +y cover each link once
            if (!g.link_intact(static_cast<int>(s), a)) continue;
            const int nb = g.neighbor(static_cast<int>(s), a);
            if (nb < 0) continue;
            if (segment_intersects_link(seg, g.pos(static_cast<int>(s)), g.pos(nb))) {
                g.sever_link(static_cast<int>(s), a);
                found.push_back(static_cast<int>(s));
                found.push_back(nb);
            }
        }
    }
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end()), found.end());
    return found;
}

struct TipStepResult {
    double K = 0.0;
    double v = 0.0;      // relative speed applied this step
    double da = 0.0;     // extension applied this step
    double r_used = 0.0; // 0 when no evaluation pair qualified
    int up = -1, down = -1;
    bool grew = false;
    bool just_halted = false;
};

struct GrowthOutcome {
    std::array<TipStepResult, 2> tips{};
    int n_tips = 0;
    bool geometry_changed = false;
};

/// End-of-step crack processing: evaluates the SIF per tip, applies the
/// growth criterion, advances growing tips, severs crossed links and extends
/// the boundary system with the new boundary sites. Tips are processed in
/// stored order (left before right).
inline GrowthOutcome crack_growth_step(Grid& g, CrackPath& crack, const FractureCriterion& crit,
                                       BoundarySystem& bsys, const DomainOutline& outline,
                                       const MaterialParams& mat, const SifEvalConfig& sif) {
    GrowthOutcome out;
    out.n_tips = static_cast<int>(crack.tips().size());
    for (std::size_t k = 0; k < crack.tips().size(); ++k) {
        CrackTip& tip = crack.tips()[k];
        TipStepResult& res = out.tips[k];

        double r_min;
        if (sif.r_min_override) {
            r_min = *sif.r_min_override;
        } else if (const auto* steady = std::get_if<SteadyGrowth>(&crit)) {
            r_min = r_min_of_v(steady->a_dot / mat.cs, sif.r0);
        } else {
            const auto& kc = std::get<KCriterion>(crit);
            r_min = r_min_of_v(tip.last_speed, kc.r0 > 0.0 ? kc.r0 : sif.r0);
        }

        if (const auto pair = select_evaluation_pair(g, tip, r_min)) {
            res.K = evaluate_sif(g.w[pair->up], g.w[pair->down], pair->r, mat.mu);
            res.r_used = pair->r;
            res.up = pair->up;
            res.down = pair->down;
        }

        double v = 0.0;
        if (const auto* steady = std::get_if<SteadyGrowth>(&crit)) {
            v = steady->a_dot / mat.cs;
        } else {
            const auto& kc = std::get<KCriterion>(crit);
            v = crack_speed_of_k(res.K, kc.k_c, kc.v_max);
        }

        if (v > 0.0 && !tip.halted) {
            const double da = v * mat.cs * g.spec.dt;
            const Vec2 next = tip.pos + da * tip.dir;
            if (outline.distance(next) < 2.0 * g.spec.dh) {
                tip.halted = true;
                res.just_halted = true;
                tip.last_speed = 0.0;
                continue;
            }
            const Segment grown = crack.extend_tip(k, da);
            tip.last_speed = v;
            res.v = v;
            res.da = da;
            res.grew = true;
            const std::vector<int> cut = sever_links(g, grown, tip.b_prev);
            if (!cut.empty()) {
                tip.b_prev = cut;
                bsys.extend(g, outline, &crack, cut, grown);
                out.geometry_changed = true;
            }
        } else if (std::holds_alternative<KCriterion>(crit)) {
            tip.last_speed = 0.0;
        }
    }
    return out;
}

} // namespace lbfrac
