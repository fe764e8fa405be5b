#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lbfrac/errors.hpp"
#include "lbfrac/geometry.hpp"

namespace lbfrac {

struct MaterialParams {
    double mu = 1.0;  // shear modulus
    double rho = 1.0; // density
    double cs = 1.0;  // shear wave speed, sqrt(mu/rho)
};

inline MaterialParams make_material(double mu, double rho) {
    if (!(mu > 0.0) || !(rho > 0.0)) throw ConfigError("material: mu and rho must be positive");
    return {mu, rho, std::sqrt(mu / rho)};
}

// D2Q5 lattice velocities: 0 rest, 1 +x, 2 +y, 3 -x, 4 -y.
inline constexpr int kQ = 5;
inline constexpr int kDx[kQ] = {0, 1, 0, -1, 0};
inline constexpr int kDy[kQ] = {0, 0, 1, 0, -1};
inline constexpr int kOpp[kQ] = {0, 3, 4, 1, 2};

/// Discretization of the D2Q5 scheme. The lattice speed c = dh/dt exceeds the
/// shear wave speed by the factor kappa; lambda carries the cs^2 scaling that
/// makes the recovered wave speed equal cs for any kappa.
struct LatticeSpec {
    int nx = 0;
    int ny = 0;
    double dh = 0.0;
    double dt = 0.0;
    double c = 0.0;       // dh/dt
    double kappa = 0.0;   // c/cs
    double tau_bar = 1.0; // relaxation time in units of dt
    double lambda = 0.0;  // cs^2 / (dt*(tau_bar - 1/2))
    Vec2 origin{};        // position of site (0,0)
    bool periodic_x = false;
    bool periodic_y = false;

    Vec2 pos(int i, int j) const { return {origin.x + i * dh, origin.y + j * dh}; }
};

/// Default lattice-to-shear speed ratio. Stability of the interior update
/// requires kappa >= sqrt(2); 1.5 leaves margin and keeps dispersion small
/// (verified by the `calibrate` wave-speed experiment, see README).
inline constexpr double kDefaultKappa = 1.5;

inline LatticeSpec make_lattice_spec(int nx, int ny, double dh, const MaterialParams& mat,
                                     double kappa = kDefaultKappa, Vec2 origin = {},
                                     double tau_bar = 1.0) {
    if (nx < 1 || ny < 1) throw ConfigError("lattice: nx, ny must be positive");
    if (!(dh > 0.0)) throw ConfigError("lattice: dh must be positive");
    if (!(kappa >= 1.0)) throw ConfigError("lattice: kappa must be >= 1");
    if (!(tau_bar > 0.5)) throw ConfigError("lattice: tau_bar must exceed 1/2");
    LatticeSpec s;
    s.nx = nx;
    s.ny = ny;
    s.dh = dh;
    s.kappa = kappa;
    s.tau_bar = tau_bar;
    s.dt = dh / (kappa * mat.cs);
    s.c = dh / s.dt;
    s.lambda = mat.cs * mat.cs / (s.dt * (tau_bar - 0.5));
    s.origin = origin;
    return s;
}

/// Equilibrium distributions of the D2Q5 wave scheme:
///   f_eq^0 = wdot - 2*lambda*w/c^2,   f_eq^k = lambda*w/(2 c^2), k = 1..4,
/// so that the zeroth moment is conserved: sum_alpha f_eq^alpha = wdot.
inline std::array<double, kQ> compute_equilibrium(double w, double wdot, const LatticeSpec& spec) {
    const double a = spec.lambda * w / (spec.c * spec.c);
    return {wdot - 2.0 * a, 0.5 * a, 0.5 * a, 0.5 * a, 0.5 * a};
}

/// Particle velocity wdot = sum of distributions.
inline double macroscopic_velocity(const std::array<double, kQ>& f) {
    return f[0] + f[1] + f[2] + f[3] + f[4];
}

/// Euler update of the displacement.
inline double integrate_displacement(double w_prev, double wdot, double dt) {
    return w_prev + dt * wdot;
}

enum class SiteRole : std::uint8_t { interior, boundary, dead };

/// D2Q5 grid: distribution functions in read/write pairs, displacement and
/// particle velocity fields, and a severable link mask per site. One time
/// step uses f (read) and f_next (write); swap_buffers() flips them.
class Grid {
public:
    explicit Grid(const LatticeSpec& spec)
        : spec(spec),
          n(static_cast<std::size_t>(spec.nx) * spec.ny),
          f(kQ * n, 0.0),
          f_next(kQ * n, 0.0),
          feq(kQ * n, 0.0),
          w(n, 0.0),
          wdot(n, 0.0),
          links(n, 0),
          missing(n, 0),
          role(n, SiteRole::interior) {
        for (int j = 0; j < spec.ny; ++j)
            for (int i = 0; i < spec.nx; ++i) {
                std::uint8_t m = 0;
                for (int a = 1; a < kQ; ++a)
                    if (neighbor_raw(i, j, a) >= 0) m |= bit(a);
                links[idx(i, j)] = m;
            }
        refresh_missing_and_roles();
    }

    LatticeSpec spec;
    std::size_t n;
    std::vector<double> f, f_next, feq; // alpha-major: [alpha*n + site]
    std::vector<double> w, wdot;
    std::vector<std::uint8_t> links;   // bit(a) set: link toward neighbor a intact
    std::vector<std::uint8_t> missing; // bit(a) set: slot f^a not fed by streaming
    std::vector<SiteRole> role;

    static std::uint8_t bit(int alpha) { return static_cast<std::uint8_t>(1u << (alpha - 1)); }

    int idx(int i, int j) const { return j * spec.nx + i; }
    int ix(int s) const { return s % spec.nx; }
    int iy(int s) const { return s / spec.nx; }
    Vec2 pos(int s) const { return spec.pos(ix(s), iy(s)); }

    /// Neighbor site in direction alpha (1..4), or -1 outside the grid.
    int neighbor(int s, int alpha) const { return neighbor_raw(ix(s), iy(s), alpha); }

    bool link_intact(int s, int alpha) const { return links[s] & bit(alpha); }
    bool alive(int s) const { return role[s] != SiteRole::dead; }

    /// Severs the link s <-> neighbor(alpha) on both sides and updates the
    /// missing masks and roles of both endpoints.
    void sever_link(int s, int alpha) {
        const int nb = neighbor(s, alpha);
        links[s] &= ~bit(alpha);
        if (nb >= 0) links[nb] &= ~bit(kOpp[alpha]);
        update_site(s);
        if (nb >= 0) update_site(nb);
    }

    /// Removes a site from the domain: all links to it are severed.
    void mark_dead(int s) {
        for (int a = 1; a < kQ; ++a) {
            const int nb = neighbor(s, a);
            links[s] &= ~bit(a);
            if (nb >= 0) links[nb] &= ~bit(kOpp[a]);
        }
        role[s] = SiteRole::dead;
        missing[s] = 0;
        for (int a = 1; a < kQ; ++a) {
            const int nb = neighbor(s, a);
            if (nb >= 0) update_site(nb);
        }
    }

    int n_missing(int s) const { return std::popcount(missing[s]); }

    /// Checks links[a](p) == links[opp(a)](neighbor) for every live pair.
    bool link_mask_symmetric() const {
        for (std::size_t s = 0; s < n; ++s)
            for (int a = 1; a < kQ; ++a) {
                const int nb = neighbor(static_cast<int>(s), a);
                if (nb >= 0 && link_intact(static_cast<int>(s), a) != link_intact(nb, kOpp[a]))
                    return false;
            }
        return true;
    }

    void compute_feq_all() {
        const double c2 = spec.c * spec.c;
        const double lam = spec.lambda;
        for (std::size_t s = 0; s < n; ++s) {
            if (role[s] == SiteRole::dead) continue;
            const double a = lam * w[s] / c2;
            feq[s] = wdot[s] - 2.0 * a;
            const double fk = 0.5 * a;
            feq[n + s] = fk;
            feq[2 * n + s] = fk;
            feq[3 * n + s] = fk;
            feq[4 * n + s] = fk;
        }
    }

    /// One stream-collide update of every live site, writing f_next. Slots cut
    /// off by severed links stay flagged in `missing` for the boundary module.
    /// Safe to call over disjoint site ranges; the full range is the default.
    void stream_collide() { stream_collide_range(0, n); }

    void stream_collide_range(std::size_t begin, std::size_t end) {
        const double omega = 1.0 / spec.tau_bar;
        for (std::size_t s = begin; s < end; ++s) {
            if (role[s] == SiteRole::dead) continue;
            if (missing[s] && role[s] == SiteRole::interior)
                throw NumericalError("stream_collide: interior site " + std::to_string(s) +
                                     " has a missing distribution (misclassified boundary site)");
            f_next[s] = relax(s, 0, omega);
            for (int a = 1; a < kQ; ++a) {
                if (missing[s] & bit(a)) {
                    f_next[a * n + s] = 0.0; // placeholder; boundary module fills it
                    continue;
                }
                const int src = neighbor(static_cast<int>(s), kOpp[a]);
                if (src < 0)
                    throw NumericalError("stream_collide: intact link points outside the grid at site " +
                                         std::to_string(s));
                f_next[a * n + s] = relax(src, a, omega);
            }
        }
    }

    /// wdot := sum_alpha f_next, w += dt * wdot, for every live site.
    void integrate_all() {
        for (std::size_t s = 0; s < n; ++s) {
            if (role[s] == SiteRole::dead) continue;
            wdot[s] = f_next[s] + f_next[n + s] + f_next[2 * n + s] + f_next[3 * n + s] +
                      f_next[4 * n + s];
            w[s] = integrate_displacement(w[s], wdot[s], spec.dt);
        }
    }

    /// Post-step displacement of a fully streamed (interior) site, available
    /// before integrate_all() commits it.
    double projected_w(int s) const {
        const double sum = f_next[s] + f_next[n + s] + f_next[2 * n + s] + f_next[3 * n + s] +
                           f_next[4 * n + s];
        return w[s] + spec.dt * sum;
    }

    void swap_buffers() { f.swap(f_next); }

    /// Sets w, wdot from initial fields and every distribution to equilibrium.
    template <class WFn, class WdotFn>
    void initialize_fields(WFn&& w0, WdotFn&& wdot0) {
        for (std::size_t s = 0; s < n; ++s) {
            if (role[s] == SiteRole::dead) {
                w[s] = wdot[s] = 0.0;
                continue;
            }
            const Vec2 p = pos(static_cast<int>(s));
            w[s] = w0(p);
            wdot[s] = wdot0(p);
            const auto eq = compute_equilibrium(w[s], wdot[s], spec);
            for (int a = 0; a < kQ; ++a) f[a * n + s] = eq[a];
        }
    }

private:
    double relax(int src, int alpha, double omega) const {
        const double fv = f[alpha * n + src];
        return fv - omega * (fv - feq[alpha * n + src]);
    }

    int neighbor_raw(int i, int j, int alpha) const {
        int ni = i + kDx[alpha];
        int nj = j + kDy[alpha];
        if (spec.periodic_x) ni = (ni + spec.nx) % spec.nx;
        if (spec.periodic_y) nj = (nj + spec.ny) % spec.ny;
        if (ni < 0 || ni >= spec.nx || nj < 0 || nj >= spec.ny) return -1;
        return idx(ni, nj);
    }

    void update_site(int s) {
        if (role[s] == SiteRole::dead) return;
        std::uint8_t miss = 0;
        for (int a = 1; a < kQ; ++a)
            if (!link_intact(s, kOpp[a])) miss |= bit(a);
        missing[s] = miss;
        if (links[s] == 0)
            role[s] = SiteRole::dead; // fully disconnected
        else
            role[s] = miss ? SiteRole::boundary : SiteRole::interior;
    }

    void refresh_missing_and_roles() {
        for (std::size_t s = 0; s < n; ++s) update_site(static_cast<int>(s));
    }
};

} // namespace lbfrac
