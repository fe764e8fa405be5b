#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lbfrac/errors.hpp"
#include "lbfrac/geometry.hpp"
#include "lbfrac/lattice.hpp"

namespace lbfrac {

/// Bilinear interpolation stencil for one sample point: up to four corner
/// sites with weights summing to 1 (zero-weight corners are pruned).
struct StencilSample {
    std::array<int, 4> site{-1, -1, -1, -1};
    std::array<double, 4> wgt{0.0, 0.0, 0.0, 0.0};
    int count = 0;

    void add(int s, double w) {
        site[count] = s;
        wgt[count] = w;
        ++count;
    }
};

/// One boundary lattice point with its interpolation stencil: the closest
/// boundary point x_BC, two interior sample points at distances dh and 2*dh
/// from x_B along the inward normal, and the polynomial coordinates s
/// measured from x_BC.
struct BoundarySite {
    int site = -1;
    Vec2 xb{}, xbc{}, n_in{};
    double s_b = 0.0, s_i = 0.0, s_ii = 0.0;
    BcKind kind = BcKind::neumann;
    BcFn value;
    int feature_index = -1;
    bool on_crack = false;
    bool linear_only = false; // quadratic degraded near the crack tip
    StencilSample cell_i, cell_ii;
};

namespace detail {

inline std::optional<StencilSample> bilinear_cell(const Grid& g, const CrackPath* crack,
                                                  Vec2 pt) {
    const double u = (pt.x - g.spec.origin.x) / g.spec.dh;
    const double v = (pt.y - g.spec.origin.y) / g.spec.dh;
    const double snap = 1e-9;

    auto candidates = [snap](double c) {
        std::array<int, 2> out{0, 0};
        int cnt;
        const double r = std::round(c);
        if (std::abs(c - r) < snap) {
            out = {static_cast<int>(r) - 1, static_cast<int>(r)};
            cnt = 2;
        } else {
            out[0] = static_cast<int>(std::floor(c));
            cnt = 1;
        }
        return std::pair{out, cnt};
    };
    const auto [ic, icn] = candidates(u);
    const auto [jc, jcn] = candidates(v);

    for (int kj = 0; kj < jcn; ++kj)
        for (int ki = 0; ki < icn; ++ki) {
            const int ci = ic[ki], cj = jc[kj];
            double a = std::clamp(u - ci, 0.0, 1.0);
            double b = std::clamp(v - cj, 0.0, 1.0);
            const std::array<std::pair<int, int>, 4> corners{
                std::pair{ci, cj}, {ci + 1, cj}, {ci, cj + 1}, {ci + 1, cj + 1}};
            const std::array<double, 4> wgts{(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b};
            StencilSample cell;
            bool ok = true;
            for (int k = 0; k < 4 && ok; ++k) {
                if (wgts[k] <= 1e-12) continue;
                const auto [i, j] = corners[k];
                if (i < 0 || i >= g.spec.nx || j < 0 || j >= g.spec.ny) {
                    ok = false;
                    break;
                }
                const int s = g.idx(i, j);
                if (!g.alive(s) || (crack && crack->crosses(g.pos(s), pt))) {
                    ok = false;
                    break;
                }
                cell.add(s, wgts[k]);
            }
            if (ok && cell.count > 0) return cell;
        }
    return std::nullopt;
}

} // namespace detail

/// Builds the interpolation stencil of one boundary lattice point. The
/// quadratic variant needs both sample points inside the domain and on the
/// site's side of the crack; otherwise it degrades to the linear polynomial
/// through x_BC and x_I. Throws ConfigError when even x_I is unreachable.
inline BoundarySite build_stencil(const Grid& g, const DomainOutline& outline,
                                  const CrackPath* crack, int site) {
    BoundarySite bs;
    bs.site = site;
    bs.xb = g.pos(site);

    const ClosestBoundary ref = closest_boundary_point(outline, crack, bs.xb);
    if (!(ref.dist > 0.0))
        throw ConfigError("build_stencil: site " + std::to_string(site) +
                          " lies exactly on the boundary");
    bs.xbc = ref.point;
    bs.n_in = normalized(bs.xb - ref.point);
    bs.kind = ref.kind;
    bs.value = *ref.value;
    bs.feature_index = ref.feature_index;
    bs.on_crack = ref.on_crack;
    bs.s_b = ref.dist;

    const double dh = g.spec.dh;
    const Vec2 x_i = bs.xb + dh * bs.n_in;
    const Vec2 x_ii = bs.xb + 2.0 * dh * bs.n_in;
    bs.s_i = bs.s_b + dh;
    bs.s_ii = bs.s_b + 2.0 * dh;

    auto usable = [&](Vec2 pt) {
        return outline.contains(pt) && !(crack && crack->crosses(bs.xb, pt));
    };

    if (!usable(x_i))
        throw ConfigError("build_stencil: unresolvable stencil at site " + std::to_string(site));
    auto cell_i = detail::bilinear_cell(g, crack, x_i);
    if (!cell_i)
        throw ConfigError("build_stencil: no interpolation cell for x_I at site " +
                          std::to_string(site));
    bs.cell_i = *cell_i;

    if (usable(x_ii)) {
        if (auto cell_ii = detail::bilinear_cell(g, crack, x_ii)) {
            bs.cell_ii = *cell_ii;
            bs.linear_only = false;
            return bs;
        }
    }
    bs.linear_only = true;
    return bs;
}

namespace detail {

/// Polynomial evaluation coefficients: w_B = bc_coeff * (BC datum) +
/// c_i * w(x_I) + c_ii * w(x_II). For Neumann sites the datum is the normal
/// slope g = t*_z / mu.
struct PolyCoeffs {
    double bc = 0.0, c_i = 0.0, c_ii = 0.0;
};

inline PolyCoeffs poly_coeffs(const BoundarySite& bs) {
    const double sb = bs.s_b, si = bs.s_i, sii = bs.s_ii;
    PolyCoeffs p;
    if (bs.kind == BcKind::dirichlet) {
        if (bs.linear_only) {
            p.bc = (si - sb) / si;
            p.c_i = sb / si;
        } else {
            p.bc = (sb - si) * (sb - sii) / (si * sii);
            p.c_i = sb * (sb - sii) / (si * (si - sii));
            p.c_ii = sb * (sb - si) / (sii * (sii - si));
        }
    } else {
        if (bs.linear_only) {
            p.c_i = 1.0;
            p.bc = sb - si;
        } else {
            const double d = (sb * sb - si * si) / (sii * sii - si * si);
            p.c_i = 1.0 - d;
            p.c_ii = d;
            p.bc = (sb - si) - (sii - si) * d;
        }
    }
    return p;
}

} // namespace detail

/// Dense linear system S * w_B = R(t) for the unknown boundary displacements.
/// S depends only on geometry and discretization; R is reassembled each step
/// from the boundary-condition values and the interior displacement field.
class BoundarySystem {
public:
    BoundarySystem() = default;

    /// Full assembly over every boundary-role site of the grid.
    void build(const Grid& g, const DomainOutline& outline, const CrackPath* crack, double mu) {
        mu_ = mu;
        sites_.clear();
        row_of_.assign(g.n, -1);
        for (std::size_t s = 0; s < g.n; ++s)
            if (g.role[s] == SiteRole::boundary) {
                row_of_[s] = static_cast<int>(sites_.size());
                sites_.push_back(build_stencil(g, outline, crack, static_cast<int>(s)));
            }
        rebuild_matrix();
    }

    /// Incremental extension after crack growth. `touched` holds the sites
    /// whose link mask changed; stencils inside the refresh zone around the
    /// new segment are rebuilt, everything else is reused. The refreshed
    /// system matches a from-scratch assembly.
    void extend(const Grid& g, const DomainOutline& outline, const CrackPath* crack,
                const std::vector<int>& touched, std::optional<Segment> new_seg) {
        if (touched.empty()) return;
        std::vector<int> rebuilt;
        for (const int s : touched) {
            if (g.role[s] == SiteRole::dead) {
                // A site in the system lost all links; fall back to full assembly.
                build(g, outline, crack, mu_);
                return;
            }
            if (g.role[s] != SiteRole::boundary) continue;
            if (row_of_[s] < 0) {
                row_of_[s] = static_cast<int>(sites_.size());
                sites_.push_back(build_stencil(g, outline, crack, s));
            } else {
                sites_[row_of_[s]] = build_stencil(g, outline, crack, s);
            }
            rebuilt.push_back(s);
        }
        if (new_seg) {
            const double pad = 4.0 * g.spec.dh;
            const double xlo = std::min(new_seg->a.x, new_seg->b.x) - pad;
            const double xhi = std::max(new_seg->a.x, new_seg->b.x) + pad;
            const double ylo = std::min(new_seg->a.y, new_seg->b.y) - pad;
            const double yhi = std::max(new_seg->a.y, new_seg->b.y) + pad;
            for (auto& bs : sites_) {
                if (bs.xb.x < xlo || bs.xb.x > xhi || bs.xb.y < ylo || bs.xb.y > yhi) continue;
                if (std::find(rebuilt.begin(), rebuilt.end(), bs.site) != rebuilt.end()) continue;
                bs = build_stencil(g, outline, crack, bs.site);
            }
        }
        rebuild_matrix();
    }

    /// Right-hand side R(t): boundary-condition data plus the interior part of
    /// each site's polynomial evaluation. `field` returns the
    /// already-integrated displacement of an interior site at the new time.
    Eigen::VectorXd assemble_rhs(double t, const std::function<double(int)>& field) const {
        const auto nrow = static_cast<Eigen::Index>(sites_.size());
        Eigen::VectorXd r(nrow);
        for (Eigen::Index i = 0; i < nrow; ++i) {
            const BoundarySite& bs = sites_[i];
            const detail::PolyCoeffs p = detail::poly_coeffs(bs);
            double datum = bs.value(t, bs.xbc);
            if (bs.kind == BcKind::neumann) datum /= mu_;
            double acc = p.bc * datum;
            for (int k = 0; k < bs.cell_i.count; ++k) {
                const int s = bs.cell_i.site[k];
                if (row_of_[s] < 0) acc += p.c_i * bs.cell_i.wgt[k] * field(s);
            }
            for (int k = 0; k < bs.cell_ii.count; ++k) {
                const int s = bs.cell_ii.site[k];
                if (row_of_[s] < 0) acc += p.c_ii * bs.cell_ii.wgt[k] * field(s);
            }
            r(i) = acc;
        }
        return r;
    }

    /// Solves S * w_B = R(t) with the cached factorization.
    Eigen::VectorXd solve(double t, const std::function<double(int)>& field) const {
        const Eigen::VectorXd r = assemble_rhs(t, field);
        Eigen::VectorXd wb = lu_.solve(r);
        if (!wb.allFinite())
            throw NumericalError("boundary solve produced non-finite displacements");
        const double rnorm = (matrix_ * wb - r).norm();
        if (rnorm > 1e-8 * std::max(1.0, r.norm()))
            throw NumericalError("boundary solve residual too large: " + std::to_string(rnorm));
        return wb;
    }

    /// Fills the missing distributions of every boundary site in g.f_next from
    /// the solved displacements, so that sum_alpha f^alpha equals
    /// (w_new - w_old)/dt exactly. g.w still holds w_old when this runs.
    void reconstruct(Grid& g, const Eigen::VectorXd& wb) const {
        const std::size_t n = g.n;
        for (std::size_t i = 0; i < sites_.size(); ++i) {
            const int s = sites_[i].site;
            const std::uint8_t miss = g.missing[s];
            const int m = std::popcount(miss);
            if (m == 0)
                throw NumericalError("reconstruct: boundary site without missing distributions");
            const double target = (wb(static_cast<Eigen::Index>(i)) - g.w[s]) / g.spec.dt;
            double known = g.f_next[s];
            for (int a = 1; a < kQ; ++a)
                if (!(miss & Grid::bit(a))) known += g.f_next[a * n + s];
            const double val = (target - known) / m;
            for (int a = 1; a < kQ; ++a)
                if (miss & Grid::bit(a)) g.f_next[a * n + s] = val;
        }
    }

    const std::vector<BoundarySite>& sites() const { return sites_; }
    int row_of(int site) const { return row_of_[site]; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    std::size_t size() const { return sites_.size(); }

private:
    void rebuild_matrix() {
        const auto nrow = static_cast<Eigen::Index>(sites_.size());
        matrix_ = Eigen::MatrixXd::Identity(nrow, nrow);
        for (Eigen::Index i = 0; i < nrow; ++i) {
            const BoundarySite& bs = sites_[i];
            const detail::PolyCoeffs p = detail::poly_coeffs(bs);
            for (int k = 0; k < bs.cell_i.count; ++k) {
                const int s = bs.cell_i.site[k];
                if (row_of_[s] >= 0) matrix_(i, row_of_[s]) -= p.c_i * bs.cell_i.wgt[k];
            }
            for (int k = 0; k < bs.cell_ii.count; ++k) {
                const int s = bs.cell_ii.site[k];
                if (row_of_[s] >= 0) matrix_(i, row_of_[s]) -= p.c_ii * bs.cell_ii.wgt[k];
            }
        }
        lu_.compute(matrix_);
        if (nrow > 0) {
            const auto diag = lu_.matrixLU().diagonal();
            const double ref = diag.cwiseAbs().maxCoeff();
            std::vector<int> bad;
            for (Eigen::Index k = 0; k < nrow; ++k)
                if (std::abs(diag(k)) <= 1e-13 * std::max(ref, 1.0)) bad.push_back(static_cast<int>(k));
            if (!bad.empty()) {
                std::string rows;
                for (int b : bad) rows += " " + std::to_string(b);
                throw NumericalError("boundary matrix singular; degenerate pivot rows:" + rows);
            }
        }
    }

    double mu_ = 1.0;
    std::vector<BoundarySite> sites_;
    std::vector<int> row_of_;
    Eigen::MatrixXd matrix_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

} // namespace lbfrac
