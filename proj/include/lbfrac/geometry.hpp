#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lbfrac/errors.hpp"

namespace lbfrac {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    bool operator==(const Vec2&) const = default;
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 normalized(Vec2 a) {
    const double n = norm(a);
    return {a.x / n, a.y / n};
}
/// Rotates v by +90 degrees (counterclockwise).
inline Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

struct Segment {
    Vec2 a;
    Vec2 b;

    double length() const { return norm(b - a); }
    Vec2 direction() const { return normalized(b - a); }
};

/// Closest point on the closed segment [a,b] to x.
inline Vec2 closest_point_on_segment(const Segment& s, Vec2 x) {
    const Vec2 d = s.b - s.a;
    const double len2 = dot(d, d);
    if (len2 == 0.0) return s.a;
    double t = dot(x - s.a, d) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return s.a + t * d;
}

/// Twice the signed area of triangle (a,b,c); > 0 when c lies left of a->b.
inline double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

namespace detail {

// Snaps an orientation value to zero below a relative tolerance of the two
// vector magnitudes entering the cross product.
inline double snap_orient(Vec2 a, Vec2 b, Vec2 c, double rel_eps = 1e-12) {
    const double v = orient(a, b, c);
    const double scale = norm(b - a) * std::max(norm(c - a), norm(c - b));
    return std::abs(v) <= rel_eps * scale ? 0.0 : v;
}

inline bool strictly_inside_span(Vec2 p, Vec2 q, Vec2 x, double rel_eps = 1e-12) {
    // x assumed on line(p,q); checks p < x < q along the segment axis.
    const Vec2 d = q - p;
    const double len2 = dot(d, d);
    const double t = dot(x - p, d) / len2;
    return t > rel_eps && t < 1.0 - rel_eps;
}

} // namespace detail

/// True iff the open lattice link (p,q) is crossed by the crack segment `seg`.
/// An endpoint of `seg` lying exactly on the open link counts as a crossing;
/// an intersection exactly at p or q (a lattice site) does not. Collinear
/// overlap of crack and link is a setup error (crack on a lattice line).
inline bool segment_intersects_link(const Segment& seg, Vec2 p, Vec2 q) {
    const double d1 = detail::snap_orient(seg.a, seg.b, p);
    const double d2 = detail::snap_orient(seg.a, seg.b, q);
    const double d3 = detail::snap_orient(p, q, seg.a);
    const double d4 = detail::snap_orient(p, q, seg.b);

    if (d1 == 0.0 && d2 == 0.0) {
        // Link collinear with the crack segment: overlap is degenerate.
        const Vec2 d = q - p;
        const double len2 = dot(d, d);
        const double t0 = dot(seg.a - p, d) / len2;
        const double t1 = dot(seg.b - p, d) / len2;
        const double lo = std::min(t0, t1), hi = std::max(t0, t1);
        if (hi > 1e-12 && lo < 1.0 - 1e-12)
            throw ConfigError("segment_intersects_link: crack segment collinear with a lattice link");
        return false;
    }

    if (d1 * d2 < 0.0 && d3 * d4 < 0.0) return true; // proper crossing

    // Crack endpoint exactly on the open link.
    if (d3 == 0.0 && detail::strictly_inside_span(p, q, seg.a)) return true;
    if (d4 == 0.0 && detail::strictly_inside_span(p, q, seg.b)) return true;

    return false;
}

/// True iff segments (a1,b1) and (a2,b2) cross at points interior to both.
inline bool segments_properly_cross(Vec2 a1, Vec2 b1, Vec2 a2, Vec2 b2) {
    const double d1 = detail::snap_orient(a1, b1, a2);
    const double d2 = detail::snap_orient(a1, b1, b2);
    const double d3 = detail::snap_orient(a2, b2, a1);
    const double d4 = detail::snap_orient(a2, b2, b1);
    return d1 * d2 < 0.0 && d3 * d4 < 0.0;
}

struct PolarCoords {
    double r = 0.0;
    double phi = 0.0; // in (-pi, pi], measured from the tip direction
};

/// Polar coordinates of x about a crack tip with unit growth direction `dir`.
/// phi > 0 on the upper crack face (left of `dir`); the faces behind the tip
/// map to phi = +/- pi.
inline PolarCoords polar_about_tip(Vec2 tip, Vec2 dir, Vec2 x) {
    const Vec2 v = x - tip;
    return {norm(v), std::atan2(cross(dir, v), dot(dir, v))};
}

enum class BcKind { dirichlet, neumann };

/// Boundary datum as a function of time and position: prescribed displacement
/// w* for Dirichlet edges, out-of-plane traction t*_z for Neumann edges.
using BcFn = std::function<double(double t, Vec2 x)>;

inline BcFn constant_bc(double value) {
    return [value](double, Vec2) { return value; };
}

struct OutlineEdge {
    Vec2 a;
    Vec2 b;
    BcKind kind = BcKind::neumann;
    BcFn value = constant_bc(0.0);

    /// Inward normal assuming counterclockwise vertex order.
    Vec2 inward_normal() const { return normalized(perp(b - a)); }
};

/// Simple closed polygon with boundary conditions attached per edge.
/// Vertices must run counterclockwise so that the interior lies left of each
/// edge.
class DomainOutline {
public:
    DomainOutline() = default;
    explicit DomainOutline(std::vector<OutlineEdge> edges) : edges_(std::move(edges)) {}

    static DomainOutline polygon(const std::vector<Vec2>& vertices,
                                 const std::vector<std::pair<BcKind, BcFn>>& bcs) {
        if (vertices.size() < 3 || bcs.size() != vertices.size())
            throw ConfigError("DomainOutline: need >=3 vertices and one BC per edge");
        std::vector<OutlineEdge> edges;
        edges.reserve(vertices.size());
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            const Vec2 a = vertices[i];
            const Vec2 b = vertices[(i + 1) % vertices.size()];
            edges.push_back({a, b, bcs[i].first, bcs[i].second});
        }
        return DomainOutline(std::move(edges));
    }

    const std::vector<OutlineEdge>& edges() const { return edges_; }

    bool contains(Vec2 x) const {
        // Even-odd rule with a horizontal ray toward +x.
        bool inside = false;
        for (const auto& e : edges_) {
            const Vec2 a = e.a, b = e.b;
            if ((a.y > x.y) != (b.y > x.y)) {
                const double xi = a.x + (x.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if (x.x < xi) inside = !inside;
            }
        }
        return inside;
    }

    /// Unsigned distance from x to the nearest outline edge.
    double distance(Vec2 x) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& e : edges_)
            best = std::min(best, norm(x - closest_point_on_segment({e.a, e.b}, x)));
        return best;
    }

    struct BBox {
        Vec2 min, max;
    };
    BBox bbox() const {
        BBox b{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
               {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
        for (const auto& e : edges_) {
            b.min.x = std::min({b.min.x, e.a.x, e.b.x});
            b.min.y = std::min({b.min.y, e.a.y, e.b.y});
            b.max.x = std::max({b.max.x, e.a.x, e.b.x});
            b.max.y = std::max({b.max.y, e.a.y, e.b.y});
        }
        return b;
    }

private:
    std::vector<OutlineEdge> edges_;
};

struct CrackTip {
    Vec2 pos;
    Vec2 dir;                  // unit growth direction
    double extension = 0.0;    // accumulated extension
    double last_speed = 0.0;   // relative speed v of the most recent step
    bool halted = false;
    std::vector<int> b_prev;   // last pair of boundary sites created by this tip
};

/// Straight crack polyline with one or two active tips. Tips are stored
/// front-first so two-tip cracks process left before right.
class CrackPath {
public:
    CrackPath() = default;

    CrackPath(std::vector<Vec2> vertices, bool tip_at_front, bool tip_at_back,
              BcFn face_traction = constant_bc(0.0))
        : verts_(std::move(vertices)),
          tip_front_(tip_at_front),
          tip_back_(tip_at_back),
          face_traction_(std::move(face_traction)) {
        if (verts_.size() < 2) throw ConfigError("CrackPath: need at least 2 vertices");
        if (!tip_front_ && !tip_back_) throw ConfigError("CrackPath: need at least one tip");
        if (tip_front_) {
            CrackTip t;
            t.pos = verts_.front();
            t.dir = normalized(verts_.front() - verts_[1]);
            tips_.push_back(t);
        }
        if (tip_back_) {
            CrackTip t;
            t.pos = verts_.back();
            t.dir = normalized(verts_.back() - verts_[verts_.size() - 2]);
            tips_.push_back(t);
        }
    }

    bool empty() const { return verts_.size() < 2; }
    const std::vector<Vec2>& vertices() const { return verts_; }
    std::vector<CrackTip>& tips() { return tips_; }
    const std::vector<CrackTip>& tips() const { return tips_; }
    const BcFn& face_traction() const { return face_traction_; }

    std::vector<Segment> segments() const {
        std::vector<Segment> out;
        out.reserve(verts_.size() - 1);
        for (std::size_t i = 0; i + 1 < verts_.size(); ++i) out.push_back({verts_[i], verts_[i + 1]});
        return out;
    }

    /// Moves tip `k` forward by `da` and returns the new crack segment.
    Segment extend_tip(std::size_t k, double da) {
        CrackTip& tip = tips_.at(k);
        const Vec2 from = tip.pos;
        const Vec2 to = from + da * tip.dir;
        const bool front = tip_front_ && k == 0;
        if (front) {
            if (collinear_with_end(verts_[0], verts_[1], to))
                verts_.front() = to;
            else
                verts_.insert(verts_.begin(), to);
        } else {
            const std::size_t n = verts_.size();
            if (collinear_with_end(verts_[n - 1], verts_[n - 2], to))
                verts_.back() = to;
            else
                verts_.push_back(to);
        }
        tip.pos = to;
        tip.extension += da;
        return {from, to};
    }

    bool crosses(Vec2 a, Vec2 b) const {
        for (std::size_t i = 0; i + 1 < verts_.size(); ++i)
            if (segments_properly_cross(a, b, verts_[i], verts_[i + 1])) return true;
        return false;
    }

private:
    static bool collinear_with_end(Vec2 end, Vec2 prev, Vec2 to) {
        return std::abs(detail::snap_orient(prev, end, to)) == 0.0;
    }

    std::vector<Vec2> verts_;
    bool tip_front_ = false;
    bool tip_back_ = false;
    std::vector<CrackTip> tips_;
    BcFn face_traction_ = constant_bc(0.0);
};

/// Result of a closest-boundary query: the foot point, the owning feature's
/// boundary condition, and the inward normal pointing back toward x.
struct ClosestBoundary {
    Vec2 point;
    Vec2 inward_normal;
    BcKind kind = BcKind::neumann;
    const BcFn* value = nullptr;
    int feature_index = -1; // outline edges first, then crack segments
    bool on_crack = false;
    double dist = std::numeric_limits<double>::infinity();
};

/// Euclidean-closest boundary point over outline edges and crack faces
/// visible from x. Crack faces are two-sided; the face on x's side is used.
/// Ties are broken toward the lowest feature index.
inline ClosestBoundary closest_boundary_point(const DomainOutline& outline,
                                              const CrackPath* crack, Vec2 x) {
    ClosestBoundary best;
    const double tie_eps = 1e-12;

    auto blocked = [&](Vec2 foot) {
        if (!crack) return false;
        const auto& vs = crack->vertices();
        for (std::size_t i = 0; i + 1 < vs.size(); ++i)
            if (segments_properly_cross(x, foot, vs[i], vs[i + 1])) return true;
        return false;
    };

    int index = 0;
    for (const auto& e : outline.edges()) {
        const Vec2 foot = closest_point_on_segment({e.a, e.b}, x);
        const double d = norm(x - foot);
        if (d < best.dist * (1.0 - tie_eps) - tie_eps && !blocked(foot)) {
            best = {foot, {}, e.kind, &e.value, index, false, d};
        }
        ++index;
    }
    if (crack) {
        const auto& vs = crack->vertices();
        for (std::size_t i = 0; i + 1 < vs.size(); ++i) {
            const Vec2 foot = closest_point_on_segment({vs[i], vs[i + 1]}, x);
            const double d = norm(x - foot);
            if (d < best.dist * (1.0 - tie_eps) - tie_eps) {
                best = {foot, {}, BcKind::neumann, &crack->face_traction(), index, true, d};
            }
            ++index;
        }
    }
    if (best.feature_index < 0)
        throw ConfigError("closest_boundary_point: no boundary feature found");
    if (best.dist > 0.0) best.inward_normal = normalized(x - best.point);
    return best;
}

} // namespace lbfrac
