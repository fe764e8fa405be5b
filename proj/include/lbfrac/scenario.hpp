#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbfrac/errors.hpp"
#include "lbfrac/fracture.hpp"
#include "lbfrac/geometry.hpp"
#include "lbfrac/lattice.hpp"
#include "lbfrac/simulation.hpp"

namespace lbfrac {

/// Serializable time-dependent boundary value:
///   constant:  f(t) = value
///   sin2_ramp: f(t) = value * sin^2(pi t / (2 t0)) for t < t0, else value
///   half_sine: f(t) = value * sin(pi t / t0) for t < t0, else 0
struct BcValueDesc {
    enum class Type { constant, sin2_ramp, half_sine };
    Type type = Type::constant;
    double value = 0.0;
    double t0 = 0.0;
};

inline BcFn make_bc_fn(const BcValueDesc& d) {
    switch (d.type) {
        case BcValueDesc::Type::constant:
            return [v = d.value](double, Vec2) { return v; };
        case BcValueDesc::Type::sin2_ramp:
            return [v = d.value, t0 = d.t0](double t, Vec2) {
                if (t >= t0) return v;
                const double s = std::sin(0.5 * std::numbers::pi * t / t0);
                return v * s * s;
            };
        case BcValueDesc::Type::half_sine:
            return [v = d.value, t0 = d.t0](double t, Vec2) {
                return t < t0 ? v * std::sin(std::numbers::pi * t / t0) : 0.0;
            };
    }
    throw ConfigError("unknown BC value type");
}

struct EdgeDesc {
    BcKind kind = BcKind::neumann;
    BcValueDesc value;
};

struct MaterialDesc {
    double mu = 1.0;
    double rho = 1.0;
};

struct LatticeDesc {
    double dh = 0.0;
    std::optional<double> kappa; // c/cs; default kDefaultKappa
    std::optional<double> dt;    // alternative to kappa
};

struct DomainDesc {
    std::vector<Vec2> vertices; // counterclockwise
    std::vector<EdgeDesc> edges;
};

struct CrackDesc {
    std::vector<Vec2> vertices;
    bool tip_at_front = false;
    bool tip_at_back = true;
};

struct CriterionDesc {
    enum class Mode { none, steady, k_criterion };
    Mode mode = Mode::none;
    double a_dot = 0.0;
    double K_C = 0.0;
    double v_max = 0.0;
    double r0 = 0.0;
};

struct SifDesc {
    double r0 = 0.0;
    std::optional<double> r_min; // absolute length; overrides r0/(1-v)
};

struct RunDesc {
    double t_max = 0.0;
    int sample_stride = 1;
    std::string out_dir = "out";
    std::string csv = "timeseries.csv";
    int snapshot_every = 0;
};

struct ScenarioConfig {
    MaterialDesc material;
    LatticeDesc lattice;
    DomainDesc domain;
    std::optional<CrackDesc> crack;
    CriterionDesc criterion;
    SifDesc sif;
    RunDesc run;
};

// --- JSON serialization -----------------------------------------------------

inline void to_json(nlohmann::json& j, const Vec2& v) { j = nlohmann::json::array({v.x, v.y}); }
inline void from_json(const nlohmann::json& j, Vec2& v) {
    v.x = j.at(0).get<double>();
    v.y = j.at(1).get<double>();
}

inline void to_json(nlohmann::json& j, const BcValueDesc& d) {
    switch (d.type) {
        case BcValueDesc::Type::constant: j = {{"type", "constant"}, {"value", d.value}}; break;
        case BcValueDesc::Type::sin2_ramp:
            j = {{"type", "sin2_ramp"}, {"value", d.value}, {"t0", d.t0}};
            break;
        case BcValueDesc::Type::half_sine:
            j = {{"type", "half_sine"}, {"value", d.value}, {"t0", d.t0}};
            break;
    }
}
inline void from_json(const nlohmann::json& j, BcValueDesc& d) {
    const std::string t = j.at("type").get<std::string>();
    d.value = j.at("value").get<double>();
    if (t == "constant") {
        d.type = BcValueDesc::Type::constant;
    } else if (t == "sin2_ramp") {
        d.type = BcValueDesc::Type::sin2_ramp;
        d.t0 = j.at("t0").get<double>();
    } else if (t == "half_sine") {
        d.type = BcValueDesc::Type::half_sine;
        d.t0 = j.at("t0").get<double>();
    } else {
        throw ConfigError("unknown BC value type: " + t);
    }
}

inline void to_json(nlohmann::json& j, const EdgeDesc& e) {
    j = {{"bc", e.kind == BcKind::dirichlet ? "dirichlet" : "neumann"}, {"value", e.value}};
}
inline void from_json(const nlohmann::json& j, EdgeDesc& e) {
    const std::string k = j.at("bc").get<std::string>();
    if (k == "dirichlet")
        e.kind = BcKind::dirichlet;
    else if (k == "neumann")
        e.kind = BcKind::neumann;
    else
        throw ConfigError("unknown bc kind: " + k);
    e.value = j.at("value").get<BcValueDesc>();
}

inline void to_json(nlohmann::json& j, const MaterialDesc& m) {
    j = {{"mu", m.mu}, {"rho", m.rho}};
}
inline void from_json(const nlohmann::json& j, MaterialDesc& m) {
    m.mu = j.at("mu").get<double>();
    m.rho = j.at("rho").get<double>();
}

inline void to_json(nlohmann::json& j, const LatticeDesc& l) {
    j = {{"dh", l.dh}};
    if (l.kappa) j["kappa"] = *l.kappa;
    if (l.dt) j["dt"] = *l.dt;
}
inline void from_json(const nlohmann::json& j, LatticeDesc& l) {
    l.dh = j.at("dh").get<double>();
    l.kappa = j.contains("kappa") ? std::optional(j.at("kappa").get<double>()) : std::nullopt;
    l.dt = j.contains("dt") ? std::optional(j.at("dt").get<double>()) : std::nullopt;
}

inline void to_json(nlohmann::json& j, const DomainDesc& d) {
    j = {{"vertices", d.vertices}, {"edges", d.edges}};
}
inline void from_json(const nlohmann::json& j, DomainDesc& d) {
    d.vertices = j.at("vertices").get<std::vector<Vec2>>();
    d.edges = j.at("edges").get<std::vector<EdgeDesc>>();
}

inline void to_json(nlohmann::json& j, const CrackDesc& c) {
    j = {{"vertices", c.vertices}, {"tip_at_front", c.tip_at_front}, {"tip_at_back", c.tip_at_back}};
}
inline void from_json(const nlohmann::json& j, CrackDesc& c) {
    c.vertices = j.at("vertices").get<std::vector<Vec2>>();
    c.tip_at_front = j.at("tip_at_front").get<bool>();
    c.tip_at_back = j.at("tip_at_back").get<bool>();
}

inline void to_json(nlohmann::json& j, const CriterionDesc& c) {
    switch (c.mode) {
        case CriterionDesc::Mode::none: j = {{"mode", "none"}}; break;
        case CriterionDesc::Mode::steady: j = {{"mode", "steady"}, {"a_dot", c.a_dot}}; break;
        case CriterionDesc::Mode::k_criterion:
            j = {{"mode", "k_criterion"}, {"K_C", c.K_C}, {"v_max", c.v_max}, {"r0", c.r0}};
            break;
    }
}
inline void from_json(const nlohmann::json& j, CriterionDesc& c) {
    const std::string m = j.at("mode").get<std::string>();
    if (m == "none") {
        c.mode = CriterionDesc::Mode::none;
    } else if (m == "steady") {
        c.mode = CriterionDesc::Mode::steady;
        c.a_dot = j.at("a_dot").get<double>();
    } else if (m == "k_criterion") {
        c.mode = CriterionDesc::Mode::k_criterion;
        c.K_C = j.at("K_C").get<double>();
        c.v_max = j.at("v_max").get<double>();
        c.r0 = j.at("r0").get<double>();
    } else {
        throw ConfigError("unknown criterion mode: " + m);
    }
}

inline void to_json(nlohmann::json& j, const SifDesc& s) {
    j = {{"r0", s.r0}};
    if (s.r_min) j["r_min"] = *s.r_min;
}
inline void from_json(const nlohmann::json& j, SifDesc& s) {
    s.r0 = j.value("r0", 0.0);
    s.r_min = j.contains("r_min") ? std::optional(j.at("r_min").get<double>()) : std::nullopt;
}

inline void to_json(nlohmann::json& j, const RunDesc& r) {
    j = {{"t_max", r.t_max},
         {"sample_stride", r.sample_stride},
         {"out_dir", r.out_dir},
         {"csv", r.csv},
         {"snapshot_every", r.snapshot_every}};
}
inline void from_json(const nlohmann::json& j, RunDesc& r) {
    r.t_max = j.at("t_max").get<double>();
    r.sample_stride = j.value("sample_stride", 1);
    r.out_dir = j.value("out_dir", std::string("out"));
    r.csv = j.value("csv", std::string("timeseries.csv"));
    r.snapshot_every = j.value("snapshot_every", 0);
}

inline void to_json(nlohmann::json& j, const ScenarioConfig& c) {
    j = {{"material", c.material},
         {"lattice", c.lattice},
         {"domain", c.domain},
         {"criterion", c.criterion},
         {"sif", c.sif},
         {"run", c.run}};
    if (c.crack) j["crack"] = *c.crack;
}
inline void from_json(const nlohmann::json& j, ScenarioConfig& c) {
    c.material = j.at("material").get<MaterialDesc>();
    c.lattice = j.at("lattice").get<LatticeDesc>();
    c.domain = j.at("domain").get<DomainDesc>();
    c.crack = j.contains("crack") ? std::optional(j.at("crack").get<CrackDesc>()) : std::nullopt;
    c.criterion = j.value("criterion", CriterionDesc{});
    c.sif = j.value("sif", SifDesc{});
    c.run = j.at("run").get<RunDesc>();
}

// --- validation and simulation assembly -------------------------------------

inline void validate(const ScenarioConfig& c) {
    if (!(c.material.mu > 0.0) || !(c.material.rho > 0.0))
        throw ConfigError("config: mu and rho must be positive");
    if (!(c.lattice.dh > 0.0)) throw ConfigError("config: dh must be positive");
    if (c.lattice.kappa && c.lattice.dt)
        throw ConfigError("config: give either kappa or dt, not both");
    if (c.domain.vertices.size() < 3) throw ConfigError("config: domain needs >= 3 vertices");
    if (c.domain.edges.size() != c.domain.vertices.size())
        throw ConfigError("config: one edge BC per polygon vertex required");
    if (!(c.run.t_max > 0.0)) throw ConfigError("config: t_max must be positive");
    if (c.run.sample_stride < 1) throw ConfigError("config: sample_stride must be >= 1");

    double area2 = 0.0;
    const auto& vs = c.domain.vertices;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        const Vec2 a = vs[i], b = vs[(i + 1) % vs.size()];
        area2 += cross(a, b);
        if (norm(b - a) < 2.0 * c.lattice.dh)
            throw ConfigError("config: domain edge shorter than 2*dh");
    }
    if (area2 <= 0.0) throw ConfigError("config: domain vertices must run counterclockwise");

    const double cs = std::sqrt(c.material.mu / c.material.rho);
    switch (c.criterion.mode) {
        case CriterionDesc::Mode::none: break;
        case CriterionDesc::Mode::steady:
            if (!(c.criterion.a_dot > 0.0) || !(c.criterion.a_dot < cs))
                throw ConfigError("config: steady growth needs 0 < a_dot < cs");
            break;
        case CriterionDesc::Mode::k_criterion:
            if (!(c.criterion.K_C > 0.0)) throw ConfigError("config: K_C must be positive");
            if (!(c.criterion.v_max > 0.0) || !(c.criterion.v_max < 1.0))
                throw ConfigError("config: v_max must lie in (0,1)");
            if (!(c.criterion.r0 > 0.0)) throw ConfigError("config: r0 must be positive");
            break;
    }
    if (c.crack) {
        if (c.crack->vertices.size() < 2) throw ConfigError("config: crack needs >= 2 vertices");
        if (!c.crack->tip_at_front && !c.crack->tip_at_back)
            throw ConfigError("config: crack needs at least one tip");
        for (std::size_t i = 0; i + 1 < c.crack->vertices.size(); ++i)
            if (norm(c.crack->vertices[i + 1] - c.crack->vertices[i]) < 2.0 * c.lattice.dh)
                throw ConfigError("config: crack segment shorter than 2*dh");
        if (c.criterion.mode == CriterionDesc::Mode::none)
            throw ConfigError("config: a crack requires a growth criterion");
    } else if (c.criterion.mode != CriterionDesc::Mode::none) {
        throw ConfigError("config: a growth criterion requires a crack");
    }
}

inline DomainOutline make_outline(const DomainDesc& d) {
    std::vector<std::pair<BcKind, BcFn>> bcs;
    bcs.reserve(d.edges.size());
    for (const auto& e : d.edges) bcs.emplace_back(e.kind, make_bc_fn(e.value));
    return DomainOutline::polygon(d.vertices, bcs);
}

/// Lattice origin with sites offset half a spacing from the bounding box; a
/// crack collinear with a lattice line shifts the origin by dh/2 across it.
inline Vec2 choose_origin(const DomainOutline& outline, const std::optional<CrackDesc>& crack,
                          double dh) {
    const auto bb = outline.bbox();
    Vec2 origin{bb.min.x + 0.5 * dh, bb.min.y + 0.5 * dh};
    if (!crack) return origin;
    for (std::size_t i = 0; i + 1 < crack->vertices.size(); ++i) {
        const Vec2 a = crack->vertices[i], b = crack->vertices[i + 1];
        const Vec2 dir = normalized(b - a);
        if (std::abs(dir.y) < 1e-9) { // horizontal crack: check row collision
            const double frac = std::abs(std::remainder((a.y - origin.y) / dh, 1.0));
            if (frac < 1e-6) origin.y += 0.5 * dh;
        } else if (std::abs(dir.x) < 1e-9) { // vertical crack: check column collision
            const double frac = std::abs(std::remainder((a.x - origin.x) / dh, 1.0));
            if (frac < 1e-6) origin.x += 0.5 * dh;
        }
    }
    return origin;
}

inline Simulation build_simulation(const ScenarioConfig& cfg) {
    validate(cfg);
    const MaterialParams mat = make_material(cfg.material.mu, cfg.material.rho);
    DomainOutline outline = make_outline(cfg.domain);

    const double dh = cfg.lattice.dh;
    double kappa = cfg.lattice.kappa.value_or(kDefaultKappa);
    if (cfg.lattice.dt) {
        kappa = dh / (*cfg.lattice.dt * mat.cs);
        if (!(kappa >= 1.0)) throw ConfigError("config: dt implies kappa < 1");
    }

    const Vec2 origin = choose_origin(outline, cfg.crack, dh);
    const auto bb = outline.bbox();
    const int nx = static_cast<int>(std::floor((bb.max.x - origin.x) / dh + 1e-9)) + 1;
    const int ny = static_cast<int>(std::floor((bb.max.y - origin.y) / dh + 1e-9)) + 1;
    Grid grid(make_lattice_spec(nx, ny, dh, mat, kappa, origin));

    std::optional<CrackPath> crack;
    if (cfg.crack)
        crack.emplace(cfg.crack->vertices, cfg.crack->tip_at_front, cfg.crack->tip_at_back);

    std::optional<FractureCriterion> crit;
    switch (cfg.criterion.mode) {
        case CriterionDesc::Mode::none: break;
        case CriterionDesc::Mode::steady: crit = SteadyGrowth{cfg.criterion.a_dot}; break;
        case CriterionDesc::Mode::k_criterion:
            crit = KCriterion{cfg.criterion.K_C, cfg.criterion.v_max, cfg.criterion.r0};
            break;
    }

    SifEvalConfig sif;
    sif.r0 = cfg.sif.r0 > 0.0 ? cfg.sif.r0 : cfg.criterion.r0;
    sif.r_min_override = cfg.sif.r_min;

    Simulation sim(std::move(grid), std::move(outline), std::move(crack), crit, mat, sif);
    sim.sample_stride = cfg.run.sample_stride;
    return sim;
}

} // namespace lbfrac
