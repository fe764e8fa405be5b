#pragma once

#include <cmath>
#include <numbers>

#include "lbfrac/errors.hpp"

namespace lbfrac {

/// Steadily moving semi-infinite crack in a strip of half-width L loaded by a
/// total edge displacement w0.
struct StripProblem {
    double L = 1.0;
    double w0 = 0.0;
    double mu = 1.0;
    double v = 0.0;    // crack speed relative to cs
    double beta = 1.0; // sqrt(1 - v^2)
};

inline StripProblem make_strip_problem(double L, double w0, double mu, double v) {
    if (!(v >= 0.0 && v < 1.0)) throw ConfigError("strip problem: need 0 <= v < 1");
    return {L, w0, mu, v, std::sqrt(1.0 - v * v)};
}

/// Steady-state mode-III stress intensity factor of the strip problem,
///   K = -mu*w0*sqrt(2*beta / (L*(2*beta*L + 1))),
/// written in units where L is dimensionless. Experiments compare |K|.
inline double mandal_sif(const StripProblem& p) {
    return -p.mu * p.w0 * std::sqrt(2.0 * p.beta / (p.L * (2.0 * p.beta * p.L + 1.0)));
}

/// Near-tip displacement field w(r, phi) = (2K/mu) sqrt(r/2pi) sin(phi/2).
inline double near_tip_displacement(double K, double mu, double r, double phi) {
    return 2.0 * K / mu * std::sqrt(r / (2.0 * std::numbers::pi)) * std::sin(0.5 * phi);
}

/// Crack opening displacement at distance r behind the tip,
/// delta = (4K/mu) sqrt(r/2pi). Exact inverse of evaluate_sif.
inline double cod_from_sif(double K, double mu, double r) {
    return 4.0 * K / mu * std::sqrt(r / (2.0 * std::numbers::pi));
}

} // namespace lbfrac
