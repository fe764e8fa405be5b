#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lbfrac/errors.hpp"
#include "lbfrac/lattice.hpp"
#include "lbfrac/simulation.hpp"

namespace lbfrac {

namespace detail {
inline std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
} // namespace detail

/// Time series serialized as CSV. The format is fixed so identical runs yield
/// byte-identical files.
inline std::string csv_string(const std::vector<TimeSeriesRecord>& series) {
    std::string out = "t,K_left,v_left,da_left,K_right,v_right,da_right\n";
    for (const auto& r : series) {
        out += detail::fmt_g17(r.t);
        for (const double v : {r.left.K, r.left.v, r.left.da, r.right.K, r.right.v, r.right.da}) {
            out += ',';
            out += detail::fmt_g17(v);
        }
        out += '\n';
    }
    return out;
}

inline void write_csv(const std::filesystem::path& path,
                      const std::vector<TimeSeriesRecord>& series) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open CSV output file: " + path.string());
    f << csv_string(series);
}

/// Displacement snapshot as a legacy-VTK structured-points dataset. Dead
/// sites are written as 0.
inline void write_vtk_snapshot(const std::filesystem::path& path, const Grid& g,
                               const std::string& title) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open VTK output file: " + path.string());
    f << "# vtk DataFile Version 3.0\n"
      << title << "\n"
      << "ASCII\n"
      << "DATASET STRUCTURED_POINTS\n"
      << "DIMENSIONS " << g.spec.nx << ' ' << g.spec.ny << " 1\n"
      << "ORIGIN " << detail::fmt_g17(g.spec.origin.x) << ' ' << detail::fmt_g17(g.spec.origin.y)
      << " 0\n"
      << "SPACING " << detail::fmt_g17(g.spec.dh) << ' ' << detail::fmt_g17(g.spec.dh) << " 1\n"
      << "POINT_DATA " << g.n << "\n"
      << "SCALARS w double 1\n"
      << "LOOKUP_TABLE default\n";
    for (std::size_t s = 0; s < g.n; ++s)
        f << detail::fmt_g17(g.alive(static_cast<int>(s)) ? g.w[s] : 0.0) << '\n';
}

} // namespace lbfrac
