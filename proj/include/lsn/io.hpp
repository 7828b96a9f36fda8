#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "lsn/diagnostics.hpp"
#include "lsn/kinetics.hpp"
#include "lsn/solver.hpp"
#include "lsn/upwind.hpp"

namespace lsn {

namespace detail {

/// Shortest round-trip decimal for a double; byte-identical across runs.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace detail

/// Monomer level and moment series on the stitched time grid.
/// Columns: t, u, M0, M1, du_dt.
inline void write_series_csv(std::ostream& out, const SimulationResult& r) {
    const std::vector<double> t = detail::stitched_grid(r);
    const std::vector<double> u = detail::stitched_series(r, &WindowRecord::u);
    const std::vector<double> m0 = detail::stitched_series(r, &WindowRecord::count);
    const std::vector<double> m1 = detail::stitched_series(r, &WindowRecord::mass);
    const std::vector<double> du = detail::stitched_series(r, &WindowRecord::du);
    out << "t,u,M0,M1,du_dt\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        out << detail::format_number(t[i]) << ',' << detail::format_number(u[i])
            << ',' << detail::format_number(m0[i]) << ','
            << detail::format_number(m1[i]) << ',' << detail::format_number(du[i])
            << '\n';
}

/// Density profile at one time on a uniform size grid. Columns: x, f.
inline void write_snapshot_csv(std::ostream& out, const SimulationResult& r,
                               double t, int points) {
    if (points < 2) throw config_error("snapshot needs at least 2 points");
    auto snap = r.snapshot(t);
    double hi = snap.support_hi();
    if (!(hi > 0.0)) hi = 1.0;
    out << "x,f\n";
    for (int i = 0; i < points; ++i) {
        const double x = hi * i / (points - 1);
        out << detail::format_number(x) << ',' << detail::format_number(snap(x))
            << '\n';
    }
}

/// Per-frame gaps between the characteristics run and the finite-volume
/// reference. Columns: t, u_gap, density_L1_gap.
inline void write_compare_csv(std::ostream& out, const SolutionGap& gap) {
    out << "t,u_gap,density_L1_gap\n";
    for (std::size_t i = 0; i < gap.frame_times.size(); ++i)
        out << detail::format_number(gap.frame_times[i]) << ','
            << detail::format_number(gap.monomer_gap[i]) << ','
            << detail::format_number(gap.density_l1[i]) << '\n';
}

/// Machine-readable run summary. Key fields: schema_version, termination
/// (horizon_reached | maximal_time_detected), t_end, stop_time, monomer
/// series endpoints, window count, worst fixed-point residual, conservation
/// residual, and the hypothesis check digest.
inline nlohmann::json summary_json(const SimulationResult& r,
                                   const HypothesisReport& hyp) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["termination"] = r.reached_stop() ? "maximal_time_detected" : "horizon_reached";
    j["t_end"] = r.t_end();
    if (r.reached_stop()) j["stop_time"] = r.stop_time();
    j["total_mass"] = r.total_mass();
    j["dissolution_limit"] = r.dissolution_limit();
    j["dissolution_possible"] = r.dissolution_possible();
    j["u_start"] = r.monomer(0.0);
    j["u_end"] = r.monomer(r.t_end());
    j["windows"] = r.windows().size();

    double residual = 0.0;
    for (const auto& w : r.windows()) residual = std::max(residual, w.residual);
    j["fixed_point_residual"] = residual;

    const ConservationReport cons = conservation_check(r);
    j["conservation_residual"] = cons.max_series_residual;
    j["conservation_residual_direct"] = cons.max_direct_residual;

    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : hyp.checks) {
        nlohmann::json e;
        e["name"] = c.name;
        e["pass"] = c.pass;
        e["required"] = c.required;
        e["margin"] = c.margin;
        checks.push_back(e);
    }
    j["hypotheses"] = {{"all_required_pass", hyp.all_required_pass()},
                       {"checks", checks}};
    return j;
}

} // namespace lsn
