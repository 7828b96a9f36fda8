#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "lsn/density.hpp"
#include "lsn/detail/quadrature.hpp"
#include "lsn/errors.hpp"
#include "lsn/kinetics.hpp"
#include "lsn/solver.hpp"

namespace lsn {

/// Settings for the finite-volume reference scheme.
struct GridConfig {
    double x_max = 10.0;
    int cells = 2000;
    double cfl_safety = 0.45;
    double dt_cap = std::numeric_limits<double>::infinity();
    /// Halt once u - limit falls to this value (0: halt only when the
    /// supersaturation is gone and the inflow condition loses meaning).
    double stop_excess = 0.0;
};

struct UpwindFrame {
    double t = 0.0;
    double u = 0.0;
    std::vector<double> density; ///< cell averages
};

struct UpwindResult {
    std::vector<double> centers;
    std::vector<UpwindFrame> frames; ///< at the requested sample times
    std::vector<double> times;       ///< coarse monomer series
    std::vector<double> monomer;
    bool stopped = false;
    double stop_time = std::numeric_limits<double>::quiet_NaN();
    /// Fraction of the total mass lost through the right edge (plus any
    /// discretization drift); large values mean x_max was too small.
    double leak_fraction = 0.0;

    double final_time() const { return times.empty() ? 0.0 : times.back(); }
    double final_monomer() const { return monomer.empty() ? 0.0 : monomer.back(); }
};

/// First-order upwind finite-volume discretization of the transport problem
/// with nucleation inflow, marched by explicit Euler under a CFL bound, with
/// the monomer level closed by discrete conservation each step. Entirely
/// independent of the characteristics machinery; serves as the reference
/// scheme everything else is compared against.
inline UpwindResult upwind_solve(const KineticModel& model, const InitialDensity& f_in,
                                 double total_mass, double horizon,
                                 const std::vector<double>& sample_times = {},
                                 const GridConfig& grid = {}) {
    if (!(horizon > 0.0)) throw config_error("horizon must be positive");
    if (grid.cells < 8) throw config_error("grid needs at least 8 cells");
    if (!(grid.x_max > 0.0)) throw config_error("x_max must be positive");
    if (f_in.support_hi() > grid.x_max)
        throw degenerate_input_error("initial support exceeds the grid");
    const int n = grid.cells;
    const double dx = grid.x_max / n;
    const double limit = model.rate_ratio_limit();

    UpwindResult out;
    out.centers.resize(n);
    for (int j = 0; j < n; ++j) out.centers[j] = (j + 0.5) * dx;

    // Face rates are fixed in time; only the monomer factor moves.
    std::vector<double> a_face(n + 1), b_face(n + 1);
    for (int j = 0; j <= n; ++j) {
        const double x = j * dx;
        a_face[j] = model.a(std::max(x, 1e-300));
        b_face[j] = model.b(std::max(x, 1e-300));
    }

    // Cell averages of the initial profile (adaptive per cell: profiles with
    // an integrable blow-up at the origin average correctly too).
    std::vector<double> f(n, 0.0);
    if (f_in.support_hi() > f_in.support_lo()) {
        for (int j = 0; j < n; ++j) {
            const double xl = j * dx, xr = (j + 1) * dx;
            if (xr <= f_in.support_lo() || xl >= f_in.support_hi()) continue;
            f[j] = detail::adaptive_gl([&](double x) { return f_in(x); }, xl, xr,
                                       1e-10, 1e-13)
                       .value /
                   dx;
        }
    }

    auto discrete_mass = [&]() {
        double m = 0.0;
        for (int j = 0; j < n; ++j) m += out.centers[j] * f[j];
        return m * dx;
    };

    double u = total_mass - discrete_mass();
    if (!(u > limit))
        throw degenerate_input_error(
            "initial monomer level does not exceed the small-size limit");

    const double series_dt = horizon / 2048.0;
    std::vector<double> flux(n + 1);
    double t = 0.0;
    double leaked = 0.0;
    std::size_t next_sample = 0;
    double next_series = 0.0;

    auto record_series = [&]() {
        out.times.push_back(t);
        out.monomer.push_back(u);
    };
    auto record_frame = [&]() {
        UpwindFrame fr;
        fr.t = t;
        fr.u = u;
        fr.density = f;
        out.frames.push_back(std::move(fr));
    };

    record_series();
    next_series = series_dt;
    while (next_sample < sample_times.size() && sample_times[next_sample] <= 0.0) {
        record_frame();
        ++next_sample;
    }

    while (t < horizon - 1e-12 * std::max(1.0, horizon)) {
        // Velocity and CFL bound at the current monomer level.
        double vmax = 0.0;
        for (int j = 0; j <= n; ++j) {
            flux[j] = a_face[j] * u - b_face[j]; // velocity for now
            vmax = std::max(vmax, std::abs(flux[j]));
        }
        double dt = grid.cfl_safety * dx / std::max(vmax, 1e-300);
        dt = std::min(dt, grid.dt_cap);
        double stop_at = horizon;
        if (next_sample < sample_times.size())
            stop_at = std::min(stop_at, sample_times[next_sample]);
        stop_at = std::min(stop_at, next_series);
        dt = std::min(dt, stop_at - t);
        if (!(dt > 0.0)) dt = 1e-12 * std::max(1.0, horizon);

        // Upwind fluxes from the face velocities.
        for (int j = n; j >= 1; --j) {
            const double v = flux[j];
            if (j == n)
                flux[j] = v > 0.0 ? v * f[n - 1] : 0.0;
            else
                flux[j] = v > 0.0 ? v * f[j - 1] : v * f[j];
        }
        flux[0] = u > limit ? model.nucleation(u) : 0.0;

        leaked += dt * grid.x_max * flux[n];
        const double r = dt / dx;
        for (int j = 0; j < n; ++j) f[j] -= r * (flux[j + 1] - flux[j]);

        t += dt;
        const double u_prev = u;
        u = total_mass - discrete_mass();

        if (u - limit <= grid.stop_excess) {
            const double target = limit + grid.stop_excess;
            const double den = u_prev - u;
            const double th = den > 0.0 ? std::clamp((u_prev - target) / den, 0.0, 1.0)
                                        : 1.0;
            out.stopped = true;
            out.stop_time = t - dt + th * dt;
            break;
        }
        if (t >= next_series - 1e-15) {
            record_series();
            next_series += series_dt;
        }
        while (next_sample < sample_times.size() &&
               t >= sample_times[next_sample] - 1e-12) {
            record_frame();
            ++next_sample;
        }
    }
    if (out.times.empty() || out.times.back() < t) record_series();
    if (!out.stopped)
        while (next_sample < sample_times.size() &&
               t >= sample_times[next_sample] - 1e-9) {
            record_frame();
            ++next_sample;
        }
    out.leak_fraction = total_mass > 0.0 ? leaked / total_mass : leaked;
    return out;
}

/// Gap between the characteristics-based solution and a finite-volume run:
/// largest monomer difference over the recorded frames and the L1 density
/// difference per frame (snapshot evaluated at cell centers against cell
/// averages).
struct SolutionGap {
    double monomer_sup = 0.0;
    double density_l1_max = 0.0;
    std::vector<double> frame_times;
    std::vector<double> monomer_gap;
    std::vector<double> density_l1;
};

inline SolutionGap compare_solutions(const SimulationResult& ref,
                                     const UpwindResult& fv) {
    SolutionGap gap;
    for (const auto& fr : fv.frames) {
        if (fr.t > ref.t_end() * (1.0 + 1e-12)) continue;
        const double ugap = std::abs(fr.u - ref.monomer(fr.t));
        gap.monomer_gap.push_back(ugap);
        gap.monomer_sup = std::max(gap.monomer_sup, ugap);
        auto snap = ref.snapshot(fr.t);
        const double dx = fv.centers.size() > 1 ? fv.centers[1] - fv.centers[0]
                                                : 1.0;
        double l1 = 0.0;
        for (std::size_t j = 0; j < fv.centers.size(); ++j)
            l1 += std::abs(snap(fv.centers[j]) - fr.density[j]) * dx;
        gap.frame_times.push_back(fr.t);
        gap.density_l1.push_back(l1);
        gap.density_l1_max = std::max(gap.density_l1_max, l1);
    }
    return gap;
}

} // namespace lsn
