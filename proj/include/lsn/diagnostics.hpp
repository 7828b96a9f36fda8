#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lsn/detail/quadrature.hpp"
#include "lsn/errors.hpp"
#include "lsn/solver.hpp"

namespace lsn {

namespace detail {

/// Global time grid of a stitched run: window grids concatenated with the
/// duplicated junction nodes removed.
inline std::vector<double> stitched_grid(const SimulationResult& r) {
    std::vector<double> t;
    for (const WindowRecord& w : r.windows()) {
        std::size_t first = t.empty() ? 0 : 1;
        t.insert(t.end(), w.grid.begin() + first, w.grid.end());
    }
    return t;
}

/// Series value attached to each node of the stitched grid.
inline std::vector<double> stitched_series(const SimulationResult& r,
                                           std::vector<double> WindowRecord::*member) {
    std::vector<double> v;
    for (const WindowRecord& w : r.windows()) {
        std::size_t first = v.empty() ? 0 : 1;
        v.insert(v.end(), (w.*member).begin() + first, (w.*member).end());
    }
    return v;
}

} // namespace detail

/// Deviation of the cluster count from the integrated nucleation inflow.
/// The count series comes from the pushforward representation; the inflow
/// integral is recomputed here from the monomer series alone, so agreement is
/// a two-sided consistency check on the boundary machinery.
struct BalanceReport {
    double max_deviation = 0.0; ///< worst |count(t) - count(0) - inflow(0,t)|
    double worst_time = 0.0;
    double initial_count = 0.0;
};

inline BalanceReport number_balance(const SimulationResult& r) {
    const std::vector<double> grid = detail::stitched_grid(r);
    const std::vector<double> count = detail::stitched_series(r, &WindowRecord::count);
    const KineticModel& model = r.model();
    const double limit = model.ratio_limit;

    BalanceReport rep;
    rep.initial_count = count.front();
    double integral = 0.0;
    auto inflow = [&](double s) {
        const double u = r.monomer(s);
        return u > limit ? model.nucleation(u) : 0.0;
    };
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        // The monomer path is linear inside each grid interval, so a fixed
        // Gauss panel per interval integrates the composed inflow rate to
        // quadrature accuracy without touching the solver's own nodes.
        integral += detail::gl_integrate(inflow, grid[i], grid[i + 1], 4);
        const double dev = std::abs(count[i + 1] - count.front() - integral);
        if (dev > rep.max_deviation) {
            rep.max_deviation = dev;
            rep.worst_time = grid[i + 1];
        }
    }
    return rep;
}

/// Mass-conservation residuals of a run. The series residual checks the
/// stored identity monomer + mass = total; the direct residual re-measures
/// the first moment by quadrature of pointwise density values, which is the
/// independent route through the representation.
struct ConservationReport {
    double max_series_residual = 0.0;
    double max_direct_residual = 0.0;
};

inline ConservationReport conservation_check(const SimulationResult& r,
                                             int direct_samples = 4) {
    ConservationReport rep;
    const std::vector<double> u = detail::stitched_series(r, &WindowRecord::u);
    const std::vector<double> m = detail::stitched_series(r, &WindowRecord::mass);
    for (std::size_t i = 0; i < u.size(); ++i)
        rep.max_series_residual =
            std::max(rep.max_series_residual, std::abs(u[i] + m[i] - r.total_mass()));

    const double t_end = r.t_end();
    for (int k = 1; k <= direct_samples; ++k) {
        const double t = t_end * k / direct_samples;
        DensitySnapshot snap = r.snapshot(t);
        const double m1 = snap.moment_direct([](double x) { return x; });
        rep.max_direct_residual = std::max(
            rep.max_direct_residual, std::abs(r.monomer(t) + m1 - r.total_mass()));
    }
    return rep;
}

/// Whether the rate ratio dips below its boundary limit anywhere: if not, the
/// monomer level can never be driven down to the limit and the run continues
/// to any horizon.
struct DissolutionCertificate {
    bool possible = false;  ///< some size has rate ratio below the limit
    double min_ratio = 0.0;
    double argmin = 0.0;
};

inline DissolutionCertificate dissolution_certificate(const KineticModel& model) {
    DissolutionCertificate cert;
    cert.min_ratio = model.ratio_limit;
    cert.argmin = 0.0;
    for (int k = 0; k <= 512; ++k) {
        const double x = std::pow(10.0, -8.0 + 12.0 * k / 512.0);
        const double ratio = model.rate_ratio(x);
        if (ratio < cert.min_ratio) {
            cert.min_ratio = ratio;
            cert.argmin = x;
        }
    }
    cert.possible = cert.min_ratio <
                    model.ratio_limit - 1e-12 * (1.0 + std::abs(model.ratio_limit));
    return cert;
}

/// Lower envelope for the supersaturation: when the rate ratio stays at or
/// above its boundary limit, the monomer excess obeys
///   u(t) - limit >= (u(0) - limit) * exp(-integral of the attachment moment),
/// which is the quantitative form of global continuation. min_margin_ratio is
/// the worst observed (u - limit) / envelope over the run.
struct EnvelopeReport {
    bool bound_valid = false; ///< rate ratio >= limit on the scanned sizes
    double min_margin_ratio = 0.0;
    double worst_time = 0.0;
    double min_gap = 0.0; ///< min of u - limit itself
};

inline EnvelopeReport envelope_check(const SimulationResult& r) {
    const KineticModel& model = r.model();
    const double limit = model.ratio_limit;

    EnvelopeReport rep;
    double min_excess = 0.0;
    for (int k = 0; k <= 256; ++k) {
        const double x = std::pow(10.0, -8.0 + 12.0 * k / 256.0);
        min_excess = std::min(min_excess, model.rate_ratio(x) - limit);
    }
    rep.bound_valid = min_excess >= -1e-10 * (1.0 + std::abs(limit));

    const std::vector<double> grid = detail::stitched_grid(r);
    const std::vector<double> u = detail::stitched_series(r, &WindowRecord::u);
    const std::vector<double> am = detail::stitched_series(r, &WindowRecord::a_moment);
    const double gap0 = u.front() - limit;

    rep.min_margin_ratio = 1.0;
    rep.min_gap = gap0;
    rep.worst_time = grid.front();
    double cum = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0)
            cum += 0.5 * (am[i] + am[i - 1]) * (grid[i] - grid[i - 1]);
        const double envelope = gap0 * std::exp(-cum);
        const double gap = u[i] - limit;
        rep.min_gap = std::min(rep.min_gap, gap);
        if (envelope > 0.0 && gap / envelope < rep.min_margin_ratio) {
            rep.min_margin_ratio = gap / envelope;
            rep.worst_time = grid[i];
        }
    }
    return rep;
}

/// Logarithmic upper bound on the monomer level for compactly supported
/// initial data with a convex, decaying rate ratio: the level must cross its
/// boundary limit in finite time, no later than crossing_time. Constants are
/// derived from sampled rate bounds over the reachable size range, which is
/// itself closed by a fixed-point iteration on the support growth estimate.
struct DissolutionBound {
    bool applies = false;
    std::string reason; ///< why the bound does not apply, when it does not

    double u_start = 0.0;       ///< initial monomer level
    double limit = 0.0;         ///< boundary rate-ratio limit
    double support_edge = 0.0;  ///< upper edge of the initial support
    double support_reach = 0.0; ///< size bound on the support up to crossing_time
    double k_const = 0.0;       ///< decay constant of the differential inequality
    double a_growth = 0.0;      ///< growth-speed bound entering the logarithm
    double crossing_time = 0.0; ///< root of bound(t) = limit

    /// The bound itself: u(t) <= u_start - (k/a_growth) log(1 + a_growth t / edge).
    double bound(double t) const {
        return u_start - k_const / a_growth * std::log1p(a_growth * t / support_edge);
    }
};

inline DissolutionBound dissolution_bound(const KineticModel& model,
                                          const InitialDensity& f_in,
                                          double total_mass) {
    DissolutionBound b;
    b.limit = model.ratio_limit;
    b.support_edge = f_in.support_hi();
    b.u_start = total_mass - f_in.m1();

    auto fail = [&](const char* why) {
        b.applies = false;
        b.reason = why;
        return b;
    };
    if (!(b.support_edge > 0.0) || !(f_in.m1() > 0.0))
        return fail("initial data carries no mass on a bounded support");
    if (!(b.u_start > b.limit))
        return fail("initial monomer level is not above the boundary limit");
    const double ratio_edge = model.rate_ratio(b.support_edge);
    if (!(ratio_edge < b.limit))
        return fail("rate ratio at the support edge is not below the boundary limit");

    // Close the reachable size range: sizes grow no faster than
    // u_start * sup a over the range already reached (the level only
    // decreases under this bound), so iterate until the range implied by the
    // crossing time reproduces itself.
    double z = b.support_edge;
    bool closed = false;
    for (int iter = 0; iter < 60; ++iter) {
        double a_hi = 0.0, a_lo = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 256; ++k) {
            const double x = z * std::pow(10.0, -8.0 + 8.0 * k / 256.0);
            const double a = model.a(x);
            a_hi = std::max(a_hi, a);
            a_lo = std::min(a_lo, a);
        }
        if (!(a_lo > 1e-12 * a_hi))
            return fail("attachment rate is not bounded below on the reachable sizes");
        b.a_growth = b.u_start * a_hi;
        b.k_const = a_lo * (b.limit - ratio_edge) * (total_mass - b.u_start);
        b.crossing_time = b.support_edge / b.a_growth *
                          std::expm1(b.a_growth * (b.u_start - b.limit) / b.k_const);
        const double z_new = b.support_edge + b.a_growth * b.crossing_time;
        if (!(z_new < 1e12))
            return fail("support growth estimate does not close");
        if (std::abs(z_new - z) <= 1e-9 * z) {
            z = z_new;
            closed = true;
            break;
        }
        z = std::max(z, z_new);
    }
    if (!closed) return fail("support growth estimate does not close");
    b.support_reach = z;

    // The chord argument needs the rate ratio convex and non-increasing over
    // the reachable range; verify both on sample grids (uniform for the
    // second differences, logarithmic toward 0 for monotonicity).
    const double tol = 1e-9 * (1.0 + std::abs(b.limit));
    for (int k = 1; k < 256; ++k) {
        const double h = z / 256.0;
        const double x = k * h;
        const double second =
            model.rate_ratio(x - h) - 2.0 * model.rate_ratio(x) + model.rate_ratio(x + h);
        if (second < -tol)
            return fail("rate ratio is not convex on the reachable sizes");
    }
    double prev = b.limit;
    for (int k = 0; k <= 256; ++k) {
        const double x = z * std::pow(10.0, -8.0 + 8.0 * k / 256.0);
        const double ratio = model.rate_ratio(x);
        if (ratio > prev + tol)
            return fail("rate ratio is not non-increasing on the reachable sizes");
        prev = ratio;
    }

    b.applies = true;
    return b;
}

/// Weight used by the perturbation metric: comparable to 1 / attachment rate
/// near 0 and frozen beyond a cap location. When the rate-ratio slope decays
/// too slowly for that (the exponent integrand -a * d(b/a)/dx grows
/// unboundedly toward 0), an exponential damping factor built from the slope
/// itself restores the one-sided comparison, at the price of a margin
/// condition on the monomer level.
struct StabilityWeight {
    bool uses_decay_exponent = false; ///< damped variant active
    double x_bar = 0.0;               ///< cap location
    double margin = 0.0;              ///< monomer clearance above the rate ratio
    double decay_constant = 0.0;      ///< slope floor entering the damped variant
    std::function<double(double)> phi;         ///< the weight
    std::function<double(double)> phi_times_a; ///< bounded combination
};

/// Builds the weight for a model given a floor on the monomer level over the
/// comparison interval. Throws hypothesis_error when neither variant is
/// admissible (slope unbounded and changing sign toward 0, or no margin).
inline StabilityWeight make_stability_weight(const KineticModel& model,
                                             double monomer_floor) {
    StabilityWeight w;

    // Cap location: largest scanned size whose rate-ratio sup stays below the
    // monomer floor by a positive margin, capped at 2.
    double x_bar = 0.0, sup_ratio = 0.0;
    double running_sup = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 256; ++k) {
        const double x = std::pow(10.0, -8.0 + (std::log10(2.0) + 8.0) * k / 256.0);
        running_sup = std::max(running_sup, model.rate_ratio(x));
        if (running_sup < monomer_floor) {
            x_bar = x;
            sup_ratio = running_sup;
        }
    }
    if (!(x_bar > 0.0))
        throw hypothesis_error(
            "no cap location: the monomer floor does not clear the rate ratio "
            "near 0");
    w.x_bar = x_bar;
    w.margin = 0.5 * (monomer_floor - sup_ratio);

    // Slope behavior toward 0 decides the variant: bounded slope keeps the
    // plain 1/a weight, unbounded-but-signed slope switches to the damped one.
    auto slope = [&](double x) { return -model.a_dratio(x); };
    double near = 0.0, mid = 0.0, low = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 128; ++k) {
        const double x = x_bar * std::pow(10.0, -8.0 + 8.0 * k / 128.0);
        const double s = slope(x);
        if (x <= 1e-4 * x_bar) near = std::max(near, s);
        else mid = std::max(mid, s);
        if (x <= 1e-2 * x_bar) low = std::min(low, s);
    }
    const bool bounded = near <= 4.0 * mid + 1e-6;

    auto a_fun = model.a;
    const double cap = 1.0 / model.a(x_bar);
    if (bounded) {
        w.uses_decay_exponent = false;
        w.phi_times_a = [a_fun, x_bar, cap](double x) {
            return x <= x_bar ? 1.0 : a_fun(x) * cap;
        };
        w.phi = [a_fun, x_bar, cap](double x) {
            return x <= x_bar ? 1.0 / a_fun(x) : cap;
        };
        return w;
    }
    if (!(low > 0.0))
        throw hypothesis_error(
            "rate-ratio slope is unbounded toward 0 without a positive lower "
            "bound: no admissible weight");

    w.uses_decay_exponent = true;
    const double c_const = 0.5 * low;
    w.decay_constant = c_const;
    const double delta = w.margin;
    // Tabulate the damping exponent in the stretched coordinate, where the
    // integrand c / a + (b/a)' collapses to (c + a (b/a)') dy and stays
    // integrable even when the slope blows up at 0.
    const int cells = 512;
    const double y_bar = model.stretched(x_bar);
    std::vector<double> cum(cells + 1, 0.0);
    auto integrand = [&](double y) {
        const double x = model.stretched_inverse(y);
        return c_const + model.a_dratio(x);
    };
    for (int k = cells - 1; k >= 0; --k) {
        const double y0 = y_bar * k / cells, y1 = y_bar * (k + 1) / cells;
        cum[k] = cum[k + 1] +
                 detail::adaptive_gauss_kronrod(integrand, y0, y1, 1e-12).value;
    }
    auto stretch = [&model](double x) { return model.stretched(x); };
    auto exponent = [cum, y_bar, cells, stretch](double x) {
        const double y = stretch(x);
        if (y >= y_bar) return 0.0;
        const double pos = y / y_bar * cells;
        const int i = std::min(static_cast<int>(pos), cells - 1);
        const double frac = pos - i;
        return cum[i] + frac * (cum[i + 1] - cum[i]);
    };
    w.phi_times_a = [a_fun, x_bar, cap, exponent, delta](double x) {
        return x <= x_bar ? std::exp(-exponent(x) / delta) : a_fun(x) * cap;
    };
    auto pa = w.phi_times_a;
    w.phi = [a_fun, pa](double x) { return pa(x) / a_fun(x); };
    return w;
}

/// Distance between two runs at one time: monomer gap, tail-count gap at 0,
/// and the weighted L1 norm of the tail-count difference. This is the
/// quantity the continuous-dependence estimate propagates exponentially, so
/// identical inputs must give exactly zero and small input perturbations must
/// stay comparable to their initial distance on bounded intervals.
struct StabilityDistance {
    double monomer_gap = 0.0;
    double tail_gap_at_zero = 0.0;
    double weighted_tail_l1 = 0.0;
    double total() const { return monomer_gap + tail_gap_at_zero + weighted_tail_l1; }
};

inline StabilityDistance stability_distance(const SimulationResult& r1,
                                            const SimulationResult& r2, double t,
                                            const StabilityWeight& weight,
                                            int resolution = 768) {
    const KineticModel& model = r1.model();
    StabilityDistance d;
    d.monomer_gap = std::abs(r1.monomer(t) - r2.monomer(t));
    d.tail_gap_at_zero = std::abs(r1.count(t) - r2.count(t));

    DensitySnapshot s1 = r1.snapshot(t), s2 = r2.snapshot(t);
    const double hi = std::max(s1.support_hi(), s2.support_hi());
    if (!(hi > 0.0)) return d;

    // Joint node set: stretched-uniform below the cap (where the weighted
    // integrand is the plain tail difference), uniform above it.
    const double split = std::min(weight.x_bar, hi);
    const int half = std::max(8, resolution / 2);
    std::vector<double> xs;
    const double y_split = model.stretched(split);
    for (int j = 0; j <= half; ++j)
        xs.push_back(model.stretched_inverse(y_split * j / half));
    if (hi > split)
        for (int j = 1; j <= half; ++j)
            xs.push_back(split + (hi - split) * j / half);
    xs.front() = 0.0;

    const std::size_t n = xs.size();
    std::vector<double> diff(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = xs[j];
        diff[j] = x > 0.0 ? s1(x) - s2(x) : 0.0;
    }
    // Tail differences, accumulated from the right; below the cap the cell
    // integral runs in the stretched coordinate against diff * a.
    std::vector<double> tail(n, 0.0);
    for (std::size_t j = n - 1; j-- > 0;) {
        const double xa = xs[j], xb = xs[j + 1];
        double cell;
        if (xb <= split * (1.0 + 1e-12)) {
            const double ya = model.stretched(std::max(xa, 0.0));
            const double yb = model.stretched(xb);
            const double fa = xa > 0.0 ? diff[j] * model.a(xa) : diff[j + 1] * model.a(xb);
            cell = 0.5 * (fa + diff[j + 1] * model.a(xb)) * (yb - ya);
        } else {
            cell = 0.5 * (diff[j] + diff[j + 1]) * (xb - xa);
        }
        tail[j] = tail[j + 1] + cell;
    }
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const double xa = xs[j], xb = xs[j + 1];
        if (xb <= split * (1.0 + 1e-12)) {
            const double ya = model.stretched(std::max(xa, 0.0));
            const double yb = model.stretched(xb);
            const double ga = weight.phi_times_a(std::max(xa, 1e-300));
            const double gb = weight.phi_times_a(xb);
            acc += 0.5 * (ga * std::abs(tail[j]) + gb * std::abs(tail[j + 1])) *
                   (yb - ya);
        } else {
            acc += 0.5 * (weight.phi(xa) * std::abs(tail[j]) +
                          weight.phi(xb) * std::abs(tail[j + 1])) *
                   (xb - xa);
        }
    }
    d.weighted_tail_l1 = acc;
    return d;
}

/// Inflow trace condition: the advective flux limit at 0 recovered from
/// pointwise density values against the nucleation rate at the current
/// monomer level.
struct TraceReport {
    double max_gap = 0.0;        ///< worst |flux limit - nucleation rate|
    double max_relative = 0.0;   ///< same, scaled by 1 + nucleation rate
    double worst_time = 0.0;
};

inline TraceReport trace_condition(const SimulationResult& r,
                                   const std::vector<double>& times) {
    TraceReport rep;
    const KineticModel& model = r.model();
    for (double t : times) {
        DensitySnapshot snap = r.snapshot(t);
        const double u = r.monomer(t);
        const double target = u > model.ratio_limit ? model.nucleation(u) : 0.0;
        const double gap = std::abs(snap.boundary_flux_limit() - target);
        const double rel = gap / (1.0 + target);
        if (rel > rep.max_relative) {
            rep.max_relative = rel;
            rep.max_gap = gap;
            rep.worst_time = t;
        }
    }
    return rep;
}

/// A compactly supported space-time test function: a quartic bump in size
/// (boundary-touching when x_lo = 0, in which case the half-bump has value 1
/// and slope 0 at the boundary) times a smooth time profile.
struct SpaceTimeBump {
    double x_lo = 0.0;
    double x_hi = 1.0;
    int time_profile = 0; ///< 0: constant, 1: ramp, 2: fade-out, 3: fade-in

    double shape(double x) const {
        if (x_lo == 0.0) {
            if (x >= x_hi) return 0.0;
            const double s = x / x_hi;
            const double q = 1.0 - s * s;
            return q * q;
        }
        if (x <= x_lo || x >= x_hi) return 0.0;
        const double s = (2.0 * x - (x_lo + x_hi)) / (x_hi - x_lo);
        const double q = 1.0 - s * s;
        return q * q;
    }
    double shape_dx(double x) const {
        if (x_lo == 0.0) {
            if (x >= x_hi) return 0.0;
            const double s = x / x_hi;
            return -4.0 * s * (1.0 - s * s) / x_hi;
        }
        if (x <= x_lo || x >= x_hi) return 0.0;
        const double s = (2.0 * x - (x_lo + x_hi)) / (x_hi - x_lo);
        return -4.0 * s * (1.0 - s * s) * 2.0 / (x_hi - x_lo);
    }
    double profile(double t, double horizon) const {
        switch (time_profile) {
            case 1: return t / horizon;
            case 2: {
                const double c = std::cos(0.5 * M_PI * t / horizon);
                return c * c;
            }
            case 3: {
                const double s = std::sin(0.5 * M_PI * t / horizon);
                return s * s;
            }
            default: return 1.0;
        }
    }
    double profile_dt(double t, double horizon) const {
        switch (time_profile) {
            case 1: return 1.0 / horizon;
            case 2: return -0.5 * M_PI / horizon * std::sin(M_PI * t / horizon);
            case 3: return 0.5 * M_PI / horizon * std::sin(M_PI * t / horizon);
            default: return 0.0;
        }
    }

    double value(double t, double x, double horizon) const {
        return shape(x) * profile(t, horizon);
    }
    double dt(double t, double x, double horizon) const {
        return shape(x) * profile_dt(t, horizon);
    }
    double dx(double t, double x, double horizon) const {
        return shape_dx(x) * profile(t, horizon);
    }

    /// Sup norms of the function and both first derivatives, combined; the
    /// normalization used for weak-form residuals.
    double c1_norm(double horizon) const {
        const double shape_sup = 1.0;
        const double slope_sup = x_lo == 0.0
                                     ? 8.0 / (3.0 * std::sqrt(3.0)) / x_hi
                                     : 16.0 / (3.0 * std::sqrt(3.0)) / (x_hi - x_lo);
        double prof_sup = 1.0, rate_sup = 0.0;
        if (time_profile == 1) rate_sup = 1.0 / horizon;
        if (time_profile == 2 || time_profile == 3) rate_sup = 0.5 * M_PI / horizon;
        return shape_sup * prof_sup + shape_sup * rate_sup + slope_sup * prof_sup;
    }
};

/// The deterministic suite of 20 test bumps used by the weak-form check:
/// sixteen interior supports and four boundary-touching ones, cycling through
/// the four time profiles.
inline std::vector<SpaceTimeBump> default_bump_suite() {
    const double edges[16][2] = {
        {0.05, 0.6}, {0.2, 1.2}, {0.5, 2.5}, {1.0, 3.0}, {2.0, 5.0}, {0.8, 1.6},
        {1.5, 4.5},  {3.0, 6.0}, {0.1, 0.9}, {0.4, 1.1}, {0.7, 2.2}, {1.2, 2.8},
        {0.3, 3.3},  {2.5, 4.0}, {0.15, 2.0}, {0.6, 5.0}};
    std::vector<SpaceTimeBump> suite;
    for (int i = 0; i < 16; ++i)
        suite.push_back({edges[i][0], edges[i][1], i % 4});
    const double half_edges[4] = {0.5, 1.0, 2.0, 4.0};
    for (int i = 0; i < 4; ++i) suite.push_back({0.0, half_edges[i], i});
    return suite;
}

/// Pointwise density values on a shared space-time tensor grid, prepared once
/// and reused by every test function. Time panels follow the run's own grid
/// (the monomer path is piecewise linear, so integrands are smooth inside
/// each interval); size panels split at the separating size, the transported
/// jumps, and the bump knots.
class WeakFormSlices {
public:
    struct Slice {
        double t = 0.0;
        double time_weight = 0.0; ///< zero for the final-time slice
        double inflow = 0.0;      ///< nucleation rate at this time
        std::vector<double> x;
        std::vector<double> fw; ///< density value times quadrature weight
        std::vector<double> v;  ///< advective speed at the node
    };

    WeakFormSlices(const SimulationResult& r, double horizon,
                   const std::vector<SpaceTimeBump>& suite)
        : horizon_(horizon), start_(r.windows().front().start) {
        if (!(horizon > 0.0) || horizon > r.t_end() * (1.0 + 1e-12))
            throw degenerate_input_error("weak-form horizon outside the run");
        for (const SpaceTimeBump& b : suite) {
            if (b.x_lo > 0.0) knots_.push_back(b.x_lo);
            knots_.push_back(b.x_hi);
        }
        std::sort(knots_.begin(), knots_.end());
        knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());
        x_cap_ = knots_.back();

        std::vector<double> grid = detail::stitched_grid(r);
        std::vector<double> nodes;
        for (double g : grid) {
            if (g < horizon * (1.0 - 1e-12)) nodes.push_back(g);
        }
        nodes.push_back(horizon);
        const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            const double mid = 0.5 * (nodes[i] + nodes[i + 1]);
            const double h = nodes[i + 1] - nodes[i];
            for (int q = 0; q < 2; ++q) {
                const double t = mid + (q == 0 ? -1.0 : 1.0) * 0.5 * h * inv_sqrt3;
                slices_.push_back(build_slice(r, t, 0.5 * h));
            }
        }
        final_ = build_slice(r, horizon, 0.0);
    }

    double horizon() const { return horizon_; }
    const std::vector<Slice>& slices() const { return slices_; }
    const Slice& final_slice() const { return final_; }

    /// Weak-form residual of one test function against the stored values:
    /// final-time term minus initial term minus interior transport term minus
    /// boundary inflow term. Vanishes for an exact weak solution.
    double residual(const SpaceTimeBump& bump) const {
        const double T = horizon_;
        double interior = 0.0, boundary = 0.0;
        for (const Slice& s : slices_) {
            double space = 0.0;
            for (std::size_t k = 0; k < s.x.size(); ++k)
                space += s.fw[k] * (bump.dt(s.t, s.x[k], T) +
                                    s.v[k] * bump.dx(s.t, s.x[k], T));
            interior += s.time_weight * space;
            boundary += s.time_weight * s.inflow * bump.value(s.t, 0.0, T);
        }
        double final_term = 0.0;
        for (std::size_t k = 0; k < final_.x.size(); ++k)
            final_term += final_.fw[k] * bump.value(T, final_.x[k], T);

        double initial_term = 0.0;
        const InitialDensity& f0 = *start_;
        if (f0.support_hi() > f0.support_lo()) {
            const double lo = std::max(f0.support_lo(), bump.x_lo);
            const double hi = std::min(f0.support_hi(), std::min(bump.x_hi, x_cap_));
            if (hi > lo) {
                std::vector<double> cuts{lo, hi};
                for (double p : f0.breakpoints())
                    if (p > lo && p < hi) cuts.push_back(p);
                std::sort(cuts.begin(), cuts.end());
                double acc = 0.0;
                for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
                    acc += detail::adaptive_gl(
                               [&](double x) {
                                   return f0(x) * bump.value(0.0, x, T);
                               },
                               cuts[i], cuts[i + 1], 1e-11, 1e-14)
                               .value;
                initial_term = acc;
            }
        }
        return final_term - initial_term - interior - boundary;
    }

private:
    Slice build_slice(const SimulationResult& r, double t, double tw) const {
        const KineticModel& model = r.model();
        Slice s;
        s.t = t;
        s.time_weight = tw;
        const double u = r.monomer(t);
        s.inflow = u > model.ratio_limit ? model.nucleation(u) : 0.0;

        DensitySnapshot snap = r.snapshot(t);
        const double hi = std::min(snap.support_hi(), x_cap_);
        const double sep = std::min(snap.separating_size(), hi);
        const auto& rule = detail::gauss_legendre(4);

        auto push_node = [&](double x, double wq) {
            const double f = snap(x);
            if (f == 0.0 && x > hi) return;
            s.x.push_back(x);
            s.fw.push_back(wq * f);
            s.v.push_back(model.a(x) * u - model.b(x));
        };
        // Boundary-fed section in the stretched coordinate, where density
        // times attachment rate stays bounded down to 0.
        const double y_sep = sep > 0.0 ? model.stretched(sep) : 0.0;
        if (y_sep > 0.0) {
            std::vector<double> ycuts{0.0};
            for (double kx : knots_)
                if (kx < sep) ycuts.push_back(model.stretched(kx));
            ycuts.push_back(y_sep);
            std::sort(ycuts.begin(), ycuts.end());
            // Panel edges: the interval touching 0 is graded geometrically,
            // because freshly emitted density forms a layer of height
            // ~ nucleation / (u - ratio limit) whose width shrinks without
            // bound as a dissolution stop is approached.
            std::vector<double> edges{0.0, ycuts[1]};
            for (double e = ycuts[1] * 0.25; e > ycuts[1] * 1e-13; e *= 0.25)
                edges.push_back(e);
            for (std::size_t i = 1; i + 1 < ycuts.size(); ++i) {
                edges.push_back(0.5 * (ycuts[i] + ycuts[i + 1]));
                edges.push_back(ycuts[i + 1]);
            }
            std::sort(edges.begin(), edges.end());
            for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
                const double ya = edges[i];
                const double yb = edges[i + 1];
                if (!(yb > ya)) continue;
                for (int q = 0; q < 4; ++q) {
                    const double y =
                        0.5 * (ya + yb) + 0.5 * (yb - ya) * rule.nodes[q];
                    const double x = model.stretched_inverse(y);
                    push_node(x, 0.5 * (yb - ya) * rule.weights[q] * model.a(x));
                }
            }
        }
        // Transported section, also in the stretched coordinate, split at
        // jumps and bump knots. Near a dissolution stop the older
        // nucleation-fed profile steepens like an inverse power of the size,
        // so a geometric ladder of extra edges keeps panel widths
        // proportional to the distance from the boundary.
        if (hi > sep) {
            const double y_hi = model.stretched(hi);
            std::vector<double> yedges{model.stretched(sep), y_hi};
            for (double j : snap.jump_points())
                if (j > sep && j < hi) yedges.push_back(model.stretched(j));
            for (double kx : knots_)
                if (kx > sep && kx < hi) yedges.push_back(model.stretched(kx));
            const double y_lo = yedges.front();
            if (y_lo > 0.0)
                for (double e = 0.25 * y_hi;
                     e > std::max(2.0 * y_lo, 1e-13 * y_hi); e *= 0.25)
                    yedges.push_back(e);
            std::sort(yedges.begin(), yedges.end());
            for (std::size_t i = 0; i + 1 < yedges.size(); ++i) {
                for (int p = 0; p < 2; ++p) {
                    const double ya =
                        yedges[i] + (yedges[i + 1] - yedges[i]) * p / 2.0;
                    const double yb =
                        yedges[i] + (yedges[i + 1] - yedges[i]) * (p + 1) / 2.0;
                    if (!(yb > ya)) continue;
                    for (int q = 0; q < 4; ++q) {
                        const double y = 0.5 * (ya + yb) +
                                         0.5 * (yb - ya) * rule.nodes[q];
                        const double x = model.stretched_inverse(y);
                        push_node(x, 0.5 * (yb - ya) * rule.weights[q] * model.a(x));
                    }
                }
            }
        }
        return s;
    }

    double horizon_;
    double x_cap_ = 0.0;
    std::shared_ptr<const InitialDensity> start_;
    std::vector<double> knots_;
    std::vector<Slice> slices_;
    Slice final_;
};

/// Maximum weak-form residual per unit combined sup norm across the bump
/// suite.
struct WeakFormReport {
    double max_normalized = 0.0;
    std::size_t worst_bump = 0;
    std::vector<double> normalized;
};

inline WeakFormReport weak_form_suite(const SimulationResult& r, double horizon) {
    const std::vector<SpaceTimeBump> suite = default_bump_suite();
    WeakFormSlices slices(r, horizon, suite);
    WeakFormReport rep;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        const double norm =
            std::abs(slices.residual(suite[i])) / suite[i].c1_norm(horizon);
        rep.normalized.push_back(norm);
        if (norm > rep.max_normalized) {
            rep.max_normalized = norm;
            rep.worst_bump = i;
        }
    }
    return rep;
}

} // namespace lsn
