#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <sstream>
#include <utility>
#include <vector>

#include "lsn/characteristics.hpp"
#include "lsn/density.hpp"
#include "lsn/detail/interp.hpp"
#include "lsn/errors.hpp"
#include "lsn/kinetics.hpp"
#include "lsn/transport.hpp"

namespace lsn {

struct SolverConfig {
    /// Window length for the fixed-point coupling; 0 picks 0.25 divided by
    /// the sublinearity constant, which keeps the iteration a contraction.
    double window_length = 0.0;
    /// Time grid step inside a window; 0 picks window_length / 64.
    double time_grid_step = 0.0;
    /// Absolute tolerance (scaled by max(1, |u|)) on the fixed-point iterate.
    double fp_tolerance = 1e-6;
    int max_iterations = 48;
    IntegratorSettings integrator{};
    /// The run stops when u - limit falls below this fraction of the initial
    /// excess (only when finite-time dissolution is possible at all).
    double stop_threshold_factor = 1e-3;
    /// Composed window-start densities are flattened onto a stretched grid
    /// once their evaluation chain exceeds this many windows. Evaluating a
    /// chained density costs one characteristic trace per window in the
    /// chain, so this bounds both cost and recursion depth.
    int resample_depth = 6;
    int resample_points = 2048;
    long max_windows = 20000;
};

/// One accepted window of the solution: the converged monomer values on the
/// window grid, the characteristic flow built from them, and the moment
/// series they imply. The stored monomer values satisfy u + M1 = total mass
/// identically; the fixed-point residual lives between these values and the
/// path the flow was built from.
struct WindowRecord {
    std::vector<double> grid;
    std::vector<double> u;
    std::vector<double> mass;
    std::vector<double> count;
    std::vector<double> du;       ///< du/dt from the moment of b - a u
    std::vector<double> a_moment; ///< moment of the attachment rate a
    std::shared_ptr<const CharacteristicSolution> flow;
    std::shared_ptr<const InitialDensity> start;
    int iterations = 0;
    double residual = 0.0;
};

class SimulationResult {
public:
    SimulationResult(KineticModel model, double total_mass, double stop_threshold,
                     bool dissolution_possible)
        : model_(std::move(model)), rho_(total_mass), stop_threshold_(stop_threshold),
          dissolution_possible_(dissolution_possible) {}

    const KineticModel& model() const { return model_; }
    double total_mass() const { return rho_; }
    double dissolution_limit() const { return model_.rate_ratio_limit(); }

    /// Stop threshold on u - limit; crossing it ends the run when finite-time
    /// dissolution is possible.
    double stop_threshold() const { return stop_threshold_; }

    /// False when the rate ratio never drops below its boundary limit, which
    /// certifies that the monomer level can approach the limit only
    /// asymptotically; the stop detector is disabled in that regime.
    bool dissolution_possible() const { return dissolution_possible_; }

    bool reached_stop() const { return reached_stop_; }

    /// Time at which u crossed the stop threshold (the numerical proxy for
    /// the end of the supersaturated regime); only meaningful after
    /// reached_stop().
    double stop_time() const { return stop_time_; }

    double t_end() const { return windows_.back().grid.back(); }
    const std::vector<WindowRecord>& windows() const { return windows_; }

    double monomer(double t) const { return interp(t, &WindowRecord::u); }
    double mass(double t) const { return interp(t, &WindowRecord::mass); }
    double count(double t) const { return interp(t, &WindowRecord::count); }
    double monomer_rate(double t) const { return interp(t, &WindowRecord::du); }

    /// Moment of the attachment rate against the density, interpolated in t.
    double attachment_moment(double t) const {
        return interp(t, &WindowRecord::a_moment);
    }

    /// Pointwise density representation at any covered time.
    DensitySnapshot snapshot(double t) const {
        const WindowRecord& w = locate(t);
        return DensitySnapshot(w.flow, w.start, t);
    }

    const WindowRecord& locate(double t) const {
        if (windows_.empty()) throw error("empty simulation result");
        for (const auto& w : windows_)
            if (t <= w.grid.back() * (1.0 + 1e-12) || &w == &windows_.back())
                return w;
        return windows_.back();
    }

    void append(WindowRecord w) { windows_.push_back(std::move(w)); }
    void mark_stopped(double t) {
        reached_stop_ = true;
        stop_time_ = t;
    }

private:
    double interp(double t, std::vector<double> WindowRecord::*field) const {
        const WindowRecord& w = locate(t);
        const auto& g = w.grid;
        const auto& v = w.*field;
        const double tc = std::clamp(t, g.front(), g.back());
        const std::size_t i = detail::interval_index(g, tc);
        const double th = (tc - g[i]) / (g[i + 1] - g[i]);
        return v[i] + th * (v[i + 1] - v[i]);
    }

    KineticModel model_;
    double rho_;
    double stop_threshold_;
    bool dissolution_possible_;
    bool reached_stop_ = false;
    double stop_time_ = 0.0;
    std::vector<WindowRecord> windows_;
};

namespace detail {

struct WindowAttempt {
    bool converged = false;
    std::vector<double> grid, u, mass, count, du, a_moment;
    std::shared_ptr<const CharacteristicSolution> flow;
    std::size_t clamp_free = 0; ///< largest index with the safeguard inactive
    int iterations = 0;
    double residual = 0.0;
};

/// Piecewise-linear tables between prescribed segment edges. Segments are
/// sampled independently, so discontinuities and kinks that sit on an edge
/// survive the tabulation exactly (one-sided limits, no smearing).
class SegmentedTable {
public:
    SegmentedTable(std::vector<double> edges, std::vector<PiecewiseLinear> tables)
        : edges_(std::move(edges)), tables_(std::move(tables)) {}

    double operator()(double y) const {
        std::size_t k = interval_index(edges_, y);
        return tables_[k](y);
    }

private:
    std::vector<double> edges_;
    std::vector<PiecewiseLinear> tables_;
};

} // namespace detail

/// Solves the coupled size-distribution / monomer problem with nucleation
/// inflow by windowed fixed-point iteration on the monomer history.
///
/// Within each window the candidate history v is mapped to
/// G(v) = total_mass - M1[v], where M1[v] is the mass of the density
/// transported along the characteristics of v; a fixed point is the
/// conservative solution. The map contracts on windows short against the
/// sublinearity constant. G is safeguarded from below at limit + excess/4 so
/// every iterate stays a valid inflow history; grid times where the
/// safeguard engaged are never accepted, only the clamp-free prefix is.
class Solver {
public:
    Solver(KineticModel model, InitialDensity f_in, double total_mass,
           SolverConfig config = {})
        : model_(std::move(model)), rho_(total_mass), config_(config) {
        f_in_ = std::make_shared<InitialDensity>(std::move(f_in));
        limit_ = model_.rate_ratio_limit();
        u_in_ = rho_ - f_in_->m1();
        base_window_ = config_.window_length > 0.0
                           ? config_.window_length
                           : 0.25 / std::max(model_.sublinearity, 1e-12);
        grid_step_ = config_.time_grid_step > 0.0 ? config_.time_grid_step
                                                  : base_window_ / 64.0;
        stop_eps_ = config_.stop_threshold_factor * (u_in_ - limit_);
        if (!(u_in_ > limit_) || !(stop_eps_ > 0.0)) {
            std::ostringstream msg;
            msg << "initial monomer level " << u_in_
                << " does not exceed the small-size rate-ratio limit " << limit_
                << "; no supersaturated regime to solve";
            throw degenerate_input_error(msg.str());
        }
        // Dissolution in finite time requires the rate ratio to dip below its
        // boundary limit somewhere; otherwise u stays above the limit forever
        // and the stop detector must not fire on slow asymptotic decay.
        double min_ratio = limit_;
        for (int i = 0; i < 512; ++i) {
            const double x = std::pow(10.0, -8.0 + 12.0 * i / 511.0);
            min_ratio = std::min(min_ratio, model_.rate_ratio(x));
        }
        dissolution_possible_ = min_ratio < limit_ - 1e-12 * (1.0 + std::abs(limit_));
    }

    double initial_monomer() const { return u_in_; }
    double stop_threshold() const { return stop_eps_; }
    bool dissolution_possible() const { return dissolution_possible_; }

    SimulationResult solve(double horizon) {
        if (!(horizon > 0.0)) throw config_error("horizon must be positive");
        SimulationResult result(model_, rho_, stop_eps_, dissolution_possible_);

        double t = 0.0;
        double u_now = u_in_;
        double slope = 0.0;
        auto f0 = f_in_;
        int depth = 0;
        double window = base_window_;
        const double window_min = 1e-3 * base_window_;
        const double refine_floor = base_window_ / 64.0;

        for (long iter = 0; t < horizon - 1e-9 * std::max(1.0, horizon); ++iter) {
            if (iter >= config_.max_windows)
                throw window_failure_error(
                    "window count limit reached before the horizon");
            const double len = std::min(window, horizon - t);
            detail::WindowAttempt at;
            bool failed = false;
            try {
                at = attempt_window(*f0, t, len, u_now, slope);
            } catch (const inflow_violation_error&) {
                failed = true;
            } catch (const integrator_error&) {
                failed = true;
            }
            if (failed || !at.converged || at.clamp_free == 0) {
                if (len <= window_min * (1.0 + 1e-9)) {
                    if (!failed && dissolution_possible_) {
                        // The monomer level cannot be advanced past t; the
                        // supersaturated regime ends here.
                        result.mark_stopped(t);
                        break;
                    }
                    throw window_failure_error(
                        "window iteration failed at the minimum window length");
                }
                window = std::max(0.5 * len, window_min);
                continue;
            }

            std::size_t accept = at.clamp_free;
            bool stop_after = false;
            double stop_time = 0.0;
            if (dissolution_possible_) {
                std::size_t crossing = 0;
                for (std::size_t j = 1; j <= at.clamp_free; ++j) {
                    if (at.u[j] - limit_ <= stop_eps_) {
                        crossing = j;
                        break;
                    }
                }
                if (crossing > 0) {
                    if (len > refine_floor * (1.0 + 1e-9)) {
                        // Zoom in on the crossing with shorter windows before
                        // committing to a stop time.
                        accept = crossing - 1;
                        window = std::max(len / 8.0, refine_floor);
                        if (accept == 0) continue;
                    } else {
                        accept = crossing;
                        const double ua = at.u[crossing - 1] - limit_;
                        const double ub = at.u[crossing] - limit_;
                        const double th =
                            (ua - stop_eps_) / std::max(ua - ub, 1e-300);
                        stop_time = at.grid[crossing - 1] +
                                    th * (at.grid[crossing] - at.grid[crossing - 1]);
                        stop_after = true;
                    }
                }
            }
            if (!stop_after && at.clamp_free < at.grid.size() - 1) {
                // The safeguard engaged beyond the accepted prefix: the level
                // is crashing, shorten the next window.
                window = std::max(len / 4.0, window_min);
            } else if (!stop_after) {
                window = std::min(base_window_, 2.0 * window);
            }

            WindowRecord rec;
            rec.grid.assign(at.grid.begin(), at.grid.begin() + accept + 1);
            rec.u.assign(at.u.begin(), at.u.begin() + accept + 1);
            rec.mass.assign(at.mass.begin(), at.mass.begin() + accept + 1);
            rec.count.assign(at.count.begin(), at.count.begin() + accept + 1);
            rec.du.assign(at.du.begin(), at.du.begin() + accept + 1);
            rec.a_moment.assign(at.a_moment.begin(), at.a_moment.begin() + accept + 1);
            rec.flow = at.flow;
            rec.start = f0;
            rec.iterations = at.iterations;
            rec.residual = at.residual;
            result.append(std::move(rec));

            const WindowRecord& acc = result.windows().back();
            t = acc.grid.back();
            u_now = acc.u.back();
            slope = acc.du.back();
            if (stop_after) {
                result.mark_stopped(stop_time);
                break;
            }
            if (t < horizon - 1e-9 * std::max(1.0, horizon)) {
                f0 = compose_start(acc, depth);
            }
        }
        if (result.windows().empty())
            throw window_failure_error("no window could be accepted");
        return result;
    }

private:
    detail::WindowAttempt attempt_window(const InitialDensity& f0, double t_a,
                                         double len, double u_start,
                                         double slope) const {
        detail::WindowAttempt at;
        const int n = std::clamp(static_cast<int>(std::lround(len / grid_step_)), 8,
                                 4096);
        at.grid.resize(n + 1);
        for (int i = 0; i <= n; ++i) at.grid[i] = t_a + len * i / n;
        at.grid.back() = t_a + len;

        const auto nodes = WindowNodes::build(model_, f0, at.grid);
        const double floor = limit_ + 0.25 * (u_start - limit_);

        std::vector<double> v(n + 1);
        for (int i = 0; i <= n; ++i)
            v[i] = std::max(u_start + slope * (at.grid[i] - t_a), floor);

        const double tol = config_.fp_tolerance * std::max(1.0, std::abs(u_start));
        double damping = 1.0;
        double prev_residual = std::numeric_limits<double>::infinity();
        std::shared_ptr<CharacteristicSolution> cs;
        std::unique_ptr<WindowPushforward> push;
        std::vector<double> g(n + 1);
        for (int it = 0; it < config_.max_iterations; ++it) {
            cs = std::make_shared<CharacteristicSolution>(
                model_, MonomerPath(at.grid, v), config_.integrator);
            push = std::make_unique<WindowPushforward>(*cs, nodes);
            double residual = 0.0;
            g[0] = u_start;
            for (int i = 1; i <= n; ++i) {
                g[i] = std::max(rho_ - push->mass(i), floor);
                residual = std::max(residual, std::abs(g[i] - v[i]));
            }
            at.iterations = it + 1;
            at.residual = residual;
            if (residual <= tol) {
                v = g;
                at.converged = true;
                break;
            }
            if (residual > prev_residual) damping = 0.5;
            prev_residual = residual;
            for (int i = 0; i <= n; ++i) v[i] += damping * (g[i] - v[i]);
        }
        if (!at.converged) return at;

        // Final self-consistent pass: rebuild the flow from the converged
        // history and read every reported series from it. Reported u is
        // exactly total mass minus reported mass on the clamp-free prefix.
        cs = std::make_shared<CharacteristicSolution>(model_, MonomerPath(at.grid, v),
                                                      config_.integrator);
        push = std::make_unique<WindowPushforward>(*cs, nodes);
        at.flow = cs;
        at.u.resize(n + 1);
        at.mass.resize(n + 1);
        at.count.resize(n + 1);
        at.du.resize(n + 1);
        at.a_moment.resize(n + 1);
        at.clamp_free = n;
        for (int i = 0; i <= n; ++i) {
            at.mass[i] = push->mass(i);
            at.count[i] = push->count(i);
            at.u[i] = i == 0 ? u_start : rho_ - at.mass[i];
            if (i > 0 && at.u[i] < floor) {
                at.u[i] = floor;
                at.clamp_free = std::min(at.clamp_free, static_cast<std::size_t>(i) - 1);
            }
            const double ui = at.u[i];
            at.du[i] = push->moment(
                [&](double x) { return model_.b(x) - model_.a(x) * ui; }, i);
            at.a_moment[i] = push->moment([&](double x) { return model_.a(x); }, i);
        }
        return at;
    }

    std::shared_ptr<const InitialDensity> compose_start(const WindowRecord& rec,
                                                        int& depth) const {
        const double t1 = rec.grid.back();
        auto snap = std::make_shared<DensitySnapshot>(rec.flow, rec.start, t1);
        const double m0 = rec.count.back();
        const double m1 = rec.mass.back();
        const double hi = snap->support_hi();
        ++depth;
        if (depth < config_.resample_depth) {
            std::vector<double> cuts;
            for (double p : snap->split_points())
                if (p > 0.0 && p < hi) cuts.push_back(p);
            return std::make_shared<InitialDensity>(
                InitialDensity::from_function_with_moments(
                    [snap](double x) { return (*snap)(x); }, 0.0, hi, cuts, m0, m1,
                    snap->jump_points()));
        }
        // Flatten the evaluation chain: tabulate density times attachment
        // rate in the stretched coordinate (bounded there even when the
        // density blows up at the small-size boundary). Kinks and jumps of
        // the profile sit on segment edges, so the tabulation keeps them
        // sharp; within a segment the profile is smooth and piecewise-linear
        // sampling converges quadratically.
        depth = 0;
        std::vector<double> cuts, jumps;
        for (double p : snap->split_points())
            if (p > 0.0 && p < hi) cuts.push_back(p);
        for (double p : snap->jump_points())
            if (p > 0.0 && p < hi) jumps.push_back(p);
        std::vector<double> edges{0.0};
        for (double p : cuts) edges.push_back(model_.stretched(p));
        const double y_hi = model_.stretched(hi);
        edges.push_back(y_hi);
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end(),
                                [y_hi](double p, double q) {
                                    return q - p < 1e-9 * std::max(1.0, y_hi);
                                }),
                    edges.end());
        const int np = std::max(config_.resample_points, 64);
        // Each segment gets the larger of a length-proportional uniform
        // share and a log-extent-proportional share of the budget, sampled
        // log-uniformly in the latter case. Near a dissolution stop the
        // profile steepens like an inverse power of the distance to the
        // boundary, and only log spacing keeps the relative accuracy of the
        // tabulation uniform across those decades.
        double log_total = 0.0;
        for (std::size_t k = 0; k + 1 < edges.size(); ++k)
            if (edges[k] > 0.0) log_total += std::log(edges[k + 1] / edges[k]);
        std::vector<lsn::detail::PiecewiseLinear> tables;
        for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
            const double ya = edges[k];
            const double yb = edges[k + 1];
            const int m_len =
                static_cast<int>(std::lround(np * (yb - ya) / y_hi));
            const bool log_spaced = ya > 0.0 && log_total > 0.0;
            const int m_log =
                log_spaced ? static_cast<int>(std::lround(
                                 np * std::log(yb / ya) / log_total))
                           : 0;
            // A segment touching 0 holds the freshest boundary layer in a
            // sliver of the stretched range; its length-proportional share
            // rounds to nothing, so give it a fixed floor instead.
            const int m = std::max(log_spaced ? 8 : 128, std::max(m_len, m_log));
            std::vector<double> ys(m), gs(m);
            for (int i = 0; i < m; ++i) {
                // Sample strictly inside the segment; the table extrapolates
                // its end slopes onto the edges, preserving one-sided limits.
                ys[i] = log_spaced && m_log >= m_len
                            ? ya * std::exp(std::log(yb / ya) * (i + 0.5) / m)
                            : ya + (yb - ya) * (i + 0.5) / m;
                const double x = model_.stretched_inverse(ys[i]);
                gs[i] = (*snap)(x) * model_.a(x);
            }
            tables.emplace_back(std::move(ys), std::move(gs));
        }
        auto table = std::make_shared<lsn::detail::SegmentedTable>(
            std::move(edges), std::move(tables));
        auto a_fun = model_.a;
        auto stretch = model_.stretch;
        return std::make_shared<InitialDensity>(
            InitialDensity::from_function_with_moments(
                [table, a_fun, stretch, hi](double x) {
                    if (x <= 0.0 || x > hi) return 0.0;
                    return std::max(0.0, (*table)(stretch(x))) / a_fun(x);
                },
                0.0, hi, cuts, m0, m1, jumps));
    }

    KineticModel model_;
    double rho_;
    SolverConfig config_;
    std::shared_ptr<const InitialDensity> f_in_;
    double limit_ = 0.0;
    double u_in_ = 0.0;
    double base_window_ = 0.0;
    double grid_step_ = 0.0;
    double stop_eps_ = 0.0;
    bool dissolution_possible_ = false;
};

/// One-call interface: solve the nucleation inflow problem to the horizon.
inline SimulationResult solve_nucleation_problem(const KineticModel& model,
                                                 const InitialDensity& f_in,
                                                 double total_mass, double horizon,
                                                 const SolverConfig& config = {}) {
    Solver s(model, f_in, total_mass, config);
    return s.solve(horizon);
}

} // namespace lsn
