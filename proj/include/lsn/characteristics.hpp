#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <utility>
#include <vector>

#include "lsn/detail/interp.hpp"
#include "lsn/detail/rk45.hpp"
#include "lsn/errors.hpp"
#include "lsn/kinetics.hpp"

namespace lsn {

/// Piecewise-linear monomer history over a time window. Evaluation outside
/// the window clamps to the endpoint values so integrator trial stages that
/// overshoot the window edges see a continuous, bounded signal.
class MonomerPath {
public:
    MonomerPath() = default;

    MonomerPath(std::vector<double> times, std::vector<double> values)
        : table_(std::move(times), std::move(values)) {
        min_ = *std::min_element(table_.ordinates().begin(), table_.ordinates().end());
    }

    static MonomerPath constant(double value, double t_begin, double t_end) {
        return MonomerPath({t_begin, t_end}, {value, value});
    }

    double operator()(double t) const {
        return table_(std::clamp(t, t_begin(), t_end()));
    }

    double t_begin() const { return table_.abscissas().front(); }
    double t_end() const { return table_.abscissas().back(); }

    /// Smallest value over the window; attained at a node since the path is
    /// piecewise linear.
    double min_value() const { return min_; }

    const detail::PiecewiseLinear& table() const { return table_; }

private:
    detail::PiecewiseLinear table_;
    double min_ = 0.0;
};

struct IntegratorSettings {
    double rel_tol = 1e-9;
    double abs_tol = 1e-11;
};

/// Endpoint of a characteristic trace. `log_scale` is the exponent P
/// accumulated along the travel direction with dP/ds = -(a [b/a]')(x(s));
/// together with the rate ratio a(end)/a(start) it yields the volume
/// derivative of the flow map, and at the boundary the hitting-time
/// derivative. Traces that reach the inflow boundary stop there with
/// `hit_boundary` set and `position` zero.
struct TraceResult {
    double time = 0.0;      ///< time the trace ended at (hit_time when it hit)
    double position = 0.0;  ///< size coordinate at `time`
    double log_scale = 0.0; ///< accumulated derivative exponent
    bool hit_boundary = false;
    double hit_time = 0.0;
};

/// Characteristic flow of the size-transport field a(x) u(t) - b(x) over one
/// monomer window, with the derivative bookkeeping needed to transport
/// densities along it.
///
/// Near the boundary the size coordinate is traded for the stretched
/// coordinate y with dy = dx / a(x), in which trajectories approach the
/// boundary with velocity u - b/a bounded away from zero; this removes the
/// degeneracy of vanishing attachment rates and makes the boundary hit an
/// ordinary transversal event. Construction certifies the inward-flow margin
/// on a small-size zone and refuses windows whose monomer level does not stay
/// above the small-size rate ratio.
class CharacteristicSolution {
public:
    static constexpr double boundary_epsilon = 1e-12;

    CharacteristicSolution(KineticModel model, MonomerPath path,
                           IntegratorSettings settings = {})
        : model_(std::move(model)), path_(std::move(path)) {
        opts_.rel_tol = settings.rel_tol;
        opts_.abs_tol = settings.abs_tol;

        // Certify a zone (0, x0] on which the growth speed in the stretched
        // coordinate, u(t) - b(x)/a(x), stays positive over the whole window;
        // halve the zone until the sampled margin is positive.
        const double u_min = path_.min_value();
        const double limit = model_.rate_ratio_limit();
        double x0 = 1.0;
        double margin = 0.0;
        bool certified = false;
        for (int halve = 0; halve < 60 && !certified; ++halve) {
            double sup = limit;
            for (int i = 0; i < 96; ++i) {
                const double x = x0 * std::pow(10.0, -8.0 * (1.0 - i / 95.0));
                sup = std::max(sup, model_.rate_ratio(x));
            }
            margin = u_min - sup;
            if (margin > 0.0)
                certified = true;
            else
                x0 *= 0.5;
        }
        if (!certified) {
            std::ostringstream msg;
            msg << "monomer level (min " << u_min
                << ") does not exceed the small-size rate ratio (limit " << limit
                << "); the inflow boundary condition cannot hold on this window";
            throw inflow_violation_error(msg.str());
        }
        zone_size_ = x0;
        inflow_margin_ = 0.5 * margin;
        y_switch_ = 0.25 * std::min(1.0, model_.stretched(x0));
        x_switch_ = model_.stretched_inverse(y_switch_);
        x_floor_ = std::max(model_.stretched_inverse(0.5 * boundary_epsilon), 1e-250);
    }

    const KineticModel& model() const { return model_; }
    const MonomerPath& path() const { return path_; }
    double window_begin() const { return path_.t_begin(); }
    double window_end() const { return path_.t_end(); }

    /// Certified inward-flow margin: u(t) - b/a >= 2 * inflow_margin() on the
    /// zone (0, zone_size()] for all window times.
    double inflow_margin() const { return inflow_margin_; }
    double zone_size() const { return zone_size_; }

    /// Size below which traces run in the stretched coordinate.
    double switch_size() const { return x_switch_; }

    double growth_rate(double t, double x) const {
        return model_.a(x) * path_(t) - model_.b(x);
    }

    /// Follows the characteristic through (t_from, x_from) to time t_to
    /// (either direction), stopping early at the boundary.
    TraceResult trace(double t_from, double x_from, double t_to) const {
        return run(t_from, x_from, t_to, {},
                   [](std::size_t, double, double, double) {});
    }

    /// Follows the characteristic emitted from the boundary at time s.
    TraceResult trace_from_boundary(double s, double t_to) const {
        return run(s, 0.0, t_to, {},
                   [](std::size_t, double, double, double) {});
    }

    /// As trace(), additionally reporting the state at each requested time.
    /// Times must be sorted in the direction of travel; the sink receives
    /// (index, time, position, log_scale). Times past a boundary hit are not
    /// reported.
    template <class Sink>
    TraceResult trace_samples(double t_from, double x_from, double t_to,
                              const std::vector<double>& times, Sink&& sink) const {
        return run(t_from, x_from, t_to, times, std::forward<Sink>(sink));
    }

    template <class Sink>
    TraceResult trace_boundary_samples(double s, double t_to,
                                       const std::vector<double>& times,
                                       Sink&& sink) const {
        return run(s, 0.0, t_to, times, std::forward<Sink>(sink));
    }

    /// Size separating boundary-fed sizes from those carrying initial data:
    /// the position at time t of the characteristic emitted from the boundary
    /// at the window start.
    double separating_size(double t) const {
        return trace_from_boundary(window_begin(), t).position;
    }

    /// Time at which the backward characteristic from (t, x) leaves through
    /// the boundary. Throws if the trace stays interior over the window.
    double hitting_time(double t, double x) const {
        return require_hit(t, x).hit_time;
    }

    /// Magnitude of the size derivative of the hitting time; the factor that
    /// turns the nucleation inflow into interior density.
    double hitting_time_derivative(double t, double x) const {
        return boundary_density_factor(require_hit(t, x), x);
    }

    /// Volume derivative of the flow map for an interior trace started at
    /// x_from: d(end position)/d(start position).
    double jacobian(const TraceResult& r, double x_from) const {
        return model_.a(r.position) / model_.a(x_from) * std::exp(r.log_scale);
    }

    /// |d(hit_time)/dx| for a boundary-hitting backward trace from x_from.
    /// The attachment rate at the boundary cancels exactly, leaving the rate
    /// at the starting size.
    double boundary_density_factor(const TraceResult& r, double x_from) const {
        const double w = path_(r.hit_time) - model_.rate_ratio_limit();
        return std::exp(r.log_scale) / (model_.a(x_from) * w);
    }

    /// |d(position at t)/d(emission time s)| for a forward trace from the
    /// boundary; the change-of-variables factor for boundary-fed integrals.
    double boundary_map_derivative(const TraceResult& fwd, double s_emit) const {
        const double w = path_(s_emit) - model_.rate_ratio_limit();
        return model_.a(fwd.position) * w * std::exp(fwd.log_scale);
    }

private:
    enum class Frame { size, stretched };

    TraceResult require_hit(double t, double x) const {
        auto r = trace(t, x, window_begin());
        if (!r.hit_boundary) {
            std::ostringstream msg;
            msg << "backward characteristic from (t=" << t << ", x=" << x
                << ") stays interior over the window";
            throw error(msg.str());
        }
        return r;
    }

    template <class Sink>
    TraceResult run(double s_from, double x_from, double s_to,
                    const std::vector<double>& times, Sink&& sink) const {
        TraceResult out;
        out.time = s_from;
        out.position = x_from;
        const double dir = (s_to >= s_from) ? 1.0 : -1.0;

        Frame frame;
        if (x_from > x_switch_)
            frame = Frame::size;
        else if (x_from < x_switch_)
            frame = Frame::stretched;
        else
            frame = (dir > 0.0) ? Frame::size : Frame::stretched;
        double pos = (frame == Frame::size)
                         ? x_from
                         : model_.stretched(std::max(x_from, 0.0));

        // A backward trace starting essentially on the boundary hits at once;
        // the stretched velocity gives the first-order hitting time.
        if (dir < 0.0 && frame == Frame::stretched && pos <= 2.0 * boundary_epsilon) {
            const double w =
                std::max(path_(s_from) - model_.rate_ratio_limit(), inflow_margin_);
            out.hit_boundary = true;
            out.hit_time = s_from - pos / w;
            out.time = out.hit_time;
            out.position = 0.0;
            return out;
        }

        auto rhs_size = [this](double t, const detail::State<2>& y,
                               detail::State<2>& d) {
            // Trial stages of the step that crosses the frame switch may
            // probe below it; clamping keeps the rates finite there without
            // touching accepted in-frame states.
            const double x = std::max(y[0], 0.25 * x_switch_);
            d[0] = model_.a(x) * path_(t) - model_.b(x);
            d[1] = -model_.a_dratio(x);
        };
        auto rhs_stretched = [this](double t, const detail::State<2>& y,
                                    detail::State<2>& d) {
            const double x = std::max(
                model_.stretched_inverse(std::max(y[0], 0.5 * boundary_epsilon)),
                x_floor_);
            d[0] = path_(t) - model_.rate_ratio(x);
            d[1] = -model_.a_dratio(x);
        };

        // Land integrator steps exactly on the monomer path's interior nodes:
        // the growth field's time derivative jumps there, and a step spanning
        // a jump loses the order the controller assumes.
        detail::IntegrateOptions opts = opts_;
        {
            const double lo = std::min(s_from, s_to);
            const double hi = std::max(s_from, s_to);
            for (double k : path_.table().abscissas())
                if (k > lo && k < hi) opts.stops.push_back(k);
            if (dir < 0.0) std::reverse(opts.stops.begin(), opts.stops.end());
        }

        double s = s_from;
        double P = 0.0;
        std::size_t emitted = 0;
        for (int segment = 0;; ++segment) {
            if (segment > 8)
                throw integrator_error(
                    "characteristic trace kept switching frames; the growth field "
                    "is inconsistent with the certified inward-flow zone");
            const Frame cur = frame;
            std::vector<double> seg_times(times.begin() + emitted, times.end());
            auto emit = [&](std::size_t i, double si, const detail::State<2>& yv) {
                const double xv =
                    (cur == Frame::size)
                        ? yv[0]
                        : model_.stretched_inverse(std::max(yv[0], 0.0));
                sink(emitted + i, si, xv, yv[1]);
            };
            detail::DriveResult<2> r;
            if (cur == Frame::size) {
                if (dir < 0.0) {
                    auto ev = [this](double, const detail::State<2>& y) {
                        return y[0] - x_switch_;
                    };
                    r = detail::integrate<2>(rhs_size, s, {pos, P}, s_to, opts, ev,
                                             seg_times, emit);
                } else {
                    r = detail::integrate<2>(rhs_size, s, {pos, P}, s_to, opts,
                                             detail::NoEvent{}, seg_times, emit);
                }
            } else {
                if (dir < 0.0) {
                    auto ev = [](double, const detail::State<2>& y) {
                        return y[0] - boundary_epsilon;
                    };
                    r = detail::integrate<2>(rhs_stretched, s, {pos, P}, s_to, opts,
                                             ev, seg_times, emit);
                } else {
                    auto ev = [this](double, const detail::State<2>& y) {
                        return y_switch_ - y[0];
                    };
                    r = detail::integrate<2>(rhs_stretched, s, {pos, P}, s_to, opts,
                                             ev, seg_times, emit);
                }
            }
            while (emitted < times.size() && (times[emitted] - r.s) * dir <= 0.0)
                ++emitted;
            s = r.s;
            P = r.y[1];
            if (r.event) {
                if (cur == Frame::size) {
                    frame = Frame::stretched;
                    pos = model_.stretched(std::max(r.y[0], 0.0));
                    continue;
                }
                if (dir > 0.0) {
                    frame = Frame::size;
                    pos = model_.stretched_inverse(r.y[0]);
                    continue;
                }
                // Backward boundary hit; extrapolate the residual stretched
                // distance with the (non-degenerate) boundary velocity.
                const double w = std::max(path_(s) - model_.rate_ratio_limit(),
                                          inflow_margin_);
                out.hit_boundary = true;
                out.hit_time = s - std::max(r.y[0], 0.0) / w;
                out.time = out.hit_time;
                out.position = 0.0;
                out.log_scale = P;
                return out;
            }
            out.time = s;
            out.log_scale = P;
            out.position = (cur == Frame::size)
                               ? r.y[0]
                               : model_.stretched_inverse(std::max(r.y[0], 0.0));
            return out;
        }
    }

    KineticModel model_;
    MonomerPath path_;
    detail::IntegrateOptions opts_;
    double zone_size_ = 1.0;
    double inflow_margin_ = 0.0;
    double y_switch_ = 0.0;
    double x_switch_ = 0.0;
    double x_floor_ = 0.0;
};

} // namespace lsn
