#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <vector>

#include "lsn/errors.hpp"

namespace lsn::detail {

template <std::size_t N>
using State = std::array<double, N>;

struct IntegrateOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-11;
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 2'000'000;
    /// Times (ordered in the direction of travel, strictly inside the span)
    /// where accepted steps must land exactly. Derivative discontinuities of
    /// the right-hand side go here; a step crossing one would otherwise
    /// defeat the error expansion the controller relies on.
    std::vector<double> stops{};
};

/// Dense-output polynomial of one accepted Dormand-Prince step, valid on
/// [s0, s0+h] (h signed). The interpolant is the standard fifth-order
/// continuous extension of the pair.
template <std::size_t N>
struct DenseSegment {
    double s0 = 0.0, h = 0.0;
    State<N> r1{}, r2{}, r3{}, r4{}, r5{};

    State<N> eval(double s) const {
        const double th = (s - s0) / h;
        const double th1 = 1.0 - th;
        State<N> y;
        for (std::size_t i = 0; i < N; ++i)
            y[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        return y;
    }
};

template <std::size_t N>
struct DriveResult {
    double s = 0.0;
    State<N> y{};
    bool event = false;
    long steps = 0;
};

/// Event functor that never fires; used when a plain integration is wanted.
struct NoEvent {
    template <std::size_t N>
    double operator()(double, const State<N>&) const {
        return 1.0;
    }
};

/// Sample sink that ignores everything.
struct NoSample {
    template <std::size_t N>
    void operator()(std::size_t, double, const State<N>&) const {}
};

namespace impl {

// Dormand-Prince 5(4) tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432.0,
                        d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0,
                        d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0,
                        d7 = 69997945.0 / 29380423.0;

} // namespace impl

/// Adaptive Dormand-Prince 5(4) driver with dense output.
///
/// Integrates dy/ds = rhs(s, y) from s0 to s1 (either direction). After each
/// accepted step the event monitor is evaluated at the step end; a sign change
/// from positive to <= 0 stops the run at the dense-output root of the monitor.
/// Sorted sample times (in the direction of travel) are emitted from the dense
/// interpolant as the integration passes them; samples past an event are not
/// emitted. The monitor must be positive at s0.
template <std::size_t N, class RHS, class Event = NoEvent, class Sample = NoSample>
DriveResult<N> integrate(RHS&& rhs, double s0, State<N> y0, double s1,
                         const IntegrateOptions& opt, Event&& event = Event{},
                         const std::vector<double>& sample_times = {},
                         Sample&& sample = Sample{}) {
    using namespace impl;
    DriveResult<N> out;
    out.s = s0;
    out.y = y0;
    std::size_t next_sample = 0;
    const double dir = (s1 > s0) ? 1.0 : (s1 < s0 ? -1.0 : 0.0);
    if (dir == 0.0) {
        for (; next_sample < sample_times.size(); ++next_sample)
            sample(next_sample, s0, y0);
        return out;
    }

    State<N> k1, k2, k3, k4, k5, k6, k7, yt, ynew, yerr;
    rhs(s0, y0, k1);
    std::size_t next_stop = 0;

    // Initial step from the scaled magnitudes of y and f.
    double h;
    {
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = opt.abs_tol + opt.rel_tol * std::abs(y0[i]);
            d0 += (y0[i] / sc) * (y0[i] / sc);
            d1 += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / N);
        d1 = std::sqrt(d1 / N);
        h = (d0 > 1e-10 && d1 > 1e-10) ? 0.01 * d0 / d1 : 1e-6 * std::abs(s1 - s0);
        // Floor against the span: a tiny state with ordinary velocity would
        // otherwise suggest a step below the underflow guard before the
        // controller ever gets to act. Starting too large is harmless (the
        // first rejection shrinks it), starting too small is fatal.
        h = std::max(h, 1e-7 * std::abs(s1 - s0));
        h = std::min({h, std::abs(s1 - s0), opt.max_step});
        if (h <= 0.0 || !std::isfinite(h)) h = 1e-6 * std::abs(s1 - s0);
        h *= dir;
    }

    double s = s0;
    State<N> y = y0;
    double g_prev = event(s, y);

    for (long step = 0;; ++step) {
        if (step >= opt.max_steps) {
            std::ostringstream msg;
            msg << "integrator exceeded " << opt.max_steps << " steps at s=" << s
                << ", y0=" << y[0];
            throw integrator_error(msg.str());
        }
        if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(s))) {
            std::ostringstream msg;
            msg << "integrator step underflow at s=" << s << ", y0=" << y[0]
                << ", h=" << h;
            throw integrator_error(msg.str());
        }
        bool last = false;
        if ((s + h - s1) * dir >= 0.0) {
            h = s1 - s;
            last = true;
        }
        while (next_stop < opt.stops.size() &&
               (opt.stops[next_stop] - s) * dir <=
                   1e-14 * std::max(1.0, std::abs(s)))
            ++next_stop;
        if (next_stop < opt.stops.size()) {
            const double st = opt.stops[next_stop];
            if ((s + h - st) * dir > 0.0 &&
                (s1 - st) * dir > 1e-14 * std::max(1.0, std::abs(s1))) {
                h = st - s;
                last = false;
            }
        }

        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + h * a21 * k1[i];
        rhs(s + c2 * h, yt, k2);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(s + c3 * h, yt, k3);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(s + c4 * h, yt, k4);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(s + c5 * h, yt, k5);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] +
                    h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                         a65 * k5[i]);
        rhs(s + h, yt, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] +
                                  a75 * k5[i] + a76 * k6[i]);
        rhs(s + h, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            yerr[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                           e6 * k6[i] + e7 * k7[i]);
            const double sc =
                opt.abs_tol + opt.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += (yerr[i] / sc) * (yerr[i] / sc);
        }
        err = std::sqrt(err / N);

        if (!(err <= 1.0) || !std::isfinite(ynew[0])) {
            const double fac =
                std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.2;
            h *= fac;
            continue;
        }

        // Accepted: build the dense segment before advancing.
        DenseSegment<N> seg;
        seg.s0 = s;
        seg.h = h;
        for (std::size_t i = 0; i < N; ++i) {
            const double dy = ynew[i] - y[i];
            const double bspl = h * k1[i] - dy;
            seg.r1[i] = y[i];
            seg.r2[i] = dy;
            seg.r3[i] = bspl;
            seg.r4[i] = dy - h * k7[i] - bspl;
            seg.r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                             d6 * k6[i] + d7 * k7[i]);
        }

        const double s_new = s + h;
        double stop_s = s_new;
        State<N> stop_y = ynew;
        bool fired = false;
        const double g_new = event(s_new, ynew);
        if (g_prev > 0.0 && g_new <= 0.0) {
            // Bisect the dense output for the monitor root.
            double lo = s, hi = s_new;
            for (int it = 0; it < 80 && std::abs(hi - lo) >
                                            1e-15 * std::max(1.0, std::abs(s_new));
                 ++it) {
                const double mid = 0.5 * (lo + hi);
                if (event(mid, seg.eval(mid)) > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            stop_s = hi;
            stop_y = seg.eval(hi);
            fired = true;
        }

        while (next_sample < sample_times.size() &&
               (sample_times[next_sample] - stop_s) * dir <= 0.0 &&
               (sample_times[next_sample] - s) * dir >= 0.0) {
            const double ts = sample_times[next_sample];
            sample(next_sample, ts, seg.eval(ts));
            ++next_sample;
        }

        out.steps = step + 1;
        if (fired) {
            out.s = stop_s;
            out.y = stop_y;
            out.event = true;
            return out;
        }
        s = s_new;
        y = ynew;
        k1 = k7; // FSAL
        g_prev = g_new;
        if (last) {
            out.s = s;
            out.y = y;
            return out;
        }
        const double fac =
            std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
        h *= fac;
        if (std::abs(h) > opt.max_step) h = opt.max_step * dir;
    }
}

} // namespace lsn::detail
