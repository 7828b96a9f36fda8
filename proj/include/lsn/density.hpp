#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "lsn/detail/interp.hpp"
#include "lsn/detail/quadrature.hpp"
#include "lsn/errors.hpp"

namespace lsn {

/// Description of a size distribution at a fixed time: an evaluator together
/// with support bounds, the locations where the profile is non-smooth, and
/// cached number (m0) and mass (m1) moments.
///
/// Instances are immutable; factories cover the supported families. Composed
/// window restarts wrap an evaluator with externally computed moments through
/// from_function_with_moments.
class InitialDensity {
public:
    enum class Kind { zero, indicator, power_exp, tabulated, custom };

    /// Default-constructs as the zero density.
    InitialDensity() : eval_([](double) { return 0.0; }) {}

    static InitialDensity zero() { return InitialDensity{}; }

    /// c on [x1, x2], zero elsewhere.
    static InitialDensity indicator(double c, double x1, double x2) {
        if (!(c >= 0.0) || !(x2 > x1) || !(x1 >= 0.0))
            throw error("indicator density needs c >= 0 and 0 <= x1 < x2");
        InitialDensity d;
        d.kind_ = Kind::indicator;
        d.eval_ = [c, x1, x2](double x) { return (x >= x1 && x <= x2) ? c : 0.0; };
        d.lo_ = x1;
        d.hi_ = x2;
        d.breakpoints_ = {x1, x2};
        d.jumps_ = {x1, x2};
        d.m0_ = c * (x2 - x1);
        d.m1_ = 0.5 * c * (x2 * x2 - x1 * x1);
        return d;
    }

    /// c * x^p * exp(-q x) on (0, x_cut], zero beyond; needs p > -1 for a
    /// finite number moment.
    static InitialDensity power_exp(double c, double p, double q, double x_cut) {
        if (!(c >= 0.0) || !(p > -1.0) || !(x_cut > 0.0))
            throw error("power_exp density needs c >= 0, p > -1, x_cut > 0");
        InitialDensity d;
        d.kind_ = Kind::power_exp;
        d.eval_ = [c, p, q, x_cut](double x) {
            if (x <= 0.0 || x > x_cut) return 0.0;
            return c * std::pow(x, p) * std::exp(-q * x);
        };
        d.lo_ = 0.0;
        d.hi_ = x_cut;
        d.breakpoints_ = {x_cut};
        if (c > 0.0) d.jumps_ = {x_cut};
        auto m0 = detail::adaptive_gl([&](double x) { return d.eval_(x); }, 0.0,
                                      x_cut, 1e-12, 1e-14);
        auto m1 = detail::adaptive_gl([&](double x) { return x * d.eval_(x); }, 0.0,
                                      x_cut, 1e-12, 1e-14);
        d.m0_ = m0.value;
        d.m1_ = m1.value;
        return d;
    }

    /// Piecewise-linear profile through (xs, fs); zero outside [xs.front(),
    /// xs.back()]. Moments are the exact integrals of the interpolant.
    static InitialDensity tabulated(std::vector<double> xs, std::vector<double> fs) {
        auto interp =
            std::make_shared<detail::PiecewiseLinear>(std::move(xs), std::move(fs));
        const auto& gx = interp->abscissas();
        const auto& gf = interp->ordinates();
        for (double v : gf)
            if (!(v >= 0.0)) throw error("tabulated density must be nonnegative");
        InitialDensity d;
        d.kind_ = Kind::tabulated;
        const double lo = gx.front(), hi = gx.back();
        d.eval_ = [interp, lo, hi](double x) {
            if (x < lo || x > hi) return 0.0;
            return std::max(0.0, (*interp)(x));
        };
        d.lo_ = lo;
        d.hi_ = hi;
        d.breakpoints_ = {lo, hi};
        double m0 = 0.0, m1 = 0.0;
        for (std::size_t i = 0; i + 1 < gx.size(); ++i) {
            const double h = gx[i + 1] - gx[i];
            m0 += 0.5 * h * (gf[i] + gf[i + 1]);
            // Exact first moment of the linear segment.
            m1 += h / 6.0 *
                  (gf[i] * (2.0 * gx[i] + gx[i + 1]) + gf[i + 1] * (gx[i] + 2.0 * gx[i + 1]));
        }
        d.m0_ = m0;
        d.m1_ = m1;
        return d;
    }

    /// Arbitrary evaluator on [lo, hi]; moments are computed by adaptive
    /// quadrature split at the given non-smooth points.
    static InitialDensity from_function(std::function<double(double)> f, double lo,
                                        double hi, std::vector<double> breakpoints = {},
                                        std::vector<double> jumps = {}) {
        InitialDensity d = assemble(std::move(f), lo, hi, std::move(breakpoints));
        d.jumps_ = std::move(jumps);
        double m0 = 0.0, m1 = 0.0;
        for (auto [a, b] : d.panels()) {
            m0 += detail::adaptive_gl([&](double x) { return d.eval_(x); }, a, b, 1e-11,
                                      1e-13)
                      .value;
            m1 += detail::adaptive_gl([&](double x) { return x * d.eval_(x); }, a, b,
                                      1e-11, 1e-13)
                      .value;
        }
        d.m0_ = m0;
        d.m1_ = m1;
        return d;
    }

    /// Same as from_function but with moments already known to the caller
    /// (window restarts carry them over exactly instead of requadrating).
    static InitialDensity from_function_with_moments(std::function<double(double)> f,
                                                     double lo, double hi,
                                                     std::vector<double> breakpoints,
                                                     double m0, double m1,
                                                     std::vector<double> jumps = {}) {
        InitialDensity d = assemble(std::move(f), lo, hi, std::move(breakpoints));
        d.jumps_ = std::move(jumps);
        d.m0_ = m0;
        d.m1_ = m1;
        return d;
    }

    double operator()(double x) const { return eval_(x); }

    Kind kind() const { return kind_; }
    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }
    double m0() const { return m0_; }
    double m1() const { return m1_; }

    /// Interior points where the profile has kinks or jumps; quadratures split
    /// their panels here.
    const std::vector<double>& breakpoints() const { return breakpoints_; }

    /// Locations of genuine jump discontinuities (reported, not resolved, by
    /// pointwise snapshot evaluation).
    const std::vector<double>& jumps() const { return jumps_; }

    /// Support split into quadrature panels at the breakpoints.
    std::vector<std::pair<double, double>> panels() const {
        std::vector<double> cuts{lo_};
        for (double b : breakpoints_)
            if (b > lo_ && b < hi_) cuts.push_back(b);
        cuts.push_back(hi_);
        std::sort(cuts.begin(), cuts.end());
        std::vector<std::pair<double, double>> out;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            if (cuts[i + 1] > cuts[i]) out.emplace_back(cuts[i], cuts[i + 1]);
        return out;
    }

private:
    static InitialDensity assemble(std::function<double(double)> f, double lo,
                                   double hi, std::vector<double> breakpoints) {
        if (!(hi >= lo) || !(lo >= 0.0))
            throw error("density support must satisfy 0 <= lo <= hi");
        InitialDensity d;
        d.kind_ = Kind::custom;
        auto fn = std::move(f);
        d.eval_ = [fn, lo, hi](double x) {
            if (x < lo || x > hi) return 0.0;
            return fn(x);
        };
        d.lo_ = lo;
        d.hi_ = hi;
        d.breakpoints_ = std::move(breakpoints);
        std::sort(d.breakpoints_.begin(), d.breakpoints_.end());
        return d;
    }

    Kind kind_ = Kind::zero;
    std::function<double(double)> eval_;
    double lo_ = 0.0, hi_ = 0.0;
    double m0_ = 0.0, m1_ = 0.0;
    std::vector<double> breakpoints_;
    std::vector<double> jumps_;
};

} // namespace lsn
