#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lsn/detail/interp.hpp"
#include "lsn/detail/quadrature.hpp"
#include "lsn/errors.hpp"

namespace lsn {

/// Family tag of a kinetic model. classical_ls (a ~ x^{1/3}, b ~ 1) is
/// recognized by the configuration vocabulary but rejected at construction:
/// its rate ratio diverges at 0, so the nucleation inflow regime this library
/// solves does not exist for it.
enum class RateFamily { power_law, classical_ls, tabulated, custom };

namespace detail {

/// Power closure with the common exponents special-cased; pow() dominates the
/// characteristic inner loops otherwise.
inline std::function<double(double)> make_pow(double c, double e) {
    if (c == 0.0) return [](double) { return 0.0; };
    if (e == 0.0) return [c](double) { return c; };
    if (e == 1.0) return [c](double x) { return c * x; };
    if (e == 0.5) return [c](double x) { return c * std::sqrt(x); };
    if (e == 1.0 / 3.0) return [c](double x) { return c * std::cbrt(x); };
    if (e == 2.0 / 3.0) return [c](double x) { return c * std::cbrt(x * x); };
    return [c, e](double x) { return c * std::pow(x, e); };
}

} // namespace detail

/// Aggregation kinetics: attachment rate a, detachment rate b, nucleation
/// inflow rate as a function of the monomer concentration, and the derived
/// objects the characteristic machinery needs (the rate ratio b/a with its
/// limit at 0, the stretched size coordinate integrating 1/a, and the
/// exponent integrand a * d(b/a)/dx).
///
/// Assembled by the make_* factories below; treat instances as immutable
/// afterwards. All closures are pure, so a model can be shared across threads.
struct KineticModel {
    RateFamily family = RateFamily::custom;

    std::function<double(double)> a;  ///< attachment rate, x > 0
    std::function<double(double)> b;  ///< detachment rate, x > 0
    std::function<double(double)> da; ///< a'
    std::function<double(double)> db; ///< b'
    std::function<double(double)> nucleation; ///< inflow rate n(u), u >= ratio_limit

    /// b/a evaluated stably (returns ratio_limit at x = 0).
    std::function<double(double)> ratio;
    /// a(x) * d(b/a)/dx; the integrand of the jacobian and hitting-time
    /// exponents. Stays integrable along trajectories whenever b/a has
    /// integrable variation near 0.
    std::function<double(double)> a_dratio;
    /// Stretched size coordinate: x -> integral of 1/a over (0, x].
    std::function<double(double)> stretch;
    /// Inverse of the stretched coordinate.
    std::function<double(double)> stretch_inv;

    double ratio_limit = 0.0;   ///< limit of b/a at 0+ (dissolution threshold)
    double sublinearity = 0.0;  ///< K with a + b <= K (1 + x)

    // Power-law parameters, meaningful when family == power_law.
    double a0 = 0.0, alpha = 0.0, b0 = 0.0, beta = 0.0;
    // Power nucleation parameters (n(u) = n0 * u^n) when built that way.
    double nucl_n0 = 0.0, nucl_n = 1.0;

    /// Checked rate ratio b/a; throws where a vanishes on x > 0 (degenerate
    /// model input). At x = 0 the limit value is returned: the ratio is a
    /// pointwise-evaluable closure here, which is stricter than continuity of
    /// b/a alone but is what every built-in family provides anyway.
    double rate_ratio(double x) const {
        if (x == 0.0) return ratio_limit;
        if (!(a(x) > 0.0)) {
            std::ostringstream msg;
            msg << "rate ratio undefined at x=" << x << " (a(x) not positive)";
            throw degenerate_input_error(msg.str());
        }
        return ratio(x);
    }

    double rate_ratio_limit() const { return ratio_limit; }

    /// Stretched coordinate and its inverse, with round-trip accuracy 1e-10
    /// over [1e-8, 1e4] for the closed-form families.
    double stretched(double x) const { return stretch(x); }
    double stretched_inverse(double y) const { return stretch_inv(y); }
};

/// Nucleation closure n(u) = n0 * u^n.
inline std::function<double(double)> power_nucleation(double n0, double n) {
    if (!(n0 >= 0.0)) throw invalid_model_error("nucleation amplitude must be >= 0");
    auto p = detail::make_pow(n0, n);
    return [p](double u) { return p(std::max(u, 0.0)); };
}

/// Power-law kinetics a = a0 x^alpha, b = b0 x^beta.
///
/// Requires a0 > 0, b0 >= 0, 0 <= alpha <= beta <= 1 and alpha < 1.
/// alpha > beta is rejected: b/a then diverges at 0 (outflow regime, no
/// nucleation inflow problem to solve). alpha >= 1 is rejected because 1/a
/// loses integrability at 0 and the stretched coordinate does not exist.
inline KineticModel make_power_law(double a0, double alpha, double b0, double beta,
                                   std::function<double(double)> nucleation = {}) {
    if (!(a0 > 0.0)) throw invalid_model_error("power-law attachment needs a0 > 0");
    if (!(b0 >= 0.0)) throw invalid_model_error("power-law detachment needs b0 >= 0");
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(beta <= 1.0))
        throw invalid_model_error("power-law exponents must lie in [0, 1]");
    if (alpha >= 1.0)
        throw invalid_model_error(
            "alpha >= 1: 1/a is not integrable at 0, the stretched coordinate "
            "does not exist");
    if (alpha > beta)
        throw invalid_model_error(
            "alpha > beta: rate ratio diverges at 0 (outflow regime), outside "
            "the scope of the nucleation inflow problem");

    KineticModel m;
    m.family = RateFamily::power_law;
    m.a0 = a0;
    m.alpha = alpha;
    m.b0 = b0;
    m.beta = beta;
    m.a = detail::make_pow(a0, alpha);
    m.b = detail::make_pow(b0, beta);
    m.da = detail::make_pow(a0 * alpha, alpha - 1.0);
    m.db = detail::make_pow(b0 * beta, beta - 1.0);
    m.ratio_limit = (beta > alpha) ? 0.0 : b0 / a0;
    m.ratio = detail::make_pow(b0 / a0, beta - alpha);
    m.a_dratio = detail::make_pow(b0 * (beta - alpha), beta - 1.0);
    const double s = 1.0 - alpha;
    m.stretch = [a0, s](double x) { return std::pow(x, s) / (a0 * s); };
    m.stretch_inv = [a0, s](double y) { return std::pow(a0 * s * y, 1.0 / s); };
    if (alpha == 0.0) {
        m.stretch = [a0](double x) { return x / a0; };
        m.stretch_inv = [a0](double y) { return a0 * y; };
    } else if (alpha == 0.5) {
        m.stretch = [a0](double x) { return 2.0 * std::sqrt(x) / a0; };
        m.stretch_inv = [a0](double y) {
            const double r = 0.5 * a0 * y;
            return r * r;
        };
    }
    m.sublinearity = a0 + b0; // x^g <= 1 + x for g in [0, 1]
    m.nucleation = nucleation ? std::move(nucleation) : [](double) { return 0.0; };
    return m;
}

/// Optional overrides for make_custom; anything left empty is derived
/// numerically (finite differences for derivatives, quadrature tabulation for
/// the stretched coordinate).
struct CustomRateOptions {
    std::function<double(double)> da, db;
    std::function<double(double)> ratio;
    std::function<double(double)> a_dratio;
    std::function<double(double)> stretch, stretch_inv;
    std::optional<double> sublinearity;
    double tab_x_max = 2e4; ///< tabulation range when stretch is derived
};

namespace detail {

inline std::function<double(double)> fd_derivative(std::function<double(double)> f) {
    return [f](double x) {
        const double h = 1e-6 * (std::abs(x) + 1e-6);
        return (f(x + h) - f(x - h)) / (2.0 * h);
    };
}

/// Tabulates the stretched coordinate of a positive rate closure on a log
/// grid and interpolates monotonically; outside the table the integral is
/// extended by live quadrature.
struct StretchTable {
    MonotoneCubic fwd, inv;
    std::function<double(double)> a;
    double x_lo, x_hi, y_lo, y_hi;

    static std::shared_ptr<StretchTable> build(std::function<double(double)> a,
                                               double x_max) {
        auto tbl = std::make_shared<StretchTable>();
        tbl->a = a;
        const int n = 2048;
        tbl->x_lo = 1e-10;
        tbl->x_hi = x_max;
        std::vector<double> xs(n), ys(n);
        auto head = adaptive_gauss_kronrod([&](double z) { return 1.0 / a(z); }, 0.0,
                                           tbl->x_lo, 1e-14);
        if (!head.converged || !(head.value >= 0.0))
            throw hypothesis_error(
                "1/a is not integrable at 0; cannot build the stretched coordinate");
        double acc = head.value;
        double prev = tbl->x_lo;
        const double ratio = std::pow(x_max / tbl->x_lo, 1.0 / (n - 1));
        for (int i = 0; i < n; ++i) {
            const double x = tbl->x_lo * std::pow(ratio, i);
            if (i > 0) {
                auto seg = adaptive_gauss_kronrod(
                    [&](double z) { return 1.0 / a(z); }, prev, x, 1e-13);
                acc += seg.value;
                prev = x;
            }
            xs[i] = x;
            ys[i] = acc;
        }
        tbl->y_lo = ys.front();
        tbl->y_hi = ys.back();
        // Exact node derivatives: d(stretch)/dx = 1/a, d(inverse)/dy = a.
        std::vector<double> dfwd(n), dinv(n);
        for (int i = 0; i < n; ++i) {
            dinv[i] = a(xs[i]);
            dfwd[i] = 1.0 / dinv[i];
        }
        tbl->fwd = MonotoneCubic(xs, ys, dfwd);
        tbl->inv = MonotoneCubic(ys, xs, dinv);
        return tbl;
    }

    double forward(double x) const {
        if (x <= 0.0) return 0.0;
        if (x < x_lo) return y_lo * (x / x_lo); // 1/a ~ const below the table
        if (x > x_hi)
            return y_hi + adaptive_gauss_kronrod([&](double z) { return 1.0 / a(z); },
                                                 x_hi, x, 1e-12)
                              .value;
        return fwd(x);
    }

    double inverse(double y) const {
        if (y <= 0.0) return 0.0;
        if (y < y_lo) return x_lo * (y / y_lo);
        if (y > y_hi) {
            // Newton from the table edge; 1/a is the exact derivative.
            double x = x_hi;
            for (int i = 0; i < 200; ++i) {
                const double r = forward(x) - y;
                if (std::abs(r) < 1e-12 * (1.0 + y)) break;
                x -= r * a(x);
            }
            return x;
        }
        return inv(y);
    }
};

} // namespace detail

/// Kinetics from arbitrary rate closures. ratio_limit (the limit of b/a at 0)
/// is declared by the caller; hypothesis validation cross-checks it against
/// the numerical limit and records a failure on mismatch > 1e-6.
inline KineticModel make_custom(std::function<double(double)> a,
                                std::function<double(double)> b,
                                std::function<double(double)> nucleation,
                                double ratio_limit, CustomRateOptions opt = {}) {
    if (!a || !b) throw invalid_model_error("custom model needs both rate closures");
    KineticModel m;
    m.family = RateFamily::custom;
    m.a = a;
    m.b = b;
    m.da = opt.da ? opt.da : detail::fd_derivative(a);
    m.db = opt.db ? opt.db : detail::fd_derivative(b);
    m.ratio_limit = ratio_limit;
    if (opt.ratio) {
        m.ratio = opt.ratio;
    } else {
        m.ratio = [a, b, ratio_limit](double x) {
            if (x <= 0.0) return ratio_limit;
            const double ax = a(x);
            return ax > 0.0 ? b(x) / ax : ratio_limit;
        };
    }
    if (opt.a_dratio) {
        m.a_dratio = opt.a_dratio;
    } else {
        auto dr = detail::fd_derivative(m.ratio);
        m.a_dratio = [a, dr](double x) { return a(x) * dr(x); };
    }
    if (opt.stretch && opt.stretch_inv) {
        m.stretch = opt.stretch;
        m.stretch_inv = opt.stretch_inv;
    } else {
        auto tbl = detail::StretchTable::build(a, opt.tab_x_max);
        m.stretch = [tbl](double x) { return tbl->forward(x); };
        m.stretch_inv = [tbl](double y) { return tbl->inverse(y); };
    }
    if (opt.sublinearity) {
        m.sublinearity = *opt.sublinearity;
    } else {
        double k = 0.0;
        for (int i = 0; i <= 256; ++i) {
            const double x = std::pow(10.0, -8.0 + 12.0 * i / 256.0);
            k = std::max(k, (a(x) + b(x)) / (1.0 + x));
        }
        m.sublinearity = 1.05 * k;
    }
    m.nucleation = nucleation ? std::move(nucleation) : [](double) { return 0.0; };
    return m;
}

/// Kinetics from a sampled rate table (strictly increasing sizes, linear
/// interpolation, end segments extended with constant slope).
inline KineticModel make_tabulated(std::vector<double> xs, std::vector<double> as,
                                   std::vector<double> bs,
                                   std::function<double(double)> nucleation,
                                   double ratio_limit) {
    auto ta = std::make_shared<detail::PiecewiseLinear>(xs, std::move(as));
    auto tb = std::make_shared<detail::PiecewiseLinear>(std::move(xs), std::move(bs));
    CustomRateOptions opt;
    opt.da = [ta](double x) { return ta->slope(x); };
    opt.db = [tb](double x) { return tb->slope(x); };
    KineticModel m = make_custom([ta](double x) { return (*ta)(x); },
                                 [tb](double x) { return std::max(0.0, (*tb)(x)); },
                                 std::move(nucleation), ratio_limit, std::move(opt));
    m.family = RateFamily::tabulated;
    return m;
}

/// One decided hypothesis with the evidence used to decide it.
struct HypothesisCheck {
    std::string name;
    bool pass = false;
    bool required = false; ///< failing a required check blocks the solver
    double margin = 0.0;   ///< worst-case margin over the sample set
    std::string detail;
};

/// Outcome of the structural-hypothesis scan for a scenario
/// (model + total mass + initial moments).
struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    double u_in = 0.0;              ///< rho - m1_in
    double ratio_limit_numeric = 0.0;
    double nucleation_lipschitz = 0.0; ///< estimated Lipschitz bound of n on [ratio_limit, rho]
    bool nucleation_lipschitz_ok = false;

    bool all_required_pass() const {
        for (const auto& c : checks)
            if (c.required && !c.pass) return false;
        return true;
    }

    const HypothesisCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    std::string summary() const {
        std::ostringstream os;
        for (const auto& c : checks) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6g", c.margin);
            os << (c.pass ? "PASS " : "FAIL ") << c.name << " margin=" << buf;
            if (!c.detail.empty()) os << " (" << c.detail << ")";
            os << "\n";
        }
        return os.str();
    }
};

namespace detail {

inline std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    const double r = std::log(hi / lo) / (n - 1);
    for (int i = 0; i < n; ++i) g[i] = lo * std::exp(r * i);
    return g;
}

} // namespace detail

/// Scans the structural hypotheses the solution theory rests on and returns a
/// pass/fail record per hypothesis with margins. Failures are recorded, never
/// thrown; the nonlinear solver refuses to run when a required check fails.
///
/// The scan samples 512 log-spaced sizes on [1e-8, 1e4] plus 128 near-zero
/// points, and probes the two integrability conditions (1/a and the variation
/// of b/a on (0,1)) with adaptive Gauss-Kronrod quadrature at absolute
/// tolerance 1e-10: a divergent integrand exhausts the subdivision budget and
/// fails the check.
inline HypothesisReport validate_hypotheses(const KineticModel& m, double rho,
                                            double m0_in, double m1_in) {
    HypothesisReport rep;
    const auto grid = detail::log_grid(1e-8, 1e4, 512);
    const auto near0 = detail::log_grid(1e-8, 1.0, 128);

    auto push = [&](std::string name, bool pass, bool required, double margin,
                    std::string det) {
        rep.checks.push_back(
            {std::move(name), pass, required, margin, std::move(det)});
    };

    { // H1: rates finite and nonnegative.
        bool ok = true;
        double amin = std::numeric_limits<double>::infinity();
        for (double x : grid) {
            const double ax = m.a(x), bx = m.b(x);
            if (!std::isfinite(ax) || !std::isfinite(bx) || ax < 0.0 || bx < 0.0)
                ok = false;
            amin = std::min(amin, ax);
        }
        push("H1_rates_finite_nonnegative", ok, true, amin, "min a over grid");
    }

    { // H2: a', b' bounded away from the origin.
        double mx = 0.0;
        bool ok = true;
        for (double x : grid) {
            if (x <= 1.0) continue;
            const double dax = m.da(x), dbx = m.db(x);
            if (!std::isfinite(dax) || !std::isfinite(dbx)) ok = false;
            mx = std::max({mx, std::abs(dax), std::abs(dbx)});
        }
        push("H2_rate_derivatives_bounded", ok, true, mx,
             "max |a'|,|b'| on (1, 1e4]");
    }

    { // H3: a > 0 on (0, inf) and 1/a integrable at 0.
        bool positive = true;
        for (double x : grid)
            if (!(m.a(x) > 0.0)) positive = false;
        auto probe = detail::adaptive_gauss_kronrod(
            [&](double x) { return 1.0 / m.a(x); }, 0.0, 1.0, 1e-10);
        push("H3_inverse_rate_integrable", positive && probe.converged, true,
             probe.value, positive ? "integral of 1/a over (0,1)" : "a vanishes");
    }

    { // H4: variation of the rate ratio integrable near 0.
        auto probe = detail::adaptive_gauss_kronrod(
            [&](double x) {
                const double ax = m.a(x);
                return ax > 0.0 ? std::abs(m.a_dratio(x)) / ax : 0.0;
            },
            0.0, 1.0, 1e-10);
        push("H4_ratio_variation_integrable", probe.converged, true, probe.value,
             "integral of |d(b/a)/dx| over (0,1)");
    }

    const double u_hi = std::max(rho, m.ratio_limit + 1.0);
    { // H5: nucleation finite and nonnegative on the reachable range.
        bool ok = true;
        double mn = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 128; ++i) {
            const double u = m.ratio_limit + (u_hi - m.ratio_limit) * i / 128.0;
            const double nu = m.nucleation(u);
            if (!std::isfinite(nu) || nu < 0.0) ok = false;
            mn = std::min(mn, nu);
        }
        push("H5_nucleation_continuous", ok, true, mn, "min n(u) on range");
    }

    { // H5 (local Lipschitz variant): finite-difference slope stability.
        double k1 = 0.0, k2 = 0.0;
        const double span = u_hi - m.ratio_limit;
        for (int i = 0; i <= 128; ++i) {
            const double u = m.ratio_limit + span * i / 128.0;
            const double h1 = span / 256.0, h2 = span / 2048.0;
            k1 = std::max(k1, std::abs(m.nucleation(u + h1) - m.nucleation(u)) / h1);
            k2 = std::max(k2, std::abs(m.nucleation(u + h2) - m.nucleation(u)) / h2);
        }
        const bool stable = std::isfinite(k2) && (k2 <= 3.0 * std::max(k1, 1e-12));
        rep.nucleation_lipschitz = k2;
        rep.nucleation_lipschitz_ok = stable;
        push("H5_nucleation_lipschitz", stable, false, k2,
             "FD slope bound, stability across refinement");
    }

    { // H6: initial data has finite number and mass.
        const bool ok = std::isfinite(m0_in) && std::isfinite(m1_in) &&
                        m0_in >= 0.0 && m1_in >= 0.0;
        push("H6_initial_moments_finite", ok, true, m1_in, "m1 of initial data");
    }

    rep.u_in = rho - m1_in;
    { // H7: initial monomer concentration above the dissolution threshold.
        const double margin = rep.u_in - m.ratio_limit;
        push("H7_supersaturated_start", margin > 0.0, true, margin,
             "u_in - ratio limit");
    }

    { // H8 family: sign of the ratio slope near 0.
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        bool finite = true;
        for (double x : near0) {
            const double v = -m.a_dratio(x); // positive = attraction toward 0
            if (!std::isfinite(v)) finite = false;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const bool monotone = finite && (lo >= -1e-12 || hi <= 1e-12);
        std::string dir = !finite ? "non-finite slope"
                          : (hi <= 1e-12 && lo >= -1e-12)
                              ? "flat"
                              : (lo >= -1e-12 ? "decreasing ratio" : "increasing ratio");
        push("H8_ratio_monotone_near_zero", monotone, false,
             std::min(std::abs(lo), std::abs(hi)), dir);
        push("H8a_bounded_attraction", finite, false,
             finite ? 2.0 * std::max(0.0, hi) + 1.0 : 0.0,
             "admissible C bound for the 1/a weight");
        push("H8b_uniform_attraction", finite && lo > 0.0, false,
             finite && lo > 0.0 ? 0.5 * lo : 0.0,
             "admissible C bound for the exponential weight");
    }

    { // Declared ratio limit vs numerical limit. The closed-form families fix
      // the limit by construction; the numeric cross-check targets
      // user-declared limits of custom and tabulated rates.
        if (m.family == RateFamily::power_law) {
            rep.ratio_limit_numeric = m.ratio_limit;
            push("ratio_limit_consistent", true, true, 0.0, "closed form");
        } else {
            const double num = m.ratio(1e-8);
            rep.ratio_limit_numeric = num;
            const double err = std::abs(num - m.ratio_limit);
            push("ratio_limit_consistent",
                 err <= 1e-6 * (1.0 + std::abs(m.ratio_limit)), true, err,
                 "|ratio(1e-8) - declared limit|");
        }
    }

    { // Sublinearity certificate a + b <= K (1 + x).
        double worst = 0.0;
        for (double x : grid)
            worst = std::max(worst, (m.a(x) + m.b(x)) / (1.0 + x));
        push("sublinearity_certified", worst <= m.sublinearity * (1.0 + 1e-12), true,
             m.sublinearity - worst, "K minus sampled max of (a+b)/(1+x)");
    }

    { // Stretched coordinate keeps growing (covers every size).
        const double g = m.stretch(1e4) / std::max(m.stretch(1e2), 1e-300);
        push("A5_stretch_unbounded", g > 1.01, false, g, "stretch(1e4)/stretch(1e2)");
    }

    { // A7: inward flow margin at the start: u_in above sup of b/a near 0.
        double x0 = 1.0;
        double delta = -1.0;
        for (int k = 0; k < 60; ++k) {
            double sup = m.ratio_limit;
            for (double x : near0) {
                if (x > x0) break;
                sup = std::max(sup, m.ratio(x));
            }
            if (rep.u_in - sup > 0.0) {
                delta = 0.5 * (rep.u_in - sup);
                break;
            }
            x0 *= 0.5;
        }
        push("A7_inward_flow_margin", delta > 0.0, true, std::max(delta, 0.0),
             "half of u_in minus sup b/a near 0");
    }

    return rep;
}

} // namespace lsn
