#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lsn/diagnostics.hpp"

using namespace lsn;

namespace {

KineticModel flat_attachment(double nucleation_amplitude, double nucleation_order) {
    return make_power_law(1.0, 0.0, 0.0, 0.0,
                          power_nucleation(nucleation_amplitude, nucleation_order));
}

/// a = 1, b = exp(-x): the rate ratio decays from 1 toward 0, so the monomer
/// level can be driven down to the boundary limit in finite time.
KineticModel exp_detachment() {
    CustomRateOptions opt;
    opt.da = [](double) { return 0.0; };
    opt.db = [](double x) { return -std::exp(-x); };
    opt.ratio = [](double x) { return std::exp(-x); };
    opt.a_dratio = [](double x) { return -std::exp(-x); };
    opt.stretch = [](double x) { return x; };
    opt.stretch_inv = [](double y) { return y; };
    opt.sublinearity = 2.0;
    return make_custom([](double) { return 1.0; },
                       [](double x) { return std::exp(-x); },
                       power_nucleation(0.5, 1.0), 1.0, std::move(opt));
}

/// Smooth quartic bump on [0.5, 1.5] scaled to carry first moment eps; by
/// symmetry about 1 its zeroth moment equals eps as well.
InitialDensity bump_perturbation(double eps) {
    const double c = 15.0 * eps / 8.0;
    return InitialDensity::from_function(
        [c](double x) {
            if (x <= 0.5 || x >= 1.5) return 0.0;
            const double s = 2.0 * (x - 1.0);
            const double q = 1.0 - s * s;
            return c * q * q;
        },
        0.5, 1.5);
}

} // namespace

TEST_CASE("cluster count matches the integrated nucleation inflow", "[diagnostics]") {
    auto constant = solve_nucleation_problem(flat_attachment(0.1, 0.0),
                                             InitialDensity::zero(), 1.0, 2.0);
    auto rep = number_balance(constant);
    CHECK(rep.initial_count == 0.0);
    CHECK(rep.max_deviation < 1e-8);

    auto proportional = solve_nucleation_problem(flat_attachment(1.0, 1.0),
                                                 InitialDensity::zero(), 1.0, 1.5);
    CHECK(number_balance(proportional).max_deviation < 2e-6);
}

TEST_CASE("conservation holds along the series and under direct quadrature",
          "[diagnostics]") {
    auto r = solve_nucleation_problem(flat_attachment(0.1, 0.0),
                                      InitialDensity::zero(), 1.0, 2.0);
    auto rep = conservation_check(r);
    CHECK(rep.max_series_residual < 1e-13);
    CHECK(rep.max_direct_residual < 5e-5);
}

TEST_CASE("dissolution certificate distinguishes decaying from flat rate ratios",
          "[diagnostics]") {
    CHECK_FALSE(dissolution_certificate(flat_attachment(0.1, 0.0)).possible);
    CHECK_FALSE(
        dissolution_certificate(make_power_law(1.0, 0.5, 0.5, 0.5)).possible);

    auto cert = dissolution_certificate(exp_detachment());
    CHECK(cert.possible);
    CHECK(cert.min_ratio < 1e-10);
}

TEST_CASE("supersaturation envelope is an equality for a flat rate ratio",
          "[diagnostics]") {
    // With b = 0 the rate ratio sits exactly at its limit, so the
    // differential inequality behind the envelope is an identity:
    // u(t) = u(0) exp(-integral of the attachment moment).
    auto r = solve_nucleation_problem(flat_attachment(0.1, 0.0),
                                      InitialDensity::zero(), 1.0, 2.0);
    auto rep = envelope_check(r);
    CHECK(rep.bound_valid);
    CHECK(rep.min_gap > 0.0);
    CHECK(rep.min_margin_ratio == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("logarithmic dissolution bound: constants, validity, and comparison",
          "[diagnostics]") {
    auto model = exp_detachment();
    auto f_in = InitialDensity::indicator(1.0, 0.0, 1.0);
    auto b = dissolution_bound(model, f_in, 2.0);

    REQUIRE(b.applies);
    // k = inf a * (limit - ratio(edge)) * (mass - u(0)) with a = 1:
    // (1 - exp(-1)) * 0.5.
    CHECK(b.k_const == Catch::Approx((1.0 - std::exp(-1.0)) * 0.5).epsilon(1e-6));
    CHECK(b.a_growth == Catch::Approx(1.5).epsilon(1e-6));
    const double k = b.k_const;
    const double expected_root = 1.0 / 1.5 * std::expm1(1.5 * 0.5 / k);
    CHECK(b.crossing_time == Catch::Approx(expected_root).epsilon(1e-6));
    CHECK(b.bound(0.0) == Catch::Approx(1.5).margin(1e-12));

    auto r = solve_nucleation_problem(model, f_in, 2.0, 5.0);
    REQUIRE(r.reached_stop());
    CHECK(r.stop_time() < b.crossing_time);
    for (const WindowRecord& w : r.windows())
        for (std::size_t i = 0; i < w.grid.size(); ++i)
            CHECK(w.u[i] <= b.bound(w.grid[i]) + 1e-9);

    // A flat rate ratio never dips below its limit: the bound cannot apply.
    auto none = dissolution_bound(flat_attachment(0.1, 0.0), f_in, 2.0);
    CHECK_FALSE(none.applies);
    CHECK(none.reason.find("support edge") != std::string::npos);
}

TEST_CASE("stability weight for a bounded rate-ratio slope is 1 over a, capped",
          "[diagnostics]") {
    auto w = make_stability_weight(make_power_law(1.0, 0.5, 0.5, 0.5), 0.8);
    CHECK_FALSE(w.uses_decay_exponent);
    CHECK(w.x_bar == Catch::Approx(2.0).epsilon(1e-9));
    CHECK(w.phi(0.25) == Catch::Approx(2.0).epsilon(1e-12)); // 1 / sqrt(0.25)
    CHECK(w.phi_times_a(0.25) == Catch::Approx(1.0).epsilon(1e-12));
    const double cap = 1.0 / std::sqrt(2.0);
    CHECK(w.phi(3.0) == Catch::Approx(cap).epsilon(1e-9));
}

TEST_CASE("stability weight switches to the damped variant for a steep slope",
          "[diagnostics]") {
    // a = sqrt(x), ratio = 2 - 0.5 x^0.1: the slope -a (b/a)' = 0.05 x^-0.4
    // grows unboundedly toward 0 but stays positive, which is exactly the
    // regime that needs the exponential damping factor.
    CustomRateOptions opt;
    opt.ratio = [](double x) { return 2.0 - 0.5 * std::pow(x, 0.1); };
    opt.a_dratio = [](double x) { return -0.05 * std::pow(x, -0.4); };
    opt.stretch = [](double x) { return 2.0 * std::sqrt(x); };
    opt.stretch_inv = [](double y) { return 0.25 * y * y; };
    opt.sublinearity = 3.0;
    auto model = make_custom(
        [](double x) { return std::sqrt(x); },
        [](double x) { return std::sqrt(x) * (2.0 - 0.5 * std::pow(x, 0.1)); }, {},
        2.0, std::move(opt));

    auto w = make_stability_weight(model, 2.5);
    REQUIRE(w.uses_decay_exponent);
    CHECK(w.phi_times_a(w.x_bar) == Catch::Approx(1.0).margin(1e-9));

    // Against an independent quadrature of the damping exponent.
    for (double x : {0.01, 0.1, 0.5}) {
        auto integrand = [&](double y) {
            return w.decay_constant / std::sqrt(y) - 0.05 * std::pow(y, -0.9);
        };
        const double expo =
            detail::adaptive_gauss_kronrod(integrand, x, w.x_bar, 1e-12).value;
        CHECK(w.phi_times_a(x) ==
              Catch::Approx(std::exp(-expo / w.margin)).epsilon(1e-3));
        CHECK(w.phi(x) ==
              Catch::Approx(w.phi_times_a(x) / std::sqrt(x)).epsilon(1e-12));
    }
}

TEST_CASE("perturbation distance vanishes exactly for identical runs",
          "[diagnostics]") {
    auto model = flat_attachment(1.0, 1.0);
    auto r1 = solve_nucleation_problem(model, InitialDensity::zero(), 1.0, 1.0);
    auto r2 = solve_nucleation_problem(model, InitialDensity::zero(), 1.0, 1.0);
    auto w = make_stability_weight(model, 0.5);
    for (double t : {0.0, 0.5, 1.0})
        CHECK(stability_distance(r1, r2, t, w).total() == 0.0);
}

TEST_CASE("perturbation distance starts at the analytic value and scales linearly",
          "[diagnostics]") {
    auto model = flat_attachment(1.0, 1.0);
    auto base = solve_nucleation_problem(model, InitialDensity::zero(), 1.0, 1.0);
    auto w = make_stability_weight(model, 0.5);

    // The bump carries both moments equal to eps, so at t = 0 the distance is
    // |monomer gap| + |count gap| + weighted tail mass = 3 eps (the weight is
    // identically 1 for flat rates).
    auto p4 = solve_nucleation_problem(model, bump_perturbation(1e-4), 1.0, 1.0);
    auto d4_0 = stability_distance(base, p4, 0.0, w);
    CHECK(d4_0.total() == Catch::Approx(3e-4).epsilon(2e-3));

    auto p5 = solve_nucleation_problem(model, bump_perturbation(1e-5), 1.0, 1.0);
    auto d5_0 = stability_distance(base, p5, 0.0, w);
    CHECK(d4_0.total() / d5_0.total() == Catch::Approx(10.0).epsilon(0.01));

    // Comparable at the end of the interval as well.
    auto d4_1 = stability_distance(base, p4, 1.0, w);
    auto d5_1 = stability_distance(base, p5, 1.0, w);
    REQUIRE(d5_1.total() > 0.0);
    CHECK(d4_1.total() / d5_1.total() == Catch::Approx(10.0).epsilon(0.1));
}

TEST_CASE("boundary flux limit recovers the nucleation rate", "[diagnostics]") {
    auto r = solve_nucleation_problem(flat_attachment(1.0, 1.0),
                                      InitialDensity::zero(), 1.0, 1.0);
    auto rep = trace_condition(r, {0.3, 0.7, 1.0});
    CHECK(rep.max_relative < 1e-5);
}

TEST_CASE("weak-form residuals vanish on a quiescent run", "[diagnostics]") {
    auto r = solve_nucleation_problem(make_power_law(1.0, 0.0, 0.0, 0.0),
                                      InitialDensity::zero(), 1.0, 1.0);
    auto rep = weak_form_suite(r, 1.0);
    CHECK(rep.max_normalized == 0.0);
}

TEST_CASE("weak-form residuals are small for constant nucleation", "[diagnostics]") {
    auto r = solve_nucleation_problem(flat_attachment(0.1, 0.0),
                                      InitialDensity::zero(), 1.0, 0.75);
    auto rep = weak_form_suite(r, 0.75);
    REQUIRE(rep.normalized.size() == 20);
    CHECK(rep.max_normalized < 1e-5);
}

TEST_CASE("weak-form residual detects an inconsistent monomer series",
          "[diagnostics]") {
    // Negative control: scaling the stored monomer series away from the flow
    // that transported the density must push the residual well above the
    // passing level, otherwise the check could not fail by construction.
    auto r = solve_nucleation_problem(flat_attachment(0.1, 0.0),
                                      InitialDensity::zero(), 1.0, 0.75);
    SimulationResult doctored(r.model(), r.total_mass(), r.stop_threshold(),
                              r.dissolution_possible());
    for (WindowRecord w : r.windows()) {
        for (double& u : w.u) u *= 1.05;
        doctored.append(std::move(w));
    }
    auto rep = weak_form_suite(doctored, 0.75);
    CHECK(rep.max_normalized > 2e-4);
}
