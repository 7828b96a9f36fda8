// Kernel-level checks: quadrature, interpolation, the adaptive integrator,
// and the kinetics layer built on top of them. Expected values are closed
// forms derived independently of the implementation.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lsn/detail/interp.hpp"
#include "lsn/detail/quadrature.hpp"
#include "lsn/detail/rk45.hpp"
#include "lsn/kinetics.hpp"

using namespace lsn;

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
    // n-point rule is exact through degree 2n-1.
    auto cubic = [](double x) { return ((2.0 * x - 1.0) * x + 3.0) * x - 0.5; };
    const double exact = 2.0 / 4.0 - 1.0 / 3.0 + 3.0 / 2.0 - 0.5;
    CHECK(detail::gl_integrate(cubic, 0.0, 1.0, 2) == Catch::Approx(exact).epsilon(1e-14));
    CHECK(detail::gl_integrate(cubic, 0.0, 1.0, 32) == Catch::Approx(exact).epsilon(1e-14));
}

TEST_CASE("adaptive Gauss-Legendre reaches tight tolerances on smooth and kinked integrands") {
    auto smooth = detail::adaptive_gl([](double x) { return std::sin(x); }, 0.0, M_PI,
                                      1e-12, 1e-14);
    CHECK(smooth.converged);
    CHECK(smooth.value == Catch::Approx(2.0).epsilon(1e-12));

    // Kink at an irrational point, not aligned with any panel edge.
    const double c = 1.0 / std::sqrt(3.0);
    auto kinked = detail::adaptive_gl([c](double x) { return std::abs(x - c); }, 0.0,
                                      1.0, 1e-11, 1e-13);
    const double exact = 0.5 * c * c + 0.5 * (1.0 - c) * (1.0 - c);
    CHECK(kinked.converged);
    CHECK(kinked.value == Catch::Approx(exact).margin(1e-10));
}

TEST_CASE("Gauss-Kronrod probe separates integrable from divergent endpoint singularities") {
    auto integrable = detail::adaptive_gauss_kronrod(
        [](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10);
    CHECK(integrable.converged);
    CHECK(integrable.value == Catch::Approx(2.0).margin(1e-7));

    auto divergent = detail::adaptive_gauss_kronrod([](double x) { return 1.0 / x; },
                                                    0.0, 1.0, 1e-10);
    CHECK_FALSE(divergent.converged);
}

TEST_CASE("piecewise-linear table extends end slopes") {
    detail::PiecewiseLinear f({0.0, 1.0, 2.0}, {0.0, 1.0, 3.0});
    CHECK(f(0.5) == Catch::Approx(0.5));
    CHECK(f(1.5) == Catch::Approx(2.0));
    CHECK(f(3.0) == Catch::Approx(5.0));   // slope 2 continued
    CHECK(f(-1.0) == Catch::Approx(-1.0)); // slope 1 continued
    CHECK(f.slope(1.7) == Catch::Approx(2.0));
}

TEST_CASE("monotone cubic interpolation preserves monotonicity and hits nodes") {
    std::vector<double> xs, ys;
    for (int i = 0; i <= 12; ++i) {
        const double x = 0.1 * i;
        xs.push_back(x);
        ys.push_back(x * x * x);
    }
    detail::MonotoneCubic f(xs, ys);
    for (std::size_t i = 0; i < xs.size(); ++i)
        CHECK(f(xs[i]) == Catch::Approx(ys[i]).margin(1e-15));
    double prev = f(0.0);
    for (int i = 1; i <= 600; ++i) {
        const double v = f(1.2 * i / 600.0);
        CHECK(v >= prev - 1e-14);
        prev = v;
    }
}

TEST_CASE("integrator reproduces exponential growth both directions") {
    auto rhs = [](double, const detail::State<1>& y, detail::State<1>& dy) {
        dy[0] = y[0];
    };
    detail::IntegrateOptions opt;
    auto fwd = detail::integrate<1>(rhs, 0.0, {1.0}, 1.0, opt);
    CHECK(fwd.y[0] == Catch::Approx(std::exp(1.0)).epsilon(1e-8));
    auto bwd = detail::integrate<1>(rhs, 1.0, {std::exp(1.0)}, 0.0, opt);
    CHECK(bwd.y[0] == Catch::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("integrator locates events on the dense output") {
    // y' = -y, y(0)=1; the event y = 1/2 fires at s = ln 2.
    auto rhs = [](double, const detail::State<1>& y, detail::State<1>& dy) {
        dy[0] = -y[0];
    };
    detail::IntegrateOptions opt;
    auto ev = [](double, const detail::State<1>& y) { return y[0] - 0.5; };
    auto res = detail::integrate<1>(rhs, 0.0, {1.0}, 10.0, opt, ev);
    REQUIRE(res.event);
    CHECK(res.s == Catch::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(res.y[0] == Catch::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("integrator emits samples at requested times from the dense output") {
    auto rhs = [](double s, const detail::State<1>&, detail::State<1>& dy) {
        dy[0] = std::cos(s);
    };
    detail::IntegrateOptions opt;
    std::vector<double> times{0.3, 1.1, 2.4, 3.9};
    std::vector<double> got(times.size(), 0.0);
    detail::integrate<1>(
        rhs, 0.0, {0.0}, 4.0, opt, detail::NoEvent{}, times,
        [&](std::size_t i, double, const detail::State<1>& y) { got[i] = y[0]; });
    for (std::size_t i = 0; i < times.size(); ++i)
        CHECK(got[i] == Catch::Approx(std::sin(times[i])).margin(1e-8));
}

TEST_CASE("integrator handles a two-component system with an accumulator") {
    // Position x' = 1, accumulator E' = x; E(2) = 2 from x0 = 0.
    auto rhs = [](double, const detail::State<2>& y, detail::State<2>& dy) {
        dy[0] = 1.0;
        dy[1] = y[0];
    };
    detail::IntegrateOptions opt;
    auto res = detail::integrate<2>(rhs, 0.0, {0.0, 0.0}, 2.0, opt);
    CHECK(res.y[0] == Catch::Approx(2.0).epsilon(1e-10));
    CHECK(res.y[1] == Catch::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("power-law factory rejects out-of-scope regimes") {
    CHECK_THROWS_AS(make_power_law(1.0, 0.5, 1.0, 0.0), invalid_model_error);
    CHECK_THROWS_AS(make_power_law(1.0, 1.0, 1.0, 1.0), invalid_model_error);
    CHECK_THROWS_AS(make_power_law(0.0, 0.0, 1.0, 0.0), invalid_model_error);
    CHECK_THROWS_AS(make_power_law(1.0, -0.1, 1.0, 0.0), invalid_model_error);
}

TEST_CASE("stretched coordinate closed forms") {
    // a = sqrt(x): stretch is 2 sqrt(x).
    auto sq = make_power_law(1.0, 0.5, 0.0, 0.5);
    CHECK(sq.stretched(4.0) == Catch::Approx(4.0).epsilon(1e-14));
    // a = x^{1/3}: stretch is (3/2) x^{2/3}.
    auto cb = make_power_law(1.0, 1.0 / 3.0, 0.0, 1.0 / 3.0);
    CHECK(cb.stretched(8.0) == Catch::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("stretched coordinate round trip is tight for every built-in family") {
    for (auto [a0, alpha] : {std::pair{1.0, 0.0}, {2.0, 0.5}, {1.0, 1.0 / 3.0},
                             {0.7, 0.9}}) {
        auto m = make_power_law(a0, alpha, 0.5 * a0, alpha);
        for (int i = 0; i <= 48; ++i) {
            const double x = std::pow(10.0, -8.0 + 12.0 * i / 48.0);
            const double back = m.stretched_inverse(m.stretched(x));
            CHECK(std::abs(back - x) <= 1e-10 * x);
        }
    }
}

TEST_CASE("rate ratio closed forms and the dissolution threshold") {
    auto m = make_power_law(2.0, 1.0 / 3.0, 3.0, 2.0 / 3.0);
    CHECK(m.rate_ratio(8.0) == Catch::Approx(3.0).epsilon(1e-12));
    CHECK(m.rate_ratio_limit() == 0.0);

    auto eq = make_power_law(1.0, 0.5, 2.0, 0.5);
    CHECK(eq.rate_ratio(7.3) == Catch::Approx(2.0).epsilon(1e-14));
    CHECK(eq.rate_ratio_limit() == 2.0);
    CHECK(eq.rate_ratio(0.0) == 2.0);
}

TEST_CASE("derived stretched coordinate matches a hand-integrable custom rate") {
    // a = 1 + x: stretch is log(1 + x).
    auto m = make_custom([](double x) { return 1.0 + x; },
                         [](double) { return 0.0; }, {}, 0.0);
    for (double x : {1e-6, 1e-2, 0.5, 3.0, 50.0, 900.0}) {
        CHECK(m.stretched(x) == Catch::Approx(std::log1p(x)).epsilon(1e-8));
        CHECK(m.stretched_inverse(m.stretched(x)) == Catch::Approx(x).epsilon(1e-7));
    }
}

TEST_CASE("tabulated rates interpolate linearly and extend end slopes") {
    auto m = make_tabulated({0.0, 1.0, 2.0}, {1.0, 1.0, 1.0}, {0.4, 0.2, 0.0}, {},
                            0.4);
    CHECK(m.a(1.5) == Catch::Approx(1.0));
    CHECK(m.b(0.5) == Catch::Approx(0.3));
    CHECK(m.b(3.0) == Catch::Approx(0.0)); // clamped at zero past the table
    CHECK(m.db(0.5) == Catch::Approx(-0.2));
}

TEST_CASE("hypothesis scan passes a healthy power law and reports margins") {
    auto m = make_power_law(1.0, 0.5, 0.5, 0.5, power_nucleation(0.05, 1.0));
    auto rep = validate_hypotheses(m, 1.0, 0.0, 0.0);
    CHECK(rep.all_required_pass());
    CHECK(rep.u_in == Catch::Approx(1.0));
    const auto* h7 = rep.find("H7_supersaturated_start");
    REQUIRE(h7);
    CHECK(h7->margin == Catch::Approx(0.5));
    const auto* h8 = rep.find("H8_ratio_monotone_near_zero");
    REQUIRE(h8);
    CHECK(h8->pass); // flat ratio counts as monotone
    const auto* h8b = rep.find("H8b_uniform_attraction");
    REQUIRE(h8b);
    CHECK_FALSE(h8b->pass); // flat ratio has no uniform attraction
    CHECK(rep.nucleation_lipschitz_ok);
    CHECK(rep.nucleation_lipschitz == Catch::Approx(0.05).epsilon(1e-6));
}

TEST_CASE("hypothesis scan certifies uniform attraction for an exponential detachment") {
    // a = 1, b = exp(-x): -a d(b/a)/dx = exp(-x) >= exp(-1) on (0, 1].
    auto m = make_custom([](double) { return 1.0; },
                         [](double x) { return std::exp(-x); },
                         power_nucleation(0.5, 1.0), 1.0,
                         {.a_dratio = [](double x) { return -std::exp(-x); },
                          .stretch = [](double x) { return x; },
                          .stretch_inv = [](double y) { return y; }});
    auto rep = validate_hypotheses(m, 2.0, 1.0, 0.5);
    CHECK(rep.all_required_pass());
    CHECK(rep.u_in == Catch::Approx(1.5));
    const auto* h8b = rep.find("H8b_uniform_attraction");
    REQUIRE(h8b);
    CHECK(h8b->pass);
    // Margin is half of min exp(-x) over the near-zero scan (0, 1].
    CHECK(h8b->margin == Catch::Approx(0.5 * std::exp(-1.0)).epsilon(1e-3));
}

TEST_CASE("hypothesis scan flags a wrong declared ratio limit") {
    auto m = make_custom([](double) { return 1.0; },
                         [](double x) { return std::exp(-x); }, {}, 0.7,
                         {.stretch = [](double x) { return x; },
                          .stretch_inv = [](double y) { return y; }});
    auto rep = validate_hypotheses(m, 2.0, 0.0, 0.0);
    const auto* c = rep.find("ratio_limit_consistent");
    REQUIRE(c);
    CHECK_FALSE(c->pass);
    CHECK_FALSE(rep.all_required_pass());
}

TEST_CASE("hypothesis scan fails a start below the dissolution threshold") {
    auto m = make_power_law(1.0, 0.5, 2.0, 0.5); // threshold 2
    auto rep = validate_hypotheses(m, 1.0, 0.0, 0.0); // u_in = 1 < 2
    const auto* h7 = rep.find("H7_supersaturated_start");
    REQUIRE(h7);
    CHECK_FALSE(h7->pass);
    const auto* a7 = rep.find("A7_inward_flow_margin");
    REQUIRE(a7);
    CHECK_FALSE(a7->pass);
    CHECK_FALSE(rep.all_required_pass());
}
