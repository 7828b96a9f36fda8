#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lsn/solver.hpp"

using namespace lsn;

namespace {

/// Size-independent rates, no detachment: every test below has a closed-form
/// monomer history against which the windowed fixed point is checked.
KineticModel flat_attachment(double nucleation_amplitude, double nucleation_order) {
    return make_power_law(1.0, 0.0, 0.0, 0.0,
                          power_nucleation(nucleation_amplitude, nucleation_order));
}

} // namespace

TEST_CASE("quiescent problem stays at the initial monomer level", "[solver]") {
    Solver s(make_power_law(1.0, 0.0, 0.0, 0.0), InitialDensity::zero(), 1.0);
    REQUIRE_FALSE(s.dissolution_possible());
    auto result = s.solve(2.0);
    REQUIRE_FALSE(result.reached_stop());
    REQUIRE(result.t_end() == Catch::Approx(2.0).margin(1e-12));
    CHECK(result.monomer(0.7) == Catch::Approx(1.0).margin(1e-12));
    CHECK(result.monomer(2.0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(result.count(2.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(result.mass(2.0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(result.windows().front().iterations == 1);
    auto snap = result.snapshot(1.5);
    CHECK(snap(0.3) == 0.0);
    CHECK(snap(1.7) == 0.0);
}

TEST_CASE("constant nucleation into a flat-rate medium matches the Gaussian decay",
          "[solver]") {
    // With a = 1, b = 0 and constant inflow 0.1 the number of clusters is
    // M0(t) = 0.1 t, so u' = -u M0 gives u(t) = exp(-0.05 t^2).
    Solver s(flat_attachment(0.1, 0.0), InitialDensity::zero(), 1.0);
    auto result = s.solve(2.0);
    REQUIRE_FALSE(result.reached_stop());

    CHECK(result.monomer(1.0) == Catch::Approx(std::exp(-0.05)).margin(2e-5));
    CHECK(result.monomer(2.0) == Catch::Approx(std::exp(-0.2)).margin(2e-5));
    CHECK(result.count(2.0) == Catch::Approx(0.2).margin(1e-10));

    // The reported series satisfies u + M1 = rho identically.
    for (double t : {0.3, 0.77, 1.5, 2.0})
        CHECK(result.monomer(t) + result.mass(t) == Catch::Approx(1.0).margin(1e-13));

    // Independent quadrature of the snapshot density agrees with both the
    // pushforward series and the closed form.
    auto snap = result.snapshot(2.0);
    auto one = [](double) { return 1.0; };
    auto ident = [](double x) { return x; };
    CHECK(snap.moment_direct(one) == Catch::Approx(0.2).margin(2e-6));
    CHECK(snap.moment_direct(ident) ==
          Catch::Approx(1.0 - std::exp(-0.2)).margin(2e-5));

    // du/dt from the moment of b - a u equals -u M0.
    const double u1 = result.monomer(1.0);
    CHECK(result.monomer_rate(1.0) == Catch::Approx(-0.1 * u1).margin(1e-5));
}

TEST_CASE("monomer-proportional nucleation reproduces the sech^2 profile",
          "[solver]") {
    // a = 1, b = 0, inflow equal to u: then M0' = u and u' = -u M0, which
    // integrates to u(t) = sech^2(t / sqrt 2).
    Solver s(flat_attachment(1.0, 1.0), InitialDensity::zero(), 1.0);
    auto result = s.solve(1.0);
    const double c = std::cosh(1.0 / std::sqrt(2.0));
    CHECK(result.monomer(1.0) == Catch::Approx(1.0 / (c * c)).margin(5e-5));

    auto snap = result.snapshot(1.0);
    auto ident = [](double x) { return x; };
    CHECK(result.monomer(1.0) + snap.moment_direct(ident) ==
          Catch::Approx(1.0).margin(2e-5));
}

TEST_CASE("windows stitch exactly", "[solver]") {
    Solver s(flat_attachment(0.1, 0.0), InitialDensity::zero(), 1.0);
    auto result = s.solve(0.6);
    const auto& ws = result.windows();
    REQUIRE(ws.size() >= 2);
    for (std::size_t k = 1; k < ws.size(); ++k) {
        REQUIRE(ws[k].grid.front() == Catch::Approx(ws[k - 1].grid.back()).margin(0.0));
        CHECK(ws[k].u.front() == ws[k - 1].u.back());
        CHECK(ws[k].mass.front() == ws[k - 1].mass.back());
        CHECK(ws[k].count.front() == ws[k - 1].count.back());
        CHECK(ws[k].start->m1() == ws[k - 1].mass.back());
    }
}

TEST_CASE("flattening the window-start chain preserves the solution", "[solver]") {
    SolverConfig cfg;
    cfg.resample_depth = 2;
    Solver s(flat_attachment(0.1, 0.0), InitialDensity::zero(), 1.0, cfg);
    auto result = s.solve(1.25);
    CHECK(result.monomer(1.25) ==
          Catch::Approx(std::exp(-0.05 * 1.25 * 1.25)).margin(1e-4));
    CHECK(result.monomer(1.25) + result.mass(1.25) == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("rate-ratio pinned at its limit disables the stop detector and obeys "
          "the envelope law",
          "[solver]") {
    // a = sqrt(x), b = 0.5 sqrt(x): the ratio is 0.5 everywhere, equal to its
    // boundary limit, so the excess decays but never vanishes in finite time
    // and u' = -(u - 0.5) * integral of a f.
    auto model = make_power_law(1.0, 0.5, 0.5, 0.5, power_nucleation(0.05, 1.0));
    Solver s(model, InitialDensity::zero(), 1.0);
    REQUIRE_FALSE(s.dissolution_possible());
    auto result = s.solve(1.5);
    REQUIRE_FALSE(result.reached_stop());

    const double u_end = result.monomer(1.5);
    CHECK(u_end < 1.0);
    CHECK(u_end > 0.5);

    auto snap = result.snapshot(1.5);
    auto a_of = [&](double x) { return model.a(x); };
    const double a_moment = snap.moment_direct(a_of);
    CHECK(result.monomer_rate(1.5) ==
          Catch::Approx(-(u_end - 0.5) * a_moment).margin(1e-5));
}

TEST_CASE("detachment overtaking attachment ends the supersaturated regime",
          "[solver]") {
    // a = 1, b = exp(-x): the ratio limit is 1 but the ratio decays with
    // size, so dissolution in finite time is possible. Starting from u = 1.5
    // with a unit block of transported mass, the monomer level crashes
    // through the stop threshold well before t = 3.
    CustomRateOptions opt;
    opt.da = [](double) { return 0.0; };
    opt.db = [](double x) { return -std::exp(-x); };
    opt.ratio = [](double x) { return std::exp(-x); };
    opt.a_dratio = [](double x) { return -std::exp(-x); };
    opt.stretch = [](double x) { return x; };
    opt.stretch_inv = [](double y) { return y; };
    opt.sublinearity = 2.0;
    auto model = make_custom([](double) { return 1.0; },
                             [](double x) { return std::exp(-x); },
                             power_nucleation(0.5, 1.0), 1.0, std::move(opt));

    Solver s(model, InitialDensity::indicator(1.0, 0.0, 1.0), 2.0);
    REQUIRE(s.dissolution_possible());
    REQUIRE(s.initial_monomer() == Catch::Approx(1.5).margin(1e-12));

    auto result = s.solve(3.0);
    REQUIRE(result.reached_stop());
    CHECK(result.stop_time() > 0.25);
    CHECK(result.stop_time() < 1.3);
    // At the stop the monomer level sits on the threshold above the limit.
    const double u_stop = result.monomer(result.stop_time());
    CHECK(u_stop == Catch::Approx(1.0 + result.stop_threshold()).margin(2e-4));
    // The level decreased the whole way down.
    double prev = 1.5 + 1e-12;
    for (const auto& w : result.windows())
        for (double u : w.u) {
            CHECK(u <= prev + 1e-9);
            prev = u;
        }
}
