// Density snapshots and pushforward moments against closed forms, for
// prescribed monomer histories. Covers boundary-fed profiles (including
// genuinely singular ones), transported initial data with its volume factor,
// and the agreement between the pushforward and direct-quadrature moment
// routes.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "lsn/transport.hpp"

using namespace lsn;

namespace {

DensitySnapshot make_snapshot(const KineticModel& m, MonomerPath path,
                              InitialDensity f0, double t) {
    auto cs = std::make_shared<CharacteristicSolution>(m, std::move(path));
    auto d = std::make_shared<InitialDensity>(std::move(f0));
    return DensitySnapshot(cs, d, t);
}

} // namespace

TEST_CASE("constant advection fills a plateau behind the separating size") {
    // a = 1, b = 0, constant inflow 0.1, empty start: f(t, x) = 0.1 on (0, t).
    auto m = make_power_law(1.0, 0.0, 0.0, 0.0, power_nucleation(0.1, 0.0));
    auto snap = make_snapshot(m, MonomerPath::constant(1.0, 0.0, 2.0),
                              InitialDensity::zero(), 1.5);
    CHECK(snap.separating_size() == Catch::Approx(1.5).epsilon(1e-9));
    CHECK(snap(0.7) == Catch::Approx(0.1).epsilon(1e-8));
    CHECK(snap(1.7) == 0.0);
    CHECK(snap.count() == Catch::Approx(0.15).epsilon(1e-9));
    CHECK(snap.mass() == Catch::Approx(0.1125).epsilon(1e-8));
    CHECK(snap.moment([](double x) { return x * x; }) ==
          Catch::Approx(0.1 * std::pow(1.5, 3) / 3.0).epsilon(1e-8));
    CHECK(snap.boundary_flux_limit() == Catch::Approx(0.1).epsilon(1e-8));
}

TEST_CASE("vanishing attachment rate produces the inverse-square-root profile") {
    // a = sqrt(x), b = 0, inflow n(u) = u, empty start, monomer level 1:
    // f(t, x) = 1/sqrt(x) below (t/2)^2, zero above.
    auto m = make_power_law(1.0, 0.5, 0.0, 0.5, power_nucleation(1.0, 1.0));
    auto snap = make_snapshot(m, MonomerPath::constant(1.0, 0.0, 1.0),
                              InitialDensity::zero(), 1.0);
    CHECK(snap.separating_size() == Catch::Approx(0.25).epsilon(1e-8));
    CHECK(snap(0.04) == Catch::Approx(5.0).epsilon(1e-7));
    CHECK(snap(0.16) == Catch::Approx(2.5).epsilon(1e-7));
    CHECK(snap(0.36) == 0.0);
    // Count equals the accumulated inflow; mass is the integral of sqrt(x).
    CHECK(snap.count() == Catch::Approx(1.0).epsilon(1e-9));
    CHECK(snap.mass() == Catch::Approx(1.0 / 12.0).epsilon(1e-7));
    // The singular profile integrates exactly through the stretched nodes.
    CHECK(snap.moment_direct([](double) { return 1.0; }) ==
          Catch::Approx(1.0).epsilon(1e-7));
    CHECK(snap.moment_direct([](double x) { return x; }) ==
          Catch::Approx(1.0 / 12.0).epsilon(1e-7));
    // The advective flux is identically the inflow here.
    CHECK(snap.boundary_flux_limit() == Catch::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("transported initial data carries the volume factor") {
    // a = 1, b = x, monomer level 1: the flow contracts toward the stable
    // size 1 and the density amplifies by e^t.
    auto m = make_power_law(1.0, 0.0, 1.0, 1.0);
    auto snap = make_snapshot(m, MonomerPath::constant(1.0, 0.0, 1.0),
                              InitialDensity::indicator(0.5, 1.2, 1.8), 1.0);
    CHECK(snap(1.1) == Catch::Approx(1.3591409142295225).epsilon(1e-7));
    CHECK(snap(1.3) == 0.0);
    CHECK(snap(0.9) == 0.0);
    CHECK(snap.count() == Catch::Approx(0.3).epsilon(1e-9));
    CHECK(snap.mass() == Catch::Approx(0.3551819161757163).epsilon(1e-7));
    CHECK(snap.support_hi() == Catch::Approx(1.2943035529371538).epsilon(1e-8));

    auto jumps = snap.jump_points();
    REQUIRE(jumps.size() == 3);
    CHECK(jumps[0] == Catch::Approx(0.6321205588285577).epsilon(1e-7));
    CHECK(jumps[1] == Catch::Approx(1.0735758882342885).epsilon(1e-7));
    CHECK(jumps[2] == Catch::Approx(1.2943035529371538).epsilon(1e-7));
}

TEST_CASE("singular start density is integrated through the stretched nodes") {
    // f0 = x^{-0.4} on (0, 1] under a = sqrt(x), b = 0, monomer level 1:
    // M1(0.2) = int (sqrt(x) + 0.1)^2 x^{-0.4} dx = 0.8234848484848486.
    auto m = make_power_law(1.0, 0.5, 0.0, 0.5);
    auto snap = make_snapshot(m, MonomerPath::constant(1.0, 0.0, 0.2),
                              InitialDensity::power_exp(1.0, -0.4, 0.0, 1.0), 0.2);
    CHECK(snap.count() == Catch::Approx(1.0 / 0.6).epsilon(1e-8));
    CHECK(snap.mass() == Catch::Approx(0.8234848484848486).epsilon(3e-5));
}

TEST_CASE("pushforward and direct-quadrature moments agree on a mixed profile") {
    // Ramping monomer level, active inflow, and transported initial data all
    // at once; the two moment routes share nothing but the flow.
    auto m = make_power_law(1.0, 0.0, 1.0, 1.0, power_nucleation(0.2, 1.0));
    auto snap = make_snapshot(m, MonomerPath({0.0, 1.0}, {1.0, 1.5}),
                              InitialDensity::indicator(0.5, 1.2, 1.8), 1.0);
    const double mass_push = snap.mass();
    const double mass_direct = snap.moment_direct([](double x) { return x; });
    CHECK(mass_push == Catch::Approx(mass_direct).epsilon(1e-5));
    const double count_push = snap.count();
    const double count_direct = snap.moment_direct([](double) { return 1.0; });
    CHECK(count_push == Catch::Approx(count_direct).epsilon(1e-5));
    // The flux limit recovers the inflow at the evaluation time.
    CHECK(snap.boundary_flux_limit() == Catch::Approx(0.2 * 1.5).epsilon(1e-6));
}

TEST_CASE("window pushforward tracks grid moments of a boundary-fed solution") {
    // Same dynamics as the inverse-square-root profile: M0(t) = t,
    // M1(t) = t^3 / 12 at every grid time.
    auto m = make_power_law(1.0, 0.5, 0.0, 0.5, power_nucleation(1.0, 1.0));
    CharacteristicSolution cs(m, MonomerPath::constant(1.0, 0.0, 1.0));
    std::vector<double> grid;
    for (int i = 0; i <= 16; ++i) grid.push_back(i / 16.0);
    auto nodes = WindowNodes::build(m, InitialDensity::zero(), grid);
    WindowPushforward push(cs, nodes);
    for (std::size_t i : {std::size_t{4}, std::size_t{8}, std::size_t{16}}) {
        const double t = grid[i];
        CHECK(push.count(i) == Catch::Approx(t).epsilon(1e-9));
        CHECK(push.mass(i) == Catch::Approx(t * t * t / 12.0).epsilon(1e-7));
    }
    CHECK(push.mass(0) == 0.0);
}

TEST_CASE("window pushforward anchors the start moments exactly") {
    auto m = make_power_law(1.0, 0.0, 1.0, 1.0);
    CharacteristicSolution cs(m, MonomerPath::constant(1.0, 0.0, 0.5));
    auto f0 = InitialDensity::indicator(0.5, 1.2, 1.8);
    std::vector<double> grid{0.0, 0.25, 0.5};
    auto nodes = WindowNodes::build(m, f0, grid);
    WindowPushforward push(cs, nodes);
    CHECK(push.mass(0) == f0.m1());
    CHECK(push.count(0) == f0.m0());
    CHECK(push.count(2) == f0.m0()); // no inflow: count is conserved
    // Mass moves toward the stable size 1: M1(t) = 0.3 + 0.15 e^{-t}.
    CHECK(push.mass(2) == Catch::Approx(0.3 + 0.15 * std::exp(-0.5)).epsilon(1e-7));
}
