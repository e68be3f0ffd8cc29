#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rsflow/experiments.hpp"
#include "rsflow/flow.hpp"

using namespace rsflow;
using std::numbers::pi;

TEST_CASE("round sphere shrinks as r^2 = 1 - 4t") {
    FlowParams fp;
    fp.snapshot_stride = 50;
    const auto tr = evolve(make_round_sphere(1.0, 101), fp);
    REQUIRE(tr.termination.kind == TerminationKind::extinction);
    CHECK(tr.termination.time == doctest::Approx(0.25).epsilon(0.02));
    for (const auto& g : tr.slices) {
        if (g.time > 0.2) break;
        const double r = std::sqrt(1.0 - 4.0 * g.time);
        CHECK(max_psi(g) == doctest::Approx(r).epsilon(1e-4));
    }
}

TEST_CASE("periodic cylinder follows psi = sqrt(1 - 2t)") {
    FlowParams fp;
    fp.t_max = 0.4;
    fp.snapshot_stride = 20;
    const auto tr = evolve(make_cylinder(1.0, 2.0, 32), fp);
    CHECK(tr.termination.kind == TerminationKind::max_time);
    for (const auto& g : tr.slices) {
        const double expected = std::sqrt(1.0 - 2.0 * g.time);
        for (double v : g.psi) CHECK(std::fabs(v - expected) < 1e-3);
    }
    CHECK(tr.slices.back().time == doctest::Approx(0.4));
}

TEST_CASE("Ricci rhs of a round sphere is a pure rescaling") {
    const auto g = make_round_sphere(1.0, 101);
    const auto rhs = ricci_rhs(g);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        // d(psi^2)/dt = -4 psi^2 for the unit sphere, so dpsi/dt = -2 psi
        CHECK(rhs.dpsi[i] == doctest::Approx(-2.0 * g.psi[i]).epsilon(1e-3));
    }
}

TEST_CASE("stable step respects cfl and curvature limits") {
    FlowParams fp;
    const auto g = make_round_sphere(0.5, 101);
    const auto c = curvature(g);
    const double dt = stable_dt(g, c, fp);
    CHECK(dt > 0.0);
    CHECK(dt <= fp.dt_max);
    CHECK(dt <= fp.cfl / c.max_abs());
}

TEST_CASE("flow parameters are validated") {
    FlowParams fp;
    fp.cfl = 0.0;
    CHECK_THROWS_AS(fp.validate(), InvalidArgument);
    fp = {};
    fp.t_max = -1.0;
    CHECK_THROWS_AS(fp.validate(), InvalidArgument);
    CHECK_THROWS_AS(scheme_from_string("leapfrog"), InvalidArgument);
}

TEST_CASE("t_max = 0 returns the initial metric unchanged") {
    FlowParams fp;
    fp.t_max = 0.0;
    const auto g = make_round_sphere(1.0, 51);
    const auto tr = evolve(g, fp);
    CHECK(tr.termination.kind == TerminationKind::max_time);
    CHECK(tr.slices.back() == g);
}

TEST_CASE("neck detection on a thin dumbbell") {
    const auto g = make_dumbbell(0.05, 1.0, 401);
    NeckCriteria crit;
    crit.rho = 0.06;
    const auto neck = find_neck(g, crit);
    REQUIRE(neck);
    CHECK(neck->node == 200);
    CHECK(neck->psi_min == doctest::Approx(0.05).epsilon(1e-6));
    crit.rho = 0.01;
    CHECK_FALSE(find_neck(g, crit));
}

TEST_CASE("reflection symmetry survives the smooth flow") {
    FlowParams fp;
    const auto rep = isometry_preservation_check(make_dumbbell(0.3, 1.0, 201), IsometryElement::reflection(), fp, 0.01);
    CHECK(rep.max_drift == 0.0);
    CHECK(rep.reached_T);
    CHECK_THROWS_AS(isometry_preservation_check(make_dumbbell(0.3, 1.0, 201, false), IsometryElement::reflection(), fp, 0.01),
                    PreconditionFailed);
}

TEST_CASE("F-functional") {
    SUBCASE("unit round sphere with f = 0 gives 12 pi^2") {
        const auto g = make_round_sphere(1.0, 201);
        CHECK(f_functional(g, std::vector<double>(201, 0.0)) == doctest::Approx(12.0 * pi * pi).epsilon(1e-6));
    }
    SUBCASE("shifting f by a constant scales F by e^{-c}") {
        const auto g = make_round_sphere(1.0, 101);
        const double f0 = f_functional(g, std::vector<double>(101, 0.0));
        CHECK(f_functional(g, std::vector<double>(101, 1.0)) == doctest::Approx(f0 * std::exp(-1.0)));
    }
    SUBCASE("unit sphere with f = 0 dissipates 2 |Ric|^2 vol = 48 pi^2") {
        CHECK(f_dissipation(make_round_sphere(1.0, 101), std::vector<double>(101, 0.0)) ==
              doctest::Approx(48.0 * pi * pi).epsilon(1e-4));
    }
}

TEST_CASE("coupled flow keeps the measure and F grows at the dissipation rate") {
    const std::size_t n = 101;
    const auto g = perturb(make_round_sphere(1.0, n), PerturbationMode::profile_bump, 0.05, {1.0, -0.5, 0.3});
    FlowParams fp;
    const auto r = coupled_flow(g, std::vector<double>(n, 0.0), 0.02, fp);
    REQUIRE(r.times.size() > 2);
    CHECK(r.measure.back() == doctest::Approx(r.measure.front()).epsilon(1e-6));
    for (std::size_t k = 1; k < r.times.size(); ++k) {
        const double dF = (r.F[k] - r.F[k - 1]) / (r.times[k] - r.times[k - 1]);
        const double D = 0.5 * (r.dissipation[k] + r.dissipation[k - 1]);
        CHECK(dF >= -1e-9);
        CHECK(dF == doctest::Approx(D).epsilon(0.05));
    }
}

TEST_CASE("soliton data of the Einstein sphere") {
    SolitonData sd{make_round_sphere(1.0, 101), std::vector<double>(101, 0.0), 2.0};
    CHECK(soliton_residual(sd) < 1e-3);
    CHECK(select_soliton_sign(sd).degenerate);
    CHECK(soliton_trajectory(sd, 0.0) == sd.metric);
    const auto g = soliton_trajectory(sd, 0.1);
    CHECK(max_psi(g) == doctest::Approx(std::sqrt(0.6)).epsilon(1e-12));
    CHECK_THROWS_AS(soliton_trajectory(sd, 0.3), InvalidArgument);
}
