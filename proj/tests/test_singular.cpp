#include <doctest.h>

#include <cmath>

#include "rsflow/singular.hpp"

using namespace rsflow;

namespace {

const SingularSpacetime& dumbbell_spacetime() {
    static const SingularSpacetime st = [] {
        FlowParams fp;
        return run_singular_flow(make_dumbbell(0.15, 1.0, 801), fp, SurgeryParams{});
    }();
    return st;
}

}  // namespace

TEST_CASE("surgery parameters") {
    const auto g = make_dumbbell(0.15, 1.0, 201);
    const auto sp = SurgeryParams{}.resolved(g);
    REQUIRE(sp.rho_surg);
    CHECK(*sp.rho_surg == doctest::Approx(0.02 * max_psi(g)));
    SurgeryParams bad;
    bad.rho_surg = 0.01;
    bad.excision_margin = 1.0;
    CHECK_THROWS_AS(bad.validate(1e-8), InvalidArgument);
    bad = {};
    bad.rho_surg = 0.01;
    bad.regrid_ratio = 1.5;
    CHECK_THROWS_AS(bad.validate(1e-8), InvalidArgument);
}

TEST_CASE("surgery on a thin symmetric neck") {
    const auto g = make_dumbbell(0.04, 1.0, 801);
    SurgeryParams sp;
    sp.rho_surg = 0.05;
    const auto neck = detect_neck(g, sp);
    REQUIRE(neck);
    CHECK(neck->node == 400);

    const auto res = perform_surgery(g, *neck, sp);
    REQUIRE(res.children.size() == 2);
    CHECK_FALSE(res.dropped_left);
    CHECK_FALSE(res.dropped_right);
    CHECK(res.s_hi - res.s_lo == doctest::Approx(2.0 * sp.excision_margin * neck->psi_min).epsilon(1e-6));
    double child_volume = 0.0;
    for (const auto& c : res.children) {
        CHECK_FALSE(find_violation(c));
        CHECK(curvature(c).max_abs() < 10.0 / (neck->psi_min * neck->psi_min));
        child_volume += volume(c);
    }
    CHECK(child_volume < volume(g));
    CHECK(child_volume > 0.9 * volume(g));
    // mirror-image halves give mirror-image children
    CHECK(apply_isometry(res.children[0], IsometryElement::reflection()) == res.children[1]);
}

TEST_CASE("arclength resampling") {
    const auto g = make_dumbbell(0.3, 1.0, 201);
    WarpedMetric squeezed = g;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.grid.x()[i];
        squeezed.phi[i] = g.phi[i] * (1.0 + 4.0 * std::pow(std::sin(2.0 * M_PI * x), 2));
    }
    CHECK(grid_compression(g) == doctest::Approx(1.0));
    CHECK(grid_compression(squeezed) < 0.5);

    const auto re = resample_by_arclength(squeezed, 151);
    CHECK(re.size() == 151);
    for (double v : re.phi) CHECK(v == re.phi.front());
    CHECK(total_length(re) == doctest::Approx(total_length(squeezed)).epsilon(1e-12));
    CHECK_FALSE(find_violation(re));

    const auto r = IsometryElement::reflection();
    CHECK(resample_by_arclength(apply_isometry(squeezed, r), 151) == apply_isometry(re, r));
}

TEST_CASE("round sphere spacetime has no events") {
    FlowParams fp;
    const auto st = run_singular_flow(make_round_sphere(1.0, 101), fp, SurgeryParams{});
    CHECK(st.events.empty());
    CHECK(st.components.size() == 1);
    CHECK(st.leaves() == std::vector<std::size_t>{0});
    CHECK(st.components[0].termination.kind == TerminationKind::extinction);
    CHECK(st.check_invariants().empty());
}

TEST_CASE("dumbbell neck pinch") {
    const auto& st = dumbbell_spacetime();
    REQUIRE(st.events.size() == 1);
    const auto& e = st.events.front();
    CHECK(e.parent == 0);
    CHECK(e.children.size() == 2);
    CHECK(e.neck_radius <= *st.surgery.rho_surg);
    CHECK(e.volume_after < e.volume_before);
    CHECK(st.check_invariants().empty());
    for (std::size_t id : st.leaves()) CHECK(st.components[id].termination.kind == TerminationKind::extinction);

    SUBCASE("slices are time ordered and children are born at the event") {
        for (std::size_t k = 1; k < st.slices.size(); ++k) CHECK(st.slices[k].time > st.slices[k - 1].time);
        for (std::size_t id : e.children) CHECK(st.components[id].birth_time == e.time);
    }
    SUBCASE("reflection is an automorphism that swaps the children") {
        const auto rep = spacetime_isometry_check(st, IsometryElement::reflection());
        CHECK(rep.is_automorphism);
        CHECK(rep.max_drift == 0.0);
        const std::vector<std::pair<std::size_t, std::size_t>> expected{{0, 0}, {1, 2}, {2, 1}};
        CHECK(rep.permutation == expected);
    }
    SUBCASE("component trajectories") {
        const auto tr = st.component_trajectory(1);
        CHECK_FALSE(tr.slices.empty());
        CHECK(tr.slices.front().time == doctest::Approx(e.time));
        CHECK_THROWS_AS(st.component_trajectory(99), InvalidArgument);
    }
}

TEST_CASE("induced correspondence rejects maps that do not match the roots") {
    FlowParams fp;
    fp.t_max = 0.001;
    const auto a = run_singular_flow(make_dumbbell(0.3, 1.0, 201), fp, SurgeryParams{});
    const auto b = run_singular_flow(make_dumbbell(0.3, 1.0, 201, false), fp, SurgeryParams{});
    CHECK(induced_correspondence(a, a, IsometryElement::identity()).ok);
    const auto bad = induced_correspondence(a, b, IsometryElement::identity());
    CHECK_FALSE(bad.ok);
    CHECK_FALSE(bad.failure.empty());
}

TEST_CASE("singular flow is deterministic") {
    FlowParams fp;
    fp.t_max = 0.01;
    const auto g = make_dumbbell(0.2, 1.0, 201, false);
    CHECK(run_singular_flow(g, fp, SurgeryParams{}) == run_singular_flow(g, fp, SurgeryParams{}));
}
