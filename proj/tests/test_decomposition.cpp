#include <doctest.h>

#include "rsflow/decomposition.hpp"

using namespace rsflow;

namespace {

SingularSpacetime sphere_spacetime(std::size_t stride, double t_max = 1.0) {
    FlowParams fp;
    fp.snapshot_stride = stride;
    fp.t_max = t_max;
    return run_singular_flow(make_round_sphere(1.0, 101), fp, SurgeryParams{});
}

}  // namespace

TEST_CASE("round sphere trajectory is extinct and round") {
    FlowParams fp;
    const auto c = classify_component(evolve(make_round_sphere(1.0, 101), fp));
    CHECK(c.tag == ComponentTag::extinct_round);
    CHECK(c.roundness <= kRoundnessThreshold);
    CHECK(c.roundness_trend.size() == kRoundnessWindow);
    REQUIRE(c.extinction_time);
    CHECK(*c.extinction_time == doctest::Approx(0.25).epsilon(0.02));
    CHECK(signature_token(c) == "S3");
}

TEST_CASE("truncated trajectory is unresolved") {
    FlowParams fp;
    fp.t_max = 0.05;
    const auto c = classify_component(evolve(make_round_sphere(1.0, 101), fp));
    CHECK(c.tag == ComponentTag::unresolved);
    CHECK(signature_token(c) == "S3[unresolved]");
}

TEST_CASE("extinction without a round limit is unresolved") {
    FlowTrajectory tr;
    tr.termination.kind = TerminationKind::extinction;
    StepDiagnostics d;
    d.roundness = 3.0;
    tr.diagnostics.assign(12, d);
    CHECK(classify_component(tr).tag == ComponentTag::unresolved);

    // roundness that jumps upward inside the window is rejected even if it ends low
    for (std::size_t i = 0; i < 12; ++i) tr.diagnostics[i].roundness = i == 9 ? 1.2 : 1.01;
    CHECK(classify_component(tr).tag == ComponentTag::unresolved);
    for (auto& row : tr.diagnostics) row.roundness = 1.01;
    CHECK(classify_component(tr).tag == ComponentTag::extinct_round);
}

TEST_CASE("converged trajectories are tested against the Einstein condition") {
    FlowTrajectory tr;
    tr.termination.kind = TerminationKind::converged;
    tr.slices.push_back(make_round_sphere(1.0, 101));
    auto c = classify_component(tr);
    CHECK(c.tag == ComponentTag::converged_steady);
    REQUIRE(c.fitted_lambda);
    CHECK(*c.fitted_lambda == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(signature_token(c) == "S3[steady]");

    tr.slices.back() = make_dumbbell(0.3, 1.0, 101);
    CHECK(classify_component(tr).tag == ComponentTag::unresolved);
}

TEST_CASE("periodic components use the S2xS1 token") {
    FlowParams fp;
    fp.t_max = 1.0;
    const auto c = classify_component(evolve(make_cylinder(1.0, 2.0, 32), fp));
    CHECK(c.topology == Topology::periodic);
    CHECK(c.tag == ComponentTag::extinct_round);
    CHECK(signature_token(c) == "S2xS1");
}

TEST_CASE("asymptotic decomposition of the round sphere") {
    const auto d = asymptotic_decomposition(sphere_spacetime(100));
    CHECK(d.signature == "S3");
    CHECK(d.event_count == 0);
    CHECK(d.unresolved_count == 0);
    REQUIRE(d.components.size() == 1);
    CHECK(d.components.front().first == 0);
}

TEST_CASE("empty horizon leaves every leaf unresolved") {
    const auto d = asymptotic_decomposition(sphere_spacetime(100, 0.0));
    CHECK(d.signature == "S3[unresolved]");
    CHECK(d.unresolved_count == d.components.size());
}

TEST_CASE("signature does not depend on the snapshot stride") {
    const auto a = asymptotic_decomposition(sphere_spacetime(1));
    const auto b = asymptotic_decomposition(sphere_spacetime(1000));
    CHECK(a == b);
}

TEST_CASE("decomposition map") {
    const auto st = sphere_spacetime(200);
    SUBCASE("identity") {
        const auto rep = decomposition_map(st, st, IsometryElement::identity());
        CHECK(rep.ok);
        CHECK(rep.leaves == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}});
        CHECK(rep.max_final_drift == 0.0);
    }
    SUBCASE("reflection twice equals the identity correspondence") {
        const auto r = decomposition_map(st, st, IsometryElement::reflection());
        const auto rr = decomposition_map(st, st, IsometryElement::reflection() * IsometryElement::reflection());
        CHECK(r.ok);
        CHECK(rr.leaves == decomposition_map(st, st, IsometryElement::identity()).leaves);
    }
    SUBCASE("different event structure is reported") {
        SingularSpacetime other = st;
        SurgeryEvent e;
        e.time = 0.1;
        e.parent = 0;
        e.children = {1, 2};
        other.events.push_back(e);
        ComponentRecord c1 = other.components[0];
        c1.id = 1;
        c1.parent = 0;
        ComponentRecord c2 = c1;
        c2.id = 2;
        other.components.push_back(c1);
        other.components.push_back(c2);
        const auto rep = decomposition_map(st, other, IsometryElement::identity());
        CHECK_FALSE(rep.ok);
        CHECK_FALSE(rep.failure.empty());
    }
}
