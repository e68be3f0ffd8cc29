#include <doctest.h>

#include <cmath>

#include "rsflow/experiments.hpp"

using namespace rsflow;

TEST_CASE("perturbation directions are reproducible") {
    const auto a = perturbation_directions(42, 5);
    const auto b = perturbation_directions(42, 5);
    CHECK(a == b);
    CHECK_FALSE(perturbation_directions(43, 5) == a);
    // the first samples do not depend on how many are requested
    const auto c = perturbation_directions(42, 8);
    CHECK(std::equal(a.begin(), a.end(), c.begin()));
    for (const auto& d : a)
        for (double v : d) CHECK(std::fabs(v) <= 1.0);
}

TEST_CASE("perturbations stay within epsilon and keep the poles closed") {
    const auto base = make_dumbbell(0.15, 1.0, 401);
    const auto dirs = perturbation_directions(7, 6);
    for (auto mode : {PerturbationMode::profile_bump, PerturbationMode::neck_radius, PerturbationMode::lobe_radius}) {
        for (const auto& d : dirs) {
            const auto g = perturb(base, mode, 0.01, d);
            CHECK(metric_distance(g, base) <= 0.01 + 1e-15);
            CHECK_FALSE(find_violation(g));
            CHECK(pole_slope(g, false) == doctest::Approx(pole_slope(base, false)).epsilon(1e-6));
        }
    }
    CHECK(perturb(base, PerturbationMode::profile_bump, 0.0, dirs.front()) == base);
}

TEST_CASE("shrinking epsilon scales the same direction") {
    const auto base = make_round_sphere(1.0, 101);
    const auto d = perturbation_directions(3, 1).front();
    const double big = metric_distance(perturb(base, PerturbationMode::profile_bump, 0.02, d), base);
    const double small = metric_distance(perturb(base, PerturbationMode::profile_bump, 0.01, d), base);
    CHECK(small < big);
    CHECK(small / big == doctest::Approx((0.01 / 1.01) / (0.02 / 1.02)).epsilon(0.02));
}

TEST_CASE("sweep configuration is validated") {
    SweepConfig c;
    c.samples = 1;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.epsilon = -0.1;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    CHECK_THROWS_AS(perturbation_from_string("wobble"), InvalidArgument);
}

TEST_CASE("stratification around the round sphere") {
    SweepConfig cfg;
    cfg.base.kind = InitialMetricSpec::Kind::round_sphere;
    cfg.base.n = 81;
    cfg.samples = 3;
    cfg.seed = 5;
    FlowParams fp;
    const auto a = stratification_experiment(cfg, fp, SurgeryParams{});
    CHECK(a.base_signature == "S3");
    CHECK(a.all_equal);
    CHECK(a.unresolved_count == 0);
    CHECK(a.samples.size() == 3);
    CHECK(a.epsilon_used <= cfg.epsilon);
    CHECK(a == stratification_experiment(cfg, fp, SurgeryParams{}));

    SUBCASE("epsilon = 0 reproduces the base run") {
        cfg.epsilon = 0.0;
        const auto z = stratification_experiment(cfg, fp, SurgeryParams{});
        for (const auto& s : z.samples) {
            CHECK(s.epsilon_used == 0.0);
            CHECK(s.signature == z.base_signature);
        }
    }
}

TEST_CASE("functor laws") {
    FlowParams fp;
    SUBCASE("round sphere: injectivity is skipped") {
        const auto rep = functor_law_suite(make_round_sphere(1.0, 81), fp, SurgeryParams{});
        CHECK(rep.identity_ok);
        CHECK(rep.composition_ok);
        CHECK(rep.injectivity_skipped);
        CHECK_FALSE(rep.skip_reason.empty());
        CHECK(rep.passed());
    }
    SUBCASE("asymmetric dumbbell is rejected") {
        CHECK_THROWS_AS(functor_law_suite(make_dumbbell(0.15, 1.0, 201, false), fp, SurgeryParams{}),
                        PreconditionFailed);
    }
}

TEST_CASE("soliton suite") {
    SUBCASE("t = 0 is an exact match") {
        SolitonSuiteParams p;
        p.t = 0.0;
        p.n_coarse = 51;
        p.n_fine = 101;
        const auto rep = soliton_suite(p);
        CHECK(rep.passed);
        for (const auto& r : rep.runs) CHECK(r.error == 0.0);
    }
    SUBCASE("sigma must stay positive") {
        SolitonSuiteParams p;
        p.t = 0.3;
        CHECK_THROWS_AS(soliton_suite(p), InvalidArgument);
    }
    SUBCASE("coarse pair converges") {
        SolitonSuiteParams p;
        p.n_coarse = 51;
        p.n_fine = 101;
        p.t = 0.05;
        const auto rep = soliton_suite(p);
        CHECK(rep.within_bounds);
        CHECK(rep.ratio >= 3.6);
        CHECK(rep.sigma == doctest::Approx(0.8));
    }
}
