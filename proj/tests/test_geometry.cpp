#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rsflow/geometry.hpp"

using namespace rsflow;
using std::numbers::pi;

TEST_CASE("uniform grids") {
    const auto closed = ProfileGrid::uniform(11);
    CHECK(closed.x().front() == 0.0);
    CHECK(closed.x().back() == 1.0);
    CHECK(closed.segment_count() == 10);
    CHECK(closed.is_reflection_symmetric());

    const auto periodic = ProfileGrid::uniform(8, Topology::periodic);
    CHECK(periodic.x()[1] == doctest::Approx(0.125));
    CHECK(periodic.segment_count() == 8);
    CHECK(periodic.segment_length(7) == doctest::Approx(0.125));

    CHECK_THROWS_AS(ProfileGrid::uniform(4), InvalidArgument);
    CHECK_THROWS_AS(ProfileGrid::from_nodes({0.0, 0.3, 0.2, 0.6, 1.0}, Topology::closed_interval_with_poles),
                    InvalidArgument);
}

TEST_CASE("fourth-order derivatives on smooth periodic data") {
    double prev = 0.0;
    for (std::size_t n : {32u, 64u}) {
        const auto grid = ProfileGrid::uniform(n, Topology::periodic);
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = std::sin(2.0 * pi * grid.x()[i]);
        const auto d1 = grid.first_derivative(f, Parity::even);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::fabs(d1[i] - 2.0 * pi * std::cos(2.0 * pi * grid.x()[i])));
        if (prev > 0.0) CHECK(std::log2(prev / err) > 3.8);
        prev = err;
    }
}

TEST_CASE("arclength") {
    SUBCASE("unit round sphere has length pi") {
        CHECK(total_length(make_round_sphere(1.0, 101)) == doctest::Approx(pi).epsilon(1e-4));
    }
    SUBCASE("unit lapse gives s = x") {
        WarpedMetric g = make_round_sphere(1.0, 21);
        g.phi.assign(21, 1.0);
        const auto s = arclength(g);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == doctest::Approx(g.grid.x()[i]).epsilon(1e-14));
    }
    SUBCASE("constant lapse 2 gives length 2") {
        WarpedMetric g = make_round_sphere(1.0, 21);
        g.phi.assign(21, 2.0);
        CHECK(total_length(g) == doctest::Approx(2.0));
    }
}

TEST_CASE("volume of the unit round sphere is 2 pi^2") {
    CHECK(volume(make_round_sphere(1.0, 401)) == doctest::Approx(2.0 * pi * pi).epsilon(1e-4));
}

TEST_CASE("metric validation") {
    auto g = make_round_sphere(1.0, 51);
    CHECK_FALSE(find_violation(g));
    g.phi[7] = -1.0;
    CHECK(find_violation(g));
    g = make_round_sphere(1.0, 51);
    g.psi[0] = 1e-3;
    CHECK_THROWS_AS(validate(g), InvalidMetric);
    g = make_round_sphere(1.0, 51);
    for (auto& v : g.psi) v *= 1.2;  // pole slope 1.2
    CHECK(find_violation(g));
    CHECK(pole_slope(make_round_sphere(1.0, 201), false) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(pole_slope(make_round_sphere(1.0, 201), true) == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("curvature of model geometries") {
    SUBCASE("round sphere of radius r has K = 1/r^2 everywhere, poles included") {
        const double r = 1.7;
        const auto c = curvature(make_round_sphere(r, 201));
        for (std::size_t i = 0; i < c.k1.size(); ++i) {
            CHECK(c.k1[i] == doctest::Approx(1.0 / (r * r)).epsilon(1e-5));
            CHECK(c.k2[i] == doctest::Approx(1.0 / (r * r)).epsilon(1e-5));
        }
        CHECK(c.roundness() == doctest::Approx(1.0).epsilon(1e-4));
    }
    SUBCASE("round cylinder") {
        const auto c = curvature(make_cylinder(0.5, 3.0, 32));
        for (std::size_t i = 0; i < c.k1.size(); ++i) {
            CHECK(c.k1[i] == doctest::Approx(0.0));
            CHECK(c.k2[i] == doctest::Approx(4.0));
            CHECK(c.scalar[i] == doctest::Approx(8.0));
        }
        CHECK(c.roundness(false) == doctest::Approx(1.0));
    }
}

TEST_CASE("curvature identities on random profiles") {
    for (const auto& p : oracle::random_profiles(10, 11)) {
        const auto c = curvature(p.sample(81));
        for (std::size_t i = 1; i + 1 < c.k1.size(); ++i) {
            CHECK(c.ric_ss[i] == doctest::Approx(2.0 * c.k1[i]));
            CHECK(c.ric_sphere[i] == doctest::Approx(c.k1[i] + c.k2[i]));
        }
        for (std::size_t i = 0; i < c.k1.size(); ++i) CHECK(c.scalar[i] == doctest::Approx(4.0 * c.k1[i] + 2.0 * c.k2[i]));
    }
}

TEST_CASE("numerical Ricci oracle agrees with the closed form") {
    for (const auto& p : oracle::random_profiles(5, 3)) {
        for (double x : {0.2, 0.5, 0.77}) {
            const auto num = p.ricci_eigenvalues(x);
            const auto cf = oracle::closed_form_ricci(p, x);
            CHECK(num[0] == doctest::Approx(cf[0]).epsilon(1e-6));
            CHECK(num[1] == doctest::Approx(cf[1]).epsilon(1e-6));
        }
    }
}

TEST_CASE("curvature converges to the Ricci oracle at fourth order") {
    for (const auto& p : oracle::random_profiles(4, 99)) {
        double err[2] = {0.0, 0.0};
        const std::size_t ns[2] = {41, 81};
        for (int q = 0; q < 2; ++q) {
            const auto g = p.sample(ns[q]);
            const auto c = curvature(g);
            for (std::size_t k = 1; k <= 9; ++k) {
                const std::size_t i = k * (ns[q] - 1) / 10;
                const auto o = p.ricci_eigenvalues(g.grid.x()[i]);
                err[q] = std::max({err[q], std::fabs(c.ric_ss[i] - o[0]), std::fabs(c.ric_sphere[i] - o[1])});
            }
        }
        CHECK(std::log2(err[0] / err[1]) >= 1.9);
    }
}

TEST_CASE("isometry group Z2") {
    const auto id = IsometryElement::identity();
    const auto r = IsometryElement::reflection();
    CHECK(r * r == id);
    CHECK(r * id == r);
    CHECK(id * r == r);
    CHECK(isometry_from_string(to_string(r)) == r);

    const auto p = oracle::random_profiles(1, 5).front();
    const auto g = p.sample(41);
    CHECK(apply_isometry(apply_isometry(g, r), r) == g);
    CHECK(apply_isometry(g, id) == g);

    const auto cyl = make_cylinder(1.0, 2.0, 16);
    for (std::size_t i = 0; i < 16; ++i)
        CHECK(isometry_node_image(cyl.grid, r, isometry_node_image(cyl.grid, r, i)) == i);
}

TEST_CASE("curvature commutes with the reflection") {
    const auto p = oracle::random_profiles(1, 8).front();
    const auto g = p.sample(61);
    const auto r = IsometryElement::reflection();
    const auto c = curvature(g);
    const auto cr = curvature(apply_isometry(g, r));
    const auto k1r = apply_isometry(g.grid, c.k1, r);
    const auto k2r = apply_isometry(g.grid, c.k2, r);
    for (std::size_t i = 0; i < k1r.size(); ++i) {
        CHECK(cr.k1[i] == doctest::Approx(k1r[i]).epsilon(1e-12));
        CHECK(cr.k2[i] == doctest::Approx(k2r[i]).epsilon(1e-12));
    }
}

TEST_CASE("metric distance") {
    const auto ps = oracle::random_profiles(2, 21);
    const auto a = ps[0].sample(41);
    auto b = a;
    for (auto& v : b.psi) v *= 1.01;
    CHECK(metric_distance(a, a) == 0.0);
    CHECK(metric_distance(a, b) == metric_distance(b, a));
    CHECK(metric_distance(a, b) == doctest::Approx(0.01).epsilon(1e-9));
    CHECK_THROWS_AS(metric_distance(a, ps[1].sample(21)), GridMismatch);
}

TEST_CASE("dumbbell constructor") {
    const auto g = make_dumbbell(0.15, 1.0, 401);
    validate(g);
    CHECK(min_interior_psi(g) < 0.16);
    CHECK(max_psi(g) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(apply_isometry(g, IsometryElement::reflection()) == g);
    CHECK_FALSE(apply_isometry(make_dumbbell(0.15, 1.0, 401, false), IsometryElement::reflection()) ==
                make_dumbbell(0.15, 1.0, 401, false));
    CHECK_THROWS_AS(make_dumbbell(1.0, 0.5, 101), InvalidArgument);
}
