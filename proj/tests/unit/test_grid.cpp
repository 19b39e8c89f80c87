#include <doctest.h>

#include <cmath>
#include <numbers>

#include "freebnd/error.hpp"
#include "freebnd/grid.hpp"
#include "freebnd/numerics.hpp"

using namespace freebnd;
constexpr double pi = std::numbers::pi;

namespace {

// Poisson integral of boundary data on the unit circle, by trapezoid rule.
double poisson_disk(double (*data)(double), const Point& x) {
    const int m = 4096;
    double acc = 0.0;
    const double r2 = dot(x, x);
    for (int k = 0; k < m; ++k) {
        const double t = 2 * pi * k / m;
        const double dx = x[0] - std::cos(t), dy = x[1] - std::sin(t);
        acc += (1 - r2) / (dx * dx + dy * dy) * data(t);
    }
    return acc / m;
}

double cos_data(double t) { return std::cos(t); }
double exp_cos_data(double t) { return std::exp(std::cos(t)) * std::cos(std::sin(t)); }

}  // namespace

TEST_CASE("grid spec validation") {
    CHECK_THROWS_AS(GridSpec::make({0, 0}, {1, 2}, {8, 8, 0}), Error);
    CHECK_THROWS_AS(GridSpec::make({0, 0}, {1, 1}, {4, 4, 0}), Error);
    const auto g = GridSpec::make({0, 0}, {1, 1}, {8, 8, 0});
    CHECK(g.h == doctest::Approx(0.125));
    CHECK(g.node_count() == 81);
    CHECK(g.ijk(g.index({3, 5, 0})) == Index3{3, 5, 0});
}

TEST_CASE("multilinear interpolation reproduces linear fields") {
    const auto g = GridSpec::make({-1, -1, -1}, {1, 1, 1}, {8, 8, 8});
    auto f = ScalarField::sample(g, [](const Point& x) { return 1 + 2 * x[0] - x[1] + 0.5 * x[2]; });
    CHECK(f({0.13, -0.71, 0.4}) == doctest::Approx(1 + 0.26 + 0.71 + 0.2));
    CHECK_THROWS_AS(f({1.5, 0, 0}), Error);
}

TEST_CASE("constant data gives a constant solution") {
    auto disk = make_disk();
    const auto g = GridSpec::cube(disk->default_box(), 64);
    auto u = solve_dirichlet(*disk, [](const Point&) { return 1.0; }, g);
    for (size_t i = 0; i < u.values().size(); ++i)
        if (disk->signed_distance(g.node(g.ijk(i))) > 0) CHECK(u.values()[i] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("linear data on a half disk is reproduced") {
    auto disk = make_disk();
    const auto g = GridSpec::make({-1.25, 0}, {1.25, 1.25}, {64, 32, 0});
    auto u = solve_dirichlet(*disk, [](const Point& x) { return x[1]; }, g);
    double err = 0;
    for (size_t i = 0; i < u.values().size(); ++i) {
        const Point x = g.node(g.ijk(i));
        if (disk->signed_distance(x) > 0) err = std::max(err, std::abs(u.values()[i] - x[1]));
    }
    CHECK(err < 1e-8);
}

TEST_CASE("cos data on the disk gives x1") {
    auto disk = make_disk();
    const auto g = GridSpec::cube(disk->default_box(), 64);
    auto u = solve_dirichlet(*disk, [](const Point& x) { return x[0] / norm(x); }, g);
    for (const Point& x : {Point{0.3, 0.2}, Point{-0.5, 0.4}, Point{0.1, -0.8}, Point{0.0, 0.0}})
        CHECK(std::abs(u(x) - poisson_disk(cos_data, x)) < 16 * g.h * g.h);
}

TEST_CASE("grid refinement: error drops by at least 3 per halving") {
    auto disk = make_disk();
    double prev = 0;
    for (int n : {32, 64, 128}) {
        const auto g = GridSpec::cube(disk->default_box(), n);
        auto u = solve_dirichlet(*disk, [](const Point& x) { return std::exp(x[0]) * std::cos(x[1]); }, g);
        double err = 0;
        for (const Point& x : {Point{0.3, 0.2}, Point{-0.5, 0.4}, Point{0.1, -0.8}, Point{0.6, 0.6}})
            err = std::max(err, std::abs(u(x) - poisson_disk(exp_cos_data, x)));
        if (n > 32) CHECK(prev / err >= 3.0);
        prev = err;
    }
}

TEST_CASE("disk Green's function from the center") {
    auto disk = make_disk();
    const auto g = GridSpec::cube(disk->default_box(), 512);
    SolveReport rep;
    auto G = greens_function(*disk, {0, 0}, g, &rep);
    CHECK(rep.relative_residual <= 1e-10);
    double worst = 0;
    for (int k = 0; k < 40; ++k) {
        const double r = 0.2 + 0.6 * k / 39.0, t = 0.37 * k;
        const Point x{r * std::cos(t), r * std::sin(t)};
        const double exact = -std::log(r) / (2 * pi);
        worst = std::max(worst, std::abs(G(x) - exact) / exact);
    }
    CHECK(worst <= 0.02);
    CHECK(*std::min_element(G.values().begin(), G.values().end()) >= 0.0);
}

TEST_CASE("half-plane Green's function and harmonic measure") {
    auto hp = make_halfplane();
    auto pair = make_default_pair(hp, 256);
    const Point pole{0, 1}, image{0, -1};
    for (int k = 0; k < 10; ++k) {
        const Point x{-1.5 + 0.33 * k, 0.2 + 0.25 * (k % 5)};
        const double exact = std::log(distance(x, image) / distance(x, pole)) / (2 * pi);
        CHECK(pair.u_plus(x) == doctest::Approx(exact).epsilon(0.03));
    }
    const double w = harmonic_measure_of_ball(pair, 1, {0, 0}, 1.0);
    CHECK(w == doctest::Approx(0.5).epsilon(0.02));
    CHECK(harmonic_measure_of_ball(pair, 1, {0, 0}, 0.5) <= w);
    CHECK_THROWS_AS(harmonic_measure_of_ball(pair, 1, {0, 0}, pair.spec().h), Error);
    CHECK(total_flux(pair, 1) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(pair.h({0.3, 0}) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("half-plane density at 512") {
    auto pair = make_default_pair(make_halfplane(), 512);
    const auto t = boundary_density(pair, 1, {0, 0}, {0.4, 0.2, 0.1, 0.05});
    CHECK(t.values.back() == doctest::Approx(1 / pi).epsilon(0.03));
}

TEST_CASE("disk density and arc measure") {
    auto disk = make_disk();
    auto pair = make_default_pair(disk, 256);
    CHECK(pair.density(1, {1, 0}) == doctest::Approx(1 / (2 * pi)).epsilon(0.02));
    CHECK(pair.density(1, {0, -1}) == doctest::Approx(1 / (2 * pi)).epsilon(0.02));
    // Arc of angle phi cut by the ball B((1,0), r): phi = 4 asin(r/2).
    const double r = 0.5, phi = 4 * std::asin(r / 2);
    CHECK(harmonic_measure_of_ball(pair, 1, {1, 0}, r) == doctest::Approx(phi / (2 * pi)).epsilon(0.02));
    CHECK(total_flux(pair, 1) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("pole too close to the boundary is rejected") {
    auto disk = make_disk();
    const auto g = GridSpec::cube(disk->default_box(), 64);
    CHECK_THROWS_AS(greens_function(*disk, {0.95, 0}, g), Error);
}

TEST_CASE("three-dimensional half-space Green's function") {
    auto hs = make_halfplane(3);
    const auto g = GridSpec::cube(hs->default_box(), 48);
    auto G = greens_function(*hs, {0, 0, 1}, g);
    const Point x{0.3, -0.2, 0.5};
    const double exact = (1 / distance(x, {0, 0, 1}) - 1 / distance(x, {0, 0, -1})) / (4 * pi);
    CHECK(G(x) == doctest::Approx(exact).epsilon(0.03));
}

TEST_CASE("four-dimensional domains are geometry-only") {
    auto g = GridSpec::make({-1, -1}, {1, 1}, {8, 8, 0});
    try {
        solve_dirichlet(*make_quadratic_cone_r4(), [](const Point&) { return 0.0; }, g);
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unsupported_dimension);
    }
}
