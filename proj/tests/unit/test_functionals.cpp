#include <doctest.h>

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>

#include "freebnd/error.hpp"
#include "freebnd/functionals.hpp"
#include "freebnd/numerics.hpp"

using namespace freebnd;
constexpr double pi = std::numbers::pi;

namespace {

Field xn(int n) {
    return analytic_field(n, [n](const Point& x) { return x[n - 1]; }, [n](const Point&) { return Point::unit(n, n - 1); });
}

// Re((x1 + i x2)^k) and its gradient k * conj-form.
Field re_zk(int k) {
    return analytic_field(
        2, [k](const Point& x) { return std::pow(std::complex<double>(x[0], x[1]), k).real(); },
        [k](const Point& x) {
            const auto d = double(k) * std::pow(std::complex<double>(x[0], x[1]), k - 1);
            return Point{d.real(), -d.imag()};
        });
}

// Shell integral of x2^2 over the circle of radius r by a fine midpoint sum.
double circle_x2_squared(double r) {
    const int m = 100000;
    double acc = 0;
    for (int i = 0; i < m; ++i) {
        const double t = 2 * pi * (i + 0.5) / m;
        acc += std::pow(r * std::sin(t), 2) * r * 2 * pi / m;
    }
    return acc;
}

}  // namespace

TEST_CASE("ACF of a linear function in 2D and 3D") {
    for (double r : {0.1, 0.5, 2.0}) {
        CHECK(acf_J(xn(2), zero_point(2), r) == doctest::Approx(pi / 2).epsilon(0.03));
        CHECK(acf_J(xn(3), zero_point(3), r) == doctest::Approx(pi).epsilon(0.05));
    }
}

TEST_CASE("ACF vanishes for a one-phase function") {
    auto f = analytic_field(2, [](const Point& x) { return dot(x, x); }, [](const Point& x) { return x * 2.0; });
    CHECK(acf_J(f, zero_point(2), 0.5) == 0.0);
}

TEST_CASE("ACF rejects centers off the zero set") {
    CHECK_THROWS_AS(acf_J(xn(2), Point{0, 0.1}, 0.5), Error);
}

TEST_CASE("H of x2 in 2D") {
    for (double r : {0.1, 0.3, 1.0}) {
        CHECK(almgren_H(xn(2), zero_point(2), r) == doctest::Approx(pi * r * r * r).epsilon(0.02));
        CHECK(almgren_H(xn(2), zero_point(2), r) == doctest::Approx(circle_x2_squared(r)).epsilon(1e-6));
    }
}

TEST_CASE("frequency of homogeneous harmonic polynomials") {
    for (int k = 1; k <= 3; ++k)
        for (double r : {0.1, 0.2, 0.35, 0.5}) CHECK(almgren_N(re_zk(k), zero_point(2), r) == doctest::Approx(k).epsilon(0.02));
    auto quad3 = analytic_field(3, [](const Point& x) { return x[0] * x[0] - x[1] * x[1]; },
                                [](const Point& x) { return Point{2 * x[0], -2 * x[1], 0}; });
    auto lewy = analytic_field(3, [](const Point& x) { return lewy_polynomial(3, x); },
                               [](const Point& x) { return lewy_gradient(3, x); });
    for (double r : {0.1, 0.5}) {
        CHECK(almgren_N(xn(3), zero_point(3), r) == doctest::Approx(1).epsilon(0.02));
        CHECK(almgren_N(quad3, zero_point(3), r) == doctest::Approx(2).epsilon(0.02));
        CHECK(almgren_N(lewy, zero_point(3), r) == doctest::Approx(3).epsilon(0.02));
    }
}

TEST_CASE("Monneau potential examples") {
    const LinearForm p2 = LinearForm::along(Point{0, 1}, 2.0);
    for (double r : {0.1, 0.4}) {
        CHECK(monneau_M(xn(2), LinearForm::along(Point{0, 1}, 1.0), zero_point(2), r) == doctest::Approx(0.0));
        CHECK(monneau_M(xn(2), p2, zero_point(2), r) == doctest::Approx(pi).epsilon(1e-6));
    }
    const LinearForm zero{Point(2)};
    const double m1 = monneau_M(re_zk(2), zero, zero_point(2), 0.2), m2 = monneau_M(re_zk(2), zero, zero_point(2), 0.4);
    CHECK(m2 / m1 == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("frequency-Monneau identity for v = x2 + a(x1^2 - x2^2)") {
    const double a = 0.7;
    auto v = analytic_field(2, [a](const Point& x) { return x[1] + a * (x[0] * x[0] - x[1] * x[1]); },
                            [a](const Point& x) { return Point{2 * a * x[0], 1 - 2 * a * x[1]}; });
    const LinearForm p = LinearForm::along(Point{0, 1}, 1.0);
    for (double r : {0.1, 0.2, 0.4}) {
        const double H = almgren_H(v, zero_point(2), r), N = almgren_N(v, zero_point(2), r);
        const double dr = 1e-3 * r;
        const double dM = (monneau_M(v, p, zero_point(2), r + dr) - monneau_M(v, p, zero_point(2), r - dr)) / (2 * dr);
        CHECK(H / std::pow(r, 3) * (N - 1) == doctest::Approx(r * dM / 2).epsilon(0.03));
    }
}

TEST_CASE("grid-sampled linear field") {
    const auto g = GridSpec::make({-1, -1}, {1, 1}, {128, 128, 0});
    auto f = grid_field(ScalarField::sample(g, [](const Point& x) { return x[1]; }));
    CHECK(acf_J(f, zero_point(2), 0.5) == doctest::Approx(pi / 2).epsilon(0.03));
    CHECK(almgren_N(f, zero_point(2), 0.5) == doctest::Approx(1).epsilon(0.02));
    CHECK_THROWS_AS(acf_J(f, zero_point(2), 4 * g.h), Error);
}

TEST_CASE("v on the half-plane pair") {
    auto pair = std::make_shared<HarmonicPair>(make_default_pair(make_halfplane(), 256));
    const auto v = build_v(pair, zero_point(2));
    CHECK(v.hQ == doctest::Approx(1.0).epsilon(0.01));
    for (int k = 1; k <= 20; ++k) {
        const Point x{0.0, 0.04 * k};
        CHECK(v.view.value(-x) == doctest::Approx(-v.view.value(x)).epsilon(0.02));
    }
    CHECK(v.view.value({0, 0.1}) > 0);
    CHECK(v.view.value({0, -0.1}) < 0);
    CHECK(std::abs(v.view.value(zero_point(2))) < 1e-3);
    // N at the flat boundary point.
    CHECK(almgren_N(v.view, zero_point(2), 0.1) == doctest::Approx(1.0).epsilon(0.02));
    CHECK_THROWS_AS(build_v(pair, Point{0, 0.3}), Error);
}

TEST_CASE("h == 1 pair: v equals u+ - u- at nodes") {
    auto pair = std::make_shared<HarmonicPair>(make_default_pair(make_halfplane(), 64));
    auto v = build_v(pair, zero_point(2));
    v.hQ = 1.0;
    const auto f = v.field(), u = pair->u();
    for (size_t i = 0; i < f.values().size(); ++i) CHECK(f.values()[i] == u.values()[i]);
}

TEST_CASE("trace csv layout") {
    RadialTrace t;
    t.center = Point{0, 0};
    t.kind = TraceKind::N;
    t.push(0.5, 1.0);
    t.push(0.25, 0.1);
    const auto s = trace_csv({t});
    CHECK(s.substr(0, s.find('\n')) == "kind,center,r,value,slack");
    CHECK(s.find("N,0;0,0.5,1,0\n") != std::string::npos);
    CHECK(s.find("0.10000000000000001") != std::string::npos);
}
