#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "freebnd/error.hpp"
#include "freebnd/flatness.hpp"
#include "freebnd/hodograph.hpp"

using namespace freebnd;

namespace {

HodographSource linear_source(double slope_plus, double slope_minus) {
    HodographSource src;
    src.domain = make_halfplane();
    src.u_plus = [slope_plus](const Point& x) { return slope_plus * x[1]; };
    src.u_minus = [slope_minus](const Point& x) { return -slope_minus * x[1]; };
    src.h = [slope_plus, slope_minus](const Point&) { return slope_minus / slope_plus; };
    return src;
}

HodographSource disk_source() {
    auto disk = make_disk();
    const auto [pp, pm] = disk->default_poles();
    HodographSource src;
    src.domain = disk;
    src.u_plus = [disk, pp](const Point& x) { return *disk->exact_green(1, pp, x); };
    src.u_minus = [disk, pm](const Point& x) { return *disk->exact_green(-1, pm, x); };
    src.h = [disk, pp, pm](const Point& q) { return *disk->exact_density(-1, pm, q) / *disk->exact_density(1, pp, q); };
    return src;
}

}  // namespace

TEST_CASE("hodograph of linear profiles") {
    const auto hp = hodograph_transform(linear_source(1.0, 1.0), Point{0.0, 0.0});
    double worst = 0.0;
    for (int j = 0; j < hp.psi.nn; ++j)
        for (int i = 0; i < hp.psi.n1; ++i) {
            worst = std::max(worst, std::abs(hp.psi.at(i, j) - hp.psi.yn(j)));
            worst = std::max(worst, std::abs(hp.phi.at(i, j) - hp.phi.yn(j)));
        }
    CHECK(worst < 1e-12);
    const auto r = transformed_residual(hp);
    CHECK(r.psi_max < 1e-9);
    CHECK(r.phi_max < 1e-9);
    CHECK(r.boundary_sum < 1e-12);
    CHECK(r.boundary_flux < 1e-9);

    // u+ = 2 x_n inverts to y_n / 2; with u- = 3 |x_n| and h = 3/2 the flux
    // condition h/psi_n = 1/phi_n reads 3 = 3.
    const auto hp2 = hodograph_transform(linear_source(2.0, 3.0), Point{0.0, 0.0});
    for (int j = 0; j < hp2.psi.nn; ++j) {
        CHECK(hp2.psi.at(3, j) == doctest::Approx(hp2.psi.yn(j) / 2).epsilon(1e-12));
        CHECK(hp2.phi.at(3, j) == doctest::Approx(hp2.phi.yn(j) / 3).epsilon(1e-12));
    }
    const auto r2 = transformed_residual(hp2);
    CHECK(r2.psi_max < 1e-8);
    CHECK(r2.boundary_flux < 1e-9);
    CHECK(r2.min_psi_n == doctest::Approx(0.5));
}

TEST_CASE("hodograph round trip on the disk") {
    const auto src = disk_source();
    const auto hp = hodograph_transform(src, Point{1.0, 0.0});
    CHECK(distance(hp.normal, Point{-1.0, 0.0}) < 1e-12);
    const double top = hp.psi.yn(hp.psi.nn - 1);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u1(-hp.psi.a, hp.psi.a), un(0.0, top);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double y1 = u1(rng), yn = un(rng);
        const Point x = hp.to_x(y1, hp.psi(y1, yn));
        worst = std::max(worst, std::abs(src.u_plus(x) - yn));
    }
    // Bilinear interpolation of psi: error of order spacing^2 times psi'' / psi_n.
    CHECK(worst < 1e-3 * top);
    const auto r = transformed_residual(hp);
    CHECK(r.boundary_sum < 1e-12);
    CHECK(r.min_psi_n > 0);
    CHECK(r.min_phi_n > 0);
}

TEST_CASE("transformed residual converges on exact disk data") {
    const auto src = disk_source();
    std::vector<double> res;
    for (double sp : {0.0125, 0.00625, 0.003125}) {
        HodographPatch patch;
        patch.spacing = sp;
        const auto r = transformed_residual(hodograph_transform(src, Point{1.0, 0.0}, patch));
        res.push_back(r.psi_max);
        CHECK(r.boundary_flux < 1e-4);
    }
    // Second-order differences: a factor near 4 per halving once resolved.
    CHECK(res[0] / res[1] > 3.0);
    CHECK(res[1] / res[2] > 3.0);
}

TEST_CASE("transformed residual on solved disk pairs") {
    auto disk = make_disk();
    std::vector<double> res, hs;
    for (int n : {128, 256, 512}) {
        const auto pair = make_default_pair(disk, n);
        const double h = pair.spec().h;
        const auto r = transformed_residual(hodograph_transform(pair, disk->default_Q()));
        res.push_back(r.psi_max);
        hs.push_back(h);
        CHECK(r.boundary_sum <= 5 * h);
        CHECK(r.boundary_flux <= 5 * h);
        CHECK(r.min_psi_n > 0);
    }
    // At most C h with C from the coarsest level, and at least halving per refinement.
    for (size_t k = 1; k < res.size(); ++k) {
        CHECK(res[k] <= res[0] / hs[0] * hs[k]);
        CHECK(res[k - 1] / res[k] >= 2.0);
    }
}

TEST_CASE("hodograph errors") {
    HodographSource fold = linear_source(1.0, 1.0);
    fold.u_plus = [](const Point& x) { return x[1] - 2 * x[1] * x[1]; };
    try {
        hodograph_transform(fold, Point{0.0, 0.0});
        FAIL("fold not detected");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate);
        CHECK(std::string(e.what()).find("hodograph fold") != std::string::npos);
    }
    HodographSource flat = linear_source(1.0, 1.0);
    flat.u_plus = [](const Point& x) { return std::pow(std::max(x[1], 0.0), 4); };
    CHECK_THROWS_AS(hodograph_transform(flat, Point{0.0, 0.0}), Error);
    CHECK_THROWS_AS(hodograph_transform(linear_source(1.0, 1.0), Point{0.0, 0.2}), Error);
    HodographSource three = linear_source(1.0, 1.0);
    three.domain = make_halfplane(3);
    CHECK_THROWS_AS(hodograph_transform(three, Point{0.0, 0.0, 0.0}), Error);
}

TEST_CASE("DA matrix") {
    const auto m = da_matrix(Point{0.0, 0.0, 1.0});
    CHECK((m + Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);

    const auto q = da_matrix(Point{1.0, 2.0});
    CHECK(q(0, 0) == -0.5);
    CHECK(q(0, 1) == 0.25);
    CHECK(q(1, 0) == 0.25);
    CHECK(q(1, 1) == -0.25);
    CHECK(q == q.transpose());
    // Eigenvalues of [[a, b], [b, c]] from trace and determinant.
    const double tr = q(0, 0) + q(1, 1), det = q(0, 0) * q(1, 1) - q(0, 1) * q(1, 0);
    const double disc = std::sqrt(tr * tr / 4 - det);
    CHECK(tr / 2 + disc < 0);
    CHECK_THROWS_AS(da_matrix(Point{1.0, 0.0}), Error);
    CHECK_THROWS_AS(da_matrix(Point{1.0, -1.0}), Error);
}

TEST_CASE("n = 2 symbol roots") {
    const auto r = ellipticity_check_n2(Point{0.0, 1.0}, Point{0.0, 1.0}, Point{1.0, 0.0}, Point{0.0, 1.0});
    // -(1 + z^2) = 0.
    CHECK(std::abs(r.roots_psi[0] - std::complex<double>(0, 1)) < 1e-15);
    CHECK(std::abs(r.roots_psi[1] - std::complex<double>(0, -1)) < 1e-15);
    CHECK(r.elliptic);
    CHECK(r.conjugacy_error == 0.0);

    const Point pp{0.7, 1.3}, pf{-2.0, 0.4}, xi{0.3, -0.8}, eta{1.1, 0.5};
    const auto a = ellipticity_check_n2(pp, pf, xi, eta);
    const auto b = ellipticity_check_n2(pp, pf, xi * 3.0, eta * 3.0);
    CHECK(a.elliptic);
    CHECK(a.conjugacy_error <= 1e-12);
    // Roots of Q(xi + z eta) do not change when both vectors scale together.
    CHECK(std::abs(a.roots_psi[0] - b.roots_psi[0]) < 1e-12);
    CHECK(b.upper == 2);
    // Each root solves the quadratic form.
    const auto m = da_matrix(pp);
    for (const auto& z : a.roots_psi) {
        const std::complex<double> v0 = xi[0] + z * eta[0], v1 = xi[1] + z * eta[1];
        const auto val = m(0, 0) * v0 * v0 + 2.0 * m(0, 1) * v0 * v1 + m(1, 1) * v1 * v1;
        CHECK(std::abs(val) < 1e-12);
    }
    CHECK_THROWS_AS(ellipticity_check_n2(pp, pf, xi, xi * 2.0), Error);
}

TEST_CASE("coercivity roots") {
    const Point e2{0.0, 1.0}, e1{1.0};
    const auto a = coercivity_check(1.0, e2, e2, e1);
    CHECK(std::abs(a.r1 - std::complex<double>(-1, 0)) < 1e-15);
    CHECK(std::abs(a.combination - std::complex<double>(-2, 0)) < 1e-15);
    CHECK(a.coercive);
    const auto b = coercivity_check(5.0, e2, e2, e1);
    CHECK(std::abs(b.combination - std::complex<double>(-6, 0)) < 1e-14);
    const auto c = coercivity_check(5.0, e2, e2, Point{2.0});
    CHECK(std::abs(c.r1 - 2.0 * b.r1) < 1e-14);
    CHECK(c.coercive);

    // A tilted gradient: the decaying root solves the characteristic quadratic.
    const Point p{0.6, 0.8};
    const auto d = coercivity_check(0.3, p, Point{-1.5, 2.0}, Point{0.7});
    const auto x = d.r1;
    const std::complex<double> i(0, 1);
    const auto val = 0.49 / 0.8 + 2.0 * i * (0.6 * 0.7) / 0.64 * x - (1 + 0.36) / (0.8 * 0.8 * 0.8) * x * x;
    CHECK(std::abs(val) < 1e-12);
    CHECK(d.r1.real() < 0);
    CHECK(d.coercive);
    CHECK_THROWS_AS(coercivity_check(0.0, e2, e2, e1), Error);
    CHECK_THROWS_AS(coercivity_check(1.0, e2, e2, Point{0.0}), Error);
}

TEST_CASE("weight assignments") {
    const auto w = hodograph_weights();
    CHECK(format_weights(w) == "2,2,0,0,1,1,2,1,0,0,0");
    CHECK(weights_validate(w).valid);

    const auto zeros = weights_validate(parse_weights("0,0,0,0,0,0,0,0,0,0,0"));
    CHECK_FALSE(zeros.valid);
    CHECK_FALSE(zeros.conditions[0]);

    auto shifted = w;
    shifted.h0 = -2;
    const auto rep = weights_validate(shifted);
    CHECK_FALSE(rep.valid);
    CHECK_FALSE(rep.conditions[2]);

    const auto muts = weight_mutations();
    CHECK(muts.size() == 10);
    for (const auto& m : muts) {
        const auto r = weights_validate(m.weights);
        CHECK_FALSE(r.valid);
        std::set<int> failed;
        for (int k = 0; k < 4; ++k)
            if (!r.conditions[k]) failed.insert(k + 1);
        CHECK(failed == std::set<int>(m.failing.begin(), m.failing.end()));
    }
    CHECK_THROWS_AS(parse_weights("1,2,3"), Error);
    CHECK_THROWS_AS(parse_weights("2,2,0,0,1,1,2,1,0,0,x"), Error);
}

TEST_CASE("seeded algebra suites") {
    const auto da = da_suite(2024, 1000);
    CHECK(da.passed == 1000);
    CHECK(da.worst < 0);
    const auto da3 = da_suite(2024, 200, 3);
    CHECK(da3.passed == 200);
    const auto conj = conjugacy_suite(2024, 1000);
    CHECK(conj.passed == 1000);
    CHECK(conj.worst <= 1e-12);
    const auto co = coercivity_suite(2024, 1000);
    CHECK(co.passed == 1000);
    CHECK(co.worst < 0);
    CHECK(coercivity_suite(7, 100, 3).passed == 100);
    // Deterministic for a given seed.
    CHECK(to_json(coercivity_suite(2024, 50)).dump() == to_json(coercivity_suite(2024, 50)).dump());
    CHECK(to_json(co)["seed"] == 2024);
}

TEST_CASE("hodograph-derived transmission field") {
    const auto pair = make_default_pair(make_halfplane(), 256);
    const auto hp = hodograph_transform(pair, Point{0.0, 0.0});
    const double rho = std::min(hp.psi.a, hp.psi.yn(hp.psi.nn - 1));
    const auto W = hodograph_transmission_field(hp, rho);
    TransmissionOptions opts;
    opts.step = hp.psi.dn / rho;
    opts.flux_tolerance = 0.02;
    opts.constant = 2.0;
    for (double r : {0.1, 0.2, 0.4}) {
        const auto rep = transmission_expand(W, 2, r, opts);
        CHECK(rep.within_bound);
        // Slope in y_n is psi_n = 1/Theta, near pi for the half-plane.
        CHECK(rep.p == doctest::Approx(3.14159).epsilon(0.05));
    }
    CHECK_THROWS_AS(hodograph_transmission_field(hp, 10.0), Error);
}
