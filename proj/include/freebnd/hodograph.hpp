#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "freebnd/grid.hpp"

namespace freebnd {

// Node values on the rectangle [-a, a] x [0, Y] with spacings dy (tangential)
// and dn (normal); index j * n1 + i.
struct RectField {
    int n1 = 0;
    int nn = 0;
    double a = 0.0;
    double dy = 0.0;
    double dn = 0.0;
    std::vector<double> v;

    double at(int i, int j) const { return v[static_cast<size_t>(j) * n1 + i]; }
    double& at(int i, int j) { return v[static_cast<size_t>(j) * n1 + i]; }
    double y1(int i) const { return -a + i * dy; }
    double yn(int j) const { return j * dn; }
    // Bilinear interpolation; throws outside the rectangle.
    double operator()(double y1, double yn) const;
};

// Local frame at Q: x = Q + x1 * tangent + xn * normal, normal into the plus phase.
// psi(y) = xn with u+(x1, xn) = yn; phi(y) = -xn with u-(x1, xn) = yn.
struct HodographPair {
    Point Q;
    Point tangent;
    Point normal;
    RectField psi;
    RectField phi;
    std::vector<double> h_tilde;  // per tangential node, h at the boundary point

    Point to_x(double x1, double xn) const { return Q + tangent * x1 + normal * xn; }
};

struct HodographPatch {
    double half_width = 0.2;  // tangential half-width a
    double depth = 0.3;       // normal extent sampled on each side
    double spacing = 0.0;     // tangential node spacing; 0 picks one
    double sample_step = 0.0; // step along normal lines; 0 uses the grid h
    double noise_scale = 0.05;  // automatic spacing is sqrt(h * noise_scale) for grid data
};

// Phase functions, both positive in their own phase, plus h on the boundary.
struct HodographSource {
    DomainPtr domain;
    std::function<double(const Point&)> u_plus;
    std::function<double(const Point&)> u_minus;
    std::function<double(const Point&)> h;
    double grid_h = 0.0;  // 0 for closed-form sources
};

HodographSource hodograph_source(const HarmonicPair& pair);
HodographPair hodograph_transform(const HodographSource& src, const Point& Q, const HodographPatch& patch = {});
HodographPair hodograph_transform(const HarmonicPair& pair, const Point& Q, const HodographPatch& patch = {});

struct ResidualReport {
    double psi_max = 0.0;
    double psi_l2 = 0.0;  // root mean square over interior nodes
    double phi_max = 0.0;
    double phi_l2 = 0.0;
    double boundary_sum = 0.0;   // max |phi + psi| on y_n = 0
    double boundary_flux = 0.0;  // max |h~/psi_n - 1/phi_n| on y_n = 0
    double min_psi_n = 0.0;
    double min_phi_n = 0.0;
    int interior_nodes = 0;
};
// Conservative centered differences of div A(Du) with
// A(p) = (-p'/p_n, (1 + |p'|^2) / (2 p_n^2)).
ResidualReport transformed_residual(const HodographPair& hp);

// W on B_1: psi(rho y)/rho above y_n = 0 and -phi(rho y', -rho y_n)/rho below.
std::function<double(const Point&)> hodograph_transmission_field(const HodographPair& hp, double rho);

// Derivative of A at p (p_n > 0).
Eigen::MatrixXd da_matrix(const Point& p);

struct EllipticityReport {
    std::array<std::complex<double>, 2> roots_psi;
    std::array<std::complex<double>, 2> roots_phi;
    int upper = 0;  // roots with positive imaginary part, out of 4
    int lower = 0;
    double conjugacy_error = 0.0;  // max |z1 - conj(z2)| relative to |z|
    bool elliptic = false;
};
EllipticityReport ellipticity_check_n2(const Point& p_psi, const Point& p_phi, const Point& xi, const Point& eta);

struct CoercivityReport {
    std::complex<double> r1;  // psi side
    std::complex<double> r2;  // phi side
    std::complex<double> combination;  // h~ r2 + r1
    bool coercive = false;
};
CoercivityReport coercivity_check(double h_value, const Point& p_psi, const Point& p_phi, const Point& xi_prime);

struct WeightAssignment {
    std::array<int, 2> t{};
    std::array<int, 2> s{};
    std::array<int, 2> m{};
    std::array<int, 2> h{};
    std::array<int, 2> p{};
    int h0 = 0;
};
// t1,t2,s1,s2,m1,m2,h1,h2,p1,p2,h0
WeightAssignment parse_weights(const std::string& text);
std::string format_weights(const WeightAssignment& w);
// The assignment used for the hodograph system: t = 2, s = 0, m = 1, h = (2, 1), p = 0, h0 = 0.
WeightAssignment hodograph_weights();

struct WeightReport {
    std::array<bool, 4> conditions{};
    bool valid = false;
    std::vector<std::string> failures;
};
WeightReport weights_validate(const WeightAssignment& w);

// Single-change mutations of the hodograph weights with the conditions (1..4)
// each one is built to break.
struct WeightMutation {
    std::string label;
    WeightAssignment weights;
    std::vector<int> failing;
};
std::vector<WeightMutation> weight_mutations();

// Seeded random suites; the seed is part of every report.
struct SuiteReport {
    std::string kind;
    std::uint64_t seed = 0;
    int draws = 0;
    int passed = 0;
    double worst = 0.0;
    nlohmann::json failures = nlohmann::json::array();
    nlohmann::json samples = nlohmann::json::array();  // first few draws in full
};
SuiteReport da_suite(std::uint64_t seed, int draws, int dim = 2);
SuiteReport conjugacy_suite(std::uint64_t seed, int draws);
SuiteReport coercivity_suite(std::uint64_t seed, int draws, int dim = 2);

nlohmann::json to_json(const EllipticityReport& r);
nlohmann::json to_json(const CoercivityReport& r);
nlohmann::json to_json(const WeightReport& r);
nlohmann::json to_json(const SuiteReport& r);
nlohmann::json to_json(const ResidualReport& r);

}  // namespace freebnd
