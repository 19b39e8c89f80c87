#pragma once

#include <functional>
#include <vector>

#include "freebnd/point.hpp"

namespace freebnd {

// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};
const GaussRule& gauss_legendre(int n);

// Root of fn on [a, b]; fn(a) and fn(b) must differ in sign.
double find_root(const std::function<double(double)>& fn, double a, double b, double xtol = 1e-13);

// Unit normals covering the half sphere S^{dim-1}/{±1}, deterministic.
std::vector<Point> direction_lattice(int dim, int n);
Point direction_from_angles(int dim, const std::vector<double>& angles);
std::vector<double> angles_from_direction(const Point& nu);
// Representative of ±nu whose first nonzero component is positive.
Point canonical_direction(const Point& nu);
bool lexicographically_less(const Point& a, const Point& b);

struct DirectionSearch {
    Point nu;
    double value = 0.0;
    int evaluations = 0;
};

// Minimizes fn over unit directions (modulo sign): lattice scan, then
// Nelder-Mead in spherical coordinates from the best lattice point.
DirectionSearch minimize_over_directions(int dim, const std::function<double(const Point&)>& fn,
                                         int n_lattice, double tol = 1e-10);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
// Slope of log(y) against log(x); entries with y <= 0 are dropped.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

std::vector<double> log_spaced(double lo, double hi, int count);

}  // namespace freebnd
