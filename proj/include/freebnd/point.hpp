#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <initializer_list>
#include <string>

namespace freebnd {

// Small fixed-capacity vector; dimensions 2..4 are all we ever need.
struct Point {
    std::array<double, 4> c{};
    int dim = 0;

    Point() = default;
    explicit Point(int n) : dim(n) {}
    Point(std::initializer_list<double> xs) : dim(static_cast<int>(xs.size())) {
        assert(xs.size() <= 4);
        int i = 0;
        for (double v : xs) c[i++] = v;
    }

    static Point unit(int n, int axis) {
        Point p(n);
        p.c[axis] = 1.0;
        return p;
    }

    double& operator[](int i) { return c[i]; }
    double operator[](int i) const { return c[i]; }

    Point& operator+=(const Point& o) {
        for (int i = 0; i < dim; ++i) c[i] += o.c[i];
        return *this;
    }
    Point& operator-=(const Point& o) {
        for (int i = 0; i < dim; ++i) c[i] -= o.c[i];
        return *this;
    }
    Point& operator*=(double s) {
        for (int i = 0; i < dim; ++i) c[i] *= s;
        return *this;
    }
};

inline Point operator+(Point a, const Point& b) { return a += b; }
inline Point operator-(Point a, const Point& b) { return a -= b; }
inline Point operator*(Point a, double s) { return a *= s; }
inline Point operator*(double s, Point a) { return a *= s; }
inline Point operator-(Point a) { return a *= -1.0; }

inline double dot(const Point& a, const Point& b) {
    double s = 0.0;
    for (int i = 0; i < a.dim; ++i) s += a.c[i] * b.c[i];
    return s;
}
inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Point& a, const Point& b) { return norm(a - b); }

inline Point normalized(const Point& a) {
    const double n = norm(a);
    return n > 0.0 ? a * (1.0 / n) : a;
}

inline Point zero_point(int n) { return Point(n); }

std::string to_string(const Point& p);
// Components joined by ';' at 17 significant digits (CSV cells).
std::string csv_point(const Point& p);

// Volume of the unit ball in R^k (k = 1..3): 2, pi, 4pi/3.
double unit_ball_volume(int k);
// Surface measure of the unit sphere S^{n-1} in R^n.
double unit_sphere_area(int n);

}  // namespace freebnd
