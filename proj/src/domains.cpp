#include "freebnd/domains.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <unordered_map>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "freebnd/error.hpp"
#include "freebnd/keyvalue.hpp"
#include "freebnd/numerics.hpp"

namespace freebnd {

namespace {

constexpr double pi = std::numbers::pi;

// Trapezoid samples of a 2D curve over [a, b] with exact endpoints.
void sample_arc(const std::function<BoundaryPoint(double)>& curve, const std::function<double(double)>& speed,
                double a, double b, double max_speed, double spacing, int piece, std::vector<BoundarySample>& out) {
    if (b <= a) return;
    const int m = std::max(2, static_cast<int>(std::ceil((b - a) * max_speed / spacing)));
    const double dt = (b - a) / m;
    for (int i = 0; i <= m; ++i) {
        const double t = (i == m) ? b : a + i * dt;
        const double w = (i == 0 || i == m) ? 0.5 * dt : dt;
        const auto bp = curve(t);
        out.push_back({bp.x, bp.normal, w * speed(t), piece});
    }
}

// Intervals of [lo, hi] on which g <= 0, from a fine scan plus root refinement.
std::vector<std::pair<double, double>> sublevel_intervals(const std::function<double(double)>& g, double lo,
                                                          double hi, int n_scan) {
    std::vector<std::pair<double, double>> out;
    double prev_t = lo, prev_g = g(lo);
    double start = prev_g <= 0 ? lo : NAN;
    for (int i = 1; i <= n_scan; ++i) {
        const double t = lo + (hi - lo) * i / n_scan;
        const double gt = g(t);
        if ((prev_g <= 0) != (gt <= 0)) {
            const double root = find_root(g, prev_t, t);
            if (gt <= 0)
                start = root;
            else {
                out.emplace_back(start, root);
                start = NAN;
            }
        }
        prev_t = t;
        prev_g = gt;
    }
    if (!std::isnan(start)) out.emplace_back(start, hi);
    return out;
}

// Cap of directions around `axis` with polar angle <= max_angle, sampled by
// midpoint rings; used for spheres and planes in 3D.
template <class Emit>
void polar_rings(double radius_max, double spacing, Emit&& emit) {
    const int n_r = std::max(2, static_cast<int>(std::ceil(radius_max / spacing)));
    const double dr = radius_max / n_r;
    for (int i = 0; i < n_r; ++i) {
        const double s = (i + 0.5) * dr;
        const int n_phi = std::max(6, static_cast<int>(std::ceil(2.0 * pi * s / spacing)));
        for (int j = 0; j < n_phi; ++j) emit(s, 2.0 * pi * (j + 0.5) / n_phi, dr, 2.0 * pi / n_phi);
    }
}

// Orthonormal completion of a unit vector.
std::vector<Point> complement_basis(const Point& nu) {
    const int n = nu.dim;
    std::vector<Point> basis;
    for (int k = 0; k < n && static_cast<int>(basis.size()) < n - 1; ++k) {
        Point e = Point::unit(n, k);
        e -= nu * dot(e, nu);
        for (const auto& b : basis) e -= b * dot(e, b);
        if (norm(e) > 1e-6) basis.push_back(normalized(e));
    }
    return basis;
}

// Radial interval {rho >= 0 : |rho*e - c| <= r} for unit e.
bool ray_interval(const Point& e, const Point& c, double r, double& lo, double& hi) {
    const double b = dot(e, c);
    const double disc = b * b - dot(c, c) + r * r;
    if (disc < 0) return false;
    lo = std::max(0.0, b - std::sqrt(disc));
    hi = b + std::sqrt(disc);
    return hi > lo;
}

void trapezoid_ray(const Point& e, const Point& normal, double lo, double hi, double spacing, double angular_weight,
                   int rho_power, std::vector<BoundarySample>& out) {
    const int m = std::max(2, static_cast<int>(std::ceil((hi - lo) / spacing)));
    const double d = (hi - lo) / m;
    for (int i = 0; i <= m; ++i) {
        const double rho = lo + i * d;
        const double w = (i == 0 || i == m) ? 0.5 * d : d;
        out.push_back({e * rho, normal, w * std::pow(rho, rho_power) * angular_weight, 0});
    }
}

// ---------------------------------------------------------------- halfplane

class HalfPlane final : public Domain {
public:
    explicit HalfPlane(int n) : n_(n) {
        if (n != 2 && n != 3) fail(ErrorKind::unsupported_dimension, "halfplane supports dimension 2 or 3");
    }
    int dim() const override { return n_; }
    std::string label() const override { return n_ == 2 ? "halfplane" : "halfspace"; }
    double signed_distance(const Point& x) const override { return x[n_ - 1]; }
    BoundaryPoint boundary_point(const std::vector<double>& t) const override {
        Point x(n_);
        for (int i = 0; i < n_ - 1; ++i) x[i] = t.at(i);
        return {x, Point::unit(n_, n_ - 1)};
    }
    std::vector<BoundarySample> boundary_in_ball(const Point& c, double r, double spacing) const override {
        std::vector<BoundarySample> out;
        const double off = c[n_ - 1];
        if (std::abs(off) > r) return out;
        const double rho = std::sqrt(r * r - off * off);
        const Point nrm = Point::unit(n_, n_ - 1);
        if (n_ == 2) {
            sample_arc([&](double t) { return BoundaryPoint{Point{t, 0.0}, nrm}; }, [](double) { return 1.0; },
                       c[0] - rho, c[0] + rho, 1.0, spacing, 0, out);
        } else {
            polar_rings(rho, spacing, [&](double s, double phi, double ds, double dphi) {
                out.push_back({Point{c[0] + s * std::cos(phi), c[1] + s * std::sin(phi), 0.0}, nrm, s * ds * dphi, 0});
            });
        }
        return out;
    }
    Point project(const Point& x) const override {
        Point y = x;
        y[n_ - 1] = 0.0;
        return y;
    }
    Point normal_at(const Point&) const override { return Point::unit(n_, n_ - 1); }
    std::optional<Point> known_tangent(const Point&) const override { return Point::unit(n_, n_ - 1); }
    std::optional<double> exact_green(int side, const Point& pole, const Point& x) const override {
        if (side * x[n_ - 1] < 0) return 0.0;
        Point img = pole;
        img[n_ - 1] = -img[n_ - 1];
        const double a = distance(x, pole), b = distance(x, img);
        if (n_ == 2) return std::log(b / a) / (2.0 * pi);
        return (1.0 / a - 1.0 / b) / (4.0 * pi);
    }
    std::optional<double> exact_density(int, const Point& pole, const Point& q) const override {
        const double y = std::abs(pole[n_ - 1]);
        const double d = distance(q, pole);
        if (n_ == 2) return y / (pi * d * d);
        return y / (2.0 * pi * d * d * d);
    }
    double diameter() const override { return 6.4; }
    Box default_box() const override { return {zero_point(n_), n_ == 2 ? 1.6 : 2.0}; }
    std::pair<Point, Point> default_poles() const override {
        return {Point::unit(n_, n_ - 1), -Point::unit(n_, n_ - 1)};
    }

private:
    int n_;
};

// ---------------------------------------------------------------------- disk

class Disk final : public Domain {
public:
    explicit Disk(int n) : n_(n) {
        if (n != 2 && n != 3) fail(ErrorKind::unsupported_dimension, "disk supports dimension 2 or 3");
    }
    int dim() const override { return n_; }
    std::string label() const override { return n_ == 2 ? "disk" : "ball"; }
    double signed_distance(const Point& x) const override { return 1.0 - norm(x); }
    BoundaryPoint boundary_point(const std::vector<double>& t) const override {
        const Point e = direction_from_angles(n_, t);
        return {e, -e};
    }
    std::vector<BoundarySample> boundary_in_ball(const Point& c, double r, double spacing) const override {
        std::vector<BoundarySample> out;
        const double cn = norm(c);
        // Points e of the unit sphere with e.c_hat >= kappa lie in the ball.
        double kappa = -2.0;
        if (cn > 1e-14) kappa = (1.0 + cn * cn - r * r) / (2.0 * cn);
        else if (r < 1.0) return out;
        if (kappa > 1.0) return out;
        if (n_ == 2) {
            auto circle = [](double t) {
                Point e{std::cos(t), std::sin(t)};
                return BoundaryPoint{e, -e};
            };
            if (kappa <= -1.0) {
                const int m = std::max(8, static_cast<int>(std::ceil(2.0 * pi / spacing)));
                for (int i = 0; i < m; ++i) {
                    const auto bp = circle(2.0 * pi * i / m);
                    out.push_back({bp.x, bp.normal, 2.0 * pi / m, 0});
                }
            } else {
                const double mid = std::atan2(c[1], c[0]);
                const double half = std::acos(kappa);
                sample_arc(circle, [](double) { return 1.0; }, mid - half, mid + half, 1.0, spacing, 0, out);
            }
        } else {
            const Point axis = cn > 1e-14 ? c * (1.0 / cn) : Point{0.0, 0.0, 1.0};
            const auto basis = complement_basis(axis);
            const double vmax = kappa <= -1.0 ? pi : std::acos(kappa);
            const int n_v = std::max(2, static_cast<int>(std::ceil(vmax / spacing)));
            const double dv = vmax / n_v;
            for (int i = 0; i < n_v; ++i) {
                const double v = (i + 0.5) * dv;
                const int n_phi = std::max(6, static_cast<int>(std::ceil(2.0 * pi * std::sin(v) / spacing)));
                for (int j = 0; j < n_phi; ++j) {
                    const double phi = 2.0 * pi * (j + 0.5) / n_phi;
                    const Point e = axis * std::cos(v) + (basis[0] * std::cos(phi) + basis[1] * std::sin(phi)) * std::sin(v);
                    out.push_back({e, -e, std::sin(v) * dv * 2.0 * pi / n_phi, 0});
                }
            }
        }
        return out;
    }
    Point project(const Point& x) const override {
        const double n = norm(x);
        return n > 0 ? x * (1.0 / n) : Point::unit(n_, 0);
    }
    Point normal_at(const Point& q) const override { return -normalized(q); }
    std::optional<Point> known_tangent(const Point& q) const override { return -normalized(q); }
    std::optional<double> exact_green(int side, const Point& pole, const Point& x) const override {
        if (side * signed_distance(x) < 0) return 0.0;
        const double yn = norm(pole);
        const double a = distance(x, pole);
        if (yn < 1e-14) {
            if (n_ == 2) return std::log(1.0 / norm(x)) / (2.0 * pi);
            return (1.0 / norm(x) - 1.0) / (4.0 * pi);
        }
        const Point star = pole * (1.0 / (yn * yn));
        const double b = distance(x, star);
        if (n_ == 2) return std::log(b * yn / a) / (2.0 * pi);
        return (1.0 / a - 1.0 / (yn * b)) / (4.0 * pi);
    }
    std::optional<double> exact_density(int, const Point& pole, const Point& q) const override {
        const double d = distance(q, pole);
        const double k = std::abs(1.0 - dot(pole, pole));
        if (n_ == 2) return k / (2.0 * pi * d * d);
        return k / (4.0 * pi * d * d * d);
    }
    double diameter() const override { return 2.0; }
    Box default_box() const override { return {zero_point(n_), 2.5}; }
    std::pair<Point, Point> default_poles() const override { return {zero_point(n_), -2.0 * Point::unit(n_, 0)}; }
    Point default_Q() const override { return Point::unit(n_, 0); }

private:
    int n_;
};

// --------------------------------------------------------------------- graph

class Graph final : public Domain {
public:
    explicit Graph(GraphFunction g) : g_(g) {
        for (double t : {-g_.half_width, 0.0, g_.half_width}) {
            if (!std::isfinite(g_.f(t)) || !std::isfinite(g_.df(t)))
                fail(ErrorKind::invalid_input, "graph function is not finite on the box");
        }
        if (g_.exponent < 1.0 && g_.amplitude != 0.0)
            fail(ErrorKind::invalid_input, "graph exponent must be at least 1 (Lipschitz graphs)");
    }
    int dim() const override { return 2; }
    std::string label() const override { return "graph[" + g_.describe() + "]"; }
    double signed_distance(const Point& x) const override {
        const double d = g_.df(x[0]);
        return (x[1] - g_.f(x[0])) / std::sqrt(1.0 + d * d);
    }
    BoundaryPoint boundary_point(const std::vector<double>& t) const override { return at(t.at(0)); }
    std::vector<BoundarySample> boundary_in_ball(const Point& c, double r, double spacing) const override {
        std::vector<BoundarySample> out;
        auto g = [&](double t) {
            const double dy = g_.f(t) - c[1];
            return (t - c[0]) * (t - c[0]) + dy * dy - r * r;
        };
        const int n_scan = std::max(64, static_cast<int>(std::ceil(2.0 * r / spacing)));
        const auto ivs = sublevel_intervals(g, c[0] - r, c[0] + r, n_scan);
        double max_speed = 1.0;
        for (int i = 0; i <= 64; ++i) max_speed = std::max(max_speed, speed(c[0] - r + 2.0 * r * i / 64));
        int piece = 0;
        for (auto [a, b] : ivs)
            sample_arc([&](double t) { return at(t); }, [&](double t) { return speed(t); }, a, b, max_speed, spacing,
                       piece++, out);
        return out;
    }
    Point project(const Point& x) const override {
        const double d = std::abs(x[1] - g_.f(x[0])) + 1e-12;
        auto q = [&](double t) {
            const double dy = g_.f(t) - x[1];
            return (t - x[0]) * (t - x[0]) + dy * dy;
        };
        double best_t = x[0], best = q(x[0]);
        const int n = 32;
        for (int i = 0; i <= n; ++i) {
            const double t = x[0] - d + 2.0 * d * i / n;
            if (q(t) < best) best = q(t), best_t = t;
        }
        const double step = 2.0 * d / n;
        auto [t, v] = boost::math::tools::brent_find_minima(q, best_t - step, best_t + step, 50);
        if (v > best) t = best_t;
        return Point{t, g_.f(t)};
    }
    Point normal_at(const Point& q) const override { return at(q[0]).normal; }
    std::optional<Point> known_tangent(const Point& q) const override { return at(q[0]).normal; }
    double diameter() const override { return 2.0 * g_.half_width; }
    Box default_box() const override { return {Point{0.0, g_.f(0.0)}, g_.half_width}; }
    std::pair<Point, Point> default_poles() const override {
        const double a = 0.625 * g_.half_width;
        return {Point{0.0, g_.f(0.0) + a}, Point{0.0, g_.f(0.0) - a}};
    }
    Point default_Q() const override { return Point{0.0, g_.f(0.0)}; }

private:
    BoundaryPoint at(double t) const {
        const double d = g_.df(t);
        const double s = std::sqrt(1.0 + d * d);
        return {Point{t, g_.f(t)}, Point{-d / s, 1.0 / s}};
    }
    double speed(double t) const {
        const double d = g_.df(t);
        return std::sqrt(1.0 + d * d);
    }
    GraphFunction g_;
};

// ---------------------------------------------------------------- lewy cone

// Resolving the three nodal great circles of Re(x+iy)^3 at the poles with
// 2z^3 - 3z(x^2+y^2) leaves exactly two nodal domains; the coefficient 1/2
// is checked by lewy_nodal_domains.
double lewy3(const Point& x) {
    const double a = x[0], b = x[1], z = x[2];
    return 2.0 * a * a * a - 6.0 * a * b * b + 2.0 * z * z * z - 3.0 * z * (a * a + b * b);
}

Point lewy3_grad(const Point& x) {
    const double a = x[0], b = x[1], z = x[2];
    return Point{6.0 * a * a - 6.0 * b * b - 6.0 * a * z, -12.0 * a * b - 6.0 * b * z,
                 6.0 * z * z - 3.0 * (a * a + b * b)};
}

Point cross(const Point& a, const Point& b) {
    return Point{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Newton correction onto {p = 0} within S^2.
Point settle_on_nodal_curve(Point x) {
    for (int it = 0; it < 6; ++it) {
        x = normalized(x);
        const double p = lewy3(x);
        Point g = lewy3_grad(x);
        g -= x * dot(g, x);
        const double gg = dot(g, g);
        if (gg < 1e-300) break;
        x -= g * (p / gg);
        if (std::abs(p) < 1e-15) break;
    }
    return normalized(x);
}

class LewyCone final : public Domain {
public:
    LewyCone() {
        trace_curve();
        // Pole direction: maximum of p on the sphere.
        double best = -1;
        for (const auto& d : direction_lattice(3, 4000)) {
            for (const Point& e : {d, -d}) {
                if (lewy3(e) > best) best = lewy3(e), pole_dir_ = e;
            }
        }
    }
    int dim() const override { return 3; }
    std::string label() const override { return "lewy3"; }
    std::string notes() const override {
        return "log h = 0 expected with poles at infinity; finite poles are placed symmetrically (x -> -x)";
    }
    double signed_distance(const Point& x) const override {
        const double p = lewy3(x);
        if (p == 0.0) return 0.0;
        const double g = norm(lewy3_grad(x));
        if (g < 1e-300) return p > 0 ? norm(x) : -norm(x);
        return p / g;
    }
    BoundaryPoint boundary_point(const std::vector<double>& t) const override {
        const double rho = t.at(0);
        const Point e = curve_at(t.at(1));
        return {e * rho, normalized(lewy3_grad(e))};
    }
    std::vector<BoundarySample> boundary_in_ball(const Point& c, double r, double spacing) const override {
        std::vector<BoundarySample> out;
        const double rho_max = norm(c) + r;
        const int n_s = std::max(64, static_cast<int>(std::ceil(length_ * rho_max / spacing)));
        const double ds = length_ / n_s;
        for (int i = 0; i < n_s; ++i) {
            const Point e = curve_at((i + 0.5) * ds);
            double lo, hi;
            if (!ray_interval(e, c, r, lo, hi)) continue;
            trapezoid_ray(e, normalized(lewy3_grad(e)), lo, hi, spacing, ds, 1, out);
        }
        return out;
    }
    Point project(const Point& x) const override {
        Point y = x;
        for (int it = 0; it < 40; ++it) {
            const double p = lewy3(y);
            const Point g = lewy3_grad(y);
            const double gg = dot(g, g);
            if (gg < 1e-300) break;
            const Point step = g * (p / gg);
            y -= step;
            if (norm(step) < 1e-14 * (1.0 + norm(y))) break;
        }
        return y;
    }
    Point normal_at(const Point& q) const override { return normalized(lewy3_grad(q)); }
    std::optional<Point> known_tangent(const Point& q) const override { return normalized(lewy3_grad(q)); }
    double diameter() const override { return 2.0; }
    Box default_box() const override { return {zero_point(3), 1.0}; }
    std::pair<Point, Point> default_poles() const override { return {pole_dir_ * 0.6, pole_dir_ * -0.6}; }
    Point default_Q() const override { return curve_at(0.0) * 0.3; }

    double curve_length() const { return length_; }

private:
    void trace_curve() {
        // p(cos t, sin t, 0) = 2 cos 3t vanishes at t = pi/6.
        const Point start = settle_on_nodal_curve(Point{std::cos(pi / 6), std::sin(pi / 6), 0.0});
        const double step = 2e-3;
        std::vector<Point> pts{start};
        Point x = start;
        double travelled = 0.0;
        for (int it = 0; it < 200000; ++it) {
            const Point t = normalized(cross(x, lewy3_grad(x)));
            // Midpoint predictor, then correction back onto the curve.
            const Point xm = settle_on_nodal_curve(x + t * (0.5 * step));
            const Point tm = normalized(cross(xm, lewy3_grad(xm)));
            const Point y = settle_on_nodal_curve(x + tm * step);
            travelled += distance(x, y);
            x = y;
            if (travelled > 20 * step && distance(x, start) < step) break;
            pts.push_back(x);
        }
        if (distance(x, start) >= step) fail(ErrorKind::internal, "lewy nodal curve did not close");
        cum_.assign(pts.size() + 1, 0.0);
        for (size_t i = 0; i < pts.size(); ++i) cum_[i + 1] = cum_[i] + distance(pts[i], pts[(i + 1) % pts.size()]);
        pts_ = std::move(pts);
        length_ = cum_.back();
    }
    Point curve_at(double s) const {
        s = std::fmod(s, length_);
        if (s < 0) s += length_;
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
        const size_t i = std::min<size_t>(static_cast<size_t>(it - cum_.begin()) - 1, pts_.size() - 1);
        const double seg = cum_[i + 1] - cum_[i];
        const double w = seg > 0 ? (s - cum_[i]) / seg : 0.0;
        return settle_on_nodal_curve(pts_[i] * (1.0 - w) + pts_[(i + 1) % pts_.size()] * w);
    }

    std::vector<Point> pts_;
    std::vector<double> cum_;
    double length_ = 0.0;
    Point pole_dir_;
};

// ------------------------------------------------------------------- cone4

class QuadraticCone4 final : public Domain {
public:
    int dim() const override { return 4; }
    std::string label() const override { return "cone4"; }
    std::string notes() const override { return "omega+ = omega- by symmetry; geometry only, no solver support"; }
    double signed_distance(const Point& x) const override {
        return (std::hypot(x[0], x[1]) - std::hypot(x[2], x[3])) / std::sqrt(2.0);
    }
    BoundaryPoint boundary_point(const std::vector<double>& t) const override {
        // A negative radius walks the opposite ray.
        const double flip = t.at(0) < 0 ? pi : 0.0;
        const double a = t.at(1) + flip, b = t.at(2) + flip;
        return {unit_ray(a, b) * std::abs(t.at(0)), normal_dir(a, b)};
    }
    std::vector<BoundarySample> boundary_in_ball(const Point& c, double r, double spacing) const override {
        std::vector<BoundarySample> out;
        const double rho_max = norm(c) + r;
        const int m = std::max(16, static_cast<int>(std::ceil(2.0 * pi * rho_max / std::sqrt(2.0) / spacing)));
        const double da = 2.0 * pi / m;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                const double a = (i + 0.5) * da, b = (j + 0.5) * da;
                const Point e = unit_ray(a, b);
                double lo, hi;
                if (!ray_interval(e, c, r, lo, hi)) continue;
                trapezoid_ray(e, normal_dir(a, b), lo, hi, spacing, 0.5 * da * da, 2, out);
            }
        }
        return out;
    }
    Point project(const Point& x) const override {
        const double a = std::hypot(x[0], x[1]), b = std::hypot(x[2], x[3]);
        const double m = 0.5 * (a + b);
        Point y(4);
        if (a > 0) y[0] = x[0] * m / a, y[1] = x[1] * m / a;
        else y[0] = m;
        if (b > 0) y[2] = x[2] * m / b, y[3] = x[3] * m / b;
        else y[2] = m;
        return y;
    }
    Point normal_at(const Point& q) const override {
        const double a = std::hypot(q[0], q[1]), b = std::hypot(q[2], q[3]);
        if (a == 0 || b == 0) return Point::unit(4, 0);
        return Point{q[0] / a, q[1] / a, -q[2] / b, -q[3] / b} * (1.0 / std::sqrt(2.0));
    }
    std::optional<Point> known_tangent(const Point& q) const override { return normal_at(q); }
    double diameter() const override { return 2.0; }
    Box default_box() const override { return {zero_point(4), 1.0}; }
    std::pair<Point, Point> default_poles() const override {
        return {Point{0.5, 0.0, 0.0, 0.0}, Point{0.0, 0.0, 0.5, 0.0}};
    }

private:
    static Point unit_ray(double a, double b) {
        const double s = 1.0 / std::sqrt(2.0);
        return Point{s * std::cos(a), s * std::sin(a), s * std::cos(b), s * std::sin(b)};
    }
    static Point normal_dir(double a, double b) {
        const double s = 1.0 / std::sqrt(2.0);
        return Point{s * std::cos(a), s * std::sin(a), -s * std::cos(b), -s * std::sin(b)};
    }
};

// Spatial hash for nearest-sample queries.
class SampleIndex {
public:
    SampleIndex(const std::vector<BoundarySample>& s, double cell) : s_(s), cell_(cell) {
        for (size_t i = 0; i < s.size(); ++i) buckets_[key(s[i].x)].push_back(static_cast<int>(i));
    }
    // Distance to the nearest sample; may stop early with any value <= cap.
    double nearest(const Point& p, double cap = 0.0) const {
        const auto k0 = coords(p);
        double best = INFINITY;
        const int n = p.dim;
        for (int ring = 0; ring < 64; ++ring) {
            visit_shell(k0, ring, n, [&](const std::array<long, 4>& k) {
                const auto it = buckets_.find(pack(k));
                if (it == buckets_.end()) return;
                for (int i : it->second) best = std::min(best, distance(p, s_[i].x));
            });
            if (best <= ring * cell_ || best <= cap) break;
        }
        return best;
    }

private:
    std::array<long, 4> coords(const Point& p) const {
        std::array<long, 4> k{};
        for (int i = 0; i < p.dim; ++i) k[i] = static_cast<long>(std::floor(p[i] / cell_));
        return k;
    }
    static unsigned long long pack(const std::array<long, 4>& k) {
        unsigned long long h = 1469598103934665603ull;
        for (long v : k) h = (h ^ static_cast<unsigned long long>(v + (1L << 20))) * 1099511628211ull;
        return h;
    }
    unsigned long long key(const Point& p) const { return pack(coords(p)); }
    template <class F>
    static void visit_shell(const std::array<long, 4>& k0, int ring, int n, F&& f) {
        std::array<long, 4> k{};
        std::array<int, 4> off{};
        const int w = 2 * ring + 1;
        long total = 1;
        for (int i = 0; i < n; ++i) total *= w;
        for (long idx = 0; idx < total; ++idx) {
            long rem = idx;
            int maxabs = 0;
            for (int i = 0; i < n; ++i) {
                off[i] = static_cast<int>(rem % w) - ring;
                rem /= w;
                maxabs = std::max(maxabs, std::abs(off[i]));
            }
            if (maxabs != ring) continue;
            for (int i = 0; i < 4; ++i) k[i] = k0[i] + (i < n ? off[i] : 0);
            f(k);
        }
    }

    const std::vector<BoundarySample>& s_;
    double cell_;
    std::unordered_map<unsigned long long, std::vector<int>> buckets_;
};

double flatness_spacing(int dim, double r) {
    switch (dim) {
    case 2: return r / 128.0;
    case 3: return r / 32.0;
    default: return r / 12.0;
    }
}

// Points of the plane through Q (normal nu) inside B(Q, r), including its rim.
std::vector<Point> plane_points(const Point& Q, const Point& nu, double r) {
    const auto basis = complement_basis(nu);
    std::vector<Point> pts;
    const int n = Q.dim;
    if (n == 2) {
        for (int i = -64; i <= 64; ++i) pts.push_back(Q + basis[0] * (r * i / 64.0));
    } else if (n == 3) {
        const int m = 24;
        for (int i = -m; i <= m; ++i)
            for (int j = -m; j <= m; ++j) {
                const double a = r * i / m, b = r * j / m;
                if (a * a + b * b <= r * r) pts.push_back(Q + basis[0] * a + basis[1] * b);
            }
        for (int k = 0; k < 128; ++k) {
            const double t = 2.0 * pi * k / 128;
            pts.push_back(Q + (basis[0] * std::cos(t) + basis[1] * std::sin(t)) * r);
        }
    } else {
        const int m = 8;
        for (int i = -m; i <= m; ++i)
            for (int j = -m; j <= m; ++j)
                for (int k = -m; k <= m; ++k) {
                    const double a = r * i / m, b = r * j / m, c = r * k / m;
                    if (a * a + b * b + c * c <= r * r) pts.push_back(Q + basis[0] * a + basis[1] * b + basis[2] * c);
                }
        for (const auto& d : direction_lattice(3, 150)) {
            for (const Point& e : {d, -d})
                pts.push_back(Q + (basis[0] * e[0] + basis[1] * e[1] + basis[2] * e[2]) * r);
        }
    }
    return pts;
}

bool projection_is_exact(const Domain& d) {
    const std::string l = d.label();
    return l == "halfplane" || l == "halfspace" || l == "disk" || l == "ball" || l == "cone4";
}

}  // namespace

Point Domain::normal_at(const Point& q) const {
    const int n = dim();
    Point g(n);
    const double eps = 1e-6 * diameter();
    for (int i = 0; i < n; ++i) {
        Point a = q, b = q;
        a[i] += eps;
        b[i] -= eps;
        g[i] = (signed_distance(a) - signed_distance(b)) / (2.0 * eps);
    }
    return normalized(g);
}

// ------------------------------------------------------------ GraphFunction

double GraphFunction::f(double t) const {
    return amplitude * std::pow(std::abs(t - center), exponent) + sine_amplitude * std::sin(wavenumber * t) + slope * t;
}

double GraphFunction::df(double t) const {
    const double s = t - center;
    double d = slope + sine_amplitude * wavenumber * std::cos(wavenumber * t);
    if (amplitude != 0.0 && s != 0.0) d += amplitude * exponent * std::pow(std::abs(s), exponent - 1.0) * (s > 0 ? 1 : -1);
    return d;
}

double GraphFunction::alpha() const {
    if (amplitude != 0.0 && exponent < 2.0) return exponent - 1.0;
    return 1.0;
}

double GraphFunction::seminorm() const {
    const double a = alpha();
    double s = 0.0;
    if (amplitude != 0.0) {
        if (exponent < 2.0) s += std::abs(amplitude) * exponent * std::pow(2.0, 2.0 - exponent);
        else s += std::abs(amplitude) * exponent * (exponent - 1.0) * std::pow(half_width, exponent - 2.0);
    }
    s += std::abs(sine_amplitude) * std::pow(wavenumber, 1.0 + a) * std::pow(2.0, 1.0 - a);
    return s;
}

std::string GraphFunction::describe() const {
    std::string s = fmt::format("{}|t-{}|^{}", amplitude, center, exponent);
    if (sine_amplitude != 0.0) s += fmt::format("+{}sin({}t)", sine_amplitude, wavenumber);
    if (slope != 0.0) s += fmt::format("+{}t", slope);
    return s;
}

GraphFunction load_graph_function(const std::string& path) {
    GraphFunction g;
    g.amplitude = 0.0;
    for (const auto& kv : parse_key_values(read_text_file(path), path)) {
        const std::string what = fmt::format("{}:{}: {}", path, kv.line, kv.key);
        const double v = parse_double(kv.value, what);
        if (kv.key == "amplitude") g.amplitude = v;
        else if (kv.key == "exponent") g.exponent = v;
        else if (kv.key == "center") g.center = v;
        else if (kv.key == "sine_amplitude") g.sine_amplitude = v;
        else if (kv.key == "wavenumber") g.wavenumber = v;
        else if (kv.key == "slope") g.slope = v;
        else if (kv.key == "half_width") g.half_width = v;
        else fail(ErrorKind::invalid_input, fmt::format("{}:{}: unknown key '{}'", path, kv.line, kv.key));
    }
    if (g.half_width <= 0) fail(ErrorKind::invalid_input, path + ": half_width must be positive");
    return g;
}

DomainPtr make_halfplane(int dim) { return std::make_shared<HalfPlane>(dim); }
DomainPtr make_disk(int dim) { return std::make_shared<Disk>(dim); }
DomainPtr make_graph_domain(const GraphFunction& g) { return std::make_shared<Graph>(g); }

DomainPtr make_lewy_cone(int k) {
    if (k % 2 == 0) fail(ErrorKind::invalid_input, "Lewy cones need odd degree");
    if (k != 3) fail(ErrorKind::invalid_input, fmt::format("no Lewy polynomial of degree {} in the table", k));
    static const DomainPtr cone = std::make_shared<LewyCone>();
    return cone;
}

DomainPtr make_quadratic_cone_r4() { return std::make_shared<QuadraticCone4>(); }

std::vector<std::string> zoo_names() { return {"halfplane", "disk", "graph", "graph:<file>", "lewy3", "cone4"}; }

DomainPtr make_domain(const std::string& name) {
    if (name == "halfplane") return make_halfplane(2);
    if (name == "halfspace") return make_halfplane(3);
    if (name == "disk") return make_disk(2);
    if (name == "ball") return make_disk(3);
    if (name == "graph") {
        GraphFunction g;
        g.amplitude = 0.1;
        g.exponent = 1.5;
        return make_graph_domain(g);
    }
    if (name.rfind("graph:", 0) == 0) return make_graph_domain(load_graph_function(name.substr(6)));
    if (name == "lewy3") return make_lewy_cone(3);
    if (name == "cone4") return make_quadratic_cone_r4();
    fail(ErrorKind::invalid_input, fmt::format("unknown domain '{}'", name));
}

double lewy_polynomial(int k, const Point& x) {
    if (k != 3) fail(ErrorKind::invalid_input, "only k = 3 is tabulated");
    return lewy3(x);
}

Point lewy_gradient(int k, const Point& x) {
    if (k != 3) fail(ErrorKind::invalid_input, "only k = 3 is tabulated");
    return lewy3_grad(x);
}

NodalCount lewy_nodal_domains(int k, int subdivisions) {
    // Icosahedron refined by edge midpoints, flood fill over same-sign edges.
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Point> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                            {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) p = normalized(p);
    std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
                                         {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            v.push_back(normalized(v[a] + v[b]));
            return mid[key] = static_cast<int>(v.size()) - 1;
        };
        std::vector<std::array<int, 3>> g;
        for (const auto& tri : f) {
            const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
            g.push_back({tri[0], a, c});
            g.push_back({tri[1], b, a});
            g.push_back({tri[2], c, b});
            g.push_back({a, b, c});
        }
        f = std::move(g);
    }
    std::vector<int> sign(v.size());
    for (size_t i = 0; i < v.size(); ++i) sign[i] = lewy_polynomial(k, v[i]) >= 0 ? 1 : -1;
    std::vector<std::vector<int>> adj(v.size());
    for (const auto& tri : f)
        for (int e = 0; e < 3; ++e) {
            const int a = tri[e], b = tri[(e + 1) % 3];
            if (sign[a] == sign[b]) adj[a].push_back(b), adj[b].push_back(a);
        }
    NodalCount out;
    std::vector<char> seen(v.size(), 0);
    for (size_t i = 0; i < v.size(); ++i) {
        if (seen[i]) continue;
        (sign[i] > 0 ? out.positive : out.negative) += 1;
        std::vector<int> stack{static_cast<int>(i)};
        seen[i] = 1;
        while (!stack.empty()) {
            const int a = stack.back();
            stack.pop_back();
            for (int b : adj[a])
                if (!seen[b]) seen[b] = 1, stack.push_back(b);
        }
    }
    return out;
}

// ------------------------------------------------------------------- flatness

std::vector<BoundarySample> flatness_samples(const Domain& d, const Point& Q, double r) {
    double spacing = flatness_spacing(d.dim(), r);
    auto s = d.boundary_in_ball(Q, r, spacing);
    for (int it = 0; it < 4 && !s.empty() && s.size() < 256; ++it) {
        spacing *= 0.5;
        s = d.boundary_in_ball(Q, r, spacing);
    }
    if (s.empty()) fail(ErrorKind::invalid_input, fmt::format("no boundary points in B({}, {})", to_string(Q), r));
    return s;
}

double slab_width(const std::vector<BoundarySample>& samples, const Point& Q, const Point& nu, double r) {
    double w = 0.0;
    for (const auto& s : samples) w = std::max(w, std::abs(dot(s.x - Q, nu)));
    return w / r;
}

FlatnessReport reifenberg_theta(const Domain& d, const Point& Q, double r, int n_plane_samples) {
    if (n_plane_samples < 64) fail(ErrorKind::invalid_input, "reifenberg_theta needs >= 64 plane samples");
    if (r <= 0) fail(ErrorKind::invalid_input, "radius must be positive");
    const auto samples = flatness_samples(d, Q, r);
    const bool exact = projection_is_exact(d);
    const double spacing = flatness_spacing(d.dim(), r);
    SampleIndex index(samples, 4.0 * spacing);

    size_t hint = 0;
    // Distance from a plane point to the boundary piece inside the ball.
    auto boundary_distance = [&](const Point& p, double cap) {
        double best = INFINITY;
        if (exact) {
            const Point y = d.project(p);
            if (distance(y, Q) <= r * (1.0 + 1e-12)) return distance(p, y);
        }
        if (d.dim() == 2) {
            // Consecutive plane points are close, so start at the last nearest
            // segment; a segment within `cap` cannot raise the running max.
            const size_t n_seg = samples.size() > 1 ? samples.size() - 1 : 0;
            for (size_t k = 0; k < n_seg; ++k) {
                const size_t i = (hint + k) % n_seg;
                if (samples[i].piece != samples[i + 1].piece) continue;
                const Point a = samples[i].x, b = samples[i + 1].x;
                const Point ab = b - a;
                const double L2 = dot(ab, ab);
                const double t = L2 > 0 ? std::clamp(dot(p - a, ab) / L2, 0.0, 1.0) : 0.0;
                const double dist = distance(p, a + ab * t);
                if (dist < best) {
                    best = dist;
                    hint = i;
                }
                if (best <= cap) break;
            }
            if (samples.size() == 1) best = std::min(best, distance(p, samples[0].x));
        } else {
            best = std::min(best, index.nearest(p, cap));
        }
        return best;
    };

    auto objective = [&](const Point& nu) {
        double worst = slab_width(samples, Q, nu, r) * r;
        for (const auto& p : plane_points(Q, nu, r)) worst = std::max(worst, boundary_distance(p, worst));
        return worst / r;
    };
    const auto best = minimize_over_directions(d.dim(), objective, n_plane_samples);
    return {Q, r, best.value, best.nu};
}

}  // namespace freebnd
