#include "freebnd/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "freebnd/error.hpp"
#include "freebnd/numerics.hpp"

namespace freebnd {

namespace {

constexpr double pi = std::numbers::pi;

// One-sided node gradients of a function that is zero on the interface.
// `side[i]` is the phase of node i; `crossing(i, j)` is the fraction of the
// edge i -> j at which the interface is met (only called across phases).
struct NodeGradients {
    GridSpec spec;
    std::vector<signed char> side;
    std::vector<Point> grad;  // gradient of the phase-`side` function at each node
};

NodeGradients node_gradients(const GridSpec& spec, const std::vector<signed char>& side,
                             const std::function<double(size_t)>& value_of,
                             const std::function<double(size_t, size_t)>& crossing) {
    NodeGradients out{spec, side, std::vector<Point>(spec.node_count(), Point(spec.dim))};
    const double h = spec.h;
    for (size_t i = 0; i < out.grad.size(); ++i) {
        if (side[i] == 0) continue;
        const auto ijk = spec.ijk(i);
        const double ui = value_of(i);
        Point g(spec.dim);
        for (int a = 0; a < spec.dim; ++a) {
            // Left and right support points: (offset, value).
            double xl = 0, vl = 0, xr = 0, vr = 0;
            bool has_l = false, has_r = false;
            for (int dir : {-1, 1}) {
                Index3 nb = ijk;
                nb[a] += dir;
                if (nb[a] < 0 || nb[a] > spec.n_cells[a]) continue;
                const size_t j = spec.index(nb);
                double x, v;
                if (side[j] == side[i]) {
                    x = dir * h;
                    v = value_of(j);
                } else {
                    const double t = std::max(crossing(i, j), 1e-3);
                    x = dir * t * h;
                    v = 0.0;
                }
                if (dir < 0) xl = x, vl = v, has_l = true;
                else xr = x, vr = v, has_r = true;
            }
            if (has_l && has_r) {
                // Derivative at 0 of the parabola through (xl,vl), (0,ui), (xr,vr).
                g[a] = (vr - ui) * (-xl) / (xr * (xr - xl)) + (ui - vl) * xr / (-xl * (xr - xl));
            } else if (has_r) {
                Index3 n2 = ijk;
                n2[a] += 2;
                const size_t j2 = spec.index(n2);
                if (xr == h && n2[a] <= spec.n_cells[a] && side[j2] == side[i])
                    g[a] = (-3 * ui + 4 * vr - value_of(j2)) / (2 * h);
                else
                    g[a] = (vr - ui) / xr;
            } else if (has_l) {
                Index3 n2 = ijk;
                n2[a] -= 2;
                const size_t j2 = spec.index(n2);
                if (xl == -h && n2[a] >= 0 && side[j2] == side[i])
                    g[a] = (3 * ui - 4 * vl + value_of(j2)) / (2 * h);
                else
                    g[a] = (ui - vl) / (-xl);
            }
        }
        out.grad[i] = g;
    }
    return out;
}

// Interpolates node gradients of phase s at x using same-phase corners only.
Point interpolate_gradient(const NodeGradients& ng, const Point& x, int s) {
    const auto& spec = ng.spec;
    Index3 base{0, 0, 0};
    std::array<double, 3> frac{0, 0, 0};
    for (int a = 0; a < spec.dim; ++a) {
        const double u = (x[a] - spec.box_min[a]) / spec.h;
        if (u < -1e-9 || u > spec.n_cells[a] + 1e-9)
            fail(ErrorKind::invalid_input, fmt::format("point {} lies outside the grid box", to_string(x)));
        const int i = std::clamp(static_cast<int>(std::floor(u)), 0, spec.n_cells[a] - 1);
        base[a] = i;
        frac[a] = std::clamp(u - i, 0.0, 1.0);
    }
    Point acc(spec.dim);
    double wsum = 0.0;
    for (int c = 0; c < (1 << spec.dim); ++c) {
        double w = 1.0;
        Index3 k = base;
        for (int a = 0; a < spec.dim; ++a) {
            const int bit = (c >> a) & 1;
            k[a] += bit;
            w *= bit ? frac[a] : 1.0 - frac[a];
        }
        const size_t idx = spec.index(k);
        if (ng.side[idx] != s) continue;
        acc += ng.grad[idx] * w;
        wsum += w;
    }
    if (wsum > 1e-9) return acc * (1.0 / wsum);
    // Thin sliver: nearest same-phase node in a 5^n neighbourhood.
    double best = INFINITY;
    Point g(spec.dim);
    const int zr = spec.dim == 3 ? 2 : 0;
    for (int dk = -zr; dk <= zr + (spec.dim == 3); ++dk)
        for (int dj = -2; dj <= 3; ++dj)
            for (int di = -2; di <= 3; ++di) {
                Index3 k{base[0] + di, base[1] + dj, base[2] + dk};
                bool ok = true;
                for (int a = 0; a < spec.dim; ++a) ok = ok && k[a] >= 0 && k[a] <= spec.n_cells[a];
                if (!ok) continue;
                const size_t idx = spec.index(k);
                if (ng.side[idx] != s) continue;
                const double d = distance(spec.node(k), x);
                if (d < best) best = d, g = ng.grad[idx];
            }
    return g;
}

int sign_of(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

// Orthonormal frame with e[dim-1] along `axis`.
std::vector<Point> frame_along(const Point& axis) {
    const int n = axis.dim;
    std::vector<Point> basis{normalized(axis)};
    for (int a = 0; a < n && static_cast<int>(basis.size()) < n; ++a) {
        Point e = Point::unit(n, a);
        for (const auto& b : basis) e -= b * dot(e, b);
        if (norm(e) > 1e-6) basis.push_back(normalized(e));
    }
    std::rotate(basis.begin(), basis.begin() + 1, basis.end());
    return basis;
}

// Integral over phi in [0, 2pi) of g(c + rho (cos phi e1 + sin phi e2)),
// restricted to one phase (side = +-1) or split and summed (side = 0).
double circle_integral(const Field& f, const Point& c, double rho, const Point& e1, const Point& e2, int side,
                       const std::function<double(const Point&)>& g) {
    constexpr int m = 96;
    auto at = [&](double phi) { return c + (e1 * std::cos(phi) + e2 * std::sin(phi)) * rho; };
    std::array<double, m> lv;
    for (int k = 0; k < m; ++k) lv[k] = f.level(at(2 * pi * k / m));
    std::vector<double> breaks;
    for (int k = 0; k < m; ++k) {
        const double a = lv[k], b = lv[(k + 1) % m];
        if (sign_of(a) == sign_of(b)) continue;
        const double p0 = 2 * pi * k / m, p1 = 2 * pi * (k + 1) / m;
        if (a == 0) breaks.push_back(p0);
        else if (b == 0) continue;
        else breaks.push_back(find_root([&](double p) { return f.level(at(p)); }, p0, p1, 1e-13));
    }
    if (breaks.empty()) {
        const int s = sign_of(lv[0]);
        if (side != 0 && s != side) return 0.0;
        double acc = 0.0;
        for (int k = 0; k < m; ++k) acc += g(at(2 * pi * k / m));
        return acc * 2 * pi / m;
    }
    const auto& gl = gauss_legendre(16);
    double acc = 0.0;
    const size_t nb = breaks.size();
    for (size_t i = 0; i < nb; ++i) {
        const double p0 = breaks[i];
        double p1 = breaks[(i + 1) % nb];
        if (i + 1 == nb) p1 += 2 * pi;
        if (p1 - p0 <= 0) continue;
        const double mid = 0.5 * (p0 + p1), half = 0.5 * (p1 - p0);
        if (side != 0 && f.phase(at(mid)) != side) continue;
        for (size_t q = 0; q < gl.x.size(); ++q) acc += gl.w[q] * half * g(at(mid + half * gl.x[q]));
    }
    return acc;
}

// Integral over the unit sphere S^{n-1} of g(c + rho e), phase-restricted.
double shell_integral(const Field& f, const Point& c, double rho, int side, const std::vector<Point>& frame,
                      const std::function<double(const Point&)>& g) {
    if (f.dim == 2) return circle_integral(f, c, rho, frame[0], frame[1], side, g);
    // Latitudes around frame[2], chosen tangent to the interface so that
    // every latitude circle crosses it transversally.
    const auto& gl = gauss_legendre(32);
    double acc = 0.0;
    for (size_t q = 0; q < gl.x.size(); ++q) {
        const double u = gl.x[q];
        const double s = std::sqrt(1 - u * u);
        acc += gl.w[q] * circle_integral(f, c + frame[2] * (rho * u), rho * s, frame[0], frame[1], side, g);
    }
    return acc;
}

std::vector<Point> frame_for(const Field& f, const Point& x) {
    const int n = f.dim;
    if (n == 2) return {Point::unit(2, 0), Point::unit(2, 1)};
    // Numerical gradient of the level function at x.
    Point g(n);
    const double eps = f.h > 0 ? f.h : 1e-4;
    for (int a = 0; a < n; ++a) {
        Point p = x, m = x;
        p[a] += eps;
        m[a] -= eps;
        if (f.defined && (!f.defined(p) || !f.defined(m))) continue;
        g[a] = (f.level(p) - f.level(m)) / (2 * eps);
    }
    if (norm(g) < 1e-12) g = Point::unit(n, n - 1);
    // Polar axis orthogonal to the interface normal.
    auto fr = frame_along(g);
    return frame_along(fr[0]);
}

void check_radius(const Field& f, const Point& x, double r, double factor, const char* what) {
    if (!(r > 0)) fail(ErrorKind::invalid_input, fmt::format("{}: radius must be positive", what));
    if (f.h > 0 && r < factor * f.h * (1 - 1e-9))
        fail(ErrorKind::under_resolved,
             fmt::format("{}: radius {:.4g} is below {:g}h = {:.4g}", what, r, factor, factor * f.h));
    if (f.defined) {
        for (int a = 0; a < f.dim; ++a)
            for (double s : {-1.0, 1.0}) {
                Point p = x;
                p[a] += s * r;
                if (!f.defined(p))
                    fail(ErrorKind::invalid_input, fmt::format("{}: ball B({}, {:.4g}) leaves the grid box", what, to_string(x), r));
            }
    }
}

void check_zero(const Field& f, const Point& x, const char* what) {
    const double v = f.value(x);
    // Tolerance: a few grid cells of slope, or round-off for analytic fields.
    double tol = 1e-9;
    if (f.h > 0) tol = 2.0 * f.h * std::max(1.0, norm(f.gradient(x + Point::unit(f.dim, f.dim - 1) * (2 * f.h))));
    if (std::abs(v) > tol)
        fail(ErrorKind::invalid_input, fmt::format("{}: center {} is not a zero of f (value {:.3g})", what, to_string(x), v));
}

}  // namespace

// ------------------------------------------------------------------- fields

Field analytic_field(int dim, std::function<double(const Point&)> value, std::function<Point(const Point&)> gradient) {
    Field f;
    f.dim = dim;
    f.level = value;
    f.value = std::move(value);
    f.gradient = std::move(gradient);
    return f;
}

Field grid_field(const ScalarField& sf) {
    const auto& spec = sf.spec();
    auto data = std::make_shared<ScalarField>(sf);
    std::vector<signed char> side(spec.node_count());
    for (size_t i = 0; i < side.size(); ++i) side[i] = static_cast<signed char>(sign_of(sf.values()[i]));
    const auto& v = data->values();
    auto ng = std::make_shared<NodeGradients>(node_gradients(
        spec, side, [&](size_t i) { return v[i]; },
        [&](size_t i, size_t j) { return v[j] == v[i] ? 0.5 : v[i] / (v[i] - v[j]); }));
    Field f;
    f.dim = spec.dim;
    f.h = spec.h;
    f.value = [data](const Point& x) { return (*data)(x); };
    f.level = f.value;
    f.gradient = [data, ng](const Point& x) {
        const int s = sign_of((*data)(x));
        if (s == 0) return Point(data->spec().dim);
        return interpolate_gradient(*ng, x, s);
    };
    f.defined = [spec](const Point& x) { return spec.contains(x); };
    return f;
}

Field pair_field(const HarmonicPair& pair, double a_plus, double a_minus) {
    const auto& spec = pair.spec();
    auto domain = pair.domain;
    auto up = std::make_shared<ScalarField>(pair.u_plus);
    auto um = std::make_shared<ScalarField>(pair.u_minus);
    std::vector<double> level(spec.node_count());
    std::vector<signed char> side(spec.node_count());
    for (size_t i = 0; i < level.size(); ++i) {
        level[i] = domain->signed_distance(spec.node(spec.ijk(i)));
        side[i] = static_cast<signed char>(sign_of(level[i]));
    }
    auto crossing = [&](size_t i, size_t j) {
        const Point xi = spec.node(spec.ijk(i)), xj = spec.node(spec.ijk(j));
        if (level[j] == 0) return 1.0;
        return find_root([&](double t) { return domain->signed_distance(xi + (xj - xi) * t); }, 0.0, 1.0, 1e-12);
    };
    std::vector<signed char> side_p(side.size()), side_m(side.size());
    for (size_t i = 0; i < side.size(); ++i) {
        side_p[i] = side[i] > 0 ? 1 : -1;
        side_m[i] = side[i] < 0 ? -1 : 1;
    }
    auto gp = std::make_shared<NodeGradients>(node_gradients(
        spec, side_p, [&](size_t i) { return up->values()[i]; }, crossing));
    auto gm = std::make_shared<NodeGradients>(node_gradients(
        spec, side_m, [&](size_t i) { return um->values()[i]; }, crossing));
    Field f;
    f.dim = spec.dim;
    f.h = spec.h;
    f.value = [up, um, a_plus, a_minus](const Point& x) { return a_plus * (*up)(x) - a_minus * (*um)(x); };
    f.level = [domain](const Point& x) { return domain->signed_distance(x); };
    f.gradient = [domain, gp, gm, a_plus, a_minus](const Point& x) {
        const int s = domain->side_of(x);
        if (s > 0) return interpolate_gradient(*gp, x, 1) * a_plus;
        if (s < 0) return interpolate_gradient(*gm, x, -1) * (-a_minus);
        return Point(x.dim);
    };
    f.defined = [spec](const Point& x) { return spec.contains(x); };
    return f;
}

Field rescaled_field(const Field& f, const Point& shift, double scale, double divisor) {
    if (!(scale > 0) || divisor == 0) fail(ErrorKind::invalid_input, "rescaling needs scale > 0 and a nonzero divisor");
    Field g;
    g.dim = f.dim;
    g.h = f.h / scale;
    auto map = [shift, scale](const Point& x) { return x * scale + shift; };
    g.value = [f, map, divisor](const Point& x) { return f.value(map(x)) / divisor; };
    g.level = [f, map](const Point& x) { return f.level(map(x)); };
    g.gradient = [f, map, scale, divisor](const Point& x) { return f.gradient(map(x)) * (scale / divisor); };
    if (f.defined) g.defined = [f, map](const Point& x) { return f.defined(map(x)); };
    return g;
}

ScalarField VField::field() const { return scaled(base->u_plus, hQ) - base->u_minus; }

VField build_v(std::shared_ptr<const HarmonicPair> pair, const Point& Q) {
    if (std::abs(pair->domain->signed_distance(Q)) > 1e-8 * pair->domain->diameter())
        fail(ErrorKind::invalid_input, fmt::format("Q = {} is not on the boundary", to_string(Q)));
    const double hQ = pair->h(Q);
    VField v;
    v.base = pair;
    v.Q = Q;
    v.hQ = hQ;
    v.view = pair_field(*pair, hQ, 1.0);
    return v;
}

// --------------------------------------------------------------- quadrature

double sphere_integral(const Field& f, const Point& x, double r, const std::function<double(const Point&)>& g) {
    const auto frame = frame_for(f, x);
    return std::pow(r, f.dim - 1) * shell_integral(f, x, r, 0, frame, g);
}

double ball_integral(const Field& f, const Point& x, double r, int side, const std::function<double(double)>& w,
                     const std::function<double(const Point&)>& g) {
    const auto frame = frame_for(f, x);
    const auto& gl = gauss_legendre(48);
    double acc = 0.0;
    for (size_t q = 0; q < gl.x.size(); ++q) {
        const double rho = 0.5 * r * (1 + gl.x[q]);
        acc += 0.5 * r * gl.w[q] * std::pow(rho, f.dim - 1) * w(rho) * shell_integral(f, x, rho, side, frame, g);
    }
    return acc;
}

// -------------------------------------------------------------- functionals

double acf_J(const Field& f, const Point& x, double r) {
    check_radius(f, x, r, 8.0, "acf_J");
    check_zero(f, x, "acf_J");
    const int n = f.dim;
    auto weight = [n](double rho) { return std::pow(rho, 2.0 - n); };
    auto grad2 = [&](const Point& y) {
        const Point g = f.gradient(y);
        return dot(g, g);
    };
    const double ip = ball_integral(f, x, r, 1, weight, grad2);
    const double im = ball_integral(f, x, r, -1, weight, grad2);
    return std::sqrt(std::max(ip, 0.0)) * std::sqrt(std::max(im, 0.0)) / (r * r);
}

double almgren_H(const Field& f, const Point& x0, double r) {
    check_radius(f, x0, r, 8.0, "almgren_H");
    return sphere_integral(f, x0, r, [&](const Point& y) {
        const double v = f.value(y);
        return v * v;
    });
}

double almgren_D(const Field& f, const Point& x0, double r) {
    check_radius(f, x0, r, 8.0, "almgren_D");
    return ball_integral(f, x0, r, 0, [](double) { return 1.0; }, [&](const Point& y) {
        const Point g = f.gradient(y);
        return dot(g, g);
    });
}

double almgren_N(const Field& f, const Point& x0, double r) {
    check_zero(f, x0, "almgren_N");
    const double H = almgren_H(f, x0, r);
    // Scale reference: f^2 at the shell's typical size.
    double ref = 0.0;
    const double scale = std::max(std::abs(f.value(x0 + Point::unit(f.dim, f.dim - 1) * r)),
                                  std::abs(f.value(x0 + Point::unit(f.dim, 0) * r)));
    ref = scale * scale * unit_sphere_area(f.dim) * std::pow(r, f.dim - 1);
    if (!(H > 1e-14 * std::max(ref, 1e-300)) || H <= 0)
        fail(ErrorKind::degenerate, fmt::format("degenerate shell at r = {:.4g}: H = {:.3g}", r, H));
    return r * almgren_D(f, x0, r) / H;
}

double monneau_M(const Field& f, const LinearForm& p, const Point& x0, double r) {
    check_radius(f, x0, r, 8.0, "monneau_M");
    const double I = sphere_integral(f, x0, r, [&](const Point& y) {
        const double d = f.value(y) - p(y - x0);
        return d * d;
    });
    return std::max(I, 0.0) / std::pow(r, f.dim + 1);
}

RadialTrace trace_of(TraceKind kind, const Field& f, const Point& x, const std::vector<double>& radii, const LinearForm* p) {
    check_decreasing_radii(radii);
    RadialTrace t;
    t.center = x;
    t.kind = kind;
    for (double r : radii) {
        double v = 0.0;
        switch (kind) {
        case TraceKind::J: v = acf_J(f, x, r); break;
        case TraceKind::N: v = almgren_N(f, x, r); break;
        case TraceKind::H: v = almgren_H(f, x, r); break;
        case TraceKind::D: v = almgren_D(f, x, r); break;
        case TraceKind::M:
            if (!p) fail(ErrorKind::invalid_input, "Monneau trace needs a linear form");
            v = monneau_M(f, *p, x, r);
            break;
        default: fail(ErrorKind::invalid_input, fmt::format("trace kind {} is not a field functional", to_string(kind)));
        }
        t.push(r, v);
    }
    return t;
}

Derivative radial_derivative(const RadialTrace& t) {
    Derivative d;
    for (size_t i = 1; i + 1 < t.size(); ++i) {
        d.radii.push_back(t.radii[i]);
        d.values.push_back((t.values[i - 1] - t.values[i + 1]) / (t.radii[i - 1] - t.radii[i + 1]));
    }
    return d;
}

DefectReport almgren_defect(const Field& v, const Point& Q, double R, int n_sub) {
    if (n_sub < 8) fail(ErrorKind::invalid_input, "almgren_defect needs n_sub >= 8");
    const auto radii = log_spaced(R / 4, R, n_sub);
    const auto t = trace_of(TraceKind::N, v, Q, radii);
    const auto d = radial_derivative(t);
    DefectReport rep;
    rep.R = R;
    for (double x : d.values) rep.sup_negative = std::max(rep.sup_negative, -x);
    rep.scaled = rep.sup_negative * R;
    // Oscillation between adjacent radii against the overall trend.
    double osc = 0.0;
    for (size_t i = 1; i + 1 < t.size(); ++i)
        osc = std::max(osc, std::abs(t.values[i - 1] - 2 * t.values[i] + t.values[i + 1]));
    const double trend = std::abs(t.values.front() - t.values.back()) / (t.size() - 1);
    rep.under_resolved = osc > 1e-6 && osc > 10 * trend;
    return rep;
}

double rellich_term(const VField& v, double r) {
    const auto& pair = *v.base;
    const auto samples = pair.domain->boundary_in_ball(v.Q, r, 0.5 * pair.spec().h);
    double acc = 0.0;
    for (const auto& s : samples) {
        const double xn = dot(s.x - v.Q, s.normal);
        if (xn == 0.0) continue;
        const double a = v.hQ * pair.density(1, s.x), b = pair.density(-1, s.x);
        acc += s.weight * xn * (a * a - b * b);
    }
    return 0.5 * acc;
}

DefectReport almgren_defect(const VField& v, double R, int n_sub) {
    auto rep = almgren_defect(v.view, v.Q, R, n_sub);
    double env = 0.0;
    for (double r : log_spaced(R / 4, R, n_sub)) env = std::max(env, 2 * std::abs(rellich_term(v, r)) / almgren_H(v.view, v.Q, r));
    rep.envelope_scaled = env * R;
    return rep;
}

DefectFit fit_defects(std::vector<DefectReport> reports) {
    DefectFit fit;
    fit.reports = std::move(reports);
    std::vector<double> R, y;
    for (const auto& r : fit.reports) {
        if (r.under_resolved) fit.flags.push_back(fmt::format("under-resolved at R={:g}", r.R));
        if (r.scaled > 0) R.push_back(r.R), y.push_back(r.scaled);
    }
    if (R.size() >= 2) {
        const auto lf = fit_loglog(R, y);
        fit.exponent = lf.slope;
        fit.k = std::exp(lf.intercept);
        fit.fitted = true;
    } else {
        fit.flags.push_back("defect vanishes at too many scales to regress");
    }
    std::vector<double> Re, ye;
    for (const auto& r : fit.reports)
        if (r.envelope_scaled > 0) Re.push_back(r.R), ye.push_back(r.envelope_scaled);
    if (Re.size() >= 2) {
        fit.envelope_exponent = fit_loglog(Re, ye).slope;
        fit.envelope_fitted = true;
    }
    return fit;
}

MonneauGrowth monneau_growth_check(const Field& v, const LinearForm& p, const Point& Q, const std::vector<double>& R_list) {
    check_decreasing_radii(R_list);
    if (R_list.front() / R_list.back() < 10 * (1 - 1e-9)) fail(ErrorKind::invalid_input, "R_list must span at least one decade");
    MonneauGrowth g;
    std::vector<double> M;
    for (double r : R_list) M.push_back(monneau_M(v, p, Q, r));
    for (size_t i = 0; i < R_list.size(); ++i)
        for (size_t j = i + 1; j < R_list.size(); ++j) {
            if (R_list[j] < R_list[i] / 4 * (1 - 1e-12)) break;
            g.drops.push_back({R_list[i], R_list[j], M[i] - M[j]});
        }
    // Regress the worst drop per R.
    std::vector<double> xs, ys;
    for (size_t i = 0; i < R_list.size(); ++i) {
        double worst = 0.0;
        for (const auto& d : g.drops)
            if (d.R == R_list[i]) worst = std::min(worst, d.drop);
        g.worst = std::min(g.worst, worst);
        if (worst < 0) xs.push_back(R_list[i]), ys.push_back(-worst);
    }
    if (xs.size() >= 2) {
        const auto lf = fit_loglog(xs, ys);
        g.exponent = lf.slope;
        g.C = std::exp(lf.intercept);
        g.fitted = true;
    } else {
        g.flags.push_back("drops are nonnegative at too many scales to regress");
    }
    return g;
}

AcfConvergence acf_convergence(const std::vector<Field>& fields, const Point& x, const std::vector<double>& radii) {
    if (fields.size() != 3) fail(ErrorKind::invalid_input, "ACF convergence needs three resolutions");
    check_decreasing_radii(radii);
    AcfConvergence c;
    c.radii = radii;
    for (const auto& f : fields) {
        std::vector<double> J;
        for (double r : radii) J.push_back(acf_J(f, x, r));
        double worst = 0.0;
        for (size_t i = 0; i + 1 < J.size(); ++i) worst = std::max(worst, J[i + 1] - J[i]);
        c.worst_decrease.push_back(worst);
        c.J.push_back(std::move(J));
    }
    for (int k = 0; k < 2; ++k) {
        double d = 0.0;
        for (size_t i = 0; i < radii.size(); ++i) d = std::max(d, std::abs(c.J[k][i] - c.J[k + 1][i]));
        c.slack.push_back(d);
    }
    c.monotone_within_slack = c.worst_decrease[0] <= c.slack[0] && c.worst_decrease[1] <= c.slack[1] &&
                              c.worst_decrease[2] <= c.slack[1];
    c.slack_ratio = c.slack[0] > 0 ? c.slack[1] / c.slack[0] : 0.0;
    return c;
}

std::string trace_csv(const std::vector<RadialTrace>& traces) {
    std::string out = "kind,center,r,value,slack\n";
    for (const auto& t : traces) {
        const std::string center = csv_point(t.center);
        for (size_t i = 0; i < t.size(); ++i)
            out += fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", to_string(t.kind), center, t.radii[i], t.values[i], t.slack);
    }
    return out;
}

}  // namespace freebnd
