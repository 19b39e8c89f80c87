#include "freebnd/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>
#include <gsl/gsl_fit.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_multimin.h>

#include "freebnd/error.hpp"

namespace freebnd {

std::string to_string(const Point& p) {
    std::string s = "(";
    for (int i = 0; i < p.dim; ++i) s += fmt::format("{}{:.6g}", i ? ", " : "", p[i]);
    return s + ")";
}

std::string csv_point(const Point& p) {
    std::string s;
    for (int i = 0; i < p.dim; ++i) s += fmt::format("{}{:.17g}", i ? ";" : "", p[i]);
    return s;
}

double unit_ball_volume(int k) {
    switch (k) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi / 3.0;
    default: return std::pow(std::numbers::pi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
    }
}

double unit_sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::under_resolved: return "under-resolved";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::not_converged: return "not converged";
    case ErrorKind::unsupported_dimension: return "unsupported dimension";
    case ErrorKind::internal: return "internal";
    }
    return "unknown";
}

const GaussRule& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        auto rule = std::make_unique<GaussRule>();
        gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
        rule->x.resize(n);
        rule->w.resize(n);
        for (int i = 0; i < n; ++i)
            gsl_integration_glfixed_point(-1.0, 1.0, i, &rule->x[i], &rule->w[i], t);
        gsl_integration_glfixed_table_free(t);
        slot = std::move(rule);
    }
    return *slot;
}

double find_root(const std::function<double(double)>& fn, double a, double b, double xtol) {
    double fa = fn(a), fb = fn(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0)) fail(ErrorKind::internal, "find_root: no sign change");
    boost::uintmax_t iters = 200;
    auto tol = [xtol](double lo, double hi) { return std::abs(hi - lo) <= xtol; };
    auto [lo, hi] = boost::math::tools::toms748_solve(fn, a, b, fa, fb, tol, iters);
    return 0.5 * (lo + hi);
}

Point direction_from_angles(int dim, const std::vector<double>& a) {
    Point p(dim);
    if (dim == 2) {
        p[0] = std::cos(a[0]);
        p[1] = std::sin(a[0]);
    } else if (dim == 3) {
        p[0] = std::sin(a[0]) * std::cos(a[1]);
        p[1] = std::sin(a[0]) * std::sin(a[1]);
        p[2] = std::cos(a[0]);
    } else {
        p[0] = std::sin(a[0]) * std::sin(a[1]) * std::cos(a[2]);
        p[1] = std::sin(a[0]) * std::sin(a[1]) * std::sin(a[2]);
        p[2] = std::sin(a[0]) * std::cos(a[1]);
        p[3] = std::cos(a[0]);
    }
    return p;
}

std::vector<double> angles_from_direction(const Point& nu) {
    const Point u = normalized(nu);
    if (u.dim == 2) return {std::atan2(u[1], u[0])};
    if (u.dim == 3) return {std::acos(std::clamp(u[2], -1.0, 1.0)), std::atan2(u[1], u[0])};
    const double a0 = std::acos(std::clamp(u[3], -1.0, 1.0));
    const double s0 = std::sin(a0);
    const double a1 = s0 > 1e-15 ? std::acos(std::clamp(u[2] / s0, -1.0, 1.0)) : 0.0;
    return {a0, a1, std::atan2(u[1], u[0])};
}

Point canonical_direction(const Point& nu) {
    for (int i = 0; i < nu.dim; ++i) {
        if (std::abs(nu[i]) > 1e-14) return nu[i] < 0 ? -nu : nu;
    }
    return nu;
}

bool lexicographically_less(const Point& a, const Point& b) {
    for (int i = 0; i < a.dim; ++i) {
        if (a[i] < b[i] - 1e-12) return true;
        if (a[i] > b[i] + 1e-12) return false;
    }
    return false;
}

std::vector<Point> direction_lattice(int dim, int n) {
    std::vector<Point> out;
    out.reserve(n);
    if (dim == 2) {
        for (int i = 0; i < n; ++i) out.push_back(direction_from_angles(2, {std::numbers::pi * i / n}));
    } else if (dim == 3) {
        // Fibonacci lattice on the upper hemisphere.
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < n; ++i) {
            const double z = 1.0 - (i + 0.5) / n;
            const double rho = std::sqrt(1.0 - z * z);
            out.push_back(Point{rho * std::cos(golden * i), rho * std::sin(golden * i), z});
        }
    } else if (dim == 4) {
        // Kronecker sequence pushed through an equal-area parametrization of S^3.
        const double g1 = 0.8191725133961645, g2 = 0.6710436067037893, g3 = 0.5497004779019703;
        for (int i = 0; i < n; ++i) {
            const double u1 = std::fmod(0.5 + g1 * (i + 1), 1.0);
            const double u2 = std::fmod(0.5 + g2 * (i + 1), 1.0);
            const double u3 = std::fmod(0.5 + g3 * (i + 1), 1.0);
            const double a = std::sqrt(u1), b = std::sqrt(1.0 - u1);
            const double t1 = 2.0 * std::numbers::pi * u2, t2 = std::numbers::pi * u3;
            out.push_back(Point{b * std::cos(t1), b * std::sin(t1), a * std::cos(t2), a * std::sin(t2)});
        }
    } else {
        fail(ErrorKind::unsupported_dimension, fmt::format("direction lattice in dimension {}", dim));
    }
    return out;
}

namespace {

struct NmContext {
    int dim;
    const std::function<double(const Point&)>* fn;
    int evaluations = 0;
};

double nm_trampoline(const gsl_vector* v, void* params) {
    auto* ctx = static_cast<NmContext*>(params);
    std::vector<double> a(v->size);
    for (size_t i = 0; i < v->size; ++i) a[i] = gsl_vector_get(v, i);
    ++ctx->evaluations;
    return (*ctx->fn)(direction_from_angles(ctx->dim, a));
}

}  // namespace

DirectionSearch minimize_over_directions(int dim, const std::function<double(const Point&)>& fn,
                                         int n_lattice, double tol) {
    const auto lattice = direction_lattice(dim, n_lattice);
    DirectionSearch best;
    best.value = INFINITY;
    std::vector<std::pair<double, Point>> scanned;
    for (const auto& nu : lattice) {
        const double v = fn(nu);
        ++best.evaluations;
        const Point cn = canonical_direction(nu);
        scanned.emplace_back(v, cn);
        if (v < best.value - 1e-14 || (std::abs(v - best.value) <= 1e-14 && lexicographically_less(cn, best.nu))) {
            best.value = v;
            best.nu = cn;
        }
    }

    const int m = dim - 1;
    NmContext ctx{dim, &fn};
    gsl_multimin_function f{&nm_trampoline, static_cast<size_t>(m), &ctx};
    gsl_vector* x0 = gsl_vector_alloc(m);
    gsl_vector* step = gsl_vector_alloc(m);
    gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, m);
    // Initial simplex a bit smaller than the lattice spacing.
    const double spacing = dim == 2 ? std::numbers::pi / n_lattice : std::pow(4.0 * std::numbers::pi / n_lattice, 1.0 / m);

    auto descend = [&](std::vector<double> a, double size) {
        for (int i = 0; i < m; ++i) {
            gsl_vector_set(x0, i, a[i]);
            gsl_vector_set(step, i, size);
        }
        gsl_multimin_fminimizer_set(s, &f, x0, step);
        for (int it = 0; it < 500; ++it) {
            if (gsl_multimin_fminimizer_iterate(s)) break;
            if (gsl_multimin_fminimizer_size(s) < tol) break;
        }
        for (int i = 0; i < m; ++i) a[i] = gsl_vector_get(s->x, i);
        return std::make_pair(s->fval, a);
    };

    // Max-type objectives stall the simplex at kinks, so descend from the three
    // best lattice points and restart the winner once from where it stopped.
    const size_t n_starts = std::min<size_t>(3, scanned.size());
    std::partial_sort(scanned.begin(), scanned.begin() + n_starts, scanned.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
    std::pair<double, std::vector<double>> winner{INFINITY, {}};
    for (size_t k = 0; k < n_starts; ++k) {
        auto res = descend(angles_from_direction(scanned[k].second), 0.5 * spacing);
        if (res.first < winner.first) winner = res;
    }
    if (!winner.second.empty()) {
        auto again = descend(winner.second, 0.1 * spacing);
        if (again.first < winner.first) winner = again;
        if (winner.first < best.value) {
            best.value = winner.first;
            best.nu = canonical_direction(direction_from_angles(dim, winner.second));
        }
    }
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(x0);
    gsl_vector_free(step);
    best.evaluations += ctx.evaluations;
    return best;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::invalid_input, "fit_line needs >= 2 points");
    double c0, c1, cov00, cov01, cov11, sumsq;
    gsl_fit_linear(x.data(), 1, y.data(), 1, x.size(), &c0, &c1, &cov00, &cov01, &cov11, &sumsq);
    return {c1, c0};
}

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0 && y[i] > 0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    return fit_line(lx, ly);
}

std::vector<double> log_spaced(double lo, double hi, int count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = hi;
        return out;
    }
    for (int i = 0; i < count; ++i)
        out[i] = std::exp(std::log(hi) + (std::log(lo) - std::log(hi)) * i / (count - 1));
    return out;  // decreasing
}

}  // namespace freebnd
