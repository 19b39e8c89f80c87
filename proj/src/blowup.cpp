#include "freebnd/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "freebnd/error.hpp"
#include "freebnd/numerics.hpp"

namespace freebnd {

namespace {

// Points on the unit sphere for sup estimates: 512 on the circle, a 32 x 64
// Gauss-latitude grid on S^2.
std::vector<Point> sphere_probes(int dim) {
    std::vector<Point> pts;
    if (dim == 2) {
        for (int k = 0; k < 512; ++k) {
            const double a = 2.0 * std::numbers::pi * k / 512.0;
            pts.push_back({std::cos(a), std::sin(a)});
        }
        return pts;
    }
    if (dim != 3) fail(ErrorKind::unsupported_dimension, "sphere probes need dimension 2 or 3");
    const auto& gl = gauss_legendre(32);
    for (double z : gl.x) {
        const double s = std::sqrt(1.0 - z * z);
        for (int k = 0; k < 64; ++k) {
            const double a = 2.0 * std::numbers::pi * (k + 0.5) / 64.0;
            pts.push_back({s * std::cos(a), s * std::sin(a), z});
        }
    }
    return pts;
}

void check_resolved(const Field& f, double r, const char* what) {
    if (!(r > 0)) fail(ErrorKind::invalid_input, fmt::format("{}: radius must be positive", what));
    if (f.h > 0 && r < 8.0 * f.h * (1.0 - 1e-9))
        fail(ErrorKind::under_resolved, fmt::format("{}: r = {} is below 8h = {}", what, r, 8.0 * f.h));
}

}  // namespace

Field rescale_phases(const Field& f, const Point& shift, double scale, double div_plus, double div_minus) {
    if (!(scale > 0) || !(div_plus > 0) || !(div_minus > 0))
        fail(ErrorKind::invalid_input, "rescaling needs positive scale and divisors");
    Field g;
    g.dim = f.dim;
    g.h = f.h / scale;
    auto map = [shift, scale](const Point& x) { return x * scale + shift; };
    g.value = [f, map, div_plus, div_minus](const Point& x) {
        const Point y = map(x);
        const double v = f.value(y);
        return f.phase(y) > 0 ? v / div_plus : v / div_minus;
    };
    g.level = [f, map](const Point& x) { return f.level(map(x)); };
    g.gradient = [f, map, scale, div_plus, div_minus](const Point& x) {
        const Point y = map(x);
        return f.gradient(y) * (scale / (f.phase(y) > 0 ? div_plus : div_minus));
    };
    if (f.defined) g.defined = [f, map](const Point& x) { return f.defined(map(x)); };
    return g;
}

BlowupSequence rescale(std::shared_ptr<const HarmonicPair> pair, const Point& Q, const std::vector<double>& radii) {
    if (!pair) fail(ErrorKind::invalid_input, "rescale needs a harmonic pair");
    check_decreasing_radii(radii);
    const Domain& d = *pair->domain;
    if (std::abs(d.signed_distance(Q)) > 1e-8 * d.diameter())
        fail(ErrorKind::invalid_input, fmt::format("Q = {} is not on the boundary", to_string(Q)));
    const int n = d.dim();
    const double kappa = unit_ball_volume(n - 1);
    const double h = pair->spec().h;
    const Field base = pair_field(*pair, 1.0, 1.0);

    BlowupSequence seq;
    seq.source = pair;
    seq.Q = Q;
    for (double r : radii) {
        check_resolved(base, r, "rescale");
        BlowupLevel lv;
        lv.r = r;
        const double wp = harmonic_measure_of_ball(*pair, 1, Q, r);
        const double wm = harmonic_measure_of_ball(*pair, -1, Q, r);
        if (wp < 1e-12 || wm < 1e-12)
            fail(ErrorKind::degenerate, fmt::format("harmonic measure of B({}, {}) vanishes", to_string(Q), r));
        lv.theta_plus = wp / (kappa * std::pow(r, n - 1));
        lv.theta_minus = wm / (kappa * std::pow(r, n - 1));
        lv.u = rescale_phases(base, Q, r, r * lv.theta_plus, r * lv.theta_minus);
        lv.origin_value = lv.u.value(zero_point(n));

        // Flux through the rescaled boundary in B_1 from one-sided gradients half
        // a cell off the interface, independent of the flux stencil.
        const auto samples = d.boundary_in_ball(Q, r, 0.5 * h);
        double fp = 0.0, fm = 0.0;
        for (const auto& s : samples) {
            const Point x = (s.x - Q) * (1.0 / r);
            const double w = s.weight / std::pow(r, n - 1);
            const double off = 0.5 * h / r;
            const Point xp = x + s.normal * off, xm = x - s.normal * off;
            if (lv.u.defined && !(lv.u.defined(xp) && lv.u.defined(xm))) continue;
            fp += w * std::max(0.0, dot(lv.u.gradient(xp), s.normal));
            fm += w * std::max(0.0, dot(lv.u.gradient(xm), s.normal));
        }
        lv.measure_plus = fp / kappa;
        lv.measure_minus = fm / kappa;
        seq.levels.push_back(std::move(lv));
    }
    return seq;
}

ScalarField resample_unit_box(const Field& f, int n_cells) {
    if (n_cells < 2) fail(ErrorKind::invalid_input, "resampling needs at least 2 cells");
    Point lo(f.dim), hi(f.dim);
    Index3 nc{1, 1, 1};
    for (int a = 0; a < f.dim; ++a) {
        lo[a] = -1.0;
        hi[a] = 1.0;
        nc[a] = n_cells;
    }
    return ScalarField::sample(GridSpec::make(lo, hi, nc), [&](const Point& x) { return f.value(x); });
}

double rescaled_zero_set_width(const Domain& d, const Point& Q, double r) {
    const auto samples = flatness_samples(d, Q, r);
    std::vector<Point> xs;
    for (const auto& s : samples) xs.push_back((s.x - Q) * (1.0 / r));
    auto half_width = [&](const Point& nu) {
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& x : xs) {
            const double t = dot(x, nu);
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
        return 0.5 * (hi - lo);
    };
    return minimize_over_directions(d.dim(), half_width, 128).value;
}

TangentFit fit_tangent(const Field& v, const Point& Q, double r, double hQ) {
    check_resolved(v, r, "fit_tangent");
    if (v.defined && !v.defined(Q)) fail(ErrorKind::invalid_input, "fit_tangent: center outside the field");
    const int n = v.dim;
    // The Gram matrix of the coordinate functions on the sphere is
    // r^{n+1} |S^{n-1}| / n times the identity.
    const double gram = std::pow(r, n + 1) * unit_sphere_area(n) / n;
    Point a(n);
    for (int i = 0; i < n; ++i)
        a[i] = sphere_integral(v, Q, r, [&](const Point& y) { return v.value(y) * (y[i] - Q[i]); }) / gram;

    TangentFit fit;
    fit.Q = Q;
    fit.r = r;
    fit.c = norm(a);
    const double scale = std::sqrt(sphere_integral(v, Q, r, [&](const Point& y) {
                                       const double t = v.value(y);
                                       return t * t;
                                   }) / gram);
    // A unique minimizer exists unless the first moment vanishes.
    if (!(fit.c > 1e-9 * std::max(scale, 1e-300))) {
        fit.ambiguous = true;
        fit.nu = Point::unit(n, n - 1);
    } else {
        fit.nu = a * (1.0 / fit.c);
    }
    fit.theta_minus = fit.c;
    if (!(hQ > 0)) fail(ErrorKind::invalid_input, "fit_tangent: h(Q) must be positive");
    fit.theta_plus = fit.c / hQ;
    fit.residual = monneau_M(v, LinearForm{a}, Q, r);
    return fit;
}

TangentFit fit_tangent(const VField& v, double r) { return fit_tangent(v.view, v.Q, r, v.hQ); }

ContinuityReport density_continuity(const HarmonicPair& pair, const std::vector<Point>& samples, double r, int side) {
    if (samples.size() < 16) fail(ErrorKind::invalid_input, "density_continuity needs at least 16 boundary samples");
    ContinuityReport rep;
    rep.samples = samples;
    for (const auto& q : samples) rep.theta.push_back(density_at_scale(pair, side, q, r));
    double sum = 0.0;
    for (size_t i = 0; i < rep.theta.size(); ++i) {
        sum += rep.theta[i];
        if (i + 1 < rep.theta.size()) rep.max_jump = std::max(rep.max_jump, std::abs(rep.theta[i + 1] - rep.theta[i]));
    }
    rep.mean = sum / static_cast<double>(rep.theta.size());
    return rep;
}

double beta_number(const Domain& d, const Point& Q, double r) {
    if (!(r > 0)) fail(ErrorKind::invalid_input, "beta_number: radius must be positive");
    auto samples = flatness_samples(d, Q, r);
    double spacing = r / 128.0;
    while (samples.size() < 128 && spacing > r * 1e-4) {
        spacing *= 0.5;
        samples = d.boundary_in_ball(Q, r, spacing);
    }
    if (samples.size() < 128)
        fail(ErrorKind::under_resolved, fmt::format("beta_number: only {} boundary samples in the ball", samples.size()));
    const auto best = minimize_over_directions(
        d.dim(), [&](const Point& nu) { return slab_width(samples, Q, nu, r); }, 256);
    return std::clamp(best.value, 0.0, 1.0);
}

RadialTrace modulus_of_flatness(const Field& v, const TangentFit& fit, const std::vector<double>& radii) {
    check_decreasing_radii(radii);
    const auto probes = sphere_probes(v.dim);
    const LinearForm p{fit.nu * fit.c};
    RadialTrace t;
    t.center = fit.Q;
    t.kind = TraceKind::flatness;
    for (double r : radii) {
        check_resolved(v, r, "modulus_of_flatness");
        double sup = 0.0;
        for (const auto& e : probes) {
            const Point x = e * r;
            const Point y = fit.Q + x;
            if (v.defined && !v.defined(y)) fail(ErrorKind::invalid_input, "modulus_of_flatness: sphere leaves the box");
            sup = std::max(sup, std::abs(v.value(y) - p(x)));
        }
        t.push(r, sup / r);
    }
    return t;
}

std::string tangent_csv(const std::vector<TangentFit>& fits) {
    std::string out = "Q,nu,theta_plus,theta_minus,residual\n";
    for (const auto& f : fits)
        out += fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", csv_point(f.Q), csv_point(f.nu), f.theta_plus, f.theta_minus,
                           f.residual);
    return out;
}

}  // namespace freebnd
