#include "freebnd/flatness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "freebnd/error.hpp"
#include "freebnd/numerics.hpp"

namespace freebnd {

double two_plane_eval(double gamma, double g, double t) { return t >= 0 ? gamma * t : g * gamma * t; }

double two_plane_eval(const TwoPlaneFit& fit, double t) { return two_plane_eval(fit.gamma, fit.g_at_center, t); }

double two_plane_inverse(double gamma, double g, double w) { return w >= 0 ? w / gamma : w / (g * gamma); }

ProbeSet make_probes(int dim, const Point& center, double r, double spacing) {
    if (dim != 2 && dim != 3) fail(ErrorKind::unsupported_dimension, "probe sets need dimension 2 or 3");
    if (!(r > 0) || !(spacing > 0)) fail(ErrorKind::invalid_input, "probe set needs positive radius and spacing");
    ProbeSet p;
    p.center = center;
    p.r = r;
    const int m = static_cast<int>(std::floor(r / spacing));
    if (dim == 2) {
        for (int i = -m; i <= m; ++i)
            for (int j = -m; j <= m; ++j) {
                const Point x{i * spacing, j * spacing};
                if (norm(x) <= r) p.offsets.push_back(x);
            }
        for (int k = 0; k < 256; ++k) {
            const double a = 2.0 * std::numbers::pi * k / 256.0;
            p.offsets.push_back({r * std::cos(a), r * std::sin(a)});
        }
        return p;
    }
    for (int i = -m; i <= m; ++i)
        for (int j = -m; j <= m; ++j)
            for (int k = -m; k <= m; ++k) {
                const Point x{i * spacing, j * spacing, k * spacing};
                if (norm(x) <= r) p.offsets.push_back(x);
            }
    // Fibonacci sphere.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < 256; ++k) {
        const double z = 1.0 - (2.0 * k + 1.0) / 256.0;
        const double s = std::sqrt(1.0 - z * z);
        p.offsets.push_back({r * s * std::cos(golden * k), r * s * std::sin(golden * k), r * z});
    }
    return p;
}

ProbeSet probes_for(const Field& w, const Point& center, double r) {
    const double base = w.dim == 2 ? r / 48.0 : r / 12.0;
    return make_probes(w.dim, center, r, std::max(base, w.h));
}

namespace {

struct Sampled {
    std::vector<Point> x;  // offsets from the center
    std::vector<double> w;
    double sup = 0.0;
};

Sampled sample(const Field& w, const ProbeSet& probes) {
    Sampled s;
    s.x = probes.offsets;
    s.w.reserve(s.x.size());
    for (const auto& x : s.x) {
        const Point y = probes.center + x;
        if (w.defined && !w.defined(y))
            fail(ErrorKind::invalid_input, fmt::format("probe {} lies outside the field", to_string(y)));
        const double v = w.value(y);
        s.w.push_back(v);
        s.sup = std::max(s.sup, std::abs(v));
    }
    return s;
}

void check_center(const Field& w, const Sampled& s, const ProbeSet& probes) {
    const double v = w.value(probes.center);
    const double tol = w.h > 0 ? 2.0 * w.h * s.sup / probes.r : 1e-9 * std::max(1.0, s.sup);
    if (std::abs(v) > tol)
        fail(ErrorKind::invalid_input,
             fmt::format("field is {} at the ball center {}, not on the free boundary", v, to_string(probes.center)));
}

double squeeze_width(const Sampled& s, const Point& nu, double gamma, double g) {
    double eps = 0.0;
    for (size_t i = 0; i < s.x.size(); ++i)
        eps = std::max(eps, std::abs(two_plane_inverse(gamma, g, s.w[i]) - dot(s.x[i], nu)));
    return eps;
}

// min over lambda > 0 of max_i |lambda phi_i - t_i|: convex in lambda.
std::pair<double, double> best_lambda(const std::vector<double>& phi, const std::vector<double>& t) {
    double num = 0.0, den = 0.0, tmax = 0.0, pmax = 0.0;
    for (size_t i = 0; i < phi.size(); ++i) {
        num += phi[i] * t[i];
        den += phi[i] * phi[i];
        tmax = std::max(tmax, std::abs(t[i]));
        pmax = std::max(pmax, std::abs(phi[i]));
    }
    auto width = [&](double lam) {
        double e = 0.0;
        for (size_t i = 0; i < phi.size(); ++i) e = std::max(e, std::abs(lam * phi[i] - t[i]));
        return e;
    };
    if (!(den > 0)) return {INFINITY, tmax};
    // The minimizer is at most (width(ls) + tmax) / max|phi| for any feasible ls.
    const double ls = std::max(num / den, 0.0);
    const double hi = 1.01 * std::max(ls, (width(ls) + tmax) / pmax) + 1e-300;
    const auto [lam, val] = boost::math::tools::brent_find_minima(width, 1e-12 * hi, hi, 52);
    return {lam, val};
}

}  // namespace

double measure_squeeze(const Field& w, const Point& nu, double gamma, double g, const ProbeSet& probes) {
    if (!(gamma > 0) || !(g > 0)) fail(ErrorKind::invalid_input, "squeeze needs gamma > 0 and g > 0");
    const Sampled s = sample(w, probes);
    check_center(w, s, probes);
    return squeeze_width(s, normalized(nu), gamma, g);
}

bool squeeze_holds(const Field& w, const Point& nu, double gamma, double g, double eps, const ProbeSet& probes) {
    if (!(gamma > 0) || !(g > 0)) fail(ErrorKind::invalid_input, "squeeze needs gamma > 0 and g > 0");
    const Sampled s = sample(w, probes);
    const Point n = normalized(nu);
    for (size_t i = 0; i < s.x.size(); ++i) {
        const double t = dot(s.x[i], n);
        if (s.w[i] < two_plane_eval(gamma, g, t - eps) || s.w[i] > two_plane_eval(gamma, g, t + eps)) return false;
    }
    return true;
}

TwoPlaneFit best_two_plane(const Field& w, double g, const ProbeSet& probes, int n_lattice) {
    if (!(g > 0)) fail(ErrorKind::invalid_input, "two-plane fit needs g > 0");
    const Sampled s = sample(w, probes);
    check_center(w, s, probes);
    // U^{-1}(w) = phi / gamma with phi independent of gamma.
    std::vector<double> phi(s.w.size()), t(s.w.size());
    for (size_t i = 0; i < s.w.size(); ++i) phi[i] = two_plane_inverse(1.0, g, s.w[i]);

    auto oriented = [&](const Point& nu) {
        for (size_t i = 0; i < t.size(); ++i) t[i] = dot(s.x[i], nu);
        return best_lambda(phi, t);
    };
    auto objective = [&](const Point& nu) { return std::min(oriented(nu).second, oriented(-nu).second); };
    const auto dir = minimize_over_directions(w.dim, objective, n_lattice);

    TwoPlaneFit fit;
    fit.g_at_center = g;
    const auto plus = oriented(dir.nu);
    const auto minus = oriented(-dir.nu);
    const bool flip = minus.second < plus.second;
    const auto best = flip ? minus : plus;
    fit.nu = flip ? -dir.nu : dir.nu;
    if (!(best.first > 0) || !std::isfinite(best.first)) {
        fit.gamma = 1.0;
        fit.eps = squeeze_width(s, fit.nu, fit.gamma, g);
        fit.not_flat = true;
        return fit;
    }
    fit.gamma = 1.0 / best.first;
    fit.eps = squeeze_width(s, fit.nu, fit.gamma, g);
    fit.not_flat = fit.eps > 0.5 * probes.r;
    return fit;
}

double holder_seminorm(const HolderData& data, const Point& center, double R) {
    if (data.x.size() != data.g.size()) fail(ErrorKind::invalid_input, "Hölder data sizes differ");
    std::vector<size_t> in;
    for (size_t i = 0; i < data.x.size(); ++i)
        if (distance(data.x[i], center) <= R) in.push_back(i);
    double sup = 0.0;
    for (size_t a = 0; a < in.size(); ++a)
        for (size_t b = a + 1; b < in.size(); ++b) {
            const double d = distance(data.x[in[a]], data.x[in[b]]) / R;
            if (d <= 0) continue;
            sup = std::max(sup, std::abs(data.g[in[a]] - data.g[in[b]]) / std::pow(d, data.alpha));
        }
    return sup;
}

double oscillation(const HolderData& data, const Point& center, double R, double g0) {
    double sup = 0.0;
    for (size_t i = 0; i < data.x.size(); ++i)
        if (distance(data.x[i], center) <= R) sup = std::max(sup, std::abs(data.g[i] - g0));
    return sup;
}

namespace {

// Hypotheses of one improvement step on B(center, R); appends flags.
double check_hypotheses(const HolderData& g, const TwoPlaneFit& fit, const Point& center, double R,
                        const StepOptions& opts, std::vector<std::string>& flags) {
    const double rel = fit.eps / R;
    if (rel > opts.eps_tilde) flags.push_back(fmt::format("eps/R = {:.3g} above eps_tilde = {:.3g}", rel, opts.eps_tilde));
    const double sn = holder_seminorm(g, center, R);
    if (!(sn <= rel * rel + opts.g_tolerance))
        flags.push_back(fmt::format("g seminorm {:.3g} above eps^2 = {:.3g}", sn, rel * rel));
    if (fit.gamma < opts.gamma_min || fit.gamma > opts.gamma_max)
        flags.push_back(fmt::format("gamma = {:.4g} outside [{:.4g}, {:.4g}]", fit.gamma, opts.gamma_min, opts.gamma_max));
    if (fit.not_flat) flags.push_back("squeeze too wide to be flat");
    return sn;
}

}  // namespace

ImprovementReport improvement_step(const Field& w, const HolderData& g, const TwoPlaneFit& fit, const Point& center,
                                   double R, double r, const StepOptions& opts) {
    if (!(R > 0) || !(r > 0 && r < 1)) fail(ErrorKind::invalid_input, "improvement step needs R > 0 and 0 < r < 1");
    if (!(fit.gamma > 0) || !(fit.g_at_center > 0))
        fail(ErrorKind::invalid_input, "improvement step needs gamma > 0 and g > 0");
    ImprovementReport rep;
    rep.before = fit;
    rep.R = R;
    rep.r = r;
    rep.g_seminorm = check_hypotheses(g, fit, center, R, opts, rep.flags);
    rep.hypothesis_ok = rep.flags.empty();
    if (!rep.hypothesis_ok) rep.flags.push_back("hypothesis violated");

    rep.after = best_two_plane(w, fit.g_at_center, probes_for(w, center, r * R));
    const double slack = 1e-8 * R;  // direction-search tolerance
    rep.contraction_ok = rep.after.eps <= 0.5 * r * fit.eps + slack;
    rep.contraction_ratio = fit.eps > 0 ? rep.after.eps / (r * fit.eps) : 0.0;
    const double rel = fit.eps / R;
    rep.nu_shift = distance(rep.after.nu, fit.nu);
    rep.gamma_shift = std::abs(rep.after.gamma - fit.gamma);
    rep.nu_ok = rep.nu_shift <= opts.C_tilde * rel + 1e-6;
    rep.gamma_ok = rep.gamma_shift <= opts.C_tilde * rel + 1e-6 * fit.gamma;
    return rep;
}

double default_rbar(double alpha, double R0) {
    if (!(alpha > 0 && alpha <= 1)) fail(ErrorKind::invalid_input, "alpha must lie in (0, 1]");
    return std::min(R0, std::pow(4.0, -1.0 / alpha));
}

IterationLog improvement_chain(const HarmonicPair& pair, const Point& Q, double r0, double rbar, int n_steps,
                               const DecayOptions& opts) {
    if (!(r0 > 0)) fail(ErrorKind::invalid_input, "improvement chain needs r0 > 0");
    const Domain& d = *pair.domain;
    if (std::abs(d.signed_distance(Q)) > 1e-8 * d.diameter())
        fail(ErrorKind::invalid_input, fmt::format("Q = {} is not on the boundary", to_string(Q)));

    const Field w = rescaled_field(pair_field(pair, 1.0, 1.0), Q, r0, r0);
    HolderData g;
    g.alpha = opts.alpha;
    for (const auto& s : d.boundary_in_ball(Q, r0, 2.0 * r0 / std::max(opts.g_samples, 2))) {
        try {
            const double v = pair.h(s.x);
            g.x.push_back((s.x - Q) * (1.0 / r0));
            g.g.push_back(v);
        } catch (const Error&) {
            // Flux stencil leaves the box; the sample is dropped.
        }
    }
    IterationLog log = improvement_chain(w, g, pair.h(Q), r0, rbar, n_steps, opts);
    log.Q = Q;
    return log;
}

IterationLog improvement_chain(const Field& w, const HolderData& g, double g0, double r0, double rbar, int n_steps,
                               const DecayOptions& opts) {
    if (!(r0 > 0) || !(rbar > 0 && rbar < 1) || n_steps < 1)
        fail(ErrorKind::invalid_input, "improvement chain needs r0 > 0, 0 < rbar < 1 and at least one step");
    const Point origin = zero_point(w.dim);

    IterationLog log;
    log.Q = origin;
    log.r0 = r0;
    log.rbar = rbar;
    log.s_floor = std::log(2.0) / std::log(1.0 / rbar);

    TwoPlaneFit fit = best_two_plane(w, g0, probes_for(w, origin, 1.0));
    double R = 1.0;
    auto record = [&](int k, bool contraction) {
        IterationRecord rec;
        rec.k = k;
        rec.r = r0 * R;
        rec.nu = fit.nu;
        rec.gamma = fit.gamma;
        rec.eps = fit.eps;
        rec.rel_eps = fit.eps / R;
        std::vector<std::string> flags;
        rec.g_seminorm = check_hypotheses(g, fit, origin, R, opts.step, flags);
        rec.hypothesis_ok = flags.empty();
        rec.contraction_ok = contraction;
        log.steps.push_back(rec);
    };
    record(0, true);
    for (int k = 1; k <= n_steps; ++k) {
        const double next = R * rbar;
        if (w.h > 0 && next < opts.floor_cells * w.h) {
            log.truncated = true;
            log.flags.push_back(
                fmt::format("resolution floor: radius {:.3g} below {} cells at step {}", r0 * next, opts.floor_cells, k));
            break;
        }
        const auto rep = improvement_step(w, g, fit, origin, R, rbar, opts.step);
        fit = rep.after;
        R = next;
        record(k, rep.contraction_ok);
    }

    std::vector<double> rs, es;
    for (const auto& s : log.steps) {
        rs.push_back(s.r);
        es.push_back(s.rel_eps);
    }
    if (std::count_if(es.begin(), es.end(), [](double e) { return e > 0; }) >= 3) {
        log.s_fit = fit_loglog(rs, es).slope;
        log.s_fitted = true;
    } else {
        log.flags.push_back("fewer than three positive widths; decay exponent not fitted");
    }
    return log;
}

IterationLog flatness_decay(const HarmonicPair& pair, const Point& Q, double r0, double rbar, int n_steps,
                            const DecayOptions& opts) {
    if (n_steps < 3) fail(ErrorKind::invalid_input, "flatness decay needs at least 3 steps");
    const double cap = default_rbar(opts.alpha, opts.R0);
    if (rbar > cap * (1.0 + 1e-12))
        fail(ErrorKind::invalid_input,
             fmt::format("rbar = {} exceeds min(R0, 4^(-1/alpha)) = {} for alpha = {}", rbar, cap, opts.alpha));
    return improvement_chain(pair, Q, r0, rbar, n_steps, opts);
}

std::string iteration_csv(const IterationLog& log) {
    std::string out = "k,r,nu,gamma,eps,hypothesis_ok\n";
    for (const auto& s : log.steps)
        out += fmt::format("{},{:.17g},{},{:.17g},{:.17g},{}\n", s.k, s.r, csv_point(s.nu), s.gamma, s.eps,
                           s.hypothesis_ok ? 1 : 0);
    return out;
}

HarnackReport harnack_gap_check(const Field& w, double g0, double g_oscillation, const Point& nu_in, double gamma,
                                double eps) {
    if (!(gamma > 0) || !(g0 > 0) || !(eps > 0)) fail(ErrorKind::invalid_input, "Harnack check needs gamma, g, eps > 0");
    const Point nu = normalized(nu_in);
    const Point origin = zero_point(w.dim);
    const Sampled ball = sample(w, probes_for(w, origin, 1.0));
    const double tol = w.h > 0 ? gamma * w.h : 1e-12 * std::max(1.0, ball.sup);

    HarnackReport rep;
    double worst = 0.0;
    for (size_t i = 0; i < ball.x.size(); ++i)
        worst = std::max(worst, two_plane_eval(gamma, g0, dot(ball.x[i], nu)) - ball.w[i]);
    if (worst > tol) rep.flags.push_back(fmt::format("w falls below U(x.nu) by {:.3g}", worst));
    const double at = w.value(nu * 0.2);
    if (at < two_plane_eval(gamma, g0, 0.2 + eps) - tol) rep.flags.push_back("w(nu/5) below U(1/5 + eps)");
    if (g_oscillation > 10.0 * eps * eps)
        rep.flags.push_back(fmt::format("g oscillation {:.3g} above 10 eps^2", g_oscillation));
    rep.hypothesis_ok = rep.flags.empty();

    const Sampled half = sample(w, probes_for(w, origin, 0.5));
    double c = 1.0;
    for (size_t i = 0; i < half.x.size(); ++i)
        c = std::min(c, (two_plane_inverse(gamma, g0, half.w[i]) - dot(half.x[i], nu)) / eps);
    rep.c = c;
    rep.passed = rep.hypothesis_ok && c > 0;
    return rep;
}

TwoSidedReport harnack_two_sided(const Field& w, double g0, double g_oscillation, const Point& nu_in, double gamma,
                                 double a0, double b0, const Point& x0, double r) {
    if (!(gamma > 0) || !(g0 > 0) || !(r > 0) || !(b0 > a0))
        fail(ErrorKind::invalid_input, "two-sided Harnack needs gamma, g, r > 0 and b0 > a0");
    const Point nu = normalized(nu_in);
    TwoSidedReport rep;
    rep.a0 = a0;
    rep.b0 = b0;
    const Sampled ball = sample(w, probes_for(w, x0, r));
    const double tol = w.h > 0 ? gamma * w.h : 1e-12 * std::max(1.0, ball.sup);
    double below = 0.0, above = 0.0;
    for (size_t i = 0; i < ball.x.size(); ++i) {
        const double t = dot(x0 + ball.x[i], nu);
        below = std::max(below, two_plane_eval(gamma, g0, t + a0) - ball.w[i]);
        above = std::max(above, ball.w[i] - two_plane_eval(gamma, g0, t + b0));
    }
    if (below > tol || above > tol) rep.flags.push_back("w is not squeezed on the outer ball");
    const double eps = (b0 - a0) / r;
    if (g_oscillation > eps * eps) rep.flags.push_back(fmt::format("g oscillation {:.3g} above eps^2", g_oscillation));
    rep.hypothesis_ok = rep.flags.empty();

    const Sampled inner = sample(w, probes_for(w, x0, r / 20.0));
    double lo = INFINITY, hi = -INFINITY;
    for (size_t i = 0; i < inner.x.size(); ++i) {
        const double s = two_plane_inverse(gamma, g0, inner.w[i]) - dot(x0 + inner.x[i], nu);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    rep.a1 = std::max(a0, lo);
    rep.b1 = std::min(b0, hi);
    rep.c = 1.0 - (rep.b1 - rep.a1) / (b0 - a0);
    rep.passed = rep.hypothesis_ok && rep.c > 0;
    return rep;
}

TransmissionReport transmission_expand(const std::function<double(const Point&)>& W, int dim, double r,
                                       const TransmissionOptions& opts) {
    if (!(r > 0 && r <= 0.5)) fail(ErrorKind::invalid_input, "transmission expansion needs 0 < r <= 1/2");
    if (!(opts.step > 0)) fail(ErrorKind::invalid_input, "finite-difference step must be positive");
    const Point origin = zero_point(dim);
    const double d = opts.step;
    const int n = dim - 1;
    TransmissionReport rep;

    const ProbeSet unit = make_probes(dim, origin, 1.0, dim == 2 ? 1.0 / 48.0 : 1.0 / 12.0);
    for (const auto& x : unit.offsets) rep.norm = std::max(rep.norm, std::abs(W(x)));

    auto dn_plus = [&](const Point& x) {
        const Point e = Point::unit(dim, n);
        return (-3.0 * W(x) + 4.0 * W(x + e * d) - W(x + e * (2 * d))) / (2 * d);
    };
    auto dn_minus = [&](const Point& x) {
        const Point e = Point::unit(dim, n);
        return (3.0 * W(x) - 4.0 * W(x - e * d) + W(x - e * (2 * d))) / (2 * d);
    };
    // Flux match on a tangential grid of {x_n = 0} inside B_r.
    const int m = 8;
    for (int i = -m; i <= m; ++i)
        for (int j = (dim == 3 ? -m : 0); j <= (dim == 3 ? m : 0); ++j) {
            Point x(dim);
            x[0] = r * i / m;
            if (dim == 3) x[1] = r * j / m;
            if (norm(x) > r) continue;
            rep.flux_mismatch = std::max(rep.flux_mismatch, std::abs(dn_plus(x) - dn_minus(x)));
        }
    if (rep.flux_mismatch > opts.flux_tolerance * std::max(rep.norm, 1e-300))
        fail(ErrorKind::invalid_input,
             fmt::format("normal derivatives jump by {:.3g} across x_n = 0", rep.flux_mismatch));

    rep.value = W(origin);
    rep.p = 0.5 * (dn_plus(origin) + dn_minus(origin));
    rep.tangential_gradient = Point(n);
    for (int i = 0; i < n; ++i) {
        const Point e = Point::unit(dim, i);
        rep.tangential_gradient[i] = (W(e * d) - W(e * -d)) / (2 * d);
    }
    const ProbeSet ball = make_probes(dim, origin, r, dim == 2 ? r / 48.0 : r / 12.0);
    for (const auto& x : ball.offsets) {
        double lin = rep.value + rep.p * x[n];
        for (int i = 0; i < n; ++i) lin += rep.tangential_gradient[i] * x[i];
        rep.residual = std::max(rep.residual, std::abs(W(x) - lin));
    }
    rep.bound = opts.constant * rep.norm * r * r;
    rep.within_bound = rep.residual <= rep.bound * (1.0 + 1e-9) + 1e-12 * rep.norm;
    return rep;
}

}  // namespace freebnd
