// Acceptance run: one PASS/FAIL line per criterion, then a count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "freebnd/blowup.hpp"
#include "freebnd/domains.hpp"
#include "freebnd/error.hpp"
#include "freebnd/flatness.hpp"
#include "freebnd/functionals.hpp"
#include "freebnd/grid.hpp"
#include "freebnd/hodograph.hpp"
#include "freebnd/numerics.hpp"

using namespace freebnd;
constexpr double pi = std::numbers::pi;

namespace {

struct Result {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::shared_ptr<const HarmonicPair> cached_pair(const std::string& name, int n) {
    static std::map<std::pair<std::string, int>, std::shared_ptr<const HarmonicPair>> cache;
    auto& slot = cache[{name, n}];
    if (!slot) slot = std::make_shared<const HarmonicPair>(make_default_pair(make_domain(name), n));
    return slot;
}

Field analytic(std::function<double(const Point&)> f) {
    return analytic_field(2, std::move(f), [](const Point&) { return Point(2); });
}

Field composed(double gamma, double g, std::function<double(const Point&)> inner) {
    return analytic([gamma, g, inner](const Point& x) { return two_plane_eval(gamma, g, inner(x)); });
}

Field re_zk(int k) {
    return analytic_field(
        2, [k](const Point& x) { return std::pow(std::complex<double>(x[0], x[1]), k).real(); },
        [k](const Point& x) {
            const auto d = double(k) * std::pow(std::complex<double>(x[0], x[1]), k - 1);
            return Point{d.real(), -d.imag()};
        });
}

GraphFunction graph_with(double amplitude, double exponent) {
    GraphFunction g;
    g.amplitude = amplitude;
    g.exponent = exponent;
    return g;
}

// ---------------------------------------------------------------------------

Result closed_form_solver() {
    auto disk = make_disk();
    const auto t0 = Clock::now();
    const auto G = greens_function(*disk, Point{0.0, 0.0}, GridSpec::cube(disk->default_box(), 512));
    const double t_solve = seconds_since(t0);
    double worst = 0;
    for (int k = 0; k < 60; ++k) {
        const double r = 0.2 + 0.6 * k / 59.0, t = 0.61 * k;
        const double exact = -std::log(r) / (2 * pi);
        worst = std::max(worst, std::abs(G(Point{r * std::cos(t), r * std::sin(t)}) - exact) / exact);
    }
    const auto hp = cached_pair("halfplane", 512);
    // Harmonic measure of (-1, 1) seen from (0, 1): (1/pi) * 2 atan(1).
    const double w_exact = 2 * std::atan(1.0) / pi;
    const double w = harmonic_measure_of_ball(*hp, 1, Point{0.0, 0.0}, 1.0);
    const double dens = boundary_density(*hp, 1, Point{0.0, 0.0}, {0.1, 0.05}).values.back();
    const bool pass = worst <= 0.02 && t_solve < 30 && std::abs(w / w_exact - 1) <= 0.02 &&
                      std::abs(dens * pi - 1) <= 0.03;
    return {pass, fmt::format("disk G max rel err {:.3f}% on |x| in [0.2,0.8] ({:.1f} s at 512^2); "
                              "omega(-1,1) = {:.5f} vs {:.5f}; density(0) = {:.5f} vs 1/pi = {:.5f}",
                              100 * worst, t_solve, w, w_exact, dens, 1 / pi)};
}

Result acf_monotonicity() {
    std::vector<Field> fields;
    for (int n : {128, 256, 512}) fields.push_back(pair_field(*cached_pair("graph", n), 1.0, 1.0));
    const auto conv = acf_convergence(fields, Point{0.0, 0.0}, {0.4, 0.3, 0.2, 0.15, 0.1});
    const bool halving = conv.slack[1] <= conv.slack[0] / 2;

    const Field xn = analytic_field(2, [](const Point& x) { return x[1]; }, [](const Point&) { return Point{0.0, 1.0}; });
    const double j_exact = acf_J(xn, Point{0.0, 0.0}, 0.5);
    const auto spec = GridSpec::make({-1, -1}, {1, 1}, {128, 128, 0});
    const double j_grid = acf_J(grid_field(ScalarField::sample(spec, [](const Point& x) { return x[1]; })), Point{0.0, 0.0}, 0.5);
    const bool flat = std::abs(j_exact / (pi / 2) - 1) <= 0.03 && std::abs(j_grid / (pi / 2) - 1) <= 0.03;
    return {conv.monotone_within_slack && halving && flat,
            fmt::format("graph |t|^1.5 at 128/256/512: worst decrease {:.2e}/{:.2e}/{:.2e}, slack {:.2e} -> {:.2e} "
                        "(ratio {:.3f}); J(x_n) = {:.5f} analytic, {:.5f} on 128^2 vs pi/2",
                        conv.worst_decrease[0], conv.worst_decrease[1], conv.worst_decrease[2], conv.slack[0],
                        conv.slack[1], conv.slack[1] / conv.slack[0], j_exact, j_grid)};
}

Result almgren_frequency() {
    double worst = 0;
    for (int k = 1; k <= 3; ++k)
        for (double r : {0.1, 0.2, 0.3, 0.4, 0.5})
            worst = std::max(worst, std::abs(almgren_N(re_zk(k), Point{0.0, 0.0}, r) / k - 1));
    const auto v = build_v(cached_pair("halfplane", 512), Point{0.0, 0.0});
    const double n005 = almgren_N(v.view, Point{0.0, 0.0}, 0.05);
    return {worst <= 0.02 && std::abs(n005 - 1) <= 0.1,
            fmt::format("Re z^k, k = 1..3, r in [0.1,0.5]: max |N/k - 1| = {:.2e}; half-plane pair N(0.05) = {:.6f}",
                        worst, n005)};
}

Result almgren_defect_check() {
    const auto v = build_v(cached_pair("graph", 512), Point{0.0, 0.0});
    std::vector<DefectReport> reps;
    for (double R : {0.4, 0.2, 0.1}) reps.push_back(almgren_defect(v, R, 8));
    const auto fit = fit_defects(reps);
    const bool fitted = fit.fitted && fit.exponent >= 0.2;

    // h = 1 on the half-plane pair: defect against the resolution allowance
    // delta = max |N_h - N_{h/2}| on the same radii.
    const auto v256 = build_v(cached_pair("halfplane", 256), Point{0.0, 0.0});
    const auto v512 = build_v(cached_pair("halfplane", 512), Point{0.0, 0.0});
    double delta = 0, defect = 0;
    for (double R : {0.4}) {
        for (double r : {0.4, 0.3, 0.2, 0.1})
            delta = std::max(delta, std::abs(almgren_N(v256.view, Point{0.0, 0.0}, r) - almgren_N(v512.view, Point{0.0, 0.0}, r)));
        defect = std::max(defect, almgren_defect(v512, R, 8).scaled);
    }
    const bool flat_ok = defect <= delta;
    std::string scaled;
    for (const auto& r : reps) scaled += fmt::format("{}{:.2e}", scaled.empty() ? "" : ", ", r.scaled);
    return {fitted && flat_ok,
            fmt::format("graph |t|^1.5 at 512: sup(N')^- R at R = 0.4, 0.2, 0.1 = [{}]; regression {}; "
                        "envelope exponent {:.3f}; half-plane defect {:.2e} vs delta(h) {:.2e}",
                        scaled, fit.fitted ? fmt::format("exponent {:.3f}", fit.exponent) : "undefined (too few negative parts)",
                        fit.envelope_exponent, defect, delta)};
}

Result monneau_suite() {
    // Exact fits: v = c x.nu against the same p.
    const Point nu = normalized(Point{0.3, 1.0});
    const Field lin = analytic_field(2, [nu](const Point& x) { return 0.7 * dot(x, nu); }, [nu](const Point&) { return nu * 0.7; });
    double exact = 0;
    for (double r : {0.1, 0.3, 0.5}) exact = std::max(exact, std::abs(monneau_M(lin, LinearForm::along(nu, 0.7), Point{0.0, 0.0}, r)));

    const auto v = build_v(cached_pair("graph", 512), Point{0.0, 0.0});
    const std::vector<double> R_list{0.4, 0.2, 0.1, 0.05, 0.025};
    const auto fit = fit_tangent(v, R_list.back());
    const auto p = LinearForm::along(fit.nu, fit.c);
    const auto growth = monneau_growth_check(v.view, p, Point{0.0, 0.0}, R_list);
    const double m_min = monneau_M(v.view, p, Point{0.0, 0.0}, R_list.back());
    const double m_max = monneau_M(v.view, p, Point{0.0, 0.0}, R_list.front());
    const bool regression = growth.fitted && growth.exponent >= 0.2;
    return {exact < 1e-12 && regression && m_min <= 0.05 * m_max,
            fmt::format("exact fits max M = {:.1e}; graph |t|^1.5 drops: worst {:.2e} over {} pairs, regression {}; "
                        "M({}) = {:.2e} vs 0.05 M({}) = {:.2e}",
                        exact, growth.worst, growth.drops.size(),
                        growth.fitted ? fmt::format("exponent {:.3f}", growth.exponent) : "undefined (no negative drops)",
                        R_list.back(), m_min, R_list.front(), 0.05 * m_max)};
}

Result nondegeneracy() {
    std::string detail;
    bool pass = true;
    double worst_agree = 0;
    auto check_points = [&](const std::string& name, const std::vector<std::shared_ptr<const HarmonicPair>>& pairs,
                            const std::vector<Point>& pts) {
        double floor = INFINITY;
        int used = 0;
        for (size_t i = 0; i < pts.size(); ++i) {
            const auto& pair = pairs.size() == 1 ? pairs[0] : pairs[i];
            const double r = 10 * pair->spec().h;
            const auto v = build_v(pair, pts[i]);
            const auto f = fit_tangent(v, r);
            floor = std::min({floor, f.theta_plus, f.theta_minus});
            worst_agree = std::max(worst_agree, std::abs(f.theta_minus / pair->density(-1, pts[i]) - 1));
            ++used;
        }
        pass = pass && floor > 0 && used >= 16;
        detail += fmt::format("{} floor {:.4g} ({} pts); ", name, floor, used);
    };

    std::vector<Point> line, circle, graph_pts;
    const auto gpair = cached_pair("graph", 256);
    for (int i = 0; i < 16; ++i) {
        line.push_back(Point{-0.4 + 0.8 * i / 15, 0.0});
        circle.push_back(Point{std::cos(2 * pi * i / 16), std::sin(2 * pi * i / 16)});
        graph_pts.push_back(gpair->domain->boundary_point({-0.4 + 0.8 * i / 15}).x);
    }
    check_points("halfplane", {cached_pair("halfplane", 256)}, line);
    check_points("disk", {cached_pair("disk", 256)}, circle);
    check_points("graph", {gpair}, graph_pts);

    // Lewy cone: mirror-image poles around each point of the |x| = 1/2 section.
    auto lewy = make_domain("lewy3");
    std::vector<Point> lpts;
    std::vector<std::shared_ptr<const HarmonicPair>> lpairs;
    for (int k = 0; k < 24 && lpts.size() < 16; ++k) {
        const double t = 2 * pi * k / 24;
        const Point y = lewy->project(Point{std::cos(t), std::sin(t), 0.2});
        const Point Q = y * (0.5 / norm(y));
        try {
            lpairs.push_back(std::make_shared<const HarmonicPair>(make_image_pair(lewy, Q, 0.08, 0.16, 64)));
            lpts.push_back(Q);
        } catch (const Error&) {
            // Projection left the cone or a pole fell on the wrong side.
        }
    }
    check_points("lewy3", lpairs, lpts);
    pass = pass && worst_agree <= 0.1;

    // Jumps along a curved graph shrink as the sample spacing halves.
    auto samples = [&](int m) {
        std::vector<Point> pts;
        for (int i = 0; i <= m; ++i) pts.push_back(gpair->domain->boundary_point({-0.4 + 0.8 * i / m}).x);
        return pts;
    };
    const auto coarse = density_continuity(*gpair, samples(16), 0.1);
    const auto fine = density_continuity(*gpair, samples(32), 0.1);
    pass = pass && coarse.max_jump >= 1.5 * fine.max_jump;
    detail += fmt::format("cone4 skipped (4D, geometry only); graph jump ratio {:.2f}; flux vs slope worst {:.2f}%",
                          coarse.max_jump / fine.max_jump, 100 * worst_agree);
    return {pass, detail};
}

Result flatness_decay_check() {
    const auto t0 = Clock::now();
    std::string detail;
    bool pass = true;

    // beta decay on C^{1,alpha} graphs.
    for (double e : {1.5, 2.0}) {
        auto d = make_graph_domain(graph_with(0.1, e));
        std::vector<double> rs, bs;
        for (double r : log_spaced(0.04, 0.4, 6)) {
            rs.push_back(r);
            bs.push_back(beta_number(*d, d->default_Q(), r));
        }
        const double s = fit_loglog(rs, bs).slope;
        pass = pass && s > 0;
        detail += fmt::format("beta s = {:.3f} on |t|^{}; ", s, e);
    }

    // Exact solution U(x_2 + a(x_1^2 - x_2^2)) with constant g: hypotheses hold.
    const double a = 0.05;
    const Field bent = composed(1.2, 0.5, [a](const Point& x) { return x[1] + a * (x[0] * x[0] - x[1] * x[1]); });
    HolderData g;
    g.x = {Point{-0.5, 0.0}, Point{0.5, 0.0}};
    g.g = {0.5, 0.5};
    const auto chain = improvement_chain(bent, g, 0.5, 1.0, 0.25, 4);
    int run = 0, best_run = 0;
    for (size_t k = 1; k < chain.steps.size(); ++k) {
        run = chain.steps[k].hypothesis_ok && chain.steps[k].contraction_ok ? run + 1 : 0;
        best_run = std::max(best_run, run);
    }
    pass = pass && best_run >= 3;
    detail += fmt::format("exact solution: {} consecutive contracting steps; ", best_run);

    // Two-plane solution on the half-plane: eps vanishes at every step.
    const Field flat = composed(1.0, 0.5, [](const Point& x) { return x[1]; });
    const auto fchain = improvement_chain(flat, g, 0.5, 1.0, 0.25, 4);
    double flat_eps = 0;
    for (const auto& s : fchain.steps) flat_eps = std::max(flat_eps, s.rel_eps);
    pass = pass && flat_eps < 1e-6;
    detail += fmt::format("two-plane max eps/r {:.1e}; ", flat_eps);

    // Grid pairs at 512: contraction wherever the hypotheses pass.
    struct Case {
        std::string name;
        DomainPtr domain;
        double alpha, rbar;
    };
    const std::vector<Case> cases{{"halfplane", make_halfplane(), 1.0, 0.25},
                                  {"graph |t|^2", make_graph_domain(graph_with(0.2, 2.0)), 1.0, 0.25},
                                  {"graph |t|^1.5", make_graph_domain(graph_with(0.1, 1.5)), 0.5, 1.0 / 16}};
    for (const auto& c : cases) {
        const auto tc = Clock::now();
        const auto pair = make_default_pair(c.domain, 512);
        DecayOptions opts;
        opts.alpha = c.alpha;
        const auto log = improvement_chain(pair, c.domain->default_Q(), 0.8, c.rbar, 4, opts);
        int hyp = 0, bad = 0;
        double last_rel = 0;
        for (size_t k = 1; k < log.steps.size(); ++k) {
            if (!log.steps[k].hypothesis_ok) continue;
            ++hyp;
            if (!log.steps[k].contraction_ok) ++bad;
        }
        last_rel = log.steps.back().rel_eps;
        const double t = seconds_since(tc);
        pass = pass && bad == 0 && t < 300;
        if (c.name == "halfplane") pass = pass && last_rel < 0.02;
        detail += fmt::format("{}: {} steps, {} with hypotheses, {} failed contraction, final eps/r {:.1e} ({:.0f} s); ",
                              c.name, log.steps.size() - 1, hyp, bad, last_rel, t);
    }
    detail += fmt::format("total {:.0f} s", seconds_since(t0));
    return {pass, detail};
}

Result harnack() {
    const double eps = 0.02, g0 = 0.8;
    const Point e2{0.0, 1.0};
    auto H = [](const Point& x) {
        const double d2 = x[0] * x[0] + (x[1] - 1.0) * (x[1] - 1.0);
        return (2.0 / 3.0) * (1.0 - dot(x, x)) / d2;
    };
    // On B_{1/2} the kernel is smallest at -e2/2.
    const double c_exact = H(Point{0.0, -0.5});
    const Field poisson = composed(1.0, g0, [H, eps](const Point& x) { return x[1] + eps * H(x); });
    const auto gap = harnack_gap_check(poisson, g0, 5 * eps * eps, e2, 1.0, eps);

    const double d = 0.01, r = 0.8;
    const Field tilt = composed(1.5, 0.7, [d](const Point& x) { return x[1] + d * x[0]; });
    const auto two = harnack_two_sided(tilt, 0.7, 0.0, e2, 1.5, -d * r, d * r, Point{0.0, 0.0}, r);
    const double shrink = (two.b1 - two.a1) / (two.b0 - two.a0);
    const bool pass = gap.hypothesis_ok && gap.passed && gap.c > 0 && gap.c < 1 &&
                      std::abs(gap.c - c_exact) <= 1e-6 && two.hypothesis_ok && two.passed && shrink <= 1 - gap.c;
    return {pass, fmt::format("gap example c = {:.6f} (kernel minimum {:.6f}); two-sided shrink {:.4f} <= 1 - c = {:.4f}",
                              gap.c, c_exact, shrink, 1 - gap.c)};
}

Result transmission() {
    bool pass = true;
    std::string detail;
    const std::vector<std::pair<std::string, std::function<double(const Point&)>>> fields{
        {"x_n", [](const Point& x) { return x[1]; }},
        {"x_1", [](const Point& x) { return x[0]; }},
        {"x_1^2 - x_2^2", [](const Point& x) { return x[0] * x[0] - x[1] * x[1]; }}};
    for (const auto& [name, W] : fields) {
        double worst = 0;
        for (double r : {0.1, 0.2, 0.4}) {
            const auto rep = transmission_expand(W, 2, r);
            pass = pass && rep.within_bound;
            worst = std::max(worst, rep.residual / (rep.norm * r * r));
        }
        detail += fmt::format("{} max residual/(|W| r^2) {:.3f}; ", name, worst);
    }
    const auto hp = hodograph_transform(*cached_pair("halfplane", 256), Point{0.0, 0.0});
    const double rho = std::min(hp.psi.a, hp.psi.yn(hp.psi.nn - 1));
    const auto W = hodograph_transmission_field(hp, rho);
    TransmissionOptions opts;
    opts.step = hp.psi.dn / rho;
    opts.flux_tolerance = 0.02;
    opts.constant = 2.0;
    double worst = 0;
    for (double r : {0.1, 0.2, 0.4}) {
        const auto rep = transmission_expand(W, 2, r, opts);
        pass = pass && rep.within_bound;
        worst = std::max(worst, rep.residual / (rep.norm * r * r));
    }
    detail += fmt::format("hodograph-derived W max residual/(|W| r^2) {:.3f} (allowed 2)", worst);
    return {pass, detail};
}

Result system_algebra() {
    const auto da = da_suite(2024, 1000);
    const auto conj = conjugacy_suite(2024, 1000);
    const auto co = coercivity_suite(2024, 1000);
    const bool quoted = weights_validate(hodograph_weights()).valid;
    int matched = 0;
    const auto muts = weight_mutations();
    for (const auto& m : muts) {
        const auto r = weights_validate(m.weights);
        std::vector<int> failed;
        for (int k = 0; k < 4; ++k)
            if (!r.conditions[k]) failed.push_back(k + 1);
        if (!r.valid && failed == m.failing) ++matched;
    }
    const bool pass = da.passed == 1000 && conj.passed == 1000 && conj.worst <= 1e-12 && co.passed == 1000 && quoted &&
                      muts.size() == 10 && matched == 10;
    return {pass, fmt::format("seed 2024: DA negative definite {}/1000 (max eig {:.2e}); conjugacy {}/1000 (worst {:.1e}); "
                              "coercive {}/1000; weights {} valid; mutations failing as expected {}/{}",
                              da.passed, da.worst, conj.passed, conj.worst, co.passed, format_weights(hodograph_weights()),
                              matched, muts.size())};
}

Result counterexamples() {
    auto lewy = make_domain("lewy3");
    auto cone = make_domain("cone4");
    auto graph = make_graph_domain(graph_with(0.1, 1.5));
    const std::vector<double> radii{0.1, 0.3, 1.0};
    double lmin = INFINITY, lmax = 0;
    for (double r : radii) {
        const double t = reifenberg_theta(*lewy, zero_point(3), r).theta;
        lmin = std::min(lmin, t), lmax = std::max(lmax, t);
    }
    // No slab of half-width 0.1 r holds the 4D cone near 0, at either end of the decade.
    double slab = INFINITY;
    for (double r : {0.1, 1.0}) {
        const auto samples = flatness_samples(*cone, zero_point(4), r);
        for (const auto& nu : direction_lattice(4, 400)) slab = std::min(slab, slab_width(samples, zero_point(4), nu, r));
    }
    const double g_big = reifenberg_theta(*graph, graph->default_Q(), 0.1).theta;
    const double g_small = reifenberg_theta(*graph, graph->default_Q(), 0.01).theta;
    const double b_big = beta_number(*graph, graph->default_Q(), 0.1);
    const double b_small = beta_number(*graph, graph->default_Q(), 0.01);
    const bool pass = lmin >= 0.1 && lmax / lmin <= 1.05 && slab > 0.1 && g_small < 0.5 * g_big &&
                      b_small < 0.5 * b_big && g_big < lmin;
    return {pass, fmt::format("lewy3 theta(0,r) in [{:.4f}, {:.4f}] for r = 0.1..1; cone4 thinnest slab {:.3f} r; "
                              "graph theta {:.4f} -> {:.4f}, beta {:.4f} -> {:.4f} for r = 0.1 -> 0.01",
                              lmin, lmax, slab, g_big, g_small, b_big, b_small)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Result()>>> criteria{
        {"closed-form solver checks", closed_form_solver},
        {"ACF monotonicity", acf_monotonicity},
        {"Almgren frequency", almgren_frequency},
        {"almost-monotonicity defect", almgren_defect_check},
        {"Monneau suite", monneau_suite},
        {"non-degeneracy and continuity", nondegeneracy},
        {"beta decay and improvement of flatness", flatness_decay_check},
        {"Harnack checks", harnack},
        {"transmission expansion", transmission},
        {"hodograph system algebra", system_algebra},
        {"counterexample discrimination", counterexamples},
    };
    int passed = 0, k = 0;
    for (const auto& [name, fn] : criteria) {
        ++k;
        Result r;
        const auto t0 = Clock::now();
        try {
            r = fn();
        } catch (const std::exception& e) {
            r = {false, fmt::format("error: {}", e.what())};
        }
        passed += r.pass;
        fmt::print("[{}] {:2d} {} ({:.1f} s): {}\n", r.pass ? "PASS" : "FAIL", k, name, seconds_since(t0), r.detail);
        std::fflush(stdout);
    }
    fmt::print("acceptance: {} criteria evaluated, {} passed, {} failed\n", criteria.size(), passed,
               static_cast<int>(criteria.size()) - passed);
    return 0;
}
