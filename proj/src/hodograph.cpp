#include "freebnd/hodograph.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "freebnd/error.hpp"
#include "freebnd/numerics.hpp"

namespace freebnd {

double RectField::operator()(double y1, double yn) const {
    const double s = (y1 + a) / dy, t = yn / dn;
    const double eps = 1e-9;
    if (s < -eps || s > n1 - 1 + eps || t < -eps || t > nn - 1 + eps)
        fail(ErrorKind::invalid_input, fmt::format("({}, {}) lies outside the hodograph patch", y1, yn));
    const int i = std::clamp(static_cast<int>(std::floor(s)), 0, n1 - 2);
    const int j = std::clamp(static_cast<int>(std::floor(t)), 0, nn - 2);
    const double fs = s - i, ft = t - j;
    return (1 - fs) * (1 - ft) * at(i, j) + fs * (1 - ft) * at(i + 1, j) + (1 - fs) * ft * at(i, j + 1) +
           fs * ft * at(i + 1, j + 1);
}

HodographSource hodograph_source(const HarmonicPair& pair) {
    HodographSource src;
    src.domain = pair.domain;
    auto up = std::make_shared<ScalarField>(pair.u_plus);
    auto um = std::make_shared<ScalarField>(pair.u_minus);
    src.u_plus = [up](const Point& x) { return (*up)(x); };
    src.u_minus = [um](const Point& x) { return (*um)(x); };
    src.h = [&pair](const Point& q) { return pair.h(q); };
    src.grid_h = pair.spec().h;
    return src;
}

namespace {

// Samples (tau, u) of one phase along a normal line, increasing in u.
struct Column {
    std::vector<double> tau;
    std::vector<double> u;
};

Column sample_column(const HodographSource& src, const std::function<Point(double)>& at, double tau0, double dir,
                     double depth, double step, const std::function<double(const Point&)>& u, double s) {
    Column c;
    c.tau.push_back(tau0);
    c.u.push_back(0.0);
    // Grid values are trusted only once the interpolation cell is clear of the
    // interface; the first segment is a straight line from the boundary.
    const double skip = src.grid_h > 0 ? 1.5 * src.grid_h : step;
    for (double off = skip; off <= depth * (1 + 1e-12); off += step) {
        const double t = tau0 + dir * off;
        const double v = u(at(t));
        if (!(v > c.u.back()))
            fail(ErrorKind::degenerate, fmt::format("hodograph fold: u is not increasing along the normal at y1 = {}, "
                                                    "offset {}",
                                                    s, off));
        c.tau.push_back(t);
        c.u.push_back(v);
    }
    if (c.tau.size() < 3) fail(ErrorKind::invalid_input, "hodograph patch depth is below the sampling step");
    const double slope = c.u[1] / std::abs(c.tau[1] - c.tau[0]);
    if (!(slope > 1e-8)) fail(ErrorKind::degenerate, fmt::format("degenerate normal derivative at y1 = {}", s));
    return c;
}

// tau with u(tau) = target on the sampled column.
double invert(const Column& c, double target, bool refine, const std::function<double(double)>& u_of_tau) {
    const auto it = std::lower_bound(c.u.begin(), c.u.end(), target);
    if (it == c.u.end()) fail(ErrorKind::internal, "hodograph inversion above the column range");
    size_t k = static_cast<size_t>(it - c.u.begin());
    if (k == 0) return c.tau[0];
    const double u0 = c.u[k - 1], u1 = c.u[k];
    const double t0 = c.tau[k - 1], t1 = c.tau[k];
    if (refine) return find_root([&](double t) { return u_of_tau(t) - target; }, t0, t1, 1e-14);
    return t0 + (t1 - t0) * (target - u0) / (u1 - u0);
}

}  // namespace

HodographPair hodograph_transform(const HodographSource& src, const Point& Q, const HodographPatch& patch) {
    if (!src.domain) fail(ErrorKind::invalid_input, "hodograph source needs a domain");
    const Domain& d = *src.domain;
    if (d.dim() != 2) fail(ErrorKind::unsupported_dimension, "the hodograph transform is implemented in 2D");
    if (std::abs(d.signed_distance(Q)) > 1e-8 * d.diameter())
        fail(ErrorKind::invalid_input, fmt::format("Q = {} is not on the boundary", to_string(Q)));
    if (!(patch.half_width > 0) || !(patch.depth > 0)) fail(ErrorKind::invalid_input, "hodograph patch must be nonempty");

    HodographPair hp;
    hp.Q = Q;
    hp.normal = d.normal_at(Q);
    hp.tangent = Point{hp.normal[1], -hp.normal[0]};

    const double a = patch.half_width;
    double spacing = patch.spacing;
    // Truncation error ~ spacing^2 and interpolation noise ~ h^2/spacing^2
    // balance at spacing ~ sqrt(h).
    if (!(spacing > 0)) spacing = src.grid_h > 0 ? std::sqrt(src.grid_h * patch.noise_scale) : a / 16.0;
    const int n_half = std::max(4, static_cast<int>(std::lround(a / spacing)));
    const double dy = a / n_half;
    const double step = patch.sample_step > 0 ? patch.sample_step : (src.grid_h > 0 ? src.grid_h : patch.depth / 400.0);
    const bool refine = src.grid_h == 0.0;

    const int n1 = 2 * n_half + 1;
    std::vector<Column> plus(n1), minus(n1);
    std::vector<double> tau0(n1);
    double top_plus = INFINITY, top_minus = INFINITY;
    for (int i = 0; i < n1; ++i) {
        const double s = -a + i * dy;
        auto at = [&](double t) { return hp.to_x(s, t); };
        auto sd = [&](double t) { return d.signed_distance(at(t)); };
        const double lim = 0.5 * patch.depth;
        if (!(sd(-lim) < 0 && sd(lim) > 0))
            fail(ErrorKind::invalid_input, fmt::format("boundary leaves the hodograph patch at y1 = {}", s));
        tau0[i] = find_root(sd, -lim, lim, 1e-14);
        plus[i] = sample_column(src, at, tau0[i], 1.0, patch.depth, step, src.u_plus, s);
        minus[i] = sample_column(src, at, tau0[i], -1.0, patch.depth, step, src.u_minus, s);
        top_plus = std::min(top_plus, plus[i].u.back());
        top_minus = std::min(top_minus, minus[i].u.back());
    }

    const double Y = 0.999 * std::min(top_plus, top_minus);
    // Normal node count keeps the x-distance between nodes near dy on the
    // shorter of the two sides.
    double extent = INFINITY;
    for (int i = 0; i < n1; ++i) {
        auto reach = [&](const Column& c) {
            const auto it = std::lower_bound(c.u.begin(), c.u.end(), Y);
            return std::abs(c.tau[static_cast<size_t>(it - c.u.begin())] - c.tau[0]);
        };
        extent = std::min({extent, reach(plus[i]), reach(minus[i])});
    }
    const int nn = std::max(4, static_cast<int>(std::lround(extent / dy))) + 1;
    for (RectField* f : {&hp.psi, &hp.phi}) {
        f->n1 = n1;
        f->nn = nn;
        f->a = a;
        f->dy = dy;
        f->dn = Y / (nn - 1);
        f->v.assign(static_cast<size_t>(n1) * nn, 0.0);
    }
    hp.h_tilde.resize(n1);
    for (int i = 0; i < n1; ++i) {
        const double s = -a + i * dy;
        auto up = [&](double t) { return src.u_plus(hp.to_x(s, t)); };
        auto um = [&](double t) { return src.u_minus(hp.to_x(s, -t)); };
        Column neg = minus[i];
        for (auto& t : neg.tau) t = -t;  // phi = -x_n increases along the minus column
        for (int j = 0; j < nn; ++j) {
            const double yn = hp.psi.yn(j);
            hp.psi.at(i, j) = j == 0 ? tau0[i] : invert(plus[i], yn, refine, up);
            hp.phi.at(i, j) = j == 0 ? -tau0[i] : invert(neg, yn, refine, um);
        }
        hp.h_tilde[i] = src.h(hp.to_x(s, tau0[i]));
    }
    return hp;
}

HodographPair hodograph_transform(const HarmonicPair& pair, const Point& Q, const HodographPatch& patch) {
    return hodograph_transform(hodograph_source(pair), Q, patch);
}

namespace {

void interior_residual(const RectField& F, double& mx, double& l2, int& count) {
    auto A1 = [&](int i, int j) {  // at (i + 1/2, j)
        const double p1 = (F.at(i + 1, j) - F.at(i, j)) / F.dy;
        const double pn = (F.at(i + 1, j + 1) - F.at(i + 1, j - 1) + F.at(i, j + 1) - F.at(i, j - 1)) / (4 * F.dn);
        return -p1 / pn;
    };
    auto A2 = [&](int i, int j) {  // at (i, j + 1/2)
        const double pn = (F.at(i, j + 1) - F.at(i, j)) / F.dn;
        const double p1 = (F.at(i + 1, j + 1) - F.at(i - 1, j + 1) + F.at(i + 1, j) - F.at(i - 1, j)) / (4 * F.dy);
        return 0.5 * (1 + p1 * p1) / (pn * pn);
    };
    double sum = 0.0;
    count = 0;
    mx = 0.0;
    for (int j = 1; j + 1 < F.nn; ++j)
        for (int i = 1; i + 1 < F.n1; ++i) {
            const double r = (A1(i, j) - A1(i - 1, j)) / F.dy + (A2(i, j) - A2(i, j - 1)) / F.dn;
            mx = std::max(mx, std::abs(r));
            sum += r * r;
            ++count;
        }
    l2 = count > 0 ? std::sqrt(sum / count) : 0.0;
}

double min_normal_derivative(const RectField& F) {
    double m = INFINITY;
    for (int j = 0; j + 1 < F.nn; ++j)
        for (int i = 0; i < F.n1; ++i) m = std::min(m, (F.at(i, j + 1) - F.at(i, j)) / F.dn);
    return m;
}

double boundary_normal_derivative(const RectField& F, int i) {
    return (-3 * F.at(i, 0) + 4 * F.at(i, 1) - F.at(i, 2)) / (2 * F.dn);
}

}  // namespace

ResidualReport transformed_residual(const HodographPair& hp) {
    if (hp.psi.nn < 3 || hp.psi.n1 < 3) fail(ErrorKind::invalid_input, "hodograph grid too small for residuals");
    ResidualReport rep;
    rep.min_psi_n = min_normal_derivative(hp.psi);
    rep.min_phi_n = min_normal_derivative(hp.phi);
    if (!(rep.min_psi_n > 0) || !(rep.min_phi_n > 0))
        fail(ErrorKind::degenerate, "psi_n or phi_n is not positive on the patch");
    int count = 0;
    interior_residual(hp.psi, rep.psi_max, rep.psi_l2, count);
    interior_residual(hp.phi, rep.phi_max, rep.phi_l2, count);
    rep.interior_nodes = count;
    for (int i = 0; i < hp.psi.n1; ++i) {
        rep.boundary_sum = std::max(rep.boundary_sum, std::abs(hp.phi.at(i, 0) + hp.psi.at(i, 0)));
        const double pn = boundary_normal_derivative(hp.psi, i), fn = boundary_normal_derivative(hp.phi, i);
        rep.boundary_flux = std::max(rep.boundary_flux, std::abs(hp.h_tilde[i] / pn - 1.0 / fn));
    }
    return rep;
}

std::function<double(const Point&)> hodograph_transmission_field(const HodographPair& hp, double rho) {
    const double top = hp.psi.yn(hp.psi.nn - 1);
    if (!(rho > 0) || rho > hp.psi.a || rho > top)
        fail(ErrorKind::invalid_input, fmt::format("rho = {} exceeds the hodograph patch", rho));
    return [hp, rho](const Point& y) {
        if (y[1] >= 0) return hp.psi(rho * y[0], rho * y[1]) / rho;
        return -hp.phi(rho * y[0], -rho * y[1]) / rho;
    };
}

Eigen::MatrixXd da_matrix(const Point& p) {
    const int n = p.dim;
    if (n < 2) fail(ErrorKind::invalid_input, "da_matrix needs dimension at least 2");
    const double pn = p[n - 1];
    if (!(pn > 0)) fail(ErrorKind::invalid_input, fmt::format("da_matrix needs p_n > 0, got {}", pn));
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    double sq = 0.0;
    for (int i = 0; i < n - 1; ++i) {
        m(i, i) = -1.0 / pn;
        m(i, n - 1) = m(n - 1, i) = p[i] / (pn * pn);
        sq += p[i] * p[i];
    }
    m(n - 1, n - 1) = -(1.0 + sq) / (pn * pn * pn);
    return m;
}

namespace {

using cd = std::complex<double>;

// Roots of a z^2 + b z + c from the discriminant.
std::array<cd, 2> quadratic_roots(cd a, cd b, cd c) {
    if (std::abs(a) < 1e-300) fail(ErrorKind::invalid_input, "degenerate leading coefficient");
    const cd disc = std::sqrt(b * b - 4.0 * a * c);
    return {(-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)};
}

std::array<cd, 2> symbol_roots(const Point& p, const Point& xi, const Point& eta) {
    const Eigen::MatrixXd m = da_matrix(p);
    const Eigen::Vector2d x(xi[0], xi[1]), e(eta[0], eta[1]);
    const double a = e.dot(m * e), b = 2.0 * x.dot(m * e), c = x.dot(m * x);
    if (std::abs(a) < 1e-300) fail(ErrorKind::invalid_input, "degenerate leading coefficient");
    // Real coefficients: a negative discriminant gives an exact conjugate pair.
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0) {
        const double re = -b / (2.0 * a), im = std::sqrt(-disc) / (2.0 * std::abs(a));
        return {cd(re, im), cd(re, -im)};
    }
    const double s = std::sqrt(disc);
    return {cd((-b + s) / (2.0 * a), 0.0), cd((-b - s) / (2.0 * a), 0.0)};
}

}  // namespace

EllipticityReport ellipticity_check_n2(const Point& p_psi, const Point& p_phi, const Point& xi, const Point& eta) {
    if (p_psi.dim != 2 || p_phi.dim != 2 || xi.dim != 2 || eta.dim != 2)
        fail(ErrorKind::unsupported_dimension, "ellipticity_check_n2 needs 2D vectors");
    const double det = xi[0] * eta[1] - xi[1] * eta[0];
    if (std::abs(det) <= 1e-12 * norm(xi) * norm(eta))
        fail(ErrorKind::invalid_input, "xi and eta must be linearly independent");
    EllipticityReport rep;
    rep.roots_psi = symbol_roots(p_psi, xi, eta);
    rep.roots_phi = symbol_roots(p_phi, xi, eta);
    for (const auto* roots : {&rep.roots_psi, &rep.roots_phi}) {
        for (const auto& z : *roots) {
            if (z.imag() > 0) ++rep.upper;
            if (z.imag() < 0) ++rep.lower;
        }
        const double scale = std::max(std::abs((*roots)[0]), 1e-300);
        rep.conjugacy_error = std::max(rep.conjugacy_error, std::abs((*roots)[0] - std::conj((*roots)[1])) / scale);
    }
    rep.elliptic = rep.upper == 2 && rep.lower == 2;
    return rep;
}

namespace {

// Root with negative real part of
// |xi'|^2/p_n + 2i (p'.xi') x / p_n^2 - (1 + |p'|^2) x^2 / p_n^3 = 0.
cd decaying_root(const Point& p, const Point& xi_prime) {
    const int n = p.dim;
    if (xi_prime.dim != n - 1) fail(ErrorKind::invalid_input, "xi' must have dimension n - 1");
    const double pn = p[n - 1];
    if (!(pn > 0)) fail(ErrorKind::invalid_input, fmt::format("coercivity needs p_n > 0, got {}", pn));
    double pxi = 0.0, pp = 0.0, xx = 0.0;
    for (int i = 0; i < n - 1; ++i) {
        pxi += p[i] * xi_prime[i];
        pp += p[i] * p[i];
        xx += xi_prime[i] * xi_prime[i];
    }
    if (!(xx > 0)) fail(ErrorKind::invalid_input, "xi' must be nonzero");
    const auto roots = quadratic_roots(cd(-(1.0 + pp) / (pn * pn * pn), 0.0), cd(0.0, 2.0 * pxi / (pn * pn)),
                                       cd(xx / pn, 0.0));
    for (const auto& r : roots)
        if (r.real() < 0) return r;
    fail(ErrorKind::internal, "characteristic quadratic has no root with negative real part");
}

}  // namespace

CoercivityReport coercivity_check(double h_value, const Point& p_psi, const Point& p_phi, const Point& xi_prime) {
    if (!(h_value > 0)) fail(ErrorKind::invalid_input, "coercivity needs h > 0");
    CoercivityReport rep;
    rep.r1 = decaying_root(p_psi, xi_prime);
    rep.r2 = decaying_root(p_phi, xi_prime);
    rep.combination = h_value * rep.r2 + rep.r1;
    rep.coercive = rep.combination.real() < 0;
    return rep;
}

WeightAssignment parse_weights(const std::string& text) {
    std::vector<int> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            v.push_back(std::stoi(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            fail(ErrorKind::invalid_input, fmt::format("weight '{}' is not an integer", item));
        }
    }
    if (v.size() != 11)
        fail(ErrorKind::invalid_input, fmt::format("expected 11 weights t1,t2,s1,s2,m1,m2,h1,h2,p1,p2,h0; got {}", v.size()));
    WeightAssignment w;
    w.t = {v[0], v[1]};
    w.s = {v[2], v[3]};
    w.m = {v[4], v[5]};
    w.h = {v[6], v[7]};
    w.p = {v[8], v[9]};
    w.h0 = v[10];
    return w;
}

std::string format_weights(const WeightAssignment& w) {
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{}", w.t[0], w.t[1], w.s[0], w.s[1], w.m[0], w.m[1], w.h[0], w.h[1],
                       w.p[0], w.p[1], w.h0);
}

WeightAssignment hodograph_weights() { return parse_weights("2,2,0,0,1,1,2,1,0,0,0"); }

WeightReport weights_validate(const WeightAssignment& w) {
    int st = INT32_MAX, tsm = INT32_MAX, th = INT32_MAX, hsm = INT32_MAX, hhp = INT32_MAX;
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
            st = std::min(st, w.s[j] + w.t[k]);
            tsm = std::min(tsm, w.t[k] + w.s[j] - w.m[j]);
        }
    for (int k = 0; k < 2; ++k) th = std::min(th, w.t[k] + w.h0);
    for (int j = 0; j < 2; ++j) hsm = std::min(hsm, w.h0 - w.s[j] + w.m[j]);
    for (int r = 0; r < 2; ++r) hhp = std::min(hhp, w.h0 + w.h[r] + w.p[r]);
    const int m_min = std::min(w.m[0], w.m[1]), s_max = std::max(w.s[0], w.s[1]), p_min = std::min(w.p[0], w.p[1]);

    WeightReport rep;
    rep.conditions[0] = st >= 1 && tsm >= 0;
    rep.conditions[1] = m_min >= 0 && s_max == 0;
    rep.conditions[2] = p_min >= 0 && hhp >= 1;
    rep.conditions[3] = th >= 0 && hsm >= 0;
    if (!rep.conditions[0])
        rep.failures.push_back(fmt::format("1: min s_j + t_k = {} (need >= 1), min t_k + s_j - m_j = {} (need >= 0)", st, tsm));
    if (!rep.conditions[1])
        rep.failures.push_back(fmt::format("2: min m_j = {} (need >= 0), max s_j = {} (need 0)", m_min, s_max));
    if (!rep.conditions[2])
        rep.failures.push_back(fmt::format("3: min p_r = {} (need >= 0), min h0 + h_r + p_r = {} (need >= 1)", p_min, hhp));
    if (!rep.conditions[3])
        rep.failures.push_back(fmt::format("4: min t_k + h0 = {} (need >= 0), min h0 - s_j + m_j = {} (need >= 0)", th, hsm));
    rep.valid = rep.failures.empty();
    return rep;
}

std::vector<WeightMutation> weight_mutations() {
    auto base = hodograph_weights();
    std::vector<WeightMutation> out;
    auto add = [&](std::string label, auto edit, std::vector<int> failing) {
        WeightAssignment w = base;
        edit(w);
        out.push_back({std::move(label), w, std::move(failing)});
    };
    add("t1 = 0", [](auto& w) { w.t[0] = 0; }, {1});
    add("m1 = 3", [](auto& w) { w.m[0] = 3; }, {1});
    add("t1 = -1, h0 = 1", [](auto& w) { w.t[0] = -1; w.h0 = 1; }, {1});
    add("s1 = 1", [](auto& w) { w.s[0] = 1; }, {2});
    add("m1 = -1, h0 = 1", [](auto& w) { w.m[0] = -1; w.h0 = 1; }, {2});
    add("s2 = 2, h0 = 1", [](auto& w) { w.s[1] = 2; w.h0 = 1; }, {2});
    add("p1 = -1", [](auto& w) { w.p[0] = -1; }, {3});
    add("h2 = 0", [](auto& w) { w.h[1] = 0; }, {3});
    add("h0 = -1", [](auto& w) { w.h0 = -1; }, {3});
    add("h0 = -2", [](auto& w) { w.h0 = -2; }, {3, 4});
    return out;
}

namespace {

Point random_gradient(std::mt19937_64& rng, int dim) {
    std::uniform_real_distribution<double> pn(0.1, 10.0), unit(-1.0, 1.0), rad(0.0, 10.0);
    Point p(dim);
    Point dir(dim - 1);
    do {
        for (int i = 0; i < dim - 1; ++i) dir[i] = unit(rng);
    } while (norm(dir) > 1.0 || norm(dir) < 1e-3);
    dir = normalized(dir) * rad(rng);
    for (int i = 0; i < dim - 1; ++i) p[i] = dir[i];
    p[dim - 1] = pn(rng);
    return p;
}

nlohmann::json point_json(const Point& p) {
    auto a = nlohmann::json::array();
    for (int i = 0; i < p.dim; ++i) a.push_back(p[i]);
    return a;
}

nlohmann::json complex_json(const cd& z) { return nlohmann::json::array({z.real(), z.imag()}); }

}  // namespace

SuiteReport da_suite(std::uint64_t seed, int draws, int dim) {
    SuiteReport rep;
    rep.kind = "da_negative_definite";
    rep.seed = seed;
    rep.draws = draws;
    rep.worst = -INFINITY;
    std::mt19937_64 rng(seed);
    for (int k = 0; k < draws; ++k) {
        const Point p = random_gradient(rng, dim);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(da_matrix(p));
        const double top = es.eigenvalues().maxCoeff();
        rep.worst = std::max(rep.worst, top);
        nlohmann::json rec{{"p", point_json(p)}, {"max_eigenvalue", top}, {"negative_definite", top < 0}};
        if (top < 0)
            ++rep.passed;
        else
            rep.failures.push_back(rec);
        if (k < 3) rep.samples.push_back(rec);
    }
    return rep;
}

SuiteReport conjugacy_suite(std::uint64_t seed, int draws) {
    SuiteReport rep;
    rep.kind = "n2_root_conjugacy";
    rep.seed = seed;
    rep.draws = draws;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int k = 0; k < draws; ++k) {
        const Point pp = random_gradient(rng, 2), pf = random_gradient(rng, 2);
        Point xi(2), eta(2);
        do {
            xi = Point{unit(rng), unit(rng)};
            eta = Point{unit(rng), unit(rng)};
        } while (std::abs(xi[0] * eta[1] - xi[1] * eta[0]) < 0.05);
        const auto r = ellipticity_check_n2(pp, pf, xi, eta);
        rep.worst = std::max(rep.worst, r.conjugacy_error);
        const bool ok = r.elliptic && r.conjugacy_error <= 1e-12;
        nlohmann::json rec{{"p_psi", point_json(pp)}, {"p_phi", point_json(pf)}, {"xi", point_json(xi)},
                           {"eta", point_json(eta)}, {"report", to_json(r)}};
        if (ok)
            ++rep.passed;
        else
            rep.failures.push_back(rec);
        if (k < 3) rep.samples.push_back(rec);
    }
    return rep;
}

SuiteReport coercivity_suite(std::uint64_t seed, int draws, int dim) {
    SuiteReport rep;
    rep.kind = "coercivity";
    rep.seed = seed;
    rep.draws = draws;
    rep.worst = -INFINITY;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), logh(-2.0, 2.0);
    for (int k = 0; k < draws; ++k) {
        const double h = std::pow(10.0, logh(rng));
        const Point pp = random_gradient(rng, dim), pf = random_gradient(rng, dim);
        Point xi(dim - 1);
        do {
            for (int i = 0; i < dim - 1; ++i) xi[i] = unit(rng);
        } while (norm(xi) < 1e-3);
        const auto r = coercivity_check(h, pp, pf, xi);
        rep.worst = std::max(rep.worst, r.combination.real());
        nlohmann::json rec{{"h", h}, {"p_psi", point_json(pp)}, {"p_phi", point_json(pf)}, {"xi_prime", point_json(xi)},
                           {"report", to_json(r)}};
        if (r.coercive)
            ++rep.passed;
        else
            rep.failures.push_back(rec);
        if (k < 3) rep.samples.push_back(rec);
    }
    return rep;
}

nlohmann::json to_json(const EllipticityReport& r) {
    return {{"roots_psi", {complex_json(r.roots_psi[0]), complex_json(r.roots_psi[1])}},
            {"roots_phi", {complex_json(r.roots_phi[0]), complex_json(r.roots_phi[1])}},
            {"upper", r.upper},
            {"lower", r.lower},
            {"conjugacy_error", r.conjugacy_error},
            {"elliptic", r.elliptic}};
}

nlohmann::json to_json(const CoercivityReport& r) {
    return {{"r1", complex_json(r.r1)},
            {"r2", complex_json(r.r2)},
            {"combination", complex_json(r.combination)},
            {"coercive", r.coercive}};
}

nlohmann::json to_json(const WeightReport& r) {
    return {{"conditions", r.conditions}, {"valid", r.valid}, {"failures", r.failures}};
}

nlohmann::json to_json(const SuiteReport& r) {
    return {{"kind", r.kind},         {"seed", r.seed},         {"draws", r.draws},    {"passed", r.passed},
            {"worst", r.worst},       {"failures", r.failures}, {"samples", r.samples}};
}

nlohmann::json to_json(const ResidualReport& r) {
    return {{"psi_max", r.psi_max},
            {"psi_l2", r.psi_l2},
            {"phi_max", r.phi_max},
            {"phi_l2", r.phi_l2},
            {"boundary_sum", r.boundary_sum},
            {"boundary_flux", r.boundary_flux},
            {"min_psi_n", r.min_psi_n},
            {"min_phi_n", r.min_phi_n},
            {"interior_nodes", r.interior_nodes}};
}

}  // namespace freebnd
