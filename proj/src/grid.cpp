#include "freebnd/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <fmt/format.h>

#include "freebnd/error.hpp"
#include "freebnd/numerics.hpp"

namespace freebnd {

// ------------------------------------------------------------------ GridSpec

GridSpec GridSpec::make(const Point& box_min, const Point& box_max, const Index3& n_cells) {
    GridSpec g;
    g.dim = box_min.dim;
    g.box_min = box_min;
    g.n_cells = n_cells;
    if (g.dim < 2 || g.dim > 3) fail(ErrorKind::unsupported_dimension, fmt::format("grids support dimension 2 or 3, got {}", g.dim));
    for (int a = g.dim; a < 3; ++a) g.n_cells[a] = 0;
    g.h = (box_max[0] - box_min[0]) / n_cells[0];
    for (int a = 1; a < g.dim; ++a) {
        const double ha = (box_max[a] - box_min[a]) / n_cells[a];
        if (std::abs(ha - g.h) > 1e-12 * std::abs(g.h))
            fail(ErrorKind::invalid_input, "grid spacing must be equal on all axes");
    }
    g.validate();
    return g;
}

GridSpec GridSpec::cube(const Box& box, int n_cells) {
    const int n = box.center.dim;
    if (n < 2 || n > 3) fail(ErrorKind::unsupported_dimension, fmt::format("grids support dimension 2 or 3, got {}", n));
    Point lo = box.center, hi = box.center;
    for (int a = 0; a < n; ++a) lo[a] -= box.half_width, hi[a] += box.half_width;
    return make(lo, hi, {n_cells, n_cells, n == 3 ? n_cells : 0});
}

void GridSpec::validate() const {
    if (dim < 2 || dim > 3) fail(ErrorKind::unsupported_dimension, fmt::format("grids support dimension 2 or 3, got {}", dim));
    for (int a = 0; a < dim; ++a)
        if (n_cells[a] < 8) fail(ErrorKind::invalid_input, fmt::format("n_cells must be >= 8 on every axis (axis {} has {})", a, n_cells[a]));
    if (!(h > 0) || !std::isfinite(h)) fail(ErrorKind::invalid_input, "grid spacing must be positive");
}

Point GridSpec::box_max() const {
    Point p = box_min;
    for (int a = 0; a < dim; ++a) p[a] += h * n_cells[a];
    return p;
}

size_t GridSpec::node_count() const {
    size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<size_t>(n_cells[a] + 1);
    return n;
}

Index3 GridSpec::ijk(size_t idx) const {
    Index3 r{0, 0, 0};
    r[0] = static_cast<int>(idx % nodes(0));
    idx /= nodes(0);
    r[1] = static_cast<int>(idx % nodes(1));
    r[2] = static_cast<int>(idx / nodes(1));
    return r;
}

Point GridSpec::node(const Index3& ijk) const {
    Point p = box_min;
    for (int a = 0; a < dim; ++a) p[a] += h * ijk[a];
    return p;
}

bool GridSpec::on_box_edge(const Index3& ijk) const {
    for (int a = 0; a < dim; ++a)
        if (ijk[a] == 0 || ijk[a] == n_cells[a]) return true;
    return false;
}

bool GridSpec::contains(const Point& x, double margin) const {
    for (int a = 0; a < dim; ++a) {
        if (x[a] < box_min[a] + margin - 1e-12 * h) return false;
        if (x[a] > box_min[a] + h * n_cells[a] - margin + 1e-12 * h) return false;
    }
    return true;
}

GridSpec GridSpec::refined(int factor) const {
    GridSpec g = *this;
    for (int a = 0; a < dim; ++a) g.n_cells[a] *= factor;
    g.h /= factor;
    return g;
}

// --------------------------------------------------------------- ScalarField

ScalarField::ScalarField(GridSpec spec, std::vector<double> values) : spec_(spec), values_(std::move(values)) {
    if (values_.size() != spec_.node_count()) fail(ErrorKind::invalid_input, "field size does not match grid");
    for (double v : values_)
        if (!std::isfinite(v)) fail(ErrorKind::invalid_input, "field values must be finite");
}

ScalarField ScalarField::sample(const GridSpec& spec, const std::function<double(const Point&)>& fn) {
    std::vector<double> v(spec.node_count());
    for (size_t i = 0; i < v.size(); ++i) v[i] = fn(spec.node(spec.ijk(i)));
    return ScalarField(spec, std::move(v));
}

double ScalarField::operator()(const Point& x) const {
    const auto& s = spec_;
    Index3 base{0, 0, 0};
    std::array<double, 3> frac{0, 0, 0};
    for (int a = 0; a < s.dim; ++a) {
        const double u = (x[a] - s.box_min[a]) / s.h;
        if (u < -1e-9 || u > s.n_cells[a] + 1e-9)
            fail(ErrorKind::invalid_input, fmt::format("point {} lies outside the grid box", to_string(x)));
        int i = static_cast<int>(std::floor(u));
        i = std::clamp(i, 0, s.n_cells[a] - 1);
        base[a] = i;
        frac[a] = std::clamp(u - i, 0.0, 1.0);
    }
    double acc = 0.0;
    const int corners = 1 << s.dim;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        Index3 k = base;
        for (int a = 0; a < s.dim; ++a) {
            const int bit = (c >> a) & 1;
            k[a] += bit;
            w *= bit ? frac[a] : 1.0 - frac[a];
        }
        if (w != 0.0) acc += w * values_[s.index(k)];
    }
    return acc;
}

double ScalarField::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    std::vector<double> v(a.values().size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
    return ScalarField(a.spec(), std::move(v));
}

ScalarField scaled(const ScalarField& a, double s) {
    std::vector<double> v(a.values());
    for (double& x : v) x *= s;
    return ScalarField(a.spec(), std::move(v));
}

// -------------------------------------------------------------------- solver

namespace {

enum class NodeKind : unsigned char { unknown, box, outside };

// Symmetric ghost-value discretization: a neighbour across the interface is
// replaced by the linear extrapolation through the interface value, which
// keeps the matrix symmetric positive definite.
ScalarField solve_region(const Domain& domain, int side, const GridSpec& spec,
                         const std::function<double(const Point&)>& interface_value,
                         const std::function<double(const Point&)>& box_value,
                         std::vector<NodeKind>* kinds_out, SolveReport* report, const SolveOptions& opts) {
    if (domain.dim() != spec.dim)
        fail(ErrorKind::unsupported_dimension,
             fmt::format("domain '{}' has dimension {}, grid has {}", domain.label(), domain.dim(), spec.dim));
    spec.validate();
    const size_t N = spec.node_count();
    std::vector<double> level(N);
    std::vector<NodeKind> kind(N);
    std::vector<long> unk(N, -1);
    long n_unknown = 0;
    for (size_t i = 0; i < N; ++i) {
        const auto ijk = spec.ijk(i);
        level[i] = domain.signed_distance(spec.node(ijk));
        if (side * level[i] > 0) {
            if (spec.on_box_edge(ijk)) kind[i] = NodeKind::box;
            else {
                kind[i] = NodeKind::unknown;
                unk[i] = n_unknown++;
            }
        } else {
            kind[i] = NodeKind::outside;
        }
    }
    if (n_unknown == 0) fail(ErrorKind::degenerate, fmt::format("no interior nodes on side {} of '{}'", side, domain.label()));

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n_unknown) * (2 * spec.dim + 1));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknown);
    constexpr double theta_min = 1e-3;
    for (size_t i = 0; i < N; ++i) {
        if (kind[i] != NodeKind::unknown) continue;
        const auto ijk = spec.ijk(i);
        const Point xi = spec.node(ijk);
        const long row = unk[i];
        double diag = 0.0;
        for (int a = 0; a < spec.dim; ++a) {
            for (int dir : {-1, 1}) {
                Index3 nb = ijk;
                nb[a] += dir;
                const size_t j = spec.index(nb);
                if (kind[j] == NodeKind::unknown) {
                    diag += 1.0;
                    trip.emplace_back(row, unk[j], -1.0);
                } else if (kind[j] == NodeKind::box) {
                    diag += 1.0;
                    rhs[row] += box_value(spec.node(nb));
                } else {
                    const Point xj = spec.node(nb);
                    double theta = 1.0;
                    if (level[j] != 0.0) {
                        theta = find_root([&](double t) { return domain.signed_distance(xi + (xj - xi) * t); }, 0.0,
                                          1.0, 1e-12);
                    }
                    const Point xg = xi + (xj - xi) * theta;
                    const double te = std::max(theta, theta_min);
                    diag += 1.0 / te;
                    rhs[row] += interface_value(xg) / te;
                }
            }
        }
        trip.emplace_back(row, row, diag);
    }
    Eigen::SparseMatrix<double> A(n_unknown, n_unknown);
    A.setFromTriplets(trip.begin(), trip.end());

    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>>
        cg;
    cg.setTolerance(opts.tolerance);
    cg.setMaxIterations(opts.max_iterations);
    cg.compute(A);
    Eigen::VectorXd sol;
    SolveReport rep;
    rep.unknowns = static_cast<size_t>(n_unknown);
    bool ok = false;
    if (cg.info() == Eigen::Success) {
        sol = cg.solve(rhs);
        rep.iterations = cg.iterations();
        rep.relative_residual = cg.error();
        ok = cg.info() == Eigen::Success && rep.relative_residual <= opts.tolerance;
    }
    if (!ok) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
        if (ldlt.info() != Eigen::Success)
            fail(ErrorKind::not_converged,
                 fmt::format("linear solve failed: CG residual {:.3e} after {} iterations, direct factorization failed",
                             rep.relative_residual, rep.iterations));
        sol = ldlt.solve(rhs);
        rep.direct_fallback = true;
        const double bn = rhs.norm();
        rep.relative_residual = bn > 0 ? (A * sol - rhs).norm() / bn : 0.0;
    }
    if (report) *report = rep;

    std::vector<double> values(N, 0.0);
    for (size_t i = 0; i < N; ++i) {
        if (kind[i] == NodeKind::unknown) values[i] = sol[unk[i]];
        else if (kind[i] == NodeKind::box) values[i] = box_value(spec.node(spec.ijk(i)));
    }
    if (kinds_out) *kinds_out = std::move(kind);
    return ScalarField(spec, std::move(values));
}

}  // namespace

ScalarField solve_dirichlet(const Domain& domain, const std::function<double(const Point&)>& g, const GridSpec& spec,
                            int side, SolveReport* report, const SolveOptions& opts) {
    if (side != 1 && side != -1) fail(ErrorKind::invalid_input, "side must be +1 or -1");
    return solve_region(domain, side, spec, g, g, nullptr, report, opts);
}

double fundamental_solution(int dim, double r) {
    if (dim == 2) return -std::log(r) / (2.0 * std::numbers::pi);
    return 1.0 / (4.0 * std::numbers::pi * r);
}

ScalarField greens_function(const Domain& domain, const Point& pole, const GridSpec& spec, SolveReport* report) {
    spec.validate();
    if (domain.dim() != spec.dim) fail(ErrorKind::unsupported_dimension, "domain and grid dimensions differ");
    const int side = domain.side_of(pole);
    if (side == 0) fail(ErrorKind::invalid_input, "pole lies on the boundary");
    const double dist = distance(pole, domain.project(pole));
    if (dist < 4.0 * spec.h)
        fail(ErrorKind::invalid_input,
             fmt::format("pole {} is {:.3g} from the boundary, closer than 4h = {:.3g}", to_string(pole), dist, 4.0 * spec.h));
    if (!spec.contains(pole, 4.0 * spec.h)) fail(ErrorKind::invalid_input, "pole must lie at least 4h inside the grid box");

    const int n = spec.dim;
    const double h = spec.h;
    // Singular part subtracted analytically; the remainder is smooth.
    auto phi = [&](const Point& x) { return fundamental_solution(n, std::max(distance(x, pole), 0.5 * h)); };
    auto far = [&](const Point& x) { return domain.exact_green(side, pole, x).value_or(0.0); };
    std::vector<NodeKind> kinds;
    ScalarField w = solve_region(
        domain, side, spec, [&](const Point& x) { return -phi(x); }, [&](const Point& x) { return far(x) - phi(x); },
        &kinds, report, {});

    std::vector<double> values(spec.node_count(), 0.0);
    for (size_t i = 0; i < values.size(); ++i) {
        const Point x = spec.node(spec.ijk(i));
        if (kinds[i] == NodeKind::unknown) values[i] = std::max(0.0, phi(x) + w.values()[i]);
        else if (kinds[i] == NodeKind::box) values[i] = std::max(0.0, far(x));
    }
    return ScalarField(spec, std::move(values));
}

double flux_density(const Domain& domain, const ScalarField& G, int side, const Point& q) {
    const double delta = 2.0 * G.spec().h;
    const Point n = domain.normal_at(q) * static_cast<double>(side);
    const Point a = q + n * delta, b = q + n * (2.0 * delta);
    if (!G.spec().contains(b)) fail(ErrorKind::invalid_input, fmt::format("flux stencil at {} leaves the grid box", to_string(q)));
    return (4.0 * G(a) - G(b)) / (2.0 * delta);
}

// -------------------------------------------------------------- HarmonicPair

double HarmonicPair::density(int side, const Point& q) const { return flux_density(*domain, field(side), side, q); }

double HarmonicPair::h(const Point& q) const {
    const double dp = density(1, q), dm = density(-1, q);
    if (!(dp > 0) || !(dm > 0))
        fail(ErrorKind::degenerate, fmt::format("nonpositive boundary density at {} ({:.3g}, {:.3g})", to_string(q), dp, dm));
    return dm / dp;
}

HarmonicPair make_harmonic_pair(DomainPtr domain, const GridSpec& spec, const Point& pole_plus, const Point& pole_minus) {
    if (domain->side_of(pole_plus) != 1) fail(ErrorKind::invalid_input, "pole_plus must lie in the plus phase");
    if (domain->side_of(pole_minus) != -1) fail(ErrorKind::invalid_input, "pole_minus must lie in the minus phase");
    HarmonicPair p;
    p.domain = domain;
    p.pole_plus = pole_plus;
    p.pole_minus = pole_minus;
    p.u_plus = greens_function(*domain, pole_plus, spec);
    p.u_minus = greens_function(*domain, pole_minus, spec);
    return p;
}

HarmonicPair make_default_pair(DomainPtr domain, int n_cells) {
    const auto [pp, pm] = domain->default_poles();
    return make_harmonic_pair(domain, GridSpec::cube(domain->default_box(), n_cells), pp, pm);
}

HarmonicPair make_image_pair(DomainPtr domain, const Point& q0, double a, double half_width, int n_cells) {
    if (!(a > 0) || !(half_width > a)) fail(ErrorKind::invalid_input, "image pair needs 0 < a < half_width");
    const Point n = domain->normal_at(q0);
    return make_harmonic_pair(domain, GridSpec::cube(Box{q0, half_width}, n_cells), q0 + n * a, q0 - n * a);
}

double harmonic_measure_of_ball(const HarmonicPair& pair, int side, const Point& Q, double r) {
    const double h = pair.spec().h;
    if (r < 4.0 * h) fail(ErrorKind::under_resolved, fmt::format("radius {:.4g} is below 4h = {:.4g}", r, 4.0 * h));
    const Point& pole = side > 0 ? pair.pole_plus : pair.pole_minus;
    if (distance(pole, Q) < r) fail(ErrorKind::invalid_input, "ball contains the pole");
    const auto samples = pair.domain->boundary_in_ball(Q, r, 0.5 * h);
    double acc = 0.0;
    for (const auto& s : samples) acc += s.weight * pair.density(side, s.x);
    return std::max(acc, 0.0);
}

double total_flux(const HarmonicPair& pair, int side) {
    const auto& G = pair.field(side);
    const auto& spec = G.spec();
    const Box box{spec.box_min + (spec.box_max() - spec.box_min) * 0.5, 0.5 * (spec.box_max()[0] - spec.box_min[0])};
    const double h = spec.h;
    // Interface part: the boundary inside the box, away from the box edges.
    const double reach = box.half_width * std::sqrt(static_cast<double>(spec.dim));
    double acc = 0.0;
    for (const auto& s : pair.domain->boundary_in_ball(box.center, reach, 0.5 * h)) {
        if (!spec.contains(s.x, 4.0 * h)) continue;
        acc += s.weight * pair.density(side, s.x);
    }
    // Box edges: inward one-sided derivative at edge nodes (trapezoid rule in
    // the face), only where the field lives on this side.
    const int n = spec.dim;
    for (int a = 0; a < n; ++a) {
        for (int end : {0, 1}) {
            const int inward = end == 0 ? 1 : -1;
            Index3 lo{0, 0, 0}, hi{spec.n_cells[0], spec.n_cells[1], n == 3 ? spec.n_cells[2] : 0};
            lo[a] = hi[a] = end == 0 ? 0 : spec.n_cells[a];
            for (int k = lo[2]; k <= hi[2]; ++k)
                for (int j = lo[1]; j <= hi[1]; ++j)
                    for (int i = lo[0]; i <= hi[0]; ++i) {
                        Index3 p{i, j, k};
                        const Point x = spec.node(p);
                        if (side * pair.domain->signed_distance(x) <= 0) continue;
                        Index3 p1 = p, p2 = p;
                        p1[a] += inward;
                        p2[a] += 2 * inward;
                        const double d = (-3.0 * G.at(p) + 4.0 * G.at(p1) - G.at(p2)) / (2.0 * h);
                        double w = 1.0;
                        for (int b = 0; b < n; ++b) {
                            if (b == a) continue;
                            w *= h;
                            if (p[b] == 0 || p[b] == spec.n_cells[b]) w *= 0.5;
                        }
                        acc += d * w;
                    }
        }
    }
    return acc;
}

double density_at_scale(const HarmonicPair& pair, int side, const Point& Q, double r) {
    const int n = pair.spec().dim;
    return harmonic_measure_of_ball(pair, side, Q, r) / (unit_ball_volume(n - 1) * std::pow(r, n - 1));
}

RadialTrace boundary_density(const HarmonicPair& pair, int side, const Point& Q, const std::vector<double>& r_list) {
    check_decreasing_radii(r_list);
    RadialTrace t;
    t.center = Q;
    t.kind = TraceKind::density;
    for (double r : r_list) t.push(r, density_at_scale(pair, side, Q, r));
    return t;
}

}  // namespace freebnd
