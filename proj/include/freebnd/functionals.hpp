#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "freebnd/grid.hpp"
#include "freebnd/point.hpp"
#include "freebnd/trace.hpp"

namespace freebnd {

// A two-phase function seen through value, gradient and phase. `level` is a
// continuous function whose sign is the phase; quadrature uses it to split
// circles at the interface.
struct Field {
    int dim = 2;
    std::function<double(const Point&)> value;
    std::function<Point(const Point&)> gradient;
    std::function<double(const Point&)> level;
    // Grid spacing for resolution checks; 0 for analytic fields.
    double h = 0.0;
    // Box the field is defined on (all of space when unset).
    std::function<bool(const Point&)> defined;

    int phase(const Point& x) const {
        const double l = level(x);
        return l > 0 ? 1 : (l < 0 ? -1 : 0);
    }
};

Field analytic_field(int dim, std::function<double(const Point&)> value, std::function<Point(const Point&)> gradient);
// Grid field; phase is the sign of the interpolated value.
Field grid_field(const ScalarField& f);
// a_plus * u_plus - a_minus * u_minus with the domain's zero set as interface
// and one-sided gradients on each side.
Field pair_field(const HarmonicPair& pair, double a_plus, double a_minus);
// x -> f(scale * x + shift) / divisor.
Field rescaled_field(const Field& f, const Point& shift, double scale, double divisor);

// v = h(Q) u+ - u-.
struct VField {
    std::shared_ptr<const HarmonicPair> base;
    Point Q;
    double hQ = 1.0;
    Field view;
    ScalarField field() const;
};
VField build_v(std::shared_ptr<const HarmonicPair> pair, const Point& Q);

// Quadrature on spheres and balls centered at x.
double sphere_integral(const Field& f, const Point& x, double r, const std::function<double(const Point&)>& g);
// Integral over B(x,r) of w(|y-x|) * g(y) restricted to one phase (side = +-1)
// or to both (side = 0). Circles are split at phase changes.
double ball_integral(const Field& f, const Point& x, double r, int side, const std::function<double(double)>& w,
                     const std::function<double(const Point&)>& g);

double acf_J(const Field& f, const Point& x, double r);
double almgren_H(const Field& f, const Point& x0, double r);
double almgren_D(const Field& f, const Point& x0, double r);
double almgren_N(const Field& f, const Point& x0, double r);

// Linear form p(x) = c * (x . nu) or a general gradient vector.
struct LinearForm {
    Point a;  // p(x) = a . x
    double operator()(const Point& x) const { return dot(a, x); }
    static LinearForm along(const Point& nu, double c) { return {nu * c}; }
};
double monneau_M(const Field& f, const LinearForm& p, const Point& x0, double r);

// Traces over decreasing radii.
RadialTrace trace_of(TraceKind kind, const Field& f, const Point& x, const std::vector<double>& radii,
                     const LinearForm* p = nullptr);

// Centered differences on a decreasing radius list; one fewer value at each end.
struct Derivative {
    std::vector<double> radii;
    std::vector<double> values;
};
Derivative radial_derivative(const RadialTrace& t);

struct DefectReport {
    double R = 0.0;
    double sup_negative = 0.0;  // sup (N')^- on [R/4, R]
    double scaled = 0.0;        // sup_negative * R
    // sup of 2|E(r)|/H(r) on [R/4, R], times R: the part of N' that can be
    // negative, computed from the boundary measure (needs a pair-backed v).
    double envelope_scaled = -1.0;
    bool under_resolved = false;
};

// E(r) = integral over B(Q,r) of <x - Q, grad v> dLaplace(v), which for
// v = h(Q)u+ - u- is (1/2) * boundary integral of <x-Q, nu>((h(Q)d+)^2 - (d-)^2).
double rellich_term(const VField& v, double r);
DefectReport almgren_defect(const Field& v, const Point& Q, double R, int n_sub);
DefectReport almgren_defect(const VField& v, double R, int n_sub);

struct DefectFit {
    std::vector<DefectReport> reports;
    double exponent = 0.0;  // log-log slope of scaled defect against R
    double k = 0.0;
    bool fitted = false;  // false when too few positive defects to regress
    double envelope_exponent = 0.0;
    bool envelope_fitted = false;
    std::vector<std::string> flags;
};
DefectFit fit_defects(std::vector<DefectReport> reports);

struct MonneauDrop {
    double R = 0.0;
    double r = 0.0;
    double drop = 0.0;  // M(R) - M(r)
};
struct MonneauGrowth {
    std::vector<MonneauDrop> drops;
    double worst = 0.0;  // most negative drop (0 if none)
    double exponent = 0.0;
    double C = 0.0;
    bool fitted = false;
    std::vector<std::string> flags;
};
MonneauGrowth monneau_growth_check(const Field& v, const LinearForm& p, const Point& Q, const std::vector<double>& R_list);

// ACF slack from three resolutions: delta(h) = max_r |J_h - J_{h/2}|.
struct AcfConvergence {
    std::vector<double> radii;
    std::vector<std::vector<double>> J;  // per resolution, coarse to fine
    std::vector<double> slack;           // delta at each of the two coarser levels
    std::vector<double> worst_decrease;  // largest drop of J as r grows, per resolution
    bool monotone_within_slack = false;
    double slack_ratio = 0.0;
};
AcfConvergence acf_convergence(const std::vector<Field>& fields, const Point& x, const std::vector<double>& radii);

std::string trace_csv(const std::vector<RadialTrace>& traces);

}  // namespace freebnd
