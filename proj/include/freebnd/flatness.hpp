#pragma once

#include <functional>
#include <string>
#include <vector>

#include "freebnd/functionals.hpp"

namespace freebnd {

// U(t) = gamma t+ - g gamma t-, squeezing a field between U(x.nu - eps) and
// U(x.nu + eps).
struct TwoPlaneFit {
    Point nu;
    double gamma = 1.0;
    double eps = 0.0;
    double g_at_center = 1.0;
    bool not_flat = false;
};

double two_plane_eval(double gamma, double g, double t);
double two_plane_eval(const TwoPlaneFit& fit, double t);
// Inverse of t -> U(t); U is strictly increasing for gamma, g > 0.
double two_plane_inverse(double gamma, double g, double w);

// Probe points of a ball: a lattice through the center plus 256 points on the
// bounding sphere. Every sup/inf over a ball uses one of these.
struct ProbeSet {
    Point center;
    double r = 0.0;
    std::vector<Point> offsets;  // x - center, |x - center| <= r
};
ProbeSet make_probes(int dim, const Point& center, double r, double spacing);
// Lattice spacing max(h, r/48) in 2D and max(h, r/12) in 3D (r/48, r/12 for
// analytic fields).
ProbeSet probes_for(const Field& w, const Point& center, double r);

// Smallest eps with the squeeze holding at every probe.
double measure_squeeze(const Field& w, const Point& nu, double gamma, double g, const ProbeSet& probes);
// Direct check of both inequalities at every probe.
bool squeeze_holds(const Field& w, const Point& nu, double gamma, double g, double eps, const ProbeSet& probes);

// Minimizes eps over (nu, gamma); deterministic for a given probe set.
TwoPlaneFit best_two_plane(const Field& w, double g, const ProbeSet& probes, int n_lattice = 64);

// Samples of g on the free boundary, for the Hölder hypothesis.
struct HolderData {
    std::vector<Point> x;
    std::vector<double> g;
    double alpha = 0.5;
};
// sup |g(x) - g(y)| / (|x - y| / R)^alpha over samples in B(center, R).
double holder_seminorm(const HolderData& data, const Point& center, double R);
double oscillation(const HolderData& data, const Point& center, double R, double g0);

struct StepOptions {
    double eps_tilde = 0.25;  // largest relative eps treated as "flat enough"
    double C_tilde = 10.0;
    double gamma_min = 0.0;
    double gamma_max = 1e300;
    // Discretization allowance added to eps^2 in the Hölder hypothesis.
    double g_tolerance = 0.0;
};

struct ImprovementReport {
    TwoPlaneFit before;
    TwoPlaneFit after;
    double R = 0.0;  // ball radius of `before`
    double r = 0.0;  // shrink factor; `after` lives on B(center, r R)
    double g_seminorm = 0.0;
    bool hypothesis_ok = false;
    bool contraction_ok = false;  // after.eps <= r before.eps / 2
    double contraction_ratio = 0.0;  // after.eps / (r before.eps)
    double nu_shift = 0.0;
    double gamma_shift = 0.0;
    bool nu_ok = false;
    bool gamma_ok = false;
    std::vector<std::string> flags;
};

// `fit` is a squeeze on B(center, R) with absolute width fit.eps.
ImprovementReport improvement_step(const Field& w, const HolderData& g, const TwoPlaneFit& fit, const Point& center,
                                   double R, double r, const StepOptions& opts = {});

struct IterationRecord {
    int k = 0;
    double r = 0.0;  // radius in original coordinates
    Point nu;
    double gamma = 0.0;
    double eps = 0.0;      // absolute width in the coordinates of the first ball
    double rel_eps = 0.0;  // eps over the current ball radius
    bool hypothesis_ok = false;
    bool contraction_ok = false;
    double g_seminorm = 0.0;
};

struct IterationLog {
    Point Q;
    double r0 = 0.0;
    double rbar = 0.0;
    std::vector<IterationRecord> steps;
    double s_fit = 0.0;
    bool s_fitted = false;
    double s_floor = 0.0;  // -log_rbar(2)
    bool truncated = false;
    std::vector<std::string> flags;
};

struct DecayOptions {
    StepOptions step;
    double alpha = 0.5;     // Hölder exponent of h used in the hypothesis
    double R0 = 1.0;        // largest admissible rbar
    int g_samples = 48;
    double floor_cells = 4.0;  // stop once a ball radius drops below this many grid cells
};

// Rescales u = u+ - u- as w(x) = u(Q + r0 x)/r0 and iterates improvement
// steps on B_{rbar^k}. No bound on rbar is enforced here.
IterationLog improvement_chain(const HarmonicPair& pair, const Point& Q, double r0, double rbar, int n_steps,
                               const DecayOptions& opts = {});
// Same iteration on an already rescaled field with free-boundary point at the
// origin; r0 only scales the reported radii.
IterationLog improvement_chain(const Field& w, const HolderData& g, double g0, double r0, double rbar, int n_steps,
                               const DecayOptions& opts = {});
// As above after checking n_steps >= 3 and rbar <= min(R0, 4^{-1/alpha}).
IterationLog flatness_decay(const HarmonicPair& pair, const Point& Q, double r0, double rbar, int n_steps,
                            const DecayOptions& opts = {});
// min(R0, 4^{-1/alpha}).
double default_rbar(double alpha, double R0 = 0.25);

std::string iteration_csv(const IterationLog& log);

struct HarnackReport {
    bool hypothesis_ok = false;
    std::vector<std::string> flags;
    double c = 0.0;  // largest c with w >= U(x.nu + c eps) on B_{1/2} probes, capped at 1
    bool passed = false;
};
// One-sided gap propagation on the unit ball around the origin.
HarnackReport harnack_gap_check(const Field& w, double g0, double g_oscillation, const Point& nu, double gamma,
                                double eps);

struct TwoSidedReport {
    bool hypothesis_ok = false;
    std::vector<std::string> flags;
    double a0 = 0.0, b0 = 0.0, a1 = 0.0, b1 = 0.0;
    double c = 0.0;  // 1 - (b1 - a1) / (b0 - a0)
    bool passed = false;
};
// Squeeze U(x.nu + a0) <= w <= U(x.nu + b0) on B(x0, r) shrunk to B(x0, r/20).
TwoSidedReport harnack_two_sided(const Field& w, double g0, double g_oscillation, const Point& nu, double gamma,
                                 double a0, double b0, const Point& x0, double r);

struct TransmissionOptions {
    double step = 1e-5;            // finite-difference step (use the grid h for sampled W)
    double flux_tolerance = 1e-6;  // allowed jump of W_n across {x_n = 0}, relative to ||W||
    double constant = 1.0;         // C in residual <= C ||W|| r^2
};

struct TransmissionReport {
    double value = 0.0;
    Point tangential_gradient;
    double p = 0.0;
    double residual = 0.0;
    double norm = 0.0;  // sup of |W| over B_1
    double flux_mismatch = 0.0;
    double bound = 0.0;  // constant * norm * r^2
    bool within_bound = false;
};
TransmissionReport transmission_expand(const std::function<double(const Point&)>& W, int dim, double r,
                                       const TransmissionOptions& opts = {});

}  // namespace freebnd
