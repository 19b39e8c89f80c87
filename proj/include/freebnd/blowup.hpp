#pragma once

#include <memory>
#include <string>
#include <vector>

#include "freebnd/functionals.hpp"

namespace freebnd {

// Fixed-center blowups u_j(x) = u(r_j x + Q) / (r_j Θ_j), one scale per phase,
// with Θ_j = ω(B(Q,r_j)) / (|B^{n-1}| r_j^{n-1}). The rescaled boundary
// measure of B_1 is then |B^{n-1}| in each phase.
struct BlowupLevel {
    double r = 0.0;
    double theta_plus = 0.0;
    double theta_minus = 0.0;
    Field u;  // u_j^+ - u_j^-
    double origin_value = 0.0;
    // Flux of the rescaled field through the boundary inside B_1, divided by
    // |B^{n-1}|, measured from field gradients (ideally 1).
    double measure_plus = 0.0;
    double measure_minus = 0.0;
};

struct BlowupSequence {
    std::shared_ptr<const HarmonicPair> source;
    Point Q;
    std::vector<BlowupLevel> levels;
};

// x -> f+(scale x + shift)/div_plus - f-(scale x + shift)/div_minus, splitting
// f by the sign of its level function.
Field rescale_phases(const Field& f, const Point& shift, double scale, double div_plus, double div_minus);

BlowupSequence rescale(std::shared_ptr<const HarmonicPair> pair, const Point& Q, const std::vector<double>& radii);

// Resample a field on [-1, 1]^n (e.g. a blowup level) at n_cells per axis.
ScalarField resample_unit_box(const Field& f, int n_cells);

// Half-width of the thinnest slab holding (∂Ω - Q)/r inside B_1.
double rescaled_zero_set_width(const Domain& d, const Point& Q, double r);

struct TangentFit {
    Point Q;
    Point nu;
    double c = 0.0;  // slope of v along nu, equal to Θ(ω-, Q)
    double theta_plus = 0.0;
    double theta_minus = 0.0;
    double residual = 0.0;  // M(r, c x.nu)
    double r = 0.0;
    bool ambiguous = false;
};

// Linear least squares on the sphere of radius r: minimizes M(r, a.x) over
// vectors a, then c = |a|, nu = a/|a|.
TangentFit fit_tangent(const Field& v, const Point& Q, double r, double hQ = 1.0);
TangentFit fit_tangent(const VField& v, double r);

struct ContinuityReport {
    std::vector<Point> samples;
    std::vector<double> theta;
    double max_jump = 0.0;
    double mean = 0.0;
};
// Θ(ω^side, Q_i) at scale r along consecutive boundary samples Q_i.
ContinuityReport density_continuity(const HarmonicPair& pair, const std::vector<Point>& samples, double r,
                                    int side = -1);

// One-sided flatness: min over planes through Q of sup distance / r.
double beta_number(const Domain& d, const Point& Q, double r);

// sup_{|x|=r} |v(x+Q) - c x.nu| / r per radius.
RadialTrace modulus_of_flatness(const Field& v, const TangentFit& fit, const std::vector<double>& radii);

std::string tangent_csv(const std::vector<TangentFit>& fits);

}  // namespace freebnd
