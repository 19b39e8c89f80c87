#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "freebnd/point.hpp"

namespace freebnd {

// Boundary point with the unit normal pointing into the positive phase.
struct BoundaryPoint {
    Point x;
    Point normal;
};

// Quadrature node on the boundary: weight is the surface-measure element.
// `piece` separates disconnected pieces of the boundary inside a ball; within
// a piece, 2D samples are ordered along the curve.
struct BoundarySample {
    Point x;
    Point normal;
    double weight = 0.0;
    int piece = 0;
};

struct Box {
    Point center;
    double half_width = 1.0;
};

class Domain {
public:
    virtual ~Domain() = default;

    virtual int dim() const = 0;
    virtual std::string label() const = 0;
    virtual std::string notes() const { return {}; }

    // Positive in the plus phase, negative in the minus phase, zero exactly on
    // the boundary. Exact distance for halfplane/disk/cone4; a first-order
    // distance estimate with the exact zero set otherwise.
    virtual double signed_distance(const Point& x) const = 0;

    // Boundary parameterization; the number of parameters is dim() - 1.
    virtual BoundaryPoint boundary_point(const std::vector<double>& t) const = 0;

    // Quadrature samples of the boundary inside the closed ball B(c, r), with
    // spacing at most `spacing`; endpoints of 2D arcs are exact.
    virtual std::vector<BoundarySample> boundary_in_ball(const Point& c, double r, double spacing) const = 0;

    // Nearest (or near-nearest, for the non-exact domains) boundary point.
    virtual Point project(const Point& x) const = 0;

    // Unit normal into the plus phase at a boundary point.
    virtual Point normal_at(const Point& q) const;

    // Exact normal where the geometry is known in closed form.
    virtual std::optional<Point> known_tangent(const Point&) const { return std::nullopt; }

    // Closed-form Green's function of the given side (when one exists), used as
    // far-field data on the edges of the computational box.
    virtual std::optional<double> exact_green(int /*side*/, const Point& /*pole*/, const Point& /*x*/) const {
        return std::nullopt;
    }
    // Closed-form Poisson kernel dω/dσ at a boundary point, when known.
    virtual std::optional<double> exact_density(int /*side*/, const Point& /*pole*/, const Point& /*q*/) const {
        return std::nullopt;
    }

    virtual double diameter() const { return 2.0; }
    virtual Box default_box() const = 0;
    virtual std::pair<Point, Point> default_poles() const = 0;
    virtual Point default_Q() const { return zero_point(dim()); }

    int side_of(const Point& x) const {
        const double d = signed_distance(x);
        return d > 0 ? 1 : (d < 0 ? -1 : 0);
    }
};

using DomainPtr = std::shared_ptr<const Domain>;

// f(t) = amplitude*|t - center|^exponent + sine_amplitude*sin(wavenumber*t) + slope*t.
struct GraphFunction {
    double amplitude = 0.0;
    double exponent = 2.0;
    double center = 0.0;
    double sine_amplitude = 0.0;
    double wavenumber = 1.0;
    double slope = 0.0;
    double half_width = 0.8;  // computational box half-width

    double f(double t) const;
    double df(double t) const;
    // Hölder exponent and seminorm of f' (exponent capped at 1).
    double alpha() const;
    double seminorm() const;
    bool flat() const { return amplitude == 0.0 && sine_amplitude == 0.0 && slope == 0.0; }
    std::string describe() const;
};

// Flat key = value text; see README for keys.
GraphFunction load_graph_function(const std::string& path);

DomainPtr make_halfplane(int dim = 2);
DomainPtr make_disk(int dim = 2);
DomainPtr make_graph_domain(const GraphFunction& g);
DomainPtr make_lewy_cone(int k = 3);
DomainPtr make_quadratic_cone_r4();
// Zoo lookup: halfplane, disk, graph, graph:<file>, lewy3, cone4.
DomainPtr make_domain(const std::string& name);
std::vector<std::string> zoo_names();

// The degree-k Lewy polynomial and its gradient.
double lewy_polynomial(int k, const Point& x);
Point lewy_gradient(int k, const Point& x);
// Counts nodal domains of the degree-k table entry on a triangulated S^2.
struct NodalCount {
    int positive = 0;
    int negative = 0;
};
NodalCount lewy_nodal_domains(int k, int subdivisions = 5);

struct FlatnessReport {
    Point Q;
    double r = 0.0;
    double theta = 0.0;
    Point best_plane_normal;
};

// Normalized two-sided Hausdorff distance to the best plane through Q.
FlatnessReport reifenberg_theta(const Domain& d, const Point& Q, double r, int n_plane_samples = 64);

// One-sided sup distance of the sampled boundary to the plane through Q with
// normal nu, normalized by r. Shared by theta and beta.
double slab_width(const std::vector<BoundarySample>& samples, const Point& Q, const Point& nu, double r);
std::vector<BoundarySample> flatness_samples(const Domain& d, const Point& Q, double r);

}  // namespace freebnd
