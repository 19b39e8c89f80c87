#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "freebnd/domains.hpp"
#include "freebnd/point.hpp"
#include "freebnd/trace.hpp"

namespace freebnd {

using Index3 = std::array<int, 3>;

// Isotropic Cartesian grid over a box, dimension 2 or 3.
struct GridSpec {
    int dim = 2;
    Point box_min;
    Index3 n_cells{1, 1, 1};
    double h = 0.0;

    static GridSpec make(const Point& box_min, const Point& box_max, const Index3& n_cells);
    static GridSpec cube(const Box& box, int n_cells);

    void validate() const;
    Point box_max() const;
    int nodes(int axis) const { return axis < dim ? n_cells[axis] + 1 : 1; }
    size_t node_count() const;
    size_t index(const Index3& ijk) const { return (static_cast<size_t>(ijk[2]) * nodes(1) + ijk[1]) * nodes(0) + ijk[0]; }
    Index3 ijk(size_t idx) const;
    Point node(const Index3& ijk) const;
    bool on_box_edge(const Index3& ijk) const;
    bool contains(const Point& x, double margin = 0.0) const;
    GridSpec refined(int factor) const;
};

class ScalarField {
public:
    ScalarField() = default;
    ScalarField(GridSpec spec, std::vector<double> values);
    static ScalarField sample(const GridSpec& spec, const std::function<double(const Point&)>& fn);

    const GridSpec& spec() const { return spec_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    double at(const Index3& ijk) const { return values_[spec_.index(ijk)]; }

    // Multilinear interpolation; throws invalid_input outside the box.
    double operator()(const Point& x) const;
    double max_abs() const;

private:
    GridSpec spec_;
    std::vector<double> values_;
};

ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField scaled(const ScalarField& a, double s);

struct SolveOptions {
    double tolerance = 1e-10;
    long max_iterations = 1000000;
};

struct SolveReport {
    size_t unknowns = 0;
    long iterations = 0;
    double relative_residual = 0.0;
    bool direct_fallback = false;
};

// Dirichlet problem on {side * signed_distance > 0} inside the box; data
// comes from `g` on the interface and on the box edges. Nodes outside the
// side carry 0.
ScalarField solve_dirichlet(const Domain& domain, const std::function<double(const Point&)>& g, const GridSpec& spec,
                            int side = 1, SolveReport* report = nullptr, const SolveOptions& opts = {});

// Green's function of the side containing the pole, zero on the boundary and
// extended by zero. Box edges take the domain's closed form when it exists.
ScalarField greens_function(const Domain& domain, const Point& pole, const GridSpec& spec,
                            SolveReport* report = nullptr);

// Fundamental solution: -log|x|/2pi in 2D, 1/(4 pi |x|) in 3D.
double fundamental_solution(int dim, double r);

// Inward normal derivative of a field vanishing on the boundary (dω/dσ for a
// Green's function), by one-sided second-order differences at spacing 2h.
double flux_density(const Domain& domain, const ScalarField& G, int side, const Point& q);

struct HarmonicPair {
    DomainPtr domain;
    ScalarField u_plus;
    ScalarField u_minus;
    Point pole_plus;
    Point pole_minus;

    const GridSpec& spec() const { return u_plus.spec(); }
    const ScalarField& field(int side) const { return side > 0 ? u_plus : u_minus; }
    // dω^side/dσ at a boundary point.
    double density(int side, const Point& q) const;
    // h = dω^-/dω^+ at a boundary point; throws degenerate if not positive.
    double h(const Point& q) const;
    ScalarField u() const { return u_plus - u_minus; }
};

HarmonicPair make_harmonic_pair(DomainPtr domain, const GridSpec& spec, const Point& pole_plus,
                                const Point& pole_minus);
// Domain defaults for box and poles at the requested resolution.
HarmonicPair make_default_pair(DomainPtr domain, int n_cells);
// Poles at q0 +- a*normal (mirror images across the tangent plane), in a cube
// of the given half-width centered at q0. Near q0 the two phases see nearly
// the same geometry, so h is close to 1 where the boundary is flat at scale a.
HarmonicPair make_image_pair(DomainPtr domain, const Point& q0, double a, double half_width, int n_cells);

double harmonic_measure_of_ball(const HarmonicPair& pair, int side, const Point& Q, double r);
// Flux through the whole boundary of the computational region (interface plus
// box edges); 1 up to discretization error.
double total_flux(const HarmonicPair& pair, int side);

// Density of ω^side at Q: ω(B(Q,r)) / (|B^{n-1}| r^{n-1}), which tends to
// dω/dσ(Q).
RadialTrace boundary_density(const HarmonicPair& pair, int side, const Point& Q, const std::vector<double>& r_list);
double density_at_scale(const HarmonicPair& pair, int side, const Point& Q, double r);

}  // namespace freebnd
