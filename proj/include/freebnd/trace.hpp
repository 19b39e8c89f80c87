#pragma once

#include <string>
#include <vector>

#include "freebnd/point.hpp"

namespace freebnd {

enum class TraceKind { J, N, M, H, D, density, flatness, beta };
const char* to_string(TraceKind k);

// (r, value) samples of a functional at a fixed center; radii strictly
// decreasing. `slack` is the declared discretization allowance.
struct RadialTrace {
    Point center;
    TraceKind kind = TraceKind::J;
    std::vector<double> radii;
    std::vector<double> values;
    double slack = 0.0;
    std::vector<std::string> flags;

    size_t size() const { return radii.size(); }
    void push(double r, double v) {
        radii.push_back(r);
        values.push_back(v);
    }
};

// Throws invalid_input unless radii are strictly decreasing and positive.
void check_decreasing_radii(const std::vector<double>& radii);

}  // namespace freebnd
