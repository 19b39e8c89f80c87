#include "freebnd/trace.hpp"

#include "freebnd/error.hpp"

namespace freebnd {

const char* to_string(TraceKind k) {
    switch (k) {
    case TraceKind::J: return "J";
    case TraceKind::N: return "N";
    case TraceKind::M: return "M";
    case TraceKind::H: return "H";
    case TraceKind::D: return "D";
    case TraceKind::density: return "density";
    case TraceKind::flatness: return "flatness";
    case TraceKind::beta: return "beta";
    }
    return "?";
}

void check_decreasing_radii(const std::vector<double>& radii) {
    if (radii.empty()) fail(ErrorKind::invalid_input, "empty radius list");
    for (size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0)) fail(ErrorKind::invalid_input, "radii must be positive");
        if (i > 0 && !(radii[i] < radii[i - 1])) fail(ErrorKind::invalid_input, "radii must be strictly decreasing");
    }
}

}  // namespace freebnd
