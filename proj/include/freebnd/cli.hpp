#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "freebnd/point.hpp"

namespace freebnd::cli {

inline constexpr const char* version = "0.1.0";

const std::vector<std::string>& experiment_kinds();
// Every key accepted in a config file or as an inline --key flag.
const std::vector<std::string>& config_keys();

// Raw value plus where it came from ("run.ini:7" or "--n"), for diagnostics.
struct ConfigEntry {
    std::string value;
    std::string origin;
};

struct ExperimentConfig {
    std::string experiment;
    std::map<std::string, ConfigEntry> entries;  // merged raw keys, echoed in the manifest

    std::string domain = "halfplane";
    int n = 256;                // grid cells per axis
    double box_half_width = 0;  // 0 keeps the domain's default box
    std::vector<Point> Q;       // empty means the domain's default point
    std::optional<Point> pole_plus;
    std::optional<Point> pole_minus;
    std::vector<double> radii;  // decreasing; filled with defaults when not given
    std::string output_dir = "freebnd_out";
    std::uint64_t seed = 0;
    std::string weights;
    double alpha = 0.5;
    double rbar = 0.0;  // 0 picks min(1/4, 4^{-1/alpha})
    int steps = 4;
    int draws = 1000;
    double eps = 0.02;
    std::vector<std::string> fields{"xn", "x1", "quadratic", "hodograph"};

    // Grid box and spacing of the harmonic pair, once validated.
    Point box_center;
    double box_half = 0.0;
    double h = 0.0;
};

// One config source in precedence order: file text first, inline flags last.
struct ConfigSource {
    std::string text;    // key = value lines with optional [section] headers
    std::string origin;  // file name, used in line diagnostics
};

// Merges the sources for `experiment`, parses and validates every field.
// Keys outside a section or in [run] apply to all experiments; keys in a
// section named after an experiment apply only to it. Throws invalid_input
// naming the offending line or flag.
ExperimentConfig build_config(const std::string& experiment, const std::vector<ConfigSource>& files,
                              const std::vector<std::pair<std::string, std::string>>& flags);

struct RunOutcome {
    int exit_code = 0;
    std::vector<std::string> files;  // relative to output_dir, manifest last
    std::vector<std::string> flags;
    std::string summary;  // one line per point for the terminal
};

// Runs the experiment and writes its artifacts plus manifest.json. Numerical
// errors propagate as freebnd::Error.
RunOutcome run(const ExperimentConfig& cfg, int threads);

// FREEBND_THREADS if set and positive, otherwise the hardware count.
int thread_cap();

// Runs fn(0..count-1) on at most `threads` workers; rethrows the first error
// by index.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

// Git blob id: sha1 of "blob <size>\0" followed by the content.
std::string git_blob_sha1(const std::string& content);

// Write to a sibling temporary, then rename over the target.
void write_atomic(const std::string& path, const std::string& content);

std::string list_domains();

// Full command-line entry point; returns the process exit code.
int main(int argc, char** argv);

}  // namespace freebnd::cli
