#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <stdexcept>
#include <string>

namespace vp {

// Malformed or unknown input; line is 0 when the problem is not tied to a line.
struct ConfigError : std::runtime_error {
    int line = 0;
    std::string key;
    ConfigError(const std::string& what, int line_, std::string key_ = {})
        : std::runtime_error(what), line(line_), key(std::move(key_)) {}
};

struct DataSpec {
    bool present = false;  // false for a config without a [data] section
    double amplitude = 0.0;
    std::array<double, 2> q_center{0.0, 0.0};
    std::array<double, 2> p_center{0.0, 0.0};
    double q_width = 1.0;
    double p_width = 1.0;
    double c0 = 0.0;            // > 0 rescales the amplitude so the sigma norm sum equals c0
    double center_offset = 0.0; // in grid spacings, applied to all four coordinates
};

struct RunConfig {
    std::string mode;  // optional; the command line wins when both are given

    // [grid]
    int n = 32;
    double L = 8.0;

    DataSpec data;

    // [solver]
    int lambda = 1;
    int m = 16;
    double ds_uniform = 1.0 / 32.0;
    double s_end = 0.9;
    double picard_S = 0.2;
    int picard_steps = 10;
    double picard_tol = 1e-12;
    int picard_max_iter = 30;
    double field_ceiling = 1e3;
    int cadence = 0;

    // [scattering]
    int K = 10;
    int fit_lo = 3, fit_hi = 8;
    double window = 3.0;

    // [wave]
    double T = -0.5;
    int wave_m = 4;
    int K0 = 8;
    double wave_tol = 1e-12;
    int wave_max_iter = 12;
    bool roundtrip = true;

    // [bounds]
    double bound_A = 1.0;
    double bound_theta = 0.25;
    int quad_nodes = 64;

    // [particles]
    bool particles = false;
    std::size_t N = 20000;
    double particle_mass = 0.1;
    double particle_width = 1.0;
    int particle_m = 8;
    int particle_K = 9;

    // [run]
    std::uint64_t seed = 1;
    int threads = 0;  // 0 keeps the OpenMP default
};

// Flat "key = value" text with [section] headers; '#' starts a comment.
// Keys are looked up as section.key; anything unrecognised is a ConfigError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

}  // namespace vp
