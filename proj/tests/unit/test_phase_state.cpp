#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "vp/phase_state.hpp"
#include "vp/wave_operator.hpp"

using namespace vp;

namespace {

DistributionGrid blob(int n = 16, double A = 1.0) {
    GaussianSpec sp;
    sp.amplitude = A;
    return gaussian(Axis{n, 7.0}, Axis{n, 7.0}, sp);
}

}  // namespace

TEST_CASE("Gaussian norms against closed forms") {
    // ||A exp(-|q|^2/2 - |p|^2/2)||_2 = A pi on R^4
    const auto g = blob(33, 2.0);
    CHECK(lebesgue_norm(g, 2) == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-6));
    CHECK(lebesgue_norm(g, 0) == doctest::Approx(2.0).epsilon(1e-14));  // odd n: node at 0
    // sup (1 + u) e^{-u/2} = 2 e^{-1/2} at u = |p|^2 = 1; grid maximum sits a little below
    const double peak = 2.0 * 2.0 * std::exp(-0.5);
    CHECK(weighted_sup_norm(g, 2) <= peak + 1e-12);
    CHECK(weighted_sup_norm(g, 2) > 0.95 * peak);
}

TEST_CASE("density of a Gaussian integrates the square over velocity") {
    const auto g = blob(33);
    const auto rho = density(g);
    // rho(0) = int e^{-|p|^2} dp = pi
    CHECK(rho(16, 16) == doctest::Approx(std::numbers::pi).epsilon(1e-6));
}

TEST_CASE("spline sweeps are exact for whole-cell shifts and zero shifts") {
    const auto g = blob();
    auto a = g;
    shift_sweep(a, 2, [](int, int, int, int) { return 0.0; });
    CHECK(max_abs_diff(a, g) < 1e-13);
    auto b = g;
    const double h = g.pa.h();
    shift_sweep(b, 0, [&](int, int, int, int) { return h; });
    for (int i = 1; i < g.qa.n; ++i) CHECK(std::abs(b(i, 8, 8, 8) - g(i - 1, 8, 8, 8)) < 1e-12);
}

TEST_CASE("spline point interpolation reproduces node values") {
    const auto g = blob();
    const auto coef = spline_coefficients(g);
    for (int i : {3, 8, 12})
        CHECK(interpolate_spline(coef, {g.qa.node(i), g.qa.node(8), g.pa.node(7), g.pa.node(i)}) ==
              doctest::Approx(g(i, 8, 7, i)).epsilon(1e-12));
    CHECK(interpolate_spline(coef, {100.0, 0.0, 0.0, 0.0}) == 0.0);
}

TEST_CASE("velocity reversal is an involution") {
    auto g = blob();
    g(3, 4, 2, 9) = 0.5;
    CHECK(max_abs_diff(reverse_velocity(reverse_velocity(g)), g) == 0.0);
    CHECK(reverse_velocity(g)(3, 4, 13, 6) == 0.5);
}

TEST_CASE("vlns dump round trip") {
    const auto g = blob(12);
    const auto path = (std::filesystem::temp_directory_path() / "vp_unit.vlns").string();
    write_vlns(path, g);
    const auto r = read_vlns(path);
    CHECK(r.same_shape(g));
    CHECK(max_abs_diff(r, g) == 0.0);
    std::filesystem::remove(path);
}
