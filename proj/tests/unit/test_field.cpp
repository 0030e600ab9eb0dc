#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vp/field.hpp"

using namespace vp;

namespace {

Plane unit_gaussian(int n, double L) {
    const Axis a{n, L};
    Plane rho(a);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = a.node(i), y = a.node(j);
            rho(i, j) = std::exp(-(x * x + y * y)) / std::numbers::pi;
        }
    return rho;
}

}  // namespace

TEST_CASE("shell theorem for the unit-mass radial Gaussian") {
    const int n = 128;
    const auto rho = unit_gaussian(n, 8.0);
    const auto E = solve_field(rho);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = rho.axis.node(i), y = rho.axis.node(j), r = std::hypot(x, y);
            if (r < 0.5 || r > 3.0) continue;
            const double exact = (1.0 - std::exp(-r * r)) / (2.0 * std::numbers::pi * r);
            const double ex = E.c[0][i * n + j], ey = E.c[1][i * n + j];
            worst = std::max(worst, std::abs(std::hypot(ex, ey) - exact) / exact);
            CHECK(ex * x + ey * y > 0.0);  // repulsive: points outward
        }
    CHECK(worst < 1e-4);
}

TEST_CASE("zero density gives zero field") {
    const Plane rho(Axis{32, 4.0});
    CHECK(solve_field(rho).sup() == 0.0);
}

TEST_CASE("divergence recovers the density at second order") {
    double err[2];
    int idx = 0;
    for (int n : {64, 128}) {
        const auto rho = unit_gaussian(n, 8.0);
        const auto div = divergence(solve_field(rho));
        double e = 0.0;
        for (int i = 2; i < n - 2; ++i)
            for (int j = 2; j < n - 2; ++j) e = std::max(e, std::abs(div(i, j) - rho(i, j)));
        err[idx++] = e;
    }
    CHECK(std::log2(err[0] / err[1]) > 1.8);
}

TEST_CASE("log quadrature weights integrate in ln R") {
    const auto q = LogQuadrature::make(64, 1e-3, 1e3);
    double s = 0.0;
    for (double w : q.weights) s += w;
    CHECK(s == doctest::Approx(std::log(1e6)).epsilon(1e-10));
}

TEST_CASE("negative density is rejected") {
    Plane rho(Axis{16, 4.0});
    rho(3, 3) = -1e-6;
    CHECK_THROWS_AS(solve_field(rho), std::invalid_argument);
}
