#include <doctest.h>

#include <cmath>

#include "vp/scattering.hpp"

using namespace vp;

TEST_CASE("rate fit recovers a pure power of 1 - r_k") {
    std::vector<double> v;
    for (int k = 0; k <= 10; ++k) v.push_back(3.0 * std::pow(1.0 - r_k(k), 1.3));
    const auto f = fit_rate("synthetic", v, 3, 8);
    CHECK(f.exponent == doctest::Approx(1.3).epsilon(1e-10));
}

TEST_CASE("Richardson extrapolation is exact for first-order error") {
    const Axis a{8, 2.0};
    ElectricField Einf(a);
    for (std::size_t i = 0; i < Einf.size(); ++i) {
        Einf.c[0][i] = std::sin(double(i));
        Einf.c[1][i] = std::cos(double(i));
    }
    std::vector<ElectricField> snaps;
    for (int k = 0; k <= 6; ++k) {
        ElectricField E = Einf;
        for (auto& c : E.c)
            for (double& x : c) x += 0.7 * (1.0 - r_k(k));
        snaps.push_back(E);
    }
    const auto e = extrapolate_E_infinity(snaps);
    CHECK(sup_diff(e.E, Einf) < 1e-13);
    CHECK(e.residuals.back() == doctest::Approx(0.7 * std::sqrt(2.0) * (1.0 - r_k(6))).epsilon(1e-9));
}

TEST_CASE("profile map reduces to the free shear without a field") {
    const ElectricField zero(Axis{8, 4.0});
    const auto y = profile_map_Phi(0.5, {1.0, -1.0, 0.4, 0.2}, zero, 1);
    CHECK(y[0] == doctest::Approx(1.0 - 0.5 * 0.4));
    CHECK(y[1] == doctest::Approx(-1.0 - 0.5 * 0.2));
    CHECK(y[2] == doctest::Approx(0.4));
}

TEST_CASE("physical trajectories without a field are hyperbolic rotations") {
    const ElectricField zero(Axis{8, 4.0});
    const double t = 1.3;
    const auto P = physical_trajectory(t, {0.5, -0.2}, {1.0, 0.3}, zero, 1);
    CHECK(P.X[0] == doctest::Approx(0.5 * std::cosh(t) + 1.0 * std::sinh(t)));
    CHECK(P.V[1] == doctest::Approx(0.3 * std::cosh(t) - 0.2 * std::sinh(t)));
}

TEST_CASE("consistency of the zero profile is zero") {
    const Axis a{8, 4.0};
    CHECK(verify_E_consistency(DistributionGrid(a, a), ElectricField(a)) == 0.0);
}

TEST_CASE("particle ensembles are reproducible from the seed") {
    const auto a = gaussian_ensemble(3, 100, 0.1, 1.0, 42);
    const auto b = gaussian_ensemble(3, 100, 0.1, 1.0, 42);
    CHECK(a.q == b.q);
    CHECK(a.p == b.p);
    double m = 0.0;
    for (double w : a.w) m += w;
    CHECK(m == doctest::Approx(0.1));
}
