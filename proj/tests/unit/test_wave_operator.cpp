#include <doctest.h>

#include <cmath>
#include <random>

#include "vp/wave_operator.hpp"

using namespace vp;

namespace {

ReferenceField blob_reference() {
    GaussianSpec sp;
    sp.amplitude = 0.3;
    const Axis a{32, 6.0};
    return ReferenceField::make(solve_field(gaussian(a, a, sp)));
}

}  // namespace

TEST_CASE("chart is the identity at s = -1") {
    const auto ref = blob_reference();
    const auto c = chart_from_gamma({0.3, -1.0}, {0.5, 0.2}, -1.0, ref, 1);
    CHECK(c.a(0) == 0.3);
    CHECK(c.b(1) == 0.2);
}

TEST_CASE("chart round trip with a Gaussian reference field") {
    const auto ref = blob_reference();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-2.0, 2.0), S(-0.9, -0.1);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        const double s = S(rng);
        const Eigen::Vector2d w(U(rng), U(rng)), z(U(rng), U(rng));
        const auto g = chart_to_gamma(w, z, s, ref, 1);
        const auto back = chart_from_gamma(g.a, g.b, s, ref, 1);
        worst = std::max({worst, (back.a - w).norm(), (back.b - z).norm()});
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("chart Jacobian has unit determinant") {
    const auto ref = blob_reference();
    const double s = -0.4, h = 1e-5;
    const Eigen::Vector2d w(0.4, -0.3), z(0.7, 0.1);
    Eigen::Matrix4d J;
    for (int k = 0; k < 4; ++k) {
        Eigen::Vector2d wp = w, wm = w, zp = z, zm = z;
        (k < 2 ? wp(k) : zp(k - 2)) += h;
        (k < 2 ? wm(k) : zm(k - 2)) -= h;
        const auto a = chart_to_gamma(wp, zp, s, ref, 1), b = chart_to_gamma(wm, zm, s, ref, 1);
        J.col(k) << (a.a - b.a) / (2 * h), (a.b - b.b) / (2 * h);
    }
    CHECK(J.determinant() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("kappa gradients vanish with no field") {
    const Axis a{16, 4.0};
    const auto ref = ReferenceField::make(ElectricField(a));
    const auto k = kappa_gradients(-0.5, {0.2, 0.1}, {1.0, -1.0}, nullptr, ref, 1);
    CHECK(k.dw.norm() == 0.0);
    CHECK(k.dz.norm() == 0.0);
}

TEST_CASE("theta weight solves its Riccati equation and is bracketed") {
    for (double s : {-1.0, -0.75, -0.2, 0.0})
        for (double z : {0.0, 1.0, 5.0}) {
            const double th = theta_weight(s, z, 0.0), b = std::hypot(1.0, z);
            const double cap = s > -1.0 ? std::min(b, 1.0 / (s + 1.0)) : b;
            CHECK(th <= cap + 1e-15);
            CHECK(th >= 0.5 * cap - 1e-15);
            if (s > -1.0) {
                const double e = 1e-6;
                const double d = (theta_weight(s + e, z, 0.0) - theta_weight(s - e, z, 0.0)) / (2 * e);
                CHECK(std::abs(d + th * th) < 1e-7);
            }
        }
}

TEST_CASE("backward mesh starts at -1, ends at T and hits dyadic edges") {
    WaveConfig cfg;
    cfg.m = 2;
    cfg.K0 = 4;
    const auto mesh = backward_mesh(cfg);
    CHECK(mesh.front() == -1.0);
    CHECK(mesh.back() == cfg.T);
    for (int j = 1; j <= 5; ++j) {
        bool hit = false;
        for (double s : mesh) hit = hit || std::abs(s - (-1.0 + std::ldexp(1.0, -j))) < 1e-15;
        CHECK(hit);
    }
    for (std::size_t i = 1; i < mesh.size(); ++i) CHECK(mesh[i] > mesh[i - 1]);
}

TEST_CASE("zero final data is a fixed point of the backward solve") {
    const Axis a{10, 4.0};
    WaveConfig cfg;
    cfg.m = 1;
    cfg.K0 = 2;
    const auto r = backward_picard(DistributionGrid(a, a, Coords::wz), cfg);
    CHECK(r.converged);
    CHECK(lebesgue_norm(r.sigma_T, 0) == 0.0);
}

TEST_CASE("sigma density at s = -1 is the plain velocity integral") {
    const Axis a{16, 5.0};
    GaussianSpec sp;
    sp.amplitude = 0.5;
    const auto g = gaussian(a, a, sp);
    const auto ref = ReferenceField::make(solve_field(g));
    const auto r1 = sigma_density(g, -1.0, ref, 1), r0 = density(g);
    double d = 0.0;
    for (std::size_t i = 0; i < r0.v.size(); ++i) d = std::max(d, std::abs(r1.v[i] - r0.v[i]));
    CHECK(d < 1e-12);
}
