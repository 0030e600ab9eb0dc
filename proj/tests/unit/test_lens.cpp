#include <doctest.h>

#include <cmath>
#include <random>

#include "vp/lens.hpp"

using namespace vp;

TEST_CASE("clock functions match their closed forms") {
    for (double s : {-0.9, -0.3, 0.0, 0.4, 0.99}) {
        CHECK(f_of_s(s) == doctest::Approx(1.0 / (1.0 - s * s)).epsilon(1e-14));
        CHECK(F_of_s(s) == doctest::Approx(std::atanh(s)).epsilon(1e-13));
        CHECK(g_of_s(s, 2) == doctest::Approx(1.0 / (1.0 - s * s)).epsilon(1e-14));
        CHECK(g_of_s(s, 4) == 1.0);
    }
    CHECK(one_plus_s_times_F(-1.0) == 0.0);
    CHECK(std::abs(one_plus_s_times_F(-1.0 + 1e-12)) < 1e-10);
}

TEST_CASE("hyperbolic lens is the cosh/sinh map") {
    const LensChart lens;
    const double t = 0.7, x[2] = {1.2, -0.4}, v[2] = {0.3, 2.0};
    const auto c = lens.forward(t, x, v);
    CHECK(c.time == doctest::Approx(std::tanh(t)));
    CHECK(c.a[0] == doctest::Approx(x[0] / std::cosh(t)));
    CHECK(c.b[1] == doctest::Approx(v[1] * std::cosh(t) - x[1] * std::sinh(t)));
}

TEST_CASE("lens round trip and symplecticity on random points") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> T(-5, 5), X(-3, 3);
    for (auto flavor : {Flavor::hyperbolic, Flavor::trigonometric}) {
        const LensChart lens(flavor, 2);
        const auto W = symplectic_form(2);
        for (int i = 0; i < 200; ++i) {
            double t = T(rng);
            if (flavor == Flavor::trigonometric) t *= 0.3;
            const double x[2] = {X(rng), X(rng)}, v[2] = {X(rng), X(rng)};
            const auto f = lens.forward(t, x, v);
            const auto b = lens.inverse(f.time, f.a, f.b);
            CHECK(std::abs(b.time - t) < 1e-11);
            for (int k = 0; k < 2; ++k) {
                CHECK(std::abs(b.a[k] - x[k]) < 1e-11 * std::cosh(t));
                CHECK(std::abs(b.b[k] - v[k]) < 1e-11 * std::cosh(t) * std::cosh(t));
            }
            const auto J = lens.jacobian(t);
            CHECK((J.transpose() * W * J - W).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(J.determinant() == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("lens rejects times outside its domain") {
    const LensChart lens;
    const double q[2] = {0, 0};
    CHECK_THROWS_AS(lens.inverse(1.0, q, q), DomainError);
    const LensChart trig(Flavor::trigonometric);
    CHECK_THROWS_AS(trig.forward(2.0, q, q), DomainError);
}
