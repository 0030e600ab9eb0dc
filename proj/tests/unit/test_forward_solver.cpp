#include <doctest.h>

#include <cmath>

#include "vp/forward_solver.hpp"

using namespace vp;

TEST_CASE("time mesh lands on every dyadic edge") {
    SolverConfig cfg;
    cfg.m = 4;
    const auto mesh = time_mesh(0.0, r_k(6), cfg);
    for (int k = 0; k <= 6; ++k) {
        bool hit = false;
        for (double s : mesh) hit = hit || std::abs(s - r_k(k)) < 1e-15;
        CHECK(hit);
    }
    // window [r_k, r_{k+1}] has m steps of 2^{-k}/m... of length 2^{-k-1}: m/2 steps
    CHECK(mesh.size() == 1 + 6 * 2);
}

TEST_CASE("time mesh from negative s passes through 0") {
    SolverConfig cfg;
    const auto mesh = time_mesh(-0.5, 0.5, cfg);
    CHECK(mesh.front() == -0.5);
    bool hit = false;
    for (double s : mesh) hit = hit || s == 0.0;
    CHECK(hit);
}

TEST_CASE("free transport matches the exact shear") {
    const Axis q{24, 6.0}, p{24, 6.0};
    GaussianSpec sp;
    sp.q_width = 1.2;
    sp.p_width = 0.8;
    const auto g0 = gaussian(q, p, sp);
    SolverConfig cfg;
    cfg.field_enabled = false;
    const double S = 0.5;
    const auto res = evolve(g0, S, cfg);
    const auto exact = DistributionGrid::sample(q, p, [&](double q1, double q2, double p1, double p2) {
        const double a1 = q1 - S * p1, a2 = q2 - S * p2;
        return std::exp(-(a1 * a1 + a2 * a2) / (2 * 1.44) - (p1 * p1 + p2 * p2) / (2 * 0.64));
    });
    CHECK(max_abs_diff(res.final, exact) < 2e-3);
}

TEST_CASE("zero data stays zero under Picard and stepping") {
    const Axis a{12, 4.0};
    const DistributionGrid zero(a, a);
    SolverConfig cfg;
    const auto pic = picard_lwp(zero, 0.2, cfg, 4);
    CHECK(pic.converged);
    CHECK(lebesgue_norm(pic.gamma_S, 0) == 0.0);
    CHECK(lebesgue_norm(step(zero, 0.0, 0.1, cfg), 0) == 0.0);
}

TEST_CASE("step refuses to cross s = 1") {
    const Axis a{12, 4.0};
    DistributionGrid g(a, a);
    CHECK_THROWS_AS(step_inplace(g, 0.95, 0.1, SolverConfig{}), DomainError);
}

TEST_CASE("fit_line recovers an exact line") {
    const auto [slope, icpt] = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(slope == doctest::Approx(2.0));
    CHECK(icpt == doctest::Approx(1.0));
}
