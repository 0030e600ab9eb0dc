#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "vp/grid.hpp"

namespace vp {

enum class Flavor { hyperbolic, trigonometric };

// Time reparameterizations of the lens clock.
double f_of_s(double s);  // 1/(1-s^2)
double F_of_s(double s);  // arctanh s, log1p form
// (1-s^2)^{(d-4)/2}, the coefficient in front of the field term.
double g_of_s(double s, int d);
// (1+s) F(s), with its limit 0 at s = -1.
double one_plus_s_times_F(double s);

struct ChartPoint {
    double time = 0.0;
    std::vector<double> a;  // x or q
    std::vector<double> b;  // v or p
};

class LensChart {
  public:
    explicit LensChart(Flavor flavor = Flavor::hyperbolic, int d = 2);

    Flavor flavor() const { return flavor_; }
    int dim() const { return d_; }

    // (t, x, v) -> (s, q, p)
    ChartPoint forward(double t, std::span<const double> x, std::span<const double> v) const;
    // (s, q, p) -> (t, x, v)
    ChartPoint inverse(double s, std::span<const double> q, std::span<const double> p) const;

    // d(q,p)/d(x,v) at fixed t.
    Eigen::MatrixXd jacobian(double t) const;

  private:
    void check_time(double t) const;
    Flavor flavor_;
    int d_;
};

// Standard symplectic form of size 2d.
Eigen::MatrixXd symplectic_form(int d);

// Physical field on the image grid x = cosh(t) q: E[mu](t,x) = cosh^{-(d-1)}(t) E[gamma](tanh t, x/cosh t).
ElectricField pushforward_field(const ElectricField& E_lens, double t, int d = 2);
// Same rule evaluated at arbitrary physical points; throws DomainError off the lens grid.
std::array<double, 2> pushforward_at(const ElectricField& E_lens, double t, double x1, double x2,
                                     int d = 2);

}  // namespace vp
