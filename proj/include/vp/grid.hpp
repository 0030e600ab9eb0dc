#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace vp {

// Symmetric uniform axis: nodes -L + i*h, h = 2L/(n-1).
struct Axis {
    int n = 0;
    double L = 0.0;

    double h() const { return 2.0 * L / (n - 1); }
    double node(int i) const { return -L + i * h(); }
    bool operator==(const Axis&) const = default;
};

// Scalar sampled on the square spatial grid, row-major (i along x1).
struct Plane {
    Axis axis;
    std::vector<double> v;

    Plane() = default;
    explicit Plane(Axis a) : axis(a), v(std::size_t(a.n) * a.n, 0.0) {}
    double& operator()(int i, int j) { return v[std::size_t(i) * axis.n + j]; }
    double operator()(int i, int j) const { return v[std::size_t(i) * axis.n + j]; }
};

enum class Provenance { direct, dyadic, pushforward, analytic };

struct ElectricField {
    Axis axis;
    std::array<std::vector<double>, 2> c;
    Provenance provenance = Provenance::direct;
    double delta = 0.0;  // kernel regularization radius in grid units (0: cell average)

    ElectricField() = default;
    explicit ElectricField(Axis a, Provenance p = Provenance::direct)
        : axis(a), provenance(p) {
        c[0].assign(std::size_t(a.n) * a.n, 0.0);
        c[1].assign(std::size_t(a.n) * a.n, 0.0);
    }
    std::size_t size() const { return c[0].size(); }
    double sup() const;  // max over nodes of |E|
};

class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

class SupportError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

double sup_diff(const ElectricField& a, const ElectricField& b);

// Bicubic (4-point Lagrange) evaluation of a plane at (x, y); zero outside.
double eval_plane(const Plane& f, double x, double y);
std::array<double, 2> eval_field(const ElectricField& E, double x, double y);

}  // namespace vp
