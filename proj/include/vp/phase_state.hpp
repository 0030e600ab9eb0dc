#pragma once

#include <array>
#include <atomic>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vp/grid.hpp"

namespace vp {

enum class Coords { qp, wz };

// Samples of a distribution on [-Lq,Lq]^2 x [-Lp,Lp]^2.
// Index order (a1, a2, b1, b2), b2 fastest.
class DistributionGrid {
  public:
    DistributionGrid() = default;
    DistributionGrid(Axis q, Axis p, Coords c = Coords::qp);

    template <class Fn>
    static DistributionGrid sample(Axis q, Axis p, Fn&& fn, Coords c = Coords::qp) {
        DistributionGrid g(q, p, c);
#pragma omp parallel for
        for (int i1 = 0; i1 < q.n; ++i1)
            for (int i2 = 0; i2 < q.n; ++i2)
                for (int j1 = 0; j1 < p.n; ++j1)
                    for (int j2 = 0; j2 < p.n; ++j2)
                        g.values[g.index(i1, i2, j1, j2)] =
                            fn(q.node(i1), q.node(i2), p.node(j1), p.node(j2));
        return g;
    }

    std::size_t index(int i1, int i2, int j1, int j2) const {
        return ((std::size_t(i1) * qa.n + i2) * pa.n + j1) * pa.n + j2;
    }
    double operator()(int i1, int i2, int j1, int j2) const { return values[index(i1, i2, j1, j2)]; }
    double& operator()(int i1, int i2, int j1, int j2) { return values[index(i1, i2, j1, j2)]; }
    std::size_t size() const { return values.size(); }
    const Axis& axis(int k) const { return k < 2 ? qa : pa; }
    bool same_shape(const DistributionGrid& o) const { return qa == o.qa && pa == o.pa; }

    Axis qa, pa;
    Coords coords = Coords::qp;
    std::vector<double> values;
};

// Gaussian A exp(-|q-qc|^2/(2 wq^2) - |p-pc|^2/(2 wp^2)), samples below floor set to 0.
struct GaussianSpec {
    double amplitude = 1.0;
    std::array<double, 2> q_center{0.0, 0.0};
    std::array<double, 2> p_center{0.0, 0.0};
    double q_width = 1.0;
    double p_width = 1.0;
};
DistributionGrid gaussian(Axis q, Axis p, const GaussianSpec& spec, double floor = 1e-14,
                          Coords c = Coords::qp);

// ----- norms -----
double lebesgue_norm(const DistributionGrid& g, int r);  // r = 2 or r = 0 meaning infinity
enum class WeightVar { p_like, q_like };
double weighted_sup_norm(const DistributionGrid& g, int a, WeightVar var = WeightVar::p_like);
// max of |p|^a |g| (plain power, not the bracket)
double p_power_sup(const DistributionGrid& g, int a);
// sup of the Euclidean norm of the q (or p) gradient, optionally weighted by <p>^a.
double gradient_sup(const DistributionGrid& g, bool wrt_p, int a = 0);

struct NormReport {
    double l2 = 0.0;
    double linf = 0.0;
    std::map<int, double> weighted;  // a -> ||<p>^a g||_inf
    double grad_q = 0.0;
    double grad_p = 0.0;
};
NormReport norm_report(const DistributionGrid& g, const std::vector<int>& exponents = {1, 2, 3});

double max_abs_diff(const DistributionGrid& a, const DistributionGrid& b);
double l2_diff(const DistributionGrid& a, const DistributionGrid& b);
// Largest |value| on the outermost grid shell.
double boundary_max(const DistributionGrid& g);

// ----- moments -----
struct Moments {
    Plane rho;
    std::array<Plane, 2> j;
};
Moments moments(const DistributionGrid& g);
Plane density(const DistributionGrid& g);

// ----- interpolation and transport -----
struct DomainCounter {
    std::atomic<long long> count{0};
};

// Tensor 4-point Lagrange interpolation at (a1, a2, b1, b2); zero outside the box.
double interpolate(const DistributionGrid& g, const std::array<double, 4>& x,
                   DomainCounter* counter = nullptr);

// Tensor cubic B-spline coefficients of g (zero extension outside the box) and their
// evaluation; the interpolant matches g at the nodes.
DistributionGrid spline_coefficients(const DistributionGrid& g, const std::array<bool, 4>& axes = {true, true, true, true});
double interpolate_spline(const DistributionGrid& coef, const std::array<double, 4>& x,
                          DomainCounter* counter = nullptr);

using PointMap = std::function<std::array<double, 4>(const std::array<double, 4>&)>;
// value(x) = interpolate(old, map(x)); throws SupportError when the out-of-box fraction
// exceeds max_outside_fraction.
DistributionGrid advect(const DistributionGrid& g, const PointMap& map,
                        double max_outside_fraction = 1e-3);

// Per-line shift function: receives the four indices (the one along the swept axis is 0).
using LineShift = std::function<double(int, int, int, int)>;
// Translate every line along `axis` by its own constant amount a: new(x) = old(x - a).
// Cubic B-spline interpolation with zero extension outside the box.
void shift_sweep(DistributionGrid& g, int axis, const LineShift& shift);

// ----- interpolation inequality check -----
struct InterpolationReport {
    double lhs = 0.0;          // || <x>^l grad_v f ||
    double rhs = 0.0;          // || <x>^{2l} f || + || grad_v^2 f ||
    double ratio = 0.0;        // lhs / rhs, 0 for zero data
    double sqrt_ratio_v = 0.0; // ||D_v f|| / sqrt(||f|| ||D_v^2 f||)
    double sqrt_ratio_x = 0.0; // same with x-derivatives
    bool pass = true;
};
InterpolationReport interpolation_inequality_check(const DistributionGrid& g, double ell,
                                                   double constant = 2.0);

// ----- binary dump -----
void write_vlns(const std::string& path, const DistributionGrid& g);
DistributionGrid read_vlns(const std::string& path);

}  // namespace vp
