#include "vp/grid.hpp"

#include <algorithm>
#include <cmath>

#include "interp_detail.hpp"

namespace vp {

double ElectricField::sup() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) m = std::max(m, std::hypot(c[0][i], c[1][i]));
    return m;
}

double sup_diff(const ElectricField& a, const ElectricField& b) {
    if (!(a.axis == b.axis)) throw std::invalid_argument("field grids differ");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::hypot(a.c[0][i] - b.c[0][i], a.c[1][i] - b.c[1][i]));
    return m;
}

double eval_plane(const Plane& f, double x, double y) {
    const Axis& ax = f.axis;
    double tx = (x + ax.L) / ax.h(), ty = (y + ax.L) / ax.h();
    if (tx < 0 || ty < 0 || tx > ax.n - 1 || ty > ax.n - 1) return 0.0;
    int kx, ky;
    double wx[4], wy[4];
    detail::lagrange_stencil(tx, ax.n, kx, wx);
    detail::lagrange_stencil(ty, ax.n, ky, wy);
    double s = 0.0;
    for (int a = 0; a < 4; ++a) {
        const double* row = &f.v[std::size_t(kx - 1 + a) * ax.n + (ky - 1)];
        s += wx[a] * (wy[0] * row[0] + wy[1] * row[1] + wy[2] * row[2] + wy[3] * row[3]);
    }
    return s;
}

std::array<double, 2> eval_field(const ElectricField& E, double x, double y) {
    const Axis& ax = E.axis;
    double tx = (x + ax.L) / ax.h(), ty = (y + ax.L) / ax.h();
    if (tx < 0 || ty < 0 || tx > ax.n - 1 || ty > ax.n - 1) return {0.0, 0.0};
    int kx, ky;
    double wx[4], wy[4];
    detail::lagrange_stencil(tx, ax.n, kx, wx);
    detail::lagrange_stencil(ty, ax.n, ky, wy);
    double s0 = 0.0, s1 = 0.0;
    for (int a = 0; a < 4; ++a) {
        const std::size_t base = std::size_t(kx - 1 + a) * ax.n + (ky - 1);
        const double* r0 = &E.c[0][base];
        const double* r1 = &E.c[1][base];
        s0 += wx[a] * (wy[0] * r0[0] + wy[1] * r0[1] + wy[2] * r0[2] + wy[3] * r0[3]);
        s1 += wx[a] * (wy[0] * r1[0] + wy[1] * r1[1] + wy[2] * r1[2] + wy[3] * r1[3]);
    }
    return {s0, s1};
}

}  // namespace vp
