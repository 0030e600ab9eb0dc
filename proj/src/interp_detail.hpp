#pragma once

#include <algorithm>
#include <cmath>

namespace vp::detail {

// Four-point Lagrange weights for fractional index t on an n-point axis.
// Stencil nodes k-1..k+2, clamped inside [0, n-1].
inline void lagrange_stencil(double t, int n, int& k, double w[4]) {
    k = std::clamp(static_cast<int>(std::floor(t)), 1, n - 3);
    const double u = t - k;
    w[0] = -u * (u - 1.0) * (u - 2.0) / 6.0;
    w[1] = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
    w[2] = -(u + 1.0) * u * (u - 2.0) / 2.0;
    w[3] = (u + 1.0) * u * (u - 1.0) / 6.0;
}

// Cubic B-spline weights for coefficients k-1..k+2 at offset u in [0,1).
inline void bspline_weights(double u, double w[4]) {
    const double u2 = u * u, u3 = u2 * u;
    w[0] = (1.0 - u) * (1.0 - u) * (1.0 - u) / 6.0;
    w[1] = (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0;
    w[2] = (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0;
    w[3] = u3 / 6.0;
}

}  // namespace vp::detail
