#include "vp/lens.hpp"

#include <cmath>
#include <numbers>

namespace vp {

double f_of_s(double s) { return 1.0 / ((1.0 - s) * (1.0 + s)); }

double F_of_s(double s) {
    // 0.5 ln((1+s)/(1-s)) = 0.5 log1p(2s/(1-s)); stays accurate as s -> 1.
    return 0.5 * std::log1p(2.0 * s / (1.0 - s));
}

double g_of_s(double s, int d) {
    const double w = (1.0 - s) * (1.0 + s);
    if (d == 2) return 1.0 / w;
    if (d == 4) return 1.0;
    return std::pow(w, 0.5 * (d - 4));
}

double one_plus_s_times_F(double s) {
    if (s <= -1.0) return 0.0;
    return (1.0 + s) * F_of_s(s);
}

LensChart::LensChart(Flavor flavor, int d) : flavor_(flavor), d_(d) {
    if (d < 2) throw std::invalid_argument("lens chart needs d >= 2");
}

void LensChart::check_time(double t) const {
    if (!std::isfinite(t)) throw DomainError("lens time must be finite");
    if (flavor_ == Flavor::trigonometric && std::abs(t) >= 0.5 * std::numbers::pi)
        throw DomainError("trigonometric lens needs |t| < pi/2");
}

ChartPoint LensChart::forward(double t, std::span<const double> x,
                              std::span<const double> v) const {
    check_time(t);
    ChartPoint out;
    out.a.resize(d_);
    out.b.resize(d_);
    if (flavor_ == Flavor::hyperbolic) {
        const double ch = std::cosh(t), sh = std::sinh(t);
        out.time = std::tanh(t);
        for (int i = 0; i < d_; ++i) {
            out.a[i] = x[i] / ch;
            out.b[i] = v[i] * ch - x[i] * sh;
        }
    } else {
        const double c = std::cos(t), sn = std::sin(t);
        out.time = std::tan(t);
        for (int i = 0; i < d_; ++i) {
            out.a[i] = x[i] / c;
            out.b[i] = x[i] * sn + v[i] * c;
        }
    }
    return out;
}

ChartPoint LensChart::inverse(double s, std::span<const double> q,
                              std::span<const double> p) const {
    if (!std::isfinite(s)) throw DomainError("lens time must be finite");
    ChartPoint out;
    out.a.resize(d_);
    out.b.resize(d_);
    if (flavor_ == Flavor::hyperbolic) {
        if (std::abs(s) >= 1.0) throw DomainError("lens time boundary |s| >= 1");
        const double r = std::sqrt((1.0 - s) * (1.0 + s));
        out.time = F_of_s(s);
        for (int i = 0; i < d_; ++i) {
            out.a[i] = q[i] / r;
            out.b[i] = s * q[i] / r + p[i] * r;
        }
    } else {
        const double r = std::sqrt(1.0 + s * s);
        out.time = std::atan(s);
        for (int i = 0; i < d_; ++i) {
            out.a[i] = q[i] / r;
            out.b[i] = p[i] * r - s * q[i] / r;
        }
    }
    return out;
}

Eigen::MatrixXd LensChart::jacobian(double t) const {
    check_time(t);
    double a, b, c;
    if (flavor_ == Flavor::hyperbolic) {
        a = 1.0 / std::cosh(t);
        b = -std::sinh(t);
        c = std::cosh(t);
    } else {
        a = 1.0 / std::cos(t);
        b = std::sin(t);
        c = std::cos(t);
    }
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * d_, 2 * d_);
    for (int i = 0; i < d_; ++i) {
        J(i, i) = a;
        J(d_ + i, i) = b;
        J(d_ + i, d_ + i) = c;
    }
    return J;
}

Eigen::MatrixXd symplectic_form(int d) {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    W.topRightCorner(d, d) = Eigen::MatrixXd::Identity(d, d);
    W.bottomLeftCorner(d, d) = -Eigen::MatrixXd::Identity(d, d);
    return W;
}

ElectricField pushforward_field(const ElectricField& E_lens, double t, int d) {
    const double ch = std::cosh(t);
    const double scale = std::pow(ch, -(d - 1));
    ElectricField out(Axis{E_lens.axis.n, E_lens.axis.L * ch}, Provenance::pushforward);
    for (int k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < E_lens.size(); ++i) out.c[k][i] = scale * E_lens.c[k][i];
    return out;
}

std::array<double, 2> pushforward_at(const ElectricField& E_lens, double t, double x1, double x2,
                                     int d) {
    const double ch = std::cosh(t);
    const double q1 = x1 / ch, q2 = x2 / ch, L = E_lens.axis.L;
    if (std::abs(q1) > L || std::abs(q2) > L)
        throw DomainError("physical point maps outside the lens grid");
    auto e = eval_field(E_lens, q1, q2);
    const double scale = std::pow(ch, -(d - 1));
    return {scale * e[0], scale * e[1]};
}

}  // namespace vp
