#include "vp/wave_operator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "interp_detail.hpp"
#include "vp/lens.hpp"

namespace vp {

namespace {

Plane plane_derivative(const Plane& f, int axis) {
    const Axis a = f.axis;
    const double h = a.h();
    Plane d(a);
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) {
            auto at = [&](int di) {
                int ii = i, jj = j;
                (axis == 0 ? ii : jj) += di;
                return f(ii, jj);
            };
            const int k = axis == 0 ? i : j;
            if (k == 0) d(i, j) = (at(1) - at(0)) / h;
            else if (k == a.n - 1) d(i, j) = (at(0) - at(-1)) / h;
            else d(i, j) = (at(1) - at(-1)) / (2.0 * h);
        }
    return d;
}

double plane_sup(const Plane& p) {
    double m = 0.0;
    for (double v : p.v) m = std::max(m, std::abs(v));
    return m;
}

// 2D cubic B-spline evaluation in the (a1, a2) pair of axes of a coefficient grid, the
// other pair held at fixed indices (o1, o2).
double spline2(const DistributionGrid& coef, bool w_axes, double x1, double x2, int o1, int o2) {
    const Axis& ax = w_axes ? coef.qa : coef.pa;
    const double t1 = (x1 + ax.L) / ax.h(), t2 = (x2 + ax.L) / ax.h();
    if (!(t1 >= 0.0 && t1 <= ax.n - 1 && t2 >= 0.0 && t2 <= ax.n - 1)) return 0.0;
    const double f1 = std::floor(t1), f2 = std::floor(t2);
    const int k1 = int(f1), k2 = int(f2);
    double w1[4], w2[4];
    detail::bspline_weights(t1 - f1, w1);
    detail::bspline_weights(t2 - f2, w2);
    double s = 0.0;
    for (int a = 0; a < 4; ++a) {
        const int i = k1 - 1 + a;
        if (i < 0 || i >= ax.n) continue;
        double row = 0.0;
        for (int b = 0; b < 4; ++b) {
            const int j = k2 - 1 + b;
            if (j < 0 || j >= ax.n) continue;
            row += w2[b] * (w_axes ? coef(i, j, o1, o2) : coef(o1, o2, i, j));
        }
        s += w1[a] * row;
    }
    return s;
}

Eigen::Vector2d field_at(const ElectricField& E, const Eigen::Vector2d& x) {
    const auto e = eval_field(E, x(0), x(1));
    return {e[0], e[1]};
}

Eigen::Matrix2d grad_at(const std::array<Plane, 4>& d1, const Eigen::Vector2d& x) {
    Eigen::Matrix2d m;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m(i, j) = eval_plane(d1[i * 2 + j], x(0), x(1));
    return m;
}

std::array<Plane, 4> gradient_planes(const ElectricField& E) {
    const auto g = field_gradient(E);
    return {g[0][0], g[0][1], g[1][0], g[1][1]};
}

// kappa = lam F(s) (s+1), with its limit 0 at s = -1
double kappa(double s, int lambda) { return s <= -1.0 ? 0.0 : lambda * one_plus_s_times_F(s); }

}  // namespace

ReferenceField ReferenceField::make(const ElectricField& E) {
    ReferenceField r;
    r.E = E;
    r.d1 = gradient_planes(E);
    for (int ij = 0; ij < 4; ++ij)
        for (int k = 0; k < 2; ++k) r.d2[ij * 2 + k] = plane_derivative(r.d1[ij], k);
    for (int ijk = 0; ijk < 8; ++ijk)
        for (int l = 0; l < 2; ++l) r.d3[ijk * 2 + l] = plane_derivative(r.d2[ijk], l);
    return r;
}

Eigen::Vector2d ReferenceField::value(double x, double y) const { return field_at(E, {x, y}); }

Eigen::Matrix2d ReferenceField::grad(double x, double y) const { return grad_at(d1, {x, y}); }

double ReferenceField::w3_norm() const {
    double m = E.sup();
    for (const auto& p : d1) m = std::max(m, plane_sup(p));
    for (const auto& p : d2) m = std::max(m, plane_sup(p));
    for (const auto& p : d3) m = std::max(m, plane_sup(p));
    return m;
}

double theta_weight(double s, double z1, double z2) {
    const double b = std::sqrt(1.0 + z1 * z1 + z2 * z2);
    return b / (1.0 + (s + 1.0) * b);
}

ChartPair chart_from_gamma(const Eigen::Vector2d& q, const Eigen::Vector2d& p, double s,
                           const ReferenceField& ref, int lambda) {
    const Eigen::Vector2d w = q - (s + 1.0) * p;
    if (s <= -1.0) return {w, p};
    const Eigen::Vector2d z = p - lambda * F_of_s(s) * ref.value(w(0), w(1));
    return {w, z};
}

ChartPair chart_to_gamma(const Eigen::Vector2d& w, const Eigen::Vector2d& z, double s,
                         const ReferenceField& ref, int lambda) {
    if (s <= -1.0) return {w, z};
    const Eigen::Vector2d e = ref.value(w(0), w(1));
    const Eigen::Vector2d q = w + (s + 1.0) * z + kappa(s, lambda) * e;
    const Eigen::Vector2d p = z + lambda * F_of_s(s) * e;
    return {q, p};
}

KappaGradients kappa_gradients(double s, const Eigen::Vector2d& w, const Eigen::Vector2d& z,
                               const ElectricField* E_s, const ReferenceField& ref, int lambda) {
    const Eigen::Vector2d em1 = ref.value(w(0), w(1));
    const Eigen::Vector2d q = w + (s + 1.0) * z + kappa(s, lambda) * em1;
    const Eigen::Vector2d e = E_s ? field_at(*E_s, q) : field_at(ref.E, q);
    KappaGradients k;
    k.dz = -lambda * e / (1.0 - s);
    if (s <= -1.0) {
        k.dw.setZero();
        return k;
    }
    const Eigen::Matrix2d H = ref.grad(w(0), w(1));
    const double f = f_of_s(s), F = F_of_s(s);
    k.dw = -lambda * f * (e - em1) - double(lambda) * lambda * F / (1.0 - s) * (H * e);
    return k;
}

Plane sigma_density(const DistributionGrid& sigma, double s, const ReferenceField& ref, int lambda) {
    const Axis wa = sigma.qa, za = sigma.pa;
    Plane rho(wa);
    const double kap = kappa(s, lambda);
    DistributionGrid sq = sigma;
    for (double& v : sq.values) v *= v;
    // Spline in w of sigma^2 at each fixed z.
    DistributionGrid coef = spline_coefficients(sq, {true, true, false, false});
    std::vector<double> wz(za.n);
    for (int j = 0; j < za.n; ++j) wz[j] = (j == 0 || j == za.n - 1) ? 0.5 * za.h() : za.h();
    const double gsup = kap == 0.0 ? 0.0 : std::abs(kap) * ref.w3_norm();
#pragma omp parallel for schedule(static)
    for (int i1 = 0; i1 < wa.n; ++i1)
        for (int i2 = 0; i2 < wa.n; ++i2) {
            const Eigen::Vector2d Q(wa.node(i1), wa.node(i2));
            double acc = 0.0;
            for (int j1 = 0; j1 < za.n; ++j1)
                for (int j2 = 0; j2 < za.n; ++j2) {
                    const Eigen::Vector2d z(za.node(j1), za.node(j2));
                    Eigen::Vector2d w = Q - (s + 1.0) * z;
                    double jac = 1.0;
                    if (gsup > 0.0) {
                        const Eigen::Vector2d base = w;
                        for (int it = 0; it < 8; ++it) {
                            const Eigen::Vector2d next = base - kap * ref.value(w(0), w(1));
                            const double delta = (next - w).lpNorm<Eigen::Infinity>();
                            w = next;
                            if (delta < 1e-15) break;
                        }
                        jac = (Eigen::Matrix2d::Identity() + kap * ref.grad(w(0), w(1))).determinant();
                    }
                    const double v = spline2(coef, true, w(0), w(1), j1, j2);
                    acc += wz[j1] * wz[j2] * v / jac;
                }
            rho(i1, i2) = std::max(acc, 0.0);
        }
    return rho;
}

ElectricField sigma_field(const DistributionGrid& sigma, double s, const ReferenceField& ref, int lambda) {
    return solve_field(sigma_density(sigma, s, ref, lambda));
}

std::vector<double> backward_mesh(const WaveConfig& cfg) {
    if (cfg.T > 0.0) throw std::invalid_argument("backward_mesh: T must be <= 0");
    if (cfg.m <= 0 || cfg.K0 < 1) throw std::invalid_argument("backward_mesh: need m > 0 and K0 >= 1");
    std::vector<double> mesh{-1.0};
    auto fill = [&](double a, double b, double ds) {
        const int n = std::max(1, int(std::ceil((b - a) / ds - 1e-9)));
        for (int i = 1; i <= n; ++i) mesh.push_back(i == n ? b : a + (b - a) * i / n);
    };
    double s = -1.0;
    for (int j = cfg.K0 + 1; j >= 1; --j) {
        const double edge = std::min(-1.0 + std::ldexp(1.0, -j), cfg.T);
        if (edge <= s) break;
        const double len = j == cfg.K0 + 1 ? std::ldexp(1.0, -j) : std::ldexp(1.0, -j - 1);
        fill(s, edge, len / cfg.m);
        s = edge;
    }
    if (cfg.T > s) fill(s, cfg.T, 0.5 / cfg.m);
    return mesh;
}

namespace {

// sigma <- sigma transported along (w' = grad_z K) for duration tau at fixed z.
void w_substep(DistributionGrid& sigma, double smid, double tau, const ElectricField& E,
               const ReferenceField& ref, int lambda) {
    const DistributionGrid coef = spline_coefficients(sigma, {true, true, false, false});
    const Axis wa = sigma.qa, za = sigma.pa;
    const double kap = kappa(smid, lambda);
    auto W = [&](const Eigen::Vector2d& w, const Eigen::Vector2d& z) {
        const Eigen::Vector2d q = w + (smid + 1.0) * z + kap * ref.value(w(0), w(1));
        return Eigen::Vector2d(-lambda * field_at(E, q) / (1.0 - smid));
    };
#pragma omp parallel for schedule(static)
    for (int i1 = 0; i1 < wa.n; ++i1)
        for (int i2 = 0; i2 < wa.n; ++i2)
            for (int j1 = 0; j1 < za.n; ++j1)
                for (int j2 = 0; j2 < za.n; ++j2) {
                    const Eigen::Vector2d w(wa.node(i1), wa.node(i2)), z(za.node(j1), za.node(j2));
                    const Eigen::Vector2d wh = w - 0.5 * tau * W(w, z);
                    const Eigen::Vector2d wf = w - tau * W(wh, z);
                    sigma(i1, i2, j1, j2) = spline2(coef, true, wf(0), wf(1), j1, j2);
                }
}

// sigma <- sigma transported along (z' = -grad_w K) for duration tau at fixed w.
void z_substep(DistributionGrid& sigma, double smid, double tau, const ElectricField& E,
               const ReferenceField& ref, int lambda) {
    const DistributionGrid coef = spline_coefficients(sigma, {false, false, true, true});
    const Axis wa = sigma.qa, za = sigma.pa;
    const double kap = kappa(smid, lambda);
    const double f = f_of_s(smid), F = F_of_s(smid);
    const double c2 = double(lambda) * lambda * F / (1.0 - smid);
#pragma omp parallel for schedule(static)
    for (int i1 = 0; i1 < wa.n; ++i1)
        for (int i2 = 0; i2 < wa.n; ++i2) {
            const Eigen::Vector2d w(wa.node(i1), wa.node(i2));
            const Eigen::Vector2d em1 = ref.value(w(0), w(1));
            const Eigen::Matrix2d H = ref.grad(w(0), w(1));
            const Eigen::Vector2d qb = w + kap * em1;
            auto Z = [&](const Eigen::Vector2d& z) {
                const Eigen::Vector2d e = field_at(E, qb + (smid + 1.0) * z);
                return Eigen::Vector2d(lambda * f * (e - em1) + c2 * (H * e));
            };
            for (int j1 = 0; j1 < za.n; ++j1)
                for (int j2 = 0; j2 < za.n; ++j2) {
                    const Eigen::Vector2d z(za.node(j1), za.node(j2));
                    const Eigen::Vector2d zh = z - 0.5 * tau * Z(z);
                    const Eigen::Vector2d zf = z - tau * Z(zh);
                    sigma(i1, i2, j1, j2) = spline2(coef, false, zf(0), zf(1), i1, i2);
                }
        }
}

}  // namespace

void sigma_step(DistributionGrid& sigma, double s, double ds, const ElectricField& E_mid,
                const ReferenceField& ref, int lambda) {
    const double smid = s + 0.5 * ds;
    w_substep(sigma, smid, 0.5 * ds, E_mid, ref, lambda);
    z_substep(sigma, smid, ds, E_mid, ref, lambda);
    w_substep(sigma, smid, 0.5 * ds, E_mid, ref, lambda);
}

namespace {

// Central-difference gradient and Hessian at interior nodes; body(id, grad, hess).
template <class Body>
void for_interior(const DistributionGrid& g, Body&& body) {
    const int nq = g.qa.n, np = g.pa.n;
    const double h[4] = {g.qa.h(), g.qa.h(), g.pa.h(), g.pa.h()};
    const std::ptrdiff_t stride[4] = {std::ptrdiff_t(nq) * np * np, std::ptrdiff_t(np) * np, np, 1};
    for (int i1 = 1; i1 < nq - 1; ++i1)
        for (int i2 = 1; i2 < nq - 1; ++i2)
            for (int j1 = 1; j1 < np - 1; ++j1)
                for (int j2 = 1; j2 < np - 1; ++j2) {
                    const double* c = &g.values[g.index(i1, i2, j1, j2)];
                    double gr[4], hs[4][4];
                    for (int a = 0; a < 4; ++a) {
                        gr[a] = (c[stride[a]] - c[-stride[a]]) / (2.0 * h[a]);
                        hs[a][a] = (c[stride[a]] - 2.0 * c[0] + c[-stride[a]]) / (h[a] * h[a]);
                        for (int b = a + 1; b < 4; ++b) {
                            hs[a][b] = hs[b][a] = (c[stride[a] + stride[b]] - c[stride[a] - stride[b]] -
                                                   c[-stride[a] + stride[b]] + c[-stride[a] - stride[b]]) /
                                                  (4.0 * h[a] * h[b]);
                        }
                    }
                    body(std::array<int, 4>{i1, i2, j1, j2}, gr, hs);
                }
}

double block_norm(const double hs[4][4], int a0, int b0) {
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) s += hs[a0 + a][b0 + b] * hs[a0 + a][b0 + b];
    return std::sqrt(s);
}

struct BootstrapNorms {
    double A1 = 0.0, A2 = 0.0, A3 = 0.0;
    bool bracket = true;
};

BootstrapNorms bootstrap_norms(const DistributionGrid& g, double s) {
    BootstrapNorms out;
    out.A1 = lebesgue_norm(g, 2) + weighted_sup_norm(g, 4);
    double gw = 0, tgz = 0, hww = 0, thwz = 0, t2hzz = 0;
    for_interior(g, [&](const std::array<int, 4>& id, const double* gr, const double (*hs)[4]) {
        const double z1 = g.pa.node(id[2]), z2 = g.pa.node(id[3]);
        const double th = theta_weight(s, z1, z2);
        const double bz = std::sqrt(1.0 + z1 * z1 + z2 * z2);
        const double lo = 0.5 * std::min(bz, s > -1.0 ? 1.0 / (s + 1.0) : INFINITY);
        const double hi = std::min(bz, s > -1.0 ? 1.0 / (s + 1.0) : INFINITY);
        if (th < lo * (1 - 1e-14) || th > hi * (1 + 1e-14)) out.bracket = false;
        gw = std::max(gw, std::hypot(gr[0], gr[1]));
        tgz = std::max(tgz, th * std::hypot(gr[2], gr[3]));
        hww = std::max(hww, block_norm(hs, 0, 0));
        thwz = std::max(thwz, th * block_norm(hs, 0, 2));
        t2hzz = std::max(t2hzz, th * th * block_norm(hs, 2, 2));
    });
    out.A2 = gw + tgz;
    out.A3 = hww + thwz + t2hzz;
    return out;
}

struct SecondOrderK {
    Eigen::Matrix2d ww, wz, zz;
};

// grad^2 K at a (w,z) point by the chain rule through q(s,w,z).
SecondOrderK kappa_second(double s, const Eigen::Vector2d& w, const Eigen::Vector2d& z, const ElectricField& E,
                          const std::array<Plane, 4>& dE, const ReferenceField& ref, int lambda) {
    const double kap = kappa(s, lambda);
    const Eigen::Vector2d em1 = ref.value(w(0), w(1));
    const Eigen::Matrix2d H = ref.grad(w(0), w(1));
    const Eigen::Vector2d q = w + (s + 1.0) * z + kap * em1;
    const Eigen::Vector2d e = field_at(E, q);
    const Eigen::Matrix2d G = grad_at(dE, q);
    const Eigen::Matrix2d J = Eigen::Matrix2d::Identity() + kap * H;
    const double f = f_of_s(s), F = F_of_s(s);
    const double l2 = double(lambda) * lambda;
    SecondOrderK k;
    // (j,k) = d_{w_j} (grad_z K)_k
    k.wz = (-lambda / (1.0 - s) * G * J).transpose();
    k.zz = -lambda * (1.0 + s) / (1.0 - s) * G;
    Eigen::Matrix2d third;  // (k,j) = sum_a d_j d_a E_{-1,k} e_a
    for (int kk = 0; kk < 2; ++kk)
        for (int j = 0; j < 2; ++j) {
            double acc = 0.0;
            for (int a = 0; a < 2; ++a) acc += eval_plane(ref.d2[(kk * 2 + a) * 2 + j], w(0), w(1)) * e(a);
            third(kk, j) = acc;
        }
    const Eigen::Matrix2d M = -lambda * f * (G * J - H) - l2 * F / (1.0 - s) * (third + H * G * J);
    k.ww = M.transpose();
    return k;
}

}  // namespace

SigmaCheckpoint commutator_diagnostics(const DistributionGrid& sigma, double s, const ElectricField& E_s,
                                       const ReferenceField& ref, int lambda) {
    SigmaCheckpoint c;
    c.s = s;
    const auto nb = bootstrap_norms(sigma, s);
    c.A1 = nb.A1;
    c.A2 = nb.A2;
    c.A3 = nb.A3;
    c.theta_bracket = nb.bracket;
    // d theta/ds from the quotient rule, checked against -theta^2
    for (int j = 0; j < sigma.pa.n; ++j) {
        const double z = sigma.pa.node(j);
        const double b = std::sqrt(1.0 + z * z), den = 1.0 + (s + 1.0) * b;
        const double th = theta_weight(s, z, 0.0);
        c.theta_ode_residual = std::max(c.theta_ode_residual, std::abs(-b * b / (den * den) + th * th));
    }
    if (s <= -1.0) return c;
    const auto dE = gradient_planes(E_s);
    const Axis wa = sigma.qa, za = sigma.pa;
    const double hw = 0.5 * wa.h();
    double sec = 0.0, thd = 0.0, dwk = 0.0;
    // every other node keeps the cost at a fraction of a transport step
    for (int i1 = 0; i1 < wa.n; i1 += 2)
        for (int i2 = 0; i2 < wa.n; i2 += 2)
            for (int j1 = 0; j1 < za.n; j1 += 2)
                for (int j2 = 0; j2 < za.n; j2 += 2) {
                    const Eigen::Vector2d w(wa.node(i1), wa.node(i2)), z(za.node(j1), za.node(j2));
                    const double th = theta_weight(s, z(0), z(1));
                    const auto k = kappa_second(s, w, z, E_s, dE, ref, lambda);
                    sec = std::max(sec, k.wz.norm() + th * k.zz.norm() + k.ww.norm() / th);
                    dwk = std::max(dwk, kappa_gradients(s, w, z, &E_s, ref, lambda).dw.norm());
                    double t = 0.0;
                    for (int a = 0; a < 2; ++a) {
                        Eigen::Vector2d e = Eigen::Vector2d::Zero();
                        e(a) = hw;
                        const auto kp = kappa_second(s, w + e, z, E_s, dE, ref, lambda);
                        const auto km = kappa_second(s, w - e, z, E_s, dE, ref, lambda);
                        const auto zp = kappa_second(s, w, z + e, E_s, dE, ref, lambda);
                        const auto zm = kappa_second(s, w, z - e, E_s, dE, ref, lambda);
                        t += (kp.wz - km.wz).norm() / (2 * hw) + th * (zp.wz - zm.wz).norm() / (2 * hw) +
                             (kp.ww - km.ww).norm() / (2 * hw) / th;
                    }
                    thd = std::max(thd, t);
                }
    c.second_order = sec;
    c.third_order = thd;
    c.dwK_sup = dwk;
    return c;
}

double sigma_initial_norm(const DistributionGrid& g) {
    double gw = 0, zgz = 0, hww = 0, zhwz = 0, z2hzz = 0;
    for_interior(g, [&](const std::array<int, 4>& id, const double* gr, const double (*hs)[4]) {
        const double z1 = g.pa.node(id[2]), z2 = g.pa.node(id[3]);
        const double bz = std::sqrt(1.0 + z1 * z1 + z2 * z2);
        gw = std::max(gw, std::hypot(gr[0], gr[1]));
        zgz = std::max(zgz, bz * std::hypot(gr[2], gr[3]));
        hww = std::max(hww, block_norm(hs, 0, 0));
        zhwz = std::max(zhwz, bz * block_norm(hs, 0, 2));
        z2hzz = std::max(z2hzz, bz * bz * block_norm(hs, 2, 2));
    });
    return lebesgue_norm(g, 2) + weighted_sup_norm(g, 4) + lebesgue_norm(g, 0) + gw + zgz + hww + zhwz + z2hzz;
}

BackwardResult backward_picard(const DistributionGrid& sigma_m1, const WaveConfig& cfg) {
    const auto mesh = backward_mesh(cfg);
    const std::size_t nsteps = mesh.size() - 1;
    const int lam = cfg.lambda;
    BackwardResult res;
    res.sigma0_norm = sigma_initial_norm(sigma_m1);
    const ReferenceField ref = ReferenceField::make(solve_field(density(sigma_m1)));
    res.E_ref_w3 = ref.w3_norm();
    const double tol = cfg.picard_tol * std::max(lebesgue_norm(sigma_m1, 0), 1e-300);

    // iterate 0 is sigma_{-1} at every time
    std::vector<ElectricField> fields(nsteps);
    for (std::size_t i = 0; i < nsteps; ++i) fields[i] = sigma_field(sigma_m1, 0.5 * (mesh[i] + mesh[i + 1]), ref, lam);

    auto is_edge = [&](double s) {
        for (int j = 1; j <= cfg.K0 + 1; ++j)
            if (std::abs(s - (-1.0 + std::ldexp(1.0, -j))) < 1e-13) return true;
        return std::abs(s - cfg.T) < 1e-13;
    };

    DistributionGrid prev = sigma_m1;
    std::vector<std::pair<double, DistributionGrid>> snaps;
    for (int n = 1; n <= cfg.picard_max_iter; ++n) {
        DistributionGrid g = sigma_m1;
        std::vector<ElectricField> next(nsteps);
        std::vector<std::pair<double, DistributionGrid>> cur{{-1.0, g}};
        for (std::size_t i = 0; i < nsteps; ++i) {
            const double s = mesh[i], ds = mesh[i + 1] - s, smid = s + 0.5 * ds;
            w_substep(g, smid, 0.5 * ds, fields[i], ref, lam);
            next[i] = sigma_field(g, smid, ref, lam);
            z_substep(g, smid, ds, fields[i], ref, lam);
            w_substep(g, smid, 0.5 * ds, fields[i], ref, lam);
            if (is_edge(mesh[i + 1])) cur.emplace_back(mesh[i + 1], g);
        }
        const double dsup = max_abs_diff(g, prev);
        res.sup_diff.push_back(dsup);
        res.l2_diff.push_back(l2_diff(g, prev));
        if (res.sup_diff.size() >= 2) {
            const double d0 = res.sup_diff[res.sup_diff.size() - 2];
            res.ratio.push_back(d0 > 0 ? dsup / d0 : 0.0);
        }
        res.iterations = n;
        prev = std::move(g);
        fields = std::move(next);
        snaps = std::move(cur);
        if (dsup <= tol) {
            res.converged = true;
            break;
        }
    }
    res.sigma_T = prev;
    res.sigma_T.coords = Coords::wz;
    for (const auto& [s, g] : snaps) {
        const ElectricField E = s <= -1.0 ? ref.E : sigma_field(g, s, ref, lam);
        res.checkpoints.push_back(commutator_diagnostics(g, s, E, ref, lam));
    }
    return res;
}

DistributionGrid sigma_to_gamma(const DistributionGrid& sigma, double s, const ReferenceField& ref, int lambda) {
    const DistributionGrid coef = spline_coefficients(sigma);
    DistributionGrid g(sigma.qa, sigma.pa, Coords::qp);
    const Axis qa = sigma.qa, pa = sigma.pa;
#pragma omp parallel for schedule(static)
    for (int i1 = 0; i1 < qa.n; ++i1)
        for (int i2 = 0; i2 < qa.n; ++i2)
            for (int j1 = 0; j1 < pa.n; ++j1)
                for (int j2 = 0; j2 < pa.n; ++j2) {
                    const auto c = chart_from_gamma({qa.node(i1), qa.node(i2)}, {pa.node(j1), pa.node(j2)}, s, ref, lambda);
                    g(i1, i2, j1, j2) = interpolate_spline(coef, {c.a(0), c.a(1), c.b(0), c.b(1)});
                }
    return g;
}

DistributionGrid reverse_velocity(const DistributionGrid& g) {
    DistributionGrid out(g.qa, g.pa, g.coords);
    const int nq = g.qa.n, np = g.pa.n;
    for (int i1 = 0; i1 < nq; ++i1)
        for (int i2 = 0; i2 < nq; ++i2)
            for (int j1 = 0; j1 < np; ++j1)
                for (int j2 = 0; j2 < np; ++j2) out(i1, i2, j1, j2) = g(i1, i2, np - 1 - j1, np - 1 - j2);
    return out;
}

namespace {

void require_contraction(const BackwardResult& b, const WaveConfig& cfg, const std::string& leg) {
    for (double r : b.ratio)
        if (r > cfg.contraction_limit)
            throw NumericalFailure(leg + ": backward Picard ratio " + std::to_string(r) + " exceeds " +
                                       std::to_string(cfg.contraction_limit),
                                   23);
    if (!b.converged)
        throw NumericalFailure(leg + ": backward Picard did not converge in " + std::to_string(b.iterations) +
                                   " iterates",
                               21);
}

}  // namespace

WaveResult wave_operator(const DistributionGrid& mu_inf, const WaveConfig& cfg, const SolverConfig& fwd) {
    WaveResult out;
    DistributionGrid sigma_m1 = reverse_velocity(mu_inf);
    sigma_m1.coords = Coords::wz;
    out.backward = backward_picard(sigma_m1, cfg);
    require_contraction(out.backward, cfg, "wave operator");
    const ReferenceField ref = ReferenceField::make(solve_field(density(sigma_m1)));
    out.gamma_T = sigma_to_gamma(out.backward.sigma_T, cfg.T, ref, cfg.lambda);
    SolverConfig sc = fwd;
    sc.lambda = cfg.lambda;
    sc.checkpoint_dir.clear();
    DistributionGrid g0 = out.gamma_T;
    if (cfg.T < 0.0) g0 = evolve(out.gamma_T, 0.0, sc, cfg.T).final;
    out.mu0 = reverse_velocity(g0);
    return out;
}

ScatteringMapResult scattering_map(const DistributionGrid& mu_minus, const WaveConfig& cfg,
                                   const ScatteringConfig& fwd) {
    ScatteringMapResult out;
    DistributionGrid sigma_m1 = mu_minus;
    sigma_m1.coords = Coords::wz;
    out.backward = backward_picard(sigma_m1, cfg);
    require_contraction(out.backward, cfg, "scattering map");
    const ReferenceField ref = ReferenceField::make(solve_field(density(sigma_m1)));
    const DistributionGrid gT = sigma_to_gamma(out.backward.sigma_T, cfg.T, ref, cfg.lambda);
    ScatteringConfig sc = fwd;
    sc.solver.lambda = cfg.lambda;
    sc.s_start = cfg.T;
    try {
        out.forward = run_scattering(gT, sc);
    } catch (const NumericalFailure& e) {
        throw NumericalFailure(std::string("scattering map: forward leg: ") + e.what(), 22);
    }
    out.mu_plus = out.forward.profile.mu_inf;
    out.E_plus = out.forward.profile.E_inf;
    out.l2_minus = lebesgue_norm(mu_minus, 2);
    out.l2_plus = lebesgue_norm(out.mu_plus, 2);
    out.l2_relative_change = out.l2_minus > 0 ? std::abs(out.l2_plus - out.l2_minus) / out.l2_minus : 0.0;
    out.E_mismatch = verify_E_consistency(out.mu_plus, out.E_plus);
    return out;
}

void write_wave_csv(const std::string& path, const BackwardResult& r) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "iterate,sup_diff,l2_diff,ratio\n" << std::setprecision(17);
    for (std::size_t i = 0; i < r.sup_diff.size(); ++i)
        out << i + 1 << ',' << r.sup_diff[i] << ',' << r.l2_diff[i] << ',' << (i >= 1 ? r.ratio[i - 1] : 0.0) << '\n';
}

}  // namespace vp
