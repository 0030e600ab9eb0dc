#include "vp/phase_state.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "interp_detail.hpp"

namespace vp {

namespace {

double trap_weight(const Axis& a, int i) { return (i == 0 || i == a.n - 1) ? 0.5 * a.h() : a.h(); }

inline double bracket(double x1, double x2) { return std::sqrt(1.0 + x1 * x1 + x2 * x2); }

// Central difference along one axis at a flat index; one-sided at the box edge.
inline double diff_axis(const DistributionGrid& g, const std::array<int, 4>& id, int axis,
                        std::size_t flat) {
    const Axis& ax = g.axis(axis);
    const int n = ax.n;
    std::size_t stride = 1;
    for (int k = 3; k > axis; --k) stride *= g.axis(k).n;
    const int i = id[axis];
    const double* v = g.values.data();
    if (i == 0) return (v[flat + stride] - v[flat]) / ax.h();
    if (i == n - 1) return (v[flat] - v[flat - stride]) / ax.h();
    return (v[flat + stride] - v[flat - stride]) / (2.0 * ax.h());
}

inline double diff2_axis(const DistributionGrid& g, const std::array<int, 4>& id, int a, int b,
                         std::size_t flat) {
    const double* v = g.values.data();
    std::size_t sa = 1, sb = 1;
    for (int k = 3; k > a; --k) sa *= g.axis(k).n;
    for (int k = 3; k > b; --k) sb *= g.axis(k).n;
    const int na = g.axis(a).n, nb = g.axis(b).n;
    if (id[a] == 0 || id[a] == na - 1 || id[b] == 0 || id[b] == nb - 1) return 0.0;
    const double ha = g.axis(a).h(), hb = g.axis(b).h();
    if (a == b) return (v[flat + sa] - 2.0 * v[flat] + v[flat - sa]) / (ha * ha);
    return (v[flat + sa + sb] - v[flat + sa - sb] - v[flat - sa + sb] + v[flat - sa - sb]) /
           (4.0 * ha * hb);
}

template <class Body>
void for_each_point(const DistributionGrid& g, Body&& body) {
    const int nq = g.qa.n, np = g.pa.n;
#pragma omp parallel for
    for (int i1 = 0; i1 < nq; ++i1)
        for (int i2 = 0; i2 < nq; ++i2)
            for (int j1 = 0; j1 < np; ++j1)
                for (int j2 = 0; j2 < np; ++j2) body(std::array<int, 4>{i1, i2, j1, j2});
}

// Deterministic max-reduction: per-slab partials then a serial pass.
template <class Val>
double slab_max(const DistributionGrid& g, Val&& val) {
    const int nq = g.qa.n, np = g.pa.n;
    std::vector<double> part(nq, 0.0);
#pragma omp parallel for
    for (int i1 = 0; i1 < nq; ++i1) {
        double m = 0.0;
        for (int i2 = 0; i2 < nq; ++i2)
            for (int j1 = 0; j1 < np; ++j1)
                for (int j2 = 0; j2 < np; ++j2)
                    m = std::max(m, val(std::array<int, 4>{i1, i2, j1, j2}, g.index(i1, i2, j1, j2)));
        part[i1] = m;
    }
    double m = 0.0;
    for (double x : part) m = std::max(m, x);
    return m;
}

template <class Val>
double slab_sum(const DistributionGrid& g, Val&& val) {
    const int nq = g.qa.n, np = g.pa.n;
    std::vector<double> part(nq, 0.0);
#pragma omp parallel for
    for (int i1 = 0; i1 < nq; ++i1) {
        double s = 0.0;
        for (int i2 = 0; i2 < nq; ++i2)
            for (int j1 = 0; j1 < np; ++j1)
                for (int j2 = 0; j2 < np; ++j2) {
                    const double w = trap_weight(g.qa, i1) * trap_weight(g.qa, i2) *
                                     trap_weight(g.pa, j1) * trap_weight(g.pa, j2);
                    s += w * val(g.index(i1, i2, j1, j2));
                }
        part[i1] = s;
    }
    double s = 0.0;
    for (double x : part) s += x;
    return s;
}

}  // namespace

DistributionGrid::DistributionGrid(Axis q, Axis p, Coords c)
    : qa(q), pa(p), coords(c), values(std::size_t(q.n) * q.n * p.n * p.n, 0.0) {
    if (q.n < 4 || p.n < 4) throw std::invalid_argument("grid needs at least 4 points per axis");
}

DistributionGrid gaussian(Axis q, Axis p, const GaussianSpec& s, double floor, Coords c) {
    return DistributionGrid::sample(
        q, p,
        [&](double q1, double q2, double p1, double p2) {
            const double a1 = q1 - s.q_center[0], a2 = q2 - s.q_center[1];
            const double b1 = p1 - s.p_center[0], b2 = p2 - s.p_center[1];
            const double v =
                s.amplitude * std::exp(-(a1 * a1 + a2 * a2) / (2 * s.q_width * s.q_width) -
                                       (b1 * b1 + b2 * b2) / (2 * s.p_width * s.p_width));
            return std::abs(v) < floor * std::abs(s.amplitude) ? 0.0 : v;
        },
        c);
}

double lebesgue_norm(const DistributionGrid& g, int r) {
    if (r == 2) return std::sqrt(slab_sum(g, [&](std::size_t k) { return g.values[k] * g.values[k]; }));
    return slab_max(g, [&](const std::array<int, 4>&, std::size_t k) { return std::abs(g.values[k]); });
}

double weighted_sup_norm(const DistributionGrid& g, int a, WeightVar var) {
    return slab_max(g, [&](const std::array<int, 4>& id, std::size_t k) {
        const int o = var == WeightVar::p_like ? 2 : 0;
        const Axis& ax = g.axis(o);
        return std::pow(bracket(ax.node(id[o]), ax.node(id[o + 1])), a) * std::abs(g.values[k]);
    });
}

double p_power_sup(const DistributionGrid& g, int a) {
    return slab_max(g, [&](const std::array<int, 4>& id, std::size_t k) {
        const double p1 = g.pa.node(id[2]), p2 = g.pa.node(id[3]);
        return std::pow(p1 * p1 + p2 * p2, 0.5 * a) * std::abs(g.values[k]);
    });
}

double gradient_sup(const DistributionGrid& g, bool wrt_p, int a) {
    const int o = wrt_p ? 2 : 0;
    return slab_max(g, [&](const std::array<int, 4>& id, std::size_t k) {
        const double d1 = diff_axis(g, id, o, k), d2 = diff_axis(g, id, o + 1, k);
        const double w = a == 0 ? 1.0 : std::pow(bracket(g.pa.node(id[2]), g.pa.node(id[3])), a);
        return w * std::hypot(d1, d2);
    });
}

NormReport norm_report(const DistributionGrid& g, const std::vector<int>& exponents) {
    NormReport r;
    r.l2 = lebesgue_norm(g, 2);
    r.linf = lebesgue_norm(g, 0);
    for (int a : exponents) r.weighted[a] = weighted_sup_norm(g, a);
    r.grad_q = gradient_sup(g, false);
    r.grad_p = gradient_sup(g, true);
    return r;
}

double max_abs_diff(const DistributionGrid& a, const DistributionGrid& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("grid shapes differ");
    return slab_max(a, [&](const std::array<int, 4>&, std::size_t k) {
        return std::abs(a.values[k] - b.values[k]);
    });
}

double l2_diff(const DistributionGrid& a, const DistributionGrid& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("grid shapes differ");
    return std::sqrt(slab_sum(a, [&](std::size_t k) {
        const double d = a.values[k] - b.values[k];
        return d * d;
    }));
}

double boundary_max(const DistributionGrid& g) {
    return slab_max(g, [&](const std::array<int, 4>& id, std::size_t k) {
        for (int ax = 0; ax < 4; ++ax)
            if (id[ax] == 0 || id[ax] == g.axis(ax).n - 1) return std::abs(g.values[k]);
        return 0.0;
    });
}

Moments moments(const DistributionGrid& g) {
    const int nq = g.qa.n, np = g.pa.n;
    Moments m{Plane(g.qa), {Plane(g.qa), Plane(g.qa)}};
#pragma omp parallel for
    for (int i1 = 0; i1 < nq; ++i1)
        for (int i2 = 0; i2 < nq; ++i2) {
            double r = 0, j1s = 0, j2s = 0;
            for (int j1 = 0; j1 < np; ++j1) {
                const double w1 = trap_weight(g.pa, j1), p1 = g.pa.node(j1);
                const double* row = &g.values[g.index(i1, i2, j1, 0)];
                for (int j2 = 0; j2 < np; ++j2) {
                    const double w = w1 * trap_weight(g.pa, j2) * row[j2] * row[j2];
                    r += w;
                    j1s += w * p1;
                    j2s += w * g.pa.node(j2);
                }
            }
            m.rho(i1, i2) = r;
            m.j[0](i1, i2) = j1s;
            m.j[1](i1, i2) = j2s;
        }
    return m;
}

Plane density(const DistributionGrid& g) {
    const int nq = g.qa.n, np = g.pa.n;
    Plane rho(g.qa);
    std::vector<double> w(np);
    for (int j = 0; j < np; ++j) w[j] = trap_weight(g.pa, j);
#pragma omp parallel for
    for (int i1 = 0; i1 < nq; ++i1)
        for (int i2 = 0; i2 < nq; ++i2) {
            double r = 0;
            const double* blk = &g.values[g.index(i1, i2, 0, 0)];
            for (int j1 = 0; j1 < np; ++j1) {
                double rr = 0;
                for (int j2 = 0; j2 < np; ++j2) rr += w[j2] * blk[j1 * np + j2] * blk[j1 * np + j2];
                r += w[j1] * rr;
            }
            rho(i1, i2) = r;
        }
    return rho;
}

double interpolate(const DistributionGrid& g, const std::array<double, 4>& x,
                   DomainCounter* counter) {
    int k[4];
    double w[4][4];
    for (int a = 0; a < 4; ++a) {
        const Axis& ax = g.axis(a);
        const double t = (x[a] + ax.L) / ax.h();
        if (!(t >= 0.0 && t <= ax.n - 1)) {
            if (counter) counter->count.fetch_add(1, std::memory_order_relaxed);
            return 0.0;
        }
        detail::lagrange_stencil(t, ax.n, k[a], w[a]);
    }
    const int nq = g.qa.n, np = g.pa.n;
    double s = 0.0;
    for (int a = 0; a < 4; ++a) {
        const int i1 = k[0] - 1 + a;
        for (int b = 0; b < 4; ++b) {
            const int i2 = k[1] - 1 + b;
            const double wab = w[0][a] * w[1][b];
            double inner = 0.0;
            for (int c = 0; c < 4; ++c) {
                const double* row =
                    &g.values[((std::size_t(i1) * nq + i2) * np + (k[2] - 1 + c)) * np + (k[3] - 1)];
                inner += w[2][c] * (w[3][0] * row[0] + w[3][1] * row[1] + w[3][2] * row[2] +
                                    w[3][3] * row[3]);
            }
            s += wab * inner;
        }
    }
    return s;
}

DistributionGrid advect(const DistributionGrid& g, const PointMap& map, double max_outside_fraction) {
    DistributionGrid out(g.qa, g.pa, g.coords);
    DomainCounter counter;
    for_each_point(g, [&](const std::array<int, 4>& id) {
        const std::array<double, 4> x{g.qa.node(id[0]), g.qa.node(id[1]), g.pa.node(id[2]),
                                      g.pa.node(id[3])};
        out.values[g.index(id[0], id[1], id[2], id[3])] = interpolate(g, map(x), &counter);
    });
    const double frac = double(counter.count.load()) / double(g.size());
    if (frac > max_outside_fraction)
        throw SupportError("advect: " + std::to_string(frac) +
                           " of backtraces left the box (support violation)");
    return out;
}

namespace {

// Solves (1 4 1)/6 c = f along one axis for columns [c0, c1) of a block laid out [n][inner];
// coefficients outside the box are zero.
void spline_prefilter(double* buf, int n, std::size_t inner, std::size_t c0, std::size_t c1,
                      const std::vector<double>& beta) {
    for (std::size_t c = c0; c < c1; ++c) buf[c] *= 6.0;
    for (int i = 1; i < n; ++i) {
        const double r = 1.0 / beta[i - 1];
        double* cur = &buf[i * inner];
        const double* prev = &buf[(i - 1) * inner];
        for (std::size_t c = c0; c < c1; ++c) cur[c] = 6.0 * cur[c] - r * prev[c];
    }
    for (std::size_t c = c0; c < c1; ++c) buf[(n - 1) * inner + c] /= beta[n - 1];
    for (int i = n - 2; i >= 0; --i) {
        double* cur = &buf[i * inner];
        const double* next = &buf[(i + 1) * inner];
        for (std::size_t c = c0; c < c1; ++c) cur[c] = (cur[c] - next[c]) / beta[i];
    }
}

std::vector<double> thomas_factors(int n) {
    std::vector<double> beta(n);
    beta[0] = 4.0;
    for (int i = 1; i < n; ++i) beta[i] = 4.0 - 1.0 / beta[i - 1];
    return beta;
}

constexpr std::size_t kChunk = 64;

}  // namespace

void shift_sweep(DistributionGrid& g, int axis, const LineShift& shift) {
    const int dims[4] = {g.qa.n, g.qa.n, g.pa.n, g.pa.n};
    const int n = dims[axis];
    const double h = g.axis(axis).h();
    std::size_t inner = 1, outer = 1;
    for (int k = axis + 1; k < 4; ++k) inner *= dims[k];
    for (int k = 0; k < axis; ++k) outer *= dims[k];
    const auto beta = thomas_factors(n);

    std::vector<double> buf(std::size_t(n) * inner);
    for (std::size_t o = 0; o < outer; ++o) {
        double* blk = &g.values[o * n * inner];
        std::memcpy(buf.data(), blk, sizeof(double) * buf.size());
        const long nchunks = long((inner + kChunk - 1) / kChunk);
#pragma omp parallel for
        for (long ch = 0; ch < nchunks; ++ch) {
            const std::size_t c0 = ch * kChunk, c1 = std::min(inner, c0 + kChunk);
            spline_prefilter(buf.data(), n, inner, c0, c1, beta);
            for (std::size_t c = c0; c < c1; ++c) {
                // indices of this line with the swept axis set to 0
                std::size_t flat = o * n * inner + c;
                int id[4];
                for (int k = 3; k >= 0; --k) {
                    id[k] = int(flat % dims[k]);
                    flat /= dims[k];
                }
                const double t = -shift(id[0], id[1], id[2], id[3]) / h;
                const double fl = std::floor(t);
                const int kk = int(fl);
                double w[4];
                detail::bspline_weights(t - fl, w);
                for (int i = 0; i < n; ++i) {
                    double s = 0.0;
                    for (int m = 0; m < 4; ++m) {
                        const int j = i + kk - 1 + m;
                        if (j >= 0 && j < n) s += w[m] * buf[std::size_t(j) * inner + c];
                    }
                    blk[std::size_t(i) * inner + c] = s;
                }
            }
        }
    }
}

DistributionGrid spline_coefficients(const DistributionGrid& g, const std::array<bool, 4>& axes) {
    DistributionGrid c = g;
    const int dims[4] = {g.qa.n, g.qa.n, g.pa.n, g.pa.n};
    for (int axis = 0; axis < 4; ++axis) {
        if (!axes[axis]) continue;
        const int n = dims[axis];
        std::size_t inner = 1, outer = 1;
        for (int k = axis + 1; k < 4; ++k) inner *= dims[k];
        for (int k = 0; k < axis; ++k) outer *= dims[k];
        const auto beta = thomas_factors(n);
        for (std::size_t o = 0; o < outer; ++o) {
            double* blk = &c.values[o * n * inner];
            const long nchunks = long((inner + kChunk - 1) / kChunk);
#pragma omp parallel for
            for (long ch = 0; ch < nchunks; ++ch) {
                const std::size_t c0 = ch * kChunk, c1 = std::min(inner, c0 + kChunk);
                spline_prefilter(blk, n, inner, c0, c1, beta);
            }
        }
    }
    return c;
}

double interpolate_spline(const DistributionGrid& coef, const std::array<double, 4>& x,
                          DomainCounter* counter) {
    int k[4];
    double w[4][4];
    for (int a = 0; a < 4; ++a) {
        const Axis& ax = coef.axis(a);
        const double t = (x[a] + ax.L) / ax.h();
        if (!(t >= 0.0 && t <= ax.n - 1)) {
            if (counter) counter->count.fetch_add(1, std::memory_order_relaxed);
            return 0.0;
        }
        const double fl = std::floor(t);
        k[a] = int(fl);
        detail::bspline_weights(t - fl, w[a]);
    }
    const int nq = coef.qa.n, np = coef.pa.n;
    auto inside = [](int i, int n) { return i >= 0 && i < n; };
    double s = 0.0;
    for (int a = 0; a < 4; ++a) {
        const int i1 = k[0] - 1 + a;
        if (!inside(i1, nq)) continue;
        for (int b = 0; b < 4; ++b) {
            const int i2 = k[1] - 1 + b;
            if (!inside(i2, nq)) continue;
            double inner = 0.0;
            for (int c = 0; c < 4; ++c) {
                const int j1 = k[2] - 1 + c;
                if (!inside(j1, np)) continue;
                double row = 0.0;
                for (int d = 0; d < 4; ++d) {
                    const int j2 = k[3] - 1 + d;
                    if (inside(j2, np)) row += w[3][d] * coef.values[coef.index(i1, i2, j1, j2)];
                }
                inner += w[2][c] * row;
            }
            s += w[0][a] * w[1][b] * inner;
        }
    }
    return s;
}

InterpolationReport interpolation_inequality_check(const DistributionGrid& g, double ell,
                                                   double constant) {
    InterpolationReport r;
    auto xw = [&](const std::array<int, 4>& id) {
        return bracket(g.qa.node(id[0]), g.qa.node(id[1]));
    };
    auto maxabs_grad = [&](int o, double power) {
        return slab_max(g, [&](const std::array<int, 4>& id, std::size_t k) {
            const double w = std::pow(xw(id), power);
            return w * std::max(std::abs(diff_axis(g, id, o, k)), std::abs(diff_axis(g, id, o + 1, k)));
        });
    };
    auto maxabs_hess = [&](int o) {
        return slab_max(g, [&](const std::array<int, 4>& id, std::size_t k) {
            double m = 0.0;
            for (int a = o; a < o + 2; ++a)
                for (int b = o; b < o + 2; ++b) m = std::max(m, std::abs(diff2_axis(g, id, a, b, k)));
            return m;
        });
    };
    const double f_w = slab_max(g, [&](const std::array<int, 4>& id, std::size_t k) {
        return std::pow(xw(id), 2 * ell) * std::abs(g.values[k]);
    });
    const double f0 = lebesgue_norm(g, 0);
    const double dv = maxabs_grad(2, 0.0), dx = maxabs_grad(0, 0.0);
    const double d2v = maxabs_hess(2), d2x = maxabs_hess(0);
    r.lhs = maxabs_grad(2, ell);
    r.rhs = f_w + d2v;
    r.ratio = r.rhs > 0 ? r.lhs / r.rhs : 0.0;
    r.sqrt_ratio_v = (f0 * d2v) > 0 ? dv / std::sqrt(f0 * d2v) : 0.0;
    r.sqrt_ratio_x = (f0 * d2x) > 0 ? dx / std::sqrt(f0 * d2x) : 0.0;
    r.pass = r.ratio <= constant && r.sqrt_ratio_v <= constant && r.sqrt_ratio_x <= constant;
    return r;
}

namespace {
template <class T>
void put(std::ofstream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "little-endian host assumed");
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("truncated VLNS file");
    return v;
}
}  // namespace

void write_vlns(const std::string& path, const DistributionGrid& g) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.write("VLNS", 4);
    put<std::uint32_t>(os, 1);
    put<std::uint32_t>(os, 2);
    for (int a = 0; a < 4; ++a) put<std::uint32_t>(os, std::uint32_t(g.axis(a).n));
    for (int a = 0; a < 4; ++a) put<double>(os, g.axis(a).L);
    os.write(reinterpret_cast<const char*>(g.values.data()), std::streamsize(g.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write failed: " + path);
}

DistributionGrid read_vlns(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "VLNS", 4) != 0) throw std::runtime_error("bad VLNS magic");
    if (get<std::uint32_t>(is) != 1) throw std::runtime_error("unsupported VLNS version");
    if (get<std::uint32_t>(is) != 2) throw std::runtime_error("only d = 2 grids are supported");
    std::uint32_t n[4];
    double L[4];
    for (auto& x : n) x = get<std::uint32_t>(is);
    for (auto& x : L) x = get<double>(is);
    if (n[0] != n[1] || n[2] != n[3] || L[0] != L[1] || L[2] != L[3])
        throw std::runtime_error("VLNS grid is not square per variable pair");
    DistributionGrid g(Axis{int(n[0]), L[0]}, Axis{int(n[2]), L[2]});
    is.read(reinterpret_cast<char*>(g.values.data()), std::streamsize(g.size() * sizeof(double)));
    if (!is) throw std::runtime_error("truncated VLNS payload");
    return g;
}

}  // namespace vp
