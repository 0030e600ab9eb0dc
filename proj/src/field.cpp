#include "vp/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include "vp/lens.hpp"

namespace vp {

namespace {

constexpr double kPi = std::numbers::pi;
using boost::math::quadrature::gauss;
using boost::math::quadrature::gauss_kronrod;

// ---------------------------------------------------------------- FFT plumbing

struct Spectrum {
    fftw_complex* data = nullptr;
    std::size_t count = 0;
    explicit Spectrum(std::size_t n) : data(fftw_alloc_complex(n)), count(n) {}
    ~Spectrum() { fftw_free(data); }
    Spectrum(const Spectrum&) = delete;
    Spectrum& operator=(const Spectrum&) = delete;
};

struct Plans {
    int N = 0;
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

std::mutex g_plan_mutex;

// Plan creation is not thread safe in FFTW; execution with new-array calls is.
const Plans& plans_for(int N) {
    static std::map<int, Plans> cache;
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto it = cache.find(N);
    if (it != cache.end()) return it->second;
    double* r = fftw_alloc_real(std::size_t(N) * N);
    fftw_complex* c = fftw_alloc_complex(std::size_t(N) * (N / 2 + 1));
    Plans p;
    p.N = N;
    p.r2c = fftw_plan_dft_r2c_2d(N, N, r, c, FFTW_ESTIMATE);
    p.c2r = fftw_plan_dft_c2r_2d(N, N, c, r, FFTW_ESTIMATE);
    fftw_free(r);
    fftw_free(c);
    return cache.emplace(N, p).first->second;
}

// Kernel given on offsets (a, b) in [-(n-1), n-1]^2, stored in a (2n-1)^2 array.
std::unique_ptr<Spectrum> kernel_spectrum(const std::vector<double>& K, int n) {
    const int N = 2 * n, m = 2 * n - 1;
    const Plans& pl = plans_for(N);
    double* buf = fftw_alloc_real(std::size_t(N) * N);
    std::fill(buf, buf + std::size_t(N) * N, 0.0);
    for (int a = -(n - 1); a <= n - 1; ++a)
        for (int b = -(n - 1); b <= n - 1; ++b)
            buf[std::size_t((a + N) % N) * N + (b + N) % N] =
                K[std::size_t(a + n - 1) * m + (b + n - 1)];
    auto S = std::make_unique<Spectrum>(std::size_t(N) * (N / 2 + 1));
    fftw_execute_dft_r2c(pl.r2c, buf, S->data);
    fftw_free(buf);
    return S;
}

// out_k = h^2 * (K_k * rho) on the n x n grid.
void convolve(const Plane& rho, const Spectrum& Kx, const Spectrum& Ky, ElectricField& out) {
    const int n = rho.axis.n, N = 2 * n;
    const double h = rho.axis.h();
    const Plans& pl = plans_for(N);
    const std::size_t nc = std::size_t(N) * (N / 2 + 1);
    double* buf = fftw_alloc_real(std::size_t(N) * N);
    fftw_complex* rh = fftw_alloc_complex(nc);
    fftw_complex* prod = fftw_alloc_complex(nc);
    std::fill(buf, buf + std::size_t(N) * N, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) buf[std::size_t(i) * N + j] = rho(i, j);
    fftw_execute_dft_r2c(pl.r2c, buf, rh);
    const double scale = h * h / (double(N) * N);
    const Spectrum* K[2] = {&Kx, &Ky};
    for (int c = 0; c < 2; ++c) {
        for (std::size_t k = 0; k < nc; ++k) {
            const double ar = rh[k][0], ai = rh[k][1];
            const double br = K[c]->data[k][0], bi = K[c]->data[k][1];
            prod[k][0] = ar * br - ai * bi;
            prod[k][1] = ar * bi + ai * br;
        }
        fftw_execute_dft_c2r(pl.c2r, prod, buf);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) out.c[c][std::size_t(i) * n + j] = scale * buf[std::size_t(i) * N + j];
    }
    fftw_free(buf);
    fftw_free(rh);
    fftw_free(prod);
}

// ---------------------------------------------------------------- direct kernel

// P(a, y) with d^2 P / (da dy) = a / (a^2 + y^2).
double prim(double a, double y) {
    const double r2 = a * a + y * y;
    double v = -y;
    if (r2 > 0.0) v += 0.5 * y * std::log(r2);
    if (a != 0.0) v += a * std::atan(y / a);
    return v;
}

// Cell average of x1/(2 pi |x|^2) over the cell centred at (a h, b h).
double cell_avg_direct(int a, int b, double h) {
    const double x1 = (a - 0.5) * h, x2 = (a + 0.5) * h;
    const double y1 = (b - 0.5) * h, y2 = (b + 0.5) * h;
    const double I = (prim(x2, y2) - prim(x2, y1)) - (prim(x1, y2) - prim(x1, y1));
    return I / (h * h) / (2.0 * kPi);
}

struct KernelPair {
    std::unique_ptr<Spectrum> x, y;
};

// Builds both components from the first one via the transpose symmetry.
KernelPair make_pair_spectra(const std::vector<double>& Kx, int n) {
    const int m = 2 * n - 1;
    std::vector<double> Ky(Kx.size());
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) Ky[std::size_t(a) * m + b] = Kx[std::size_t(b) * m + a];
    return {kernel_spectrum(Kx, n), kernel_spectrum(Ky, n)};
}

const KernelPair& direct_kernel(const Axis& ax) {
    static std::map<std::pair<int, double>, KernelPair> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(ax.n, ax.L);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const int n = ax.n, m = 2 * n - 1;
    std::vector<double> Kx(std::size_t(m) * m);
    for (int a = -(n - 1); a <= n - 1; ++a)
        for (int b = -(n - 1); b <= n - 1; ++b)
            Kx[std::size_t(a + n - 1) * m + (b + n - 1)] = cell_avg_direct(a, b, ax.h());
    return cache.emplace(key, make_pair_spectra(Kx, n)).first->second;
}

// Leading sampling error of the cell-averaged convolution is +(h^2/12) grad rho.
void apply_sampling_correction(const Plane& rho, ElectricField& E) {
    const int n = rho.axis.n;
    const double h = rho.axis.h(), c = h * h / 12.0;
    auto at = [&](int i, int j) { return (i < 0 || j < 0 || i >= n || j >= n) ? 0.0 : rho(i, j); };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            E.c[0][std::size_t(i) * n + j] -= c * (at(i + 1, j) - at(i - 1, j)) / (2 * h);
            E.c[1][std::size_t(i) * n + j] -= c * (at(i, j + 1) - at(i, j - 1)) / (2 * h);
        }
}

void check_density(const Plane& rho) {
    for (double v : rho.v)
        if (!(v >= -1e-12)) throw std::invalid_argument("density has negative or non-finite entries");
}

// ---------------------------------------------------------------- bump integrals

struct Rect {
    double x1, x2, y1, y2;
};

// Angular integrals (int cos, int sin, int 1) over the part of the circle |x| = r inside the rectangle.
std::array<double, 3> arc_moments(double r, const Rect& c) {
    double ang[10];
    int k = 0;
    auto add = [&](double t) {
        t = std::fmod(t, 2 * kPi);
        if (t < 0) t += 2 * kPi;
        ang[k++] = t;
    };
    for (double xv : {c.x1, c.x2})
        if (std::abs(xv) <= r) {
            const double t = std::acos(xv / r);
            add(t);
            add(-t);
        }
    for (double yv : {c.y1, c.y2})
        if (std::abs(yv) <= r) {
            const double t = std::asin(yv / r);
            add(t);
            add(kPi - t);
        }
    ang[k++] = 0.0;
    ang[k++] = 2 * kPi;
    std::sort(ang, ang + k);
    std::array<double, 3> m{0, 0, 0};
    for (int i = 0; i + 1 < k; ++i) {
        const double a = ang[i], b = ang[i + 1];
        if (b - a <= 0) continue;
        const double mid = 0.5 * (a + b);
        const double px = r * std::cos(mid), py = r * std::sin(mid);
        if (px >= c.x1 && px <= c.x2 && py >= c.y1 && py <= c.y2) {
            m[0] += std::sin(b) - std::sin(a);
            m[1] += std::cos(a) - std::cos(b);
            m[2] += b - a;
        }
    }
    return m;
}

// int over the rectangle of chi(|x|/R) * (x/|x|, 1): returns (vector x, vector y, scalar).
std::array<double, 3> cell_integral(const Rect& c, double R, const BumpKernel& bk, double h) {
    const double lo_r = 0.5 * R, hi_r = 2.0 * R;
    // distance range of the rectangle
    const double cx = std::max({c.x1, 0.0, -c.x2}), cy = std::max({c.y1, 0.0, -c.y2});
    const double dmin = std::hypot(cx, cy);
    const double fx = std::max(std::abs(c.x1), std::abs(c.x2)), fy = std::max(std::abs(c.y1), std::abs(c.y2));
    const double dmax = std::hypot(fx, fy);
    const double lo = std::max(lo_r, dmin), hi = std::min(hi_r, dmax);
    if (lo >= hi) return {0, 0, 0};

    if (R >= 4.0 * h) {
        // smooth on the cell scale: tensor Gauss-Legendre
        std::array<double, 3> acc{0, 0, 0};
        const auto& xs = gauss<double, 8>::abscissa();
        const auto& ws = gauss<double, 8>::weights();
        const double mx = 0.5 * (c.x1 + c.x2), hx = 0.5 * (c.x2 - c.x1);
        const double my = 0.5 * (c.y1 + c.y2), hy = 0.5 * (c.y2 - c.y1);
        auto node = [&](int i, double& x, double& w) {
            const int half = int(xs.size());
            if (i < half) {
                x = xs[i];
                w = ws[i];
            } else {
                x = -xs[i - half];
                w = ws[i - half];
            }
        };
        const int cnt = 2 * int(xs.size());
        for (int i = 0; i < cnt; ++i) {
            double u, wu;
            node(i, u, wu);
            if (u == 0.0 && i >= int(xs.size())) continue;
            for (int j = 0; j < cnt; ++j) {
                double v, wv;
                node(j, v, wv);
                if (v == 0.0 && j >= int(xs.size())) continue;
                const double x = mx + hx * u, y = my + hy * v, r = std::hypot(x, y);
                if (r <= lo_r || r >= hi_r) continue;
                const double w = wu * wv * hx * hy * bk.chi(r / R);
                acc[0] += w * x / r;
                acc[1] += w * y / r;
                acc[2] += w;
            }
        }
        return acc;
    }

    // sub-cell scale: exact angular clipping, radial Gauss between kinks
    std::vector<double> br{lo, hi};
    for (double v : {std::abs(c.x1), std::abs(c.x2), std::abs(c.y1), std::abs(c.y2),
                     std::hypot(c.x1, c.y1), std::hypot(c.x1, c.y2), std::hypot(c.x2, c.y1),
                     std::hypot(c.x2, c.y2)})
        if (v > lo && v < hi) br.push_back(v);
    std::sort(br.begin(), br.end());
    std::array<double, 3> acc{0, 0, 0};
    for (std::size_t s = 0; s + 1 < br.size(); ++s) {
        const double a = br[s], b = br[s + 1];
        if (b - a <= 1e-15 * R) continue;
        constexpr int panels = 4;
        for (int pnl = 0; pnl < panels; ++pnl) {
            const double pa = a + (b - a) * pnl / panels, pb = a + (b - a) * (pnl + 1) / panels;
            for (int comp = 0; comp < 3; ++comp)
                acc[comp] += gauss<double, 20>::integrate(
                    [&](double r) { return r * bk.chi(r / R) * arc_moments(r, c)[comp]; }, pa, pb);
        }
    }
    return acc;
}

// Cell-averaged c1 Psi(x/R) on all offsets; x-component, (2n-1)^2 layout.
std::vector<double> dyadic_kernel_x(int n, double h, double R) {
    const BumpKernel& bk = BumpKernel::get();
    const int m = 2 * n - 1;
    std::vector<double> K(std::size_t(m) * m, 0.0);
    if (2.0 * R <= 0.5 * h) return K;  // annulus inside the self cell: zero by symmetry
    const int reach = std::min(n - 1, int(std::ceil(2.0 * R / h)) + 1);
#pragma omp parallel for schedule(dynamic)
    for (int a = 0; a <= reach; ++a)
        for (int b = 0; b <= reach; ++b) {
            const Rect c{(a - 0.5) * h, (a + 0.5) * h, (b - 0.5) * h, (b + 0.5) * h};
            const double v = a == 0 ? 0.0 : bk.c1 * cell_integral(c, R, bk, h)[0] / (h * h);
            for (int sa : {-1, 1})
                for (int sb : {-1, 1}) {
                    const std::size_t idx = std::size_t(sa * a + n - 1) * m + (sb * b + n - 1);
                    K[idx] = sa * v;
                }
        }
    return K;
}

// Cell averages of chi(v/V) / cV on the velocity nodes.
std::vector<double> velocity_weights(const Axis& pa, double V) {
    const BumpKernel& bk = BumpKernel::get();
    const double h = pa.h();
    std::vector<double> W(std::size_t(pa.n) * pa.n, 0.0);
    for (int j1 = 0; j1 < pa.n; ++j1)
        for (int j2 = 0; j2 < pa.n; ++j2) {
            const double v1 = pa.node(j1), v2 = pa.node(j2);
            const Rect c{v1 - 0.5 * h, v1 + 0.5 * h, v2 - 0.5 * h, v2 + 0.5 * h};
            W[std::size_t(j1) * pa.n + j2] = cell_integral(c, V, bk, h)[2] / (h * h) / bk.cV;
        }
    return W;
}

double trap_w(const Axis& a, int i) { return (i == 0 || i == a.n - 1) ? 0.5 * a.h() : a.h(); }

ElectricField convolve_with(const Plane& rho, const std::vector<double>& Kx, Provenance prov) {
    ElectricField E(rho.axis, prov);
    KernelPair kp = make_pair_spectra(Kx, rho.axis.n);
    convolve(rho, *kp.x, *kp.y, E);
    return E;
}

std::string fmt(const char* key, double v) {
    std::ostringstream os;
    os.precision(6);
    os << key << "=" << v;
    return os.str();
}

BoundRow make_row(std::string id, std::string params, double lhs, double rhs, double limit = 1.0) {
    BoundRow r{std::move(id), std::move(params), lhs, rhs, 0.0, true};
    r.ratio = rhs > 0 ? lhs / rhs : (lhs > 0 ? INFINITY : 0.0);
    r.pass = r.ratio <= limit;
    return r;
}

}  // namespace

// ---------------------------------------------------------------- public API

LogQuadrature LogQuadrature::make(int count, double lo, double hi) {
    if (count < 2 || !(lo > 0) || !(hi > lo)) throw std::invalid_argument("bad log quadrature");
    LogQuadrature q;
    const double a = std::log(lo), d = (std::log(hi) - a) / (count - 1);
    for (int i = 0; i < count; ++i) {
        q.nodes.push_back(std::exp(a + i * d));
        q.weights.push_back((i == 0 || i == count - 1) ? 0.5 * d : d);
    }
    return q;
}

double BumpKernel::chi(double r) const {
    if (r <= 0.5 || r >= 2.0) return 0.0;
    const double t = (r - 1.25) / 0.75;
    return c * std::exp(-1.0 / (1.0 - t * t));
}

double BumpKernel::dchi(double r) const {
    if (r <= 0.5 || r >= 2.0) return 0.0;
    const double t = (r - 1.25) / 0.75, w = 1.0 - t * t;
    return chi(r) * (-2.0 * t / (w * w)) / 0.75;
}

const BumpKernel& BumpKernel::get() {
    static const BumpKernel k = [] {
        BumpKernel b;
        b.c = 1.0;
        auto shape = [&](double r) { return b.chi(r); };
        const double m1 = gauss_kronrod<double, 61>::integrate(
            [&](double r) { return 2 * kPi * r * shape(r); }, 0.5, 2.0, 15, 1e-15);
        b.c = 1.0 / m1;
        const double m0 = gauss_kronrod<double, 61>::integrate(shape, 0.5, 2.0, 15, 1e-15);
        b.c1 = 1.0 / (2 * kPi * m0);
        b.cV = gauss_kronrod<double, 61>::integrate([&](double r) { return shape(r) / r; }, 0.5,
                                                    2.0, 15, 1e-15);
        b.chi_max = b.chi(1.25);
        double dm = 0.0;
        for (int i = 1; i < 200000; ++i) {
            const double r = 0.5 + 1.5 * i / 200000.0;
            dm = std::max({dm, std::abs(b.dchi(r)), b.chi(r) / r});
        }
        b.dpsi_max = dm;
        return b;
    }();
    return k;
}

ElectricField solve_field(const Plane& rho) {
    check_density(rho);
    ElectricField E(rho.axis, Provenance::direct);
    const KernelPair& K = direct_kernel(rho.axis);
    convolve(rho, *K.x, *K.y, E);
    apply_sampling_correction(rho, E);
    return E;
}

ElectricField solve_field(const DistributionGrid& g) { return solve_field(density(g)); }

ElectricField dyadic_component(const Plane& rho, double R) {
    if (!(R > 0)) throw std::invalid_argument("R must be positive");
    check_density(rho);
    return convolve_with(rho, dyadic_kernel_x(rho.axis.n, rho.axis.h(), R), Provenance::dyadic);
}

ElectricField dyadic_component(const DistributionGrid& g, double R) {
    return dyadic_component(density(g), R);
}

Plane velocity_filtered_density(const DistributionGrid& g, double V) {
    const std::vector<double> W = velocity_weights(g.pa, V);
    const int nq = g.qa.n, np = g.pa.n;
    Plane rho(g.qa);
    for (int i1 = 0; i1 < nq; ++i1)
        for (int i2 = 0; i2 < nq; ++i2) {
            double s = 0;
            for (int j1 = 0; j1 < np; ++j1)
                for (int j2 = 0; j2 < np; ++j2) {
                    const double v = g(i1, i2, j1, j2);
                    s += trap_w(g.pa, j1) * trap_w(g.pa, j2) * W[std::size_t(j1) * np + j2] * v * v;
                }
            rho(i1, i2) = s;
        }
    return rho;
}

ElectricField dyadic_component_velocity(const DistributionGrid& g, double R, double V) {
    if (!(R > 0) || !(V > 0)) throw std::invalid_argument("R and V must be positive");
    return dyadic_component(velocity_filtered_density(g, V), R);
}

ElectricField reconstruct_from_dyadic(const Plane& rho, const LogQuadrature& qR) {
    check_density(rho);
    const int n = rho.axis.n;
    std::vector<double> K(std::size_t(2 * n - 1) * (2 * n - 1), 0.0);
    for (std::size_t j = 0; j < qR.nodes.size(); ++j) {
        const double R = qR.nodes[j];
        const std::vector<double> KR = dyadic_kernel_x(n, rho.axis.h(), R);
        const double w = qR.weights[j] / R;  // dR/R^2 = (1/R) dR/R
        for (std::size_t k = 0; k < K.size(); ++k) K[k] += w * KR[k];
    }
    ElectricField E = convolve_with(rho, K, Provenance::dyadic);
    apply_sampling_correction(rho, E);
    return E;
}

ElectricField reconstruct_from_dyadic_velocity(const DistributionGrid& g, const LogQuadrature& qR,
                                               const LogQuadrature& qV) {
    Plane rho(g.qa);
    for (std::size_t k = 0; k < qV.nodes.size(); ++k) {
        const Plane part = velocity_filtered_density(g, qV.nodes[k]);
        for (std::size_t i = 0; i < rho.v.size(); ++i) rho.v[i] += qV.weights[k] * part.v[i];
    }
    return reconstruct_from_dyadic(rho, qR);
}

std::array<std::array<Plane, 2>, 2> field_gradient(const ElectricField& E) {
    const int n = E.axis.n;
    const double h = E.axis.h();
    std::array<std::array<Plane, 2>, 2> d{{{Plane(E.axis), Plane(E.axis)}, {Plane(E.axis), Plane(E.axis)}}};
    for (int c = 0; c < 2; ++c) {
        auto at = [&](int i, int j) { return E.c[c][std::size_t(i) * n + j]; };
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const int im = std::max(i - 1, 0), ip = std::min(i + 1, n - 1);
                const int jm = std::max(j - 1, 0), jp = std::min(j + 1, n - 1);
                d[c][0](i, j) = (at(ip, j) - at(im, j)) / ((ip - im) * h);
                d[c][1](i, j) = (at(i, jp) - at(i, jm)) / ((jp - jm) * h);
            }
    }
    return d;
}

double gradient_sup(const ElectricField& E) {
    const auto d = field_gradient(E);
    double m = 0.0;
    for (const auto& row : d)
        for (const auto& p : row)
            for (double v : p.v) m = std::max(m, std::abs(v));
    return m;
}

Plane divergence(const ElectricField& E) {
    const auto d = field_gradient(E);
    Plane div(E.axis);
    for (std::size_t i = 0; i < div.v.size(); ++i) div.v[i] = d[0][0].v[i] + d[1][1].v[i];
    return div;
}

void write_bound_csv(const std::string& path, const std::vector<BoundRow>& rows) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.precision(10);
    os << "bound_id,parameters,lhs,rhs,ratio,pass\n";
    for (const auto& r : rows)
        os << r.bound_id << ",\"" << r.params << "\"," << r.lhs << "," << r.rhs << "," << r.ratio
           << "," << (r.pass ? 1 : 0) << "\n";
}

bool all_pass(const std::vector<BoundRow>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const BoundRow& r) { return r.pass; });
}

double max_ratio(const std::vector<BoundRow>& rows, const std::string& prefix) {
    double m = 0.0;
    for (const auto& r : rows)
        if (r.bound_id.rfind(prefix, 0) == 0) m = std::max(m, r.ratio);
    return m;
}

std::vector<BoundRow> verify_dyadic_bounds(const DistributionGrid& g, const LogQuadrature& qR,
                                           const LogQuadrature& qV, double slack) {
    const BumpKernel& bk = BumpKernel::get();
    const double l2sq = std::pow(lebesgue_norm(g, 2), 2);
    const double linf = lebesgue_norm(g, 0);
    const double p2 = p_power_sup(g, 2);
    const double gq = vp::gradient_sup(g, false);
    const double kv = bk.c1 / bk.cV;
    const double C_ER = bk.c1 * bk.chi_max, C_dER = bk.c1 * bk.dpsi_max;
    const double C_a = 4 * kPi * kv * bk.chi_max, C_b = 16 * C_a;
    const double C_c = 8 * kPi * kv * bk.chi_max, C_d = 64 * kPi * kv * bk.dpsi_max;

    std::vector<BoundRow> rows;
    const Plane rho = density(g);
    for (double R : qR.nodes) {
        const ElectricField E = dyadic_component(rho, R);
        rows.push_back(make_row("ER", fmt("R", R), E.sup(), C_ER * l2sq, slack));
        rows.push_back(make_row("dER", fmt("R", R), gradient_sup(E), C_dER * l2sq / R, slack));
    }
    for (double V : qV.nodes) {
        const Plane rv = velocity_filtered_density(g, V);
        for (double R : qR.nodes) {
            const ElectricField E = dyadic_component(rv, R);
            const std::string pr = fmt("R", R) + ";" + fmt("V", V);
            const double b1 = R * R * std::min(C_a * V * V * linf * linf, C_b * p2 * p2 / (V * V));
            const double b2 = R * std::min(C_c * R * V * V * linf * gq, C_d * p2 * p2 / (V * V));
            rows.push_back(make_row("ERV", pr, E.sup(), b1, slack));
            rows.push_back(make_row("dERV", pr, gradient_sup(E), b2, slack));
        }
    }
    // Truncation tails of the R integral, relative to the full field.
    const double Esup = solve_field(rho).sup();
    double grad_rho = 0.0;
    {
        const int n = rho.axis.n;
        const double h = rho.axis.h();
        for (int i = 1; i + 1 < n; ++i)
            for (int j = 1; j + 1 < n; ++j)
                grad_rho = std::max(grad_rho, std::hypot(rho(i + 1, j) - rho(i - 1, j),
                                                         rho(i, j + 1) - rho(i, j - 1)) /
                                                  (2 * h));
    }
    const double Rmin = qR.nodes.front(), Rmax = qR.nodes.back();
    const double tail_small = (8.0 * kPi / 3.0) * bk.c1 * bk.chi_max * grad_rho * Rmin * Rmin;
    const double tail_large = C_ER * l2sq / Rmax;
    rows.push_back(make_row("tail_small", fmt("Rmin", Rmin), tail_small, 1e-3 * Esup));
    rows.push_back(make_row("tail_large", fmt("Rmax", Rmax), tail_large, 1e-3 * Esup));
    return rows;
}

std::vector<BoundRow> verify_field_bound(const DistributionGrid& g, double A, double theta) {
    if (!(A > 0) || !(theta > 0 && theta < 0.5)) throw std::invalid_argument("need A > 0, 0 < theta < 1/2");
    const BumpKernel& bk = BumpKernel::get();
    const double l2sq = std::pow(lebesgue_norm(g, 2), 2);
    const double linf = lebesgue_norm(g, 0);
    const double p2 = p_power_sup(g, 2);
    const double gq = vp::gradient_sup(g, false);
    const double kv = bk.c1 / bk.cV;
    const double C_ER = bk.c1 * bk.chi_max, C_dER = bk.c1 * bk.dpsi_max;
    const double C_a = 4 * kPi * kv * bk.chi_max, C_b = 16 * C_a;
    const double C_c = 8 * kPi * kv * bk.chi_max, C_d = 64 * kPi * kv * bk.dpsi_max;

    const ElectricField E = solve_field(g);
    const double rhs_E = C_ER * l2sq / A + 0.5 * C_a * linf * linf / A + 0.5 * C_b * A * A * A * p2 * p2;
    const double rhs_dE = 0.5 * C_dER * A * l2sq +
                          C_c / (2 * (1 - 2 * theta)) * std::pow(A, -0.5 + theta) * linf * gq +
                          C_d / (4 * theta) * std::pow(A, -theta) * p2 * p2;
    const std::string pr = fmt("A", A) + ";" + fmt("theta", theta);
    return {make_row("E_bound", pr, E.sup(), rhs_E), make_row("dE_bound", pr, gradient_sup(E), rhs_dE)};
}

BoundRow field_continuity_modulus(const DistributionGrid& g0, double s0, const DistributionGrid& g1,
                                  double s1, double G_over_f, double constant) {
    if (s1 < s0) throw std::invalid_argument("continuity modulus needs s1 >= s0");
    const double lhs = sup_diff(solve_field(g1), solve_field(g0));
    const double ds = s1 - s0;
    const double M = std::max(weighted_sup_norm(g0, 2), weighted_sup_norm(g1, 2));
    const double l2sq = std::max(std::pow(lebesgue_norm(g0, 2), 2), std::pow(lebesgue_norm(g1, 2), 2));
    double rhs = 0.0;
    if (ds > 0) {
        rhs = ds * std::abs(std::log(ds)) * M * M + ds * ds * (l2sq + M * M) +
              ds * ds * ds * (F_of_s(s1) - F_of_s(s0)) * G_over_f * M * M;
    }
    return make_row("continuity", fmt("s0", s0) + ";" + fmt("s1", s1), lhs, rhs, constant);
}

}  // namespace vp
