#include "vp/scattering.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <algorithm>
#include <numbers>
#include <numeric>
#include <random>

#include "json.hpp"
#include "vp/lens.hpp"

namespace vp {

RateFit fit_rate(const std::string& name, const std::vector<double>& values, int k_lo, int k_hi) {
    RateFit fit;
    fit.name = name;
    fit.k_lo = k_lo;
    fit.k_hi = std::min<int>(k_hi, int(values.size()) - 1);
    std::vector<double> x, y, l;
    for (int k = k_lo; k <= fit.k_hi; ++k) {
        if (!(values[k] > 0.0)) continue;
        const double lx = std::log1p(-r_k(k));  // = -k ln 2
        x.push_back(lx);
        y.push_back(std::log(values[k]));
        l.push_back(std::log(std::hypot(1.0, lx)));
    }
    if (x.size() < 2) return fit;
    auto [slope, icpt] = fit_line(x, y);
    fit.exponent = slope;
    fit.constant = std::exp(icpt);
    if (x.size() >= 3) {
        Eigen::MatrixXd M(x.size(), 3);
        Eigen::VectorXd b(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            M(i, 0) = 1.0;
            M(i, 1) = x[i];
            M(i, 2) = l[i];
            b(i) = y[i];
        }
        Eigen::VectorXd c = M.colPivHouseholderQr().solve(b);
        fit.log_exponent = c(1);
        fit.log_amplitude = c(2);
    }
    return fit;
}

EInfinity extrapolate_E_infinity(const std::vector<ElectricField>& snaps) {
    if (snaps.size() < 2) throw std::invalid_argument("extrapolate_E_infinity: need at least two snapshots");
    EInfinity out;
    const auto& a = snaps[snaps.size() - 2];
    const auto& b = snaps.back();
    out.E = ElectricField(b.axis, b.provenance);
    for (int c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < b.size(); ++i) out.E.c[c][i] = 2.0 * b.c[c][i] - a.c[c][i];
    int rising = 0;
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        out.residuals.push_back(sup_diff(snaps[k], out.E));
        if (k > 0 && out.residuals[k] > out.residuals[k - 1]) {
            if (++rising >= 3) out.divergence_warning = true;
        } else {
            rising = 0;
        }
    }
    return out;
}

namespace {

std::array<double, 2> field_at_checked(const ElectricField& E, double x, double y) {
    const double L = E.axis.L;
    if (std::abs(x) > L || std::abs(y) > L) throw DomainError("field lookup outside the grid");
    return eval_field(E, x, y);
}

}  // namespace

std::array<double, 4> profile_map_Phi(double s, const std::array<double, 4>& z, const ElectricField& E1,
                                      int lambda) {
    if (!(std::abs(s) < 1.0)) throw DomainError("profile_map_Phi: |s| must be < 1");
    const auto e = field_at_checked(E1, z[0], z[1]);
    const double F = F_of_s(s);
    const double sm1F = (s - 1.0) * F;  // -> 0 as s -> 1
    return {z[0] + (s - 1.0) * z[2] + lambda * sm1F * e[0], z[1] + (s - 1.0) * z[3] + lambda * sm1F * e[1],
            z[2] + lambda * F * e[0], z[3] + lambda * F * e[1]};
}

DistributionGrid extract_profile(const DistributionGrid& gamma, double s, const ElectricField& E1, int lambda) {
    if (!(std::abs(s) < 1.0)) throw DomainError("extract_profile: |s| must be < 1");
    if (!(E1.axis == gamma.qa)) throw std::invalid_argument("extract_profile: field grid mismatch");
    DistributionGrid nu = gamma;
    const Axis p = gamma.pa;
    const double c = 1.0 - s;
    // g1(q,p) = gamma(q + (s-1)p, p)
    shift_sweep(nu, 0, [&](int, int, int j1, int) { return c * p.node(j1); });
    shift_sweep(nu, 1, [&](int, int, int, int j2) { return c * p.node(j2); });
    // nu(q,p) = g1(q, p + lam F E1(q))
    const double a = -lambda * F_of_s(s);
    const int n = E1.axis.n;
    shift_sweep(nu, 2, [&](int i1, int i2, int, int) { return a * E1.c[0][std::size_t(i1) * n + i2]; });
    shift_sweep(nu, 3, [&](int i1, int i2, int, int) { return a * E1.c[1][std::size_t(i1) * n + i2]; });
    return nu;
}

PhysicalPoint physical_trajectory(double t, const std::array<double, 2>& x, const std::array<double, 2>& v,
                                  const ElectricField& E_inf, int lambda) {
    const double ch = std::cosh(t), sh = std::sinh(t);
    const auto e = eval_field(E_inf, x[0] + v[0], x[1] + v[1]);
    const double c = lambda * t * std::exp(-t);
    PhysicalPoint out;
    for (int i = 0; i < 2; ++i) {
        out.X[i] = x[i] * ch + v[i] * sh - c * e[i];
        out.V[i] = v[i] * ch + x[i] * sh + c * e[i];
    }
    return out;
}

namespace {

double window_diff(const DistributionGrid& a, const DistributionGrid& b, double W) {
    double m = 0.0;
    for (int i1 = 0; i1 < a.qa.n; ++i1) {
        if (std::abs(a.qa.node(i1)) > W) continue;
        for (int i2 = 0; i2 < a.qa.n; ++i2) {
            if (std::abs(a.qa.node(i2)) > W) continue;
            for (int j1 = 0; j1 < a.pa.n; ++j1) {
                if (std::abs(a.pa.node(j1)) > W) continue;
                for (int j2 = 0; j2 < a.pa.n; ++j2) {
                    if (std::abs(a.pa.node(j2)) > W) continue;
                    m = std::max(m, std::abs(a(i1, i2, j1, j2) - b(i1, i2, j1, j2)));
                }
            }
        }
    }
    return m;
}

}  // namespace

TheoremAReport verify_theorem_A(const std::vector<DistributionGrid>& snapshots, const std::vector<int>& ks,
                                const ScatteringProfile& profile, int lambda, double W, double t_lo,
                                double t_hi, double min_rate) {
    TheoremAReport rep;
    const auto& mu = profile.mu_inf;
    std::vector<double> tf, yf;
    for (std::size_t n = 0; n < snapshots.size(); ++n) {
        const double s = r_k(ks[n]);
        const double t = std::atanh(s);
        const double ch = std::cosh(t), sh = std::sinh(t);
        const auto& g = snapshots[n];
        const DistributionGrid coef = spline_coefficients(g);
        const DistributionGrid nu = extract_profile(g, s, profile.E_inf, lambda);

        std::vector<double> slab(mu.qa.n, 0.0);
#pragma omp parallel for schedule(static)
        for (int i1 = 0; i1 < mu.qa.n; ++i1) {
            double m = 0.0;
            const double x1 = mu.qa.node(i1);
            if (std::abs(x1) > W) continue;
            for (int i2 = 0; i2 < mu.qa.n; ++i2) {
                const double x2 = mu.qa.node(i2);
                if (std::abs(x2) > W) continue;
                for (int j1 = 0; j1 < mu.pa.n; ++j1) {
                    const double v1 = mu.pa.node(j1);
                    if (std::abs(v1) > W) continue;
                    for (int j2 = 0; j2 < mu.pa.n; ++j2) {
                        const double v2 = mu.pa.node(j2);
                        if (std::abs(v2) > W) continue;
                        const auto P = physical_trajectory(t, {x1 - v1, x2 - v2}, {v1, v2}, profile.E_inf, lambda);
                        const std::array<double, 4> lens{P.X[0] / ch, P.X[1] / ch, P.V[0] * ch - P.X[0] * sh,
                                                         P.V[1] * ch - P.X[1] * sh};
                        m = std::max(m, std::abs(interpolate_spline(coef, lens) - mu(i1, i2, j1, j2)));
                    }
                }
            }
            slab[i1] = m;
        }
        double back = 0.0;
        for (double v : slab) back = std::max(back, v);
        const double prof = window_diff(nu, mu, W);
        rep.t.push_back(t);
        rep.backmapped_error.push_back(back);
        rep.profile_error.push_back(prof);
        rep.identification_gap = std::max(rep.identification_gap, std::abs(back - prof));
        if (t >= t_lo && t <= t_hi && back > 0.0) {
            tf.push_back(t);
            yf.push_back(std::log(back));
        }
    }
    if (tf.size() >= 2) rep.rate = -fit_line(tf, yf).first;
    const bool zero = std::all_of(rep.backmapped_error.begin(), rep.backmapped_error.end(),
                                  [](double e) { return e == 0.0; });
    rep.pass = zero || rep.rate >= min_rate;
    return rep;
}

double verify_E_consistency(const DistributionGrid& mu_inf, const ElectricField& E_inf) {
    const ElectricField E = solve_field(mu_inf);
    const double ref = E_inf.sup();
    const double diff = sup_diff(E, E_inf);
    if (ref == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
    return diff / ref;
}

ScatteringRun run_scattering(const DistributionGrid& g0, const ScatteringConfig& cfg) {
    if (cfg.K < 4) throw std::invalid_argument("run_scattering: need K >= 4");
    ScatteringRun run;
    SolverConfig sc = cfg.solver;
    sc.keep_snapshots = true;
    auto res = evolve(g0, r_k(cfg.K), sc, cfg.s_start);
    run.record = std::move(res.record);
    const int lambda = sc.lambda;

    std::vector<ElectricField> fields(cfg.K + 1);
    for (const auto& c : run.record.checkpoints)
        if (c.k >= 0 && c.k <= cfg.K) fields[c.k] = c.E;
    std::vector<const DistributionGrid*> snap(cfg.K + 1, nullptr);
    for (std::size_t i = 0; i < run.record.snapshots.size(); ++i) snap[run.record.snapshot_k[i]] = &run.record.snapshots[i];

    auto& prof = run.profile;
    auto einf = extrapolate_E_infinity(fields);
    prof.E_inf = einf.E;
    prof.E_residuals = einf.residuals;
    prof.divergence_warning = einf.divergence_warning;

    std::vector<DistributionGrid> nus;
    for (int k = 0; k <= cfg.K; ++k) nus.push_back(extract_profile(*snap[k], r_k(k), prof.E_inf, lambda));
    prof.mu_inf = nus.back();
    prof.mu_inf.coords = Coords::qp;
    for (int k = 0; k < cfg.K; ++k) prof.nu_increments.push_back(max_abs_diff(nus[k + 1], nus[k]));
    for (int k = 0; k <= cfg.K; ++k) prof.nu_distance.push_back(window_diff(nus[k], prof.mu_inf, cfg.window));

    run.alpha = fit_rate("E_residual", prof.E_residuals, cfg.fit_lo, cfg.fit_hi);
    std::vector<double> dsnu;
    for (int k = 0; k < cfg.K; ++k) dsnu.push_back(prof.nu_increments[k] / (r_k(k + 1) - r_k(k)));
    run.beta = fit_rate("ds_nu", dsnu, cfg.fit_lo, cfg.fit_hi);
    prof.fits = {run.alpha, run.beta};
    for (int k = 1; k <= 3 && k < cfg.K; ++k) run.nu_head += prof.nu_increments[k];
    for (int k = 4; k <= 8 && k < cfg.K; ++k) run.nu_tail += prof.nu_increments[k];

    // profile consistency as if the run had stopped at r_K'
    for (int Kp : cfg.consistency_ks) {
        if (Kp < 1 || Kp > cfg.K) continue;
        std::vector<ElectricField> head(fields.begin(), fields.begin() + Kp + 1);
        auto e = extrapolate_E_infinity(head);
        const auto mu = extract_profile(*snap[Kp], r_k(Kp), e.E, lambda);
        run.consistency.push_back(verify_E_consistency(mu, e.E));
    }
    for (std::size_t i = 1; i < run.consistency.size(); ++i)
        if (run.consistency[i] > run.consistency[i - 1]) run.consistency_monotone = false;

    std::vector<DistributionGrid> tsnaps;
    std::vector<int> tks;
    for (int k = 1; k < cfg.K; ++k) {
        tsnaps.push_back(*snap[k]);
        tks.push_back(k);
    }
    run.theorem_A = verify_theorem_A(tsnaps, tks, prof, lambda, cfg.window);
    run.record.snapshots.clear();
    run.record.snapshot_k.clear();
    return run;
}

// ----- particle mode -----

ParticleEnsemble gaussian_ensemble(int d, std::size_t N, double mass, double width, std::uint64_t seed) {
    ParticleEnsemble e;
    e.d = d;
    e.q.resize(N * d);
    e.p.resize(N * d);
    e.w.assign(N, N ? mass / double(N) : 0.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, width);
    for (std::size_t i = 0; i < N * d; ++i) e.q[i] = normal(rng);
    for (std::size_t i = 0; i < N * d; ++i) e.p[i] = normal(rng);
    return e;
}

namespace {

// Softened free-space field of the particle density at the particle positions.
void particle_field(const ParticleEnsemble& e, double soft, std::vector<double>& E) {
    const int d = e.d;
    const std::ptrdiff_t N = e.size();
    const double omega = d == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
    const double eps2 = soft * soft;
    E.assign(N * d, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < N; ++i) {
        double acc[3] = {0.0, 0.0, 0.0};
        for (std::ptrdiff_t j = 0; j < N; ++j) {
            double r[3] = {0.0, 0.0, 0.0};
            double r2 = eps2;
            for (int c = 0; c < d; ++c) {
                r[c] = e.q[i * d + c] - e.q[j * d + c];
                r2 += r[c] * r[c];
            }
            const double inv = d == 2 ? 1.0 / r2 : 1.0 / (r2 * std::sqrt(r2));
            for (int c = 0; c < d; ++c) acc[c] += e.w[j] * r[c] * inv;
        }
        for (int c = 0; c < d; ++c) E[i * d + c] = acc[c] / omega;
    }
}

double profile_increment(const ParticleEnsemble& e, const std::vector<double>& Y0, const std::vector<double>& Y1) {
    const int d = e.d;
    double num = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        double r2 = 0.0;
        for (int c = 0; c < 2 * d; ++c) {
            const double dy = Y1[i * 2 * d + c] - Y0[i * 2 * d + c];
            r2 += dy * dy;
        }
        num += e.w[i] * std::sqrt(r2);
        mass += e.w[i];
    }
    return mass > 0.0 ? num / mass : 0.0;
}

std::vector<double> profile_coords(const ParticleEnsemble& e, double s) {
    const int d = e.d;
    std::vector<double> Y(e.size() * 2 * d);
    for (std::size_t i = 0; i < e.size(); ++i)
        for (int c = 0; c < d; ++c) {
            Y[i * 2 * d + c] = e.q[i * d + c] + (1.0 - s) * e.p[i * d + c];
            Y[i * 2 * d + d + c] = e.p[i * d + c];
        }
    return Y;
}

}  // namespace

LinearScatteringReport linear_scattering_d3(const ParticleEnsemble& ens, const ParticleConfig& cfg) {
    LinearScatteringReport rep;
    rep.d = ens.d;
    rep.N = ens.size();
    if (rep.N == 0) return rep;
    rep.softening = 0.01 * cfg.box / std::pow(double(rep.N), 1.0 / ens.d);
    SolverConfig sc;
    sc.m = cfg.m;
    const auto mesh = time_mesh(0.0, r_k(cfg.K), sc);

    ParticleEnsemble e = ens;
    const int d = e.d;
    const double mass0 = std::accumulate(e.w.begin(), e.w.end(), 0.0);
    std::vector<double> E;
    auto force = [&](double s) {
        if (cfg.interacting) particle_field(e, rep.softening, E);
        else E.assign(e.q.size(), 0.0);
        return cfg.lambda * g_of_s(s, d);
    };
    std::vector<std::vector<double>> Y{profile_coords(e, 0.0)};
    double coef = force(0.0);
    for (std::size_t n = 0; n + 1 < mesh.size(); ++n) {
        const double s = mesh[n], ds = mesh[n + 1] - s;
        for (std::size_t i = 0; i < e.p.size(); ++i) e.p[i] += 0.5 * ds * coef * E[i];
        for (std::size_t i = 0; i < e.q.size(); ++i) e.q[i] += ds * e.p[i];
        coef = force(mesh[n + 1]);
        for (std::size_t i = 0; i < e.p.size(); ++i) e.p[i] += 0.5 * ds * coef * E[i];
        for (int k = 1; k <= cfg.K; ++k)
            if (std::abs(mesh[n + 1] - r_k(k)) < 1e-13) Y.push_back(profile_coords(e, mesh[n + 1]));
    }
    for (std::size_t k = 0; k + 1 < Y.size(); ++k) rep.increments.push_back(profile_increment(e, Y[k], Y[k + 1]));
    for (int k = 1; k <= 3 && k < int(rep.increments.size()); ++k) rep.head += rep.increments[k];
    for (int k = 4; k <= 8 && k < int(rep.increments.size()); ++k) rep.tail += rep.increments[k];
    rep.tail_over_head = rep.head > 0.0 ? rep.tail / rep.head : 0.0;
    rep.summable = rep.tail_over_head < 0.2;
    rep.fit = fit_rate("particle_increment", rep.increments, 3, 8);
    rep.mass_drift = std::abs(std::accumulate(e.w.begin(), e.w.end(), 0.0) - mass0);
    return rep;
}

void write_scattering_json(const std::string& path, const ScatteringRun& run) {
    nlohmann::ordered_json j;
    const auto& p = run.profile;
    j["alpha"] = run.alpha.exponent;
    j["alpha_constant"] = run.alpha.constant;
    j["alpha_log_amplitude"] = run.alpha.log_amplitude;
    j["alpha_k_lo"] = run.alpha.k_lo;
    j["alpha_k_hi"] = run.alpha.k_hi;
    j["beta"] = run.beta.exponent;
    j["beta_log_amplitude"] = run.beta.log_amplitude;
    j["nu_head_sum"] = run.nu_head;
    j["nu_tail_sum"] = run.nu_tail;
    j["nu_tail_over_head"] = run.nu_head > 0 ? run.nu_tail / run.nu_head : 0.0;
    j["E_inf_sup"] = p.E_inf.sup();
    j["divergence_warning"] = p.divergence_warning;
    for (std::size_t i = 0; i < run.consistency.size(); ++i)
        j["consistency_" + std::to_string(i)] = run.consistency[i];
    j["consistency_monotone"] = run.consistency_monotone;
    j["theorem_A_rate"] = run.theorem_A.rate;
    j["theorem_A_pass"] = run.theorem_A.pass;
    j["theorem_A_identification_gap"] = run.theorem_A.identification_gap;
    j["mu_inf_l2"] = lebesgue_norm(p.mu_inf, 2);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << std::setw(2) << j << '\n';
}

void write_rate_csv(const std::string& path, const ScatteringRun& run) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "k,s,E_residual,nu_increment,nu_distance\n" << std::setprecision(17);
    const auto& p = run.profile;
    for (std::size_t k = 0; k < p.E_residuals.size(); ++k) {
        out << k << ',' << r_k(int(k)) << ',' << p.E_residuals[k] << ','
            << (k < p.nu_increments.size() ? p.nu_increments[k] : 0.0) << ','
            << (k < p.nu_distance.size() ? p.nu_distance[k] : 0.0) << '\n';
    }
}

}  // namespace vp
