#include "vp/forward_solver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "vp/lens.hpp"

namespace vp {

double r_k(int k) { return 1.0 - std::ldexp(1.0, -k); }

int dyadic_window(double s) {
    if (s < 0.0) return 0;
    int k = 0;
    while (k < 60 && r_k(k + 1) <= s) ++k;
    return k;
}

std::vector<double> time_mesh(double s0, double s1, const SolverConfig& cfg) {
    if (!(s1 < 1.0)) throw std::invalid_argument("time_mesh: s_end must be < 1");
    if (cfg.m <= 0 || !(cfg.ds_uniform > 0.0)) throw std::invalid_argument("time_mesh: step size must be positive");
    std::vector<double> mesh{s0};
    double s = s0;
    const double eps = 1e-14;
    while (s < s1 - eps) {
        double ds;
        double edge;
        if (s < cfg.s_switch - eps) {
            ds = cfg.ds_uniform;
            edge = cfg.s_switch;
        } else {
            const int k = dyadic_window(s + eps);
            ds = std::ldexp(1.0, -k) / cfg.m;
            edge = r_k(k + 1);
        }
        double next = std::min({s + ds, edge, s1});
        // avoid slivers left behind by round-off
        if (std::min(edge, s1) - next < 1e-3 * ds) next = std::min(edge, s1);
        mesh.push_back(next);
        s = next;
    }
    return mesh;
}

namespace {

void half_transport(DistributionGrid& g, double tau) {
    const Axis p = g.pa;
    shift_sweep(g, 0, [&](int, int, int j1, int) { return tau * p.node(j1); });
    shift_sweep(g, 1, [&](int, int, int, int j2) { return tau * p.node(j2); });
}

void kick(DistributionGrid& g, const ElectricField& E, double coef) {
    const int n = E.axis.n;
    shift_sweep(g, 2, [&](int i1, int i2, int, int) { return coef * E.c[0][std::size_t(i1) * n + i2]; });
    shift_sweep(g, 3, [&](int i1, int i2, int, int) { return coef * E.c[1][std::size_t(i1) * n + i2]; });
}

}  // namespace

void step_inplace(DistributionGrid& g, double s, double ds, const SolverConfig& cfg,
                  const ElectricField* frozen, ElectricField* mid_field) {
    if (!(s + ds < 1.0)) throw DomainError("step: s + ds must stay below 1");
    half_transport(g, 0.5 * ds);
    const double smid = s + 0.5 * ds;
    if (cfg.field_enabled) {
        ElectricField Emid;
        if (mid_field || !frozen) Emid = solve_field(g);
        const ElectricField& E = frozen ? *frozen : Emid;
        if (E.sup() > cfg.field_ceiling)
            throw NumericalFailure("field exceeded ceiling at s = " + std::to_string(smid), 11);
        if (E.sup() > 0.0) kick(g, E, ds * cfg.lambda * g_of_s(smid, cfg.d));
        if (mid_field) *mid_field = std::move(Emid);
    }
    half_transport(g, 0.5 * ds);
}

DistributionGrid step(const DistributionGrid& g, double s, double ds, const SolverConfig& cfg) {
    DistributionGrid out = g;
    step_inplace(out, s, ds, cfg);
    return out;
}

namespace {

Checkpoint make_checkpoint(const DistributionGrid& g, double s, int k) {
    Checkpoint c;
    c.s = s;
    c.k = k;
    c.norms = norm_report(g);
    c.E = solve_field(g);
    c.grad_E = gradient_sup(c.E);
    c.boundary = boundary_max(g);
    return c;
}

}  // namespace

EvolveResult evolve(const DistributionGrid& g0, double s_end, const SolverConfig& cfg, double s_start,
                    const StepObserver& observer) {
    const auto mesh = time_mesh(s_start, s_end, cfg);
    EvolveResult res;
    res.final = g0;
    auto& rec = res.record;
    if (!cfg.checkpoint_dir.empty()) std::filesystem::create_directories(cfg.checkpoint_dir);

    auto dyadic_index = [&](double s) {
        for (int k = 0; k <= 60; ++k)
            if (std::abs(s - r_k(k)) < 1e-13) return k;
        return -1;
    };
    auto record_point = [&](double s, int k) {
        rec.checkpoints.push_back(make_checkpoint(res.final, s, k));
        if (k >= 0) {
            if (cfg.keep_snapshots) {
                rec.snapshots.push_back(res.final);
                rec.snapshot_k.push_back(k);
            }
            if (!cfg.checkpoint_dir.empty())
                write_vlns(cfg.checkpoint_dir + "/gamma_rk" + std::to_string(k) + ".vlns", res.final);
        }
    };

    record_point(mesh.front(), dyadic_index(mesh.front()));
    if (observer) observer(mesh.front(), res.final);
    for (std::size_t i = 0; i + 1 < mesh.size(); ++i) {
        ElectricField Emid;
        step_inplace(res.final, mesh[i], mesh[i + 1] - mesh[i], cfg, nullptr,
                     cfg.field_enabled ? &Emid : nullptr);
        if (cfg.field_enabled) rec.field_sup = std::max(rec.field_sup, Emid.sup());
        const double s = mesh[i + 1];
        const int k = dyadic_index(s);
        const bool last = i + 2 == mesh.size();
        const bool cadence = cfg.cadence > 0 && (i + 1) % cfg.cadence == 0;
        if (k >= 0 || last || cadence) record_point(s, k);
        if (observer) observer(s, res.final);
    }
    if (!cfg.checkpoint_dir.empty()) write_trajectory_csv(cfg.checkpoint_dir + "/trajectory.csv", rec);
    return res;
}

double lwp_size(const DistributionGrid& g) {
    const double grad = std::hypot(gradient_sup(g, false), gradient_sup(g, true));
    return lebesgue_norm(g, 2) + weighted_sup_norm(g, 3) + grad;
}

PicardResult picard_lwp(const DistributionGrid& g0, double S, const SolverConfig& cfg, int steps) {
    std::vector<double> mesh;
    if (steps > 0) {
        for (int i = 0; i <= steps; ++i) mesh.push_back(S * i / steps);
    } else {
        mesh = time_mesh(0.0, S, cfg);
    }
    const std::size_t nsteps = mesh.size() - 1;

    PicardResult res;
    res.B = lwp_size(g0);
    const double scale = std::max(lebesgue_norm(g0, 0), 1e-300);
    const double tol = cfg.picard_tol * scale;

    // iterate 0: gamma_0 at every time, phi_0 = 0
    std::vector<ElectricField> fields(nsteps, ElectricField(g0.qa));
    DistributionGrid prev = g0;
    for (int n = 1; n <= cfg.picard_max_iter; ++n) {
        DistributionGrid g = g0;
        std::vector<ElectricField> next(nsteps);
        for (std::size_t i = 0; i < nsteps; ++i)
            step_inplace(g, mesh[i], mesh[i + 1] - mesh[i], cfg, &fields[i], &next[i]);
        const double dsup = max_abs_diff(g, prev);
        const double dl2 = l2_diff(g, prev);
        res.sup_diff.push_back(dsup);
        res.l2_diff.push_back(dl2);
        if (res.sup_diff.size() >= 2) {
            const double d0 = res.sup_diff[res.sup_diff.size() - 2];
            res.ratio.push_back(d0 > 0 ? dsup / d0 : 0.0);
        }
        res.iterations = n;
        prev = std::move(g);
        fields = std::move(next);
        if (dsup <= tol) {
            res.converged = true;
            break;
        }
    }
    res.gamma_S = std::move(prev);
    return res;
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return {0.0, n ? y[0] : 0.0};
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxx > 0 ? sxy / sxx : 0.0;
    return {slope, my - slope * mx};
}

namespace {

double bracket_F(double s) { return std::hypot(1.0, F_of_s(s)); }

// Slope of ln(series/series0) against ln<F(s)>, skipping s where <F> is too close to 1.
GrowthFit growth_fit(const std::string& family, const TrajectoryRecord& rec, double bound,
                     const std::function<double(const Checkpoint&)>& value) {
    GrowthFit fit;
    fit.family = family;
    fit.bound = bound;
    if (rec.checkpoints.empty()) return fit;
    const double v0 = value(rec.checkpoints.front());
    if (!(v0 > 0.0)) return fit;
    std::vector<double> x, y;
    for (const auto& c : rec.checkpoints) {
        const double lf = std::log(bracket_F(c.s));
        const double v = value(c);
        if (lf < 0.05 || !(v > 0.0)) continue;
        x.push_back(lf);
        y.push_back(std::log(v / v0));
    }
    if (x.size() >= 2) fit.exponent = fit_line(x, y).first;
    fit.pass = fit.exponent <= bound;
    return fit;
}

}  // namespace

MomentReport moment_propagation_check(const TrajectoryRecord& rec, const std::vector<int>& exponents) {
    MomentReport rep;
    if (rec.checkpoints.empty()) return rep;
    const double D = rec.field_sup;
    for (int a : exponents) {
        auto value = [a](const Checkpoint& c) {
            if (a == 0) return c.norms.linf;
            auto it = c.norms.weighted.find(a);
            return it == c.norms.weighted.end() ? 0.0 : it->second;
        };
        const double eps = value(rec.checkpoints.front());
        double cmin = INFINITY, cmax = 0.0;
        for (const auto& c : rec.checkpoints) {
            if (!(eps > 0.0)) break;
            const double bound = eps * (1.0 + std::pow(bracket_F(c.s) * D, a));
            const double C = value(c) / bound;
            cmin = std::min(cmin, C);
            cmax = std::max(cmax, C);
        }
        rep.constant_spread.push_back(cmax > 0.0 ? cmax / cmin : 1.0);
        auto fit = growth_fit("moment_a" + std::to_string(a), rec, a + 0.3, value);
        rep.pass = rep.pass && fit.pass;
        rep.fits.push_back(fit);
    }
    return rep;
}

std::vector<GrowthFit> derivative_diagnostics(const TrajectoryRecord& rec) {
    return {growth_fit("grad_q", rec, 1.0, [](const Checkpoint& c) { return c.norms.grad_q; }),
            growth_fit("grad_p", rec, 6.0, [](const Checkpoint& c) { return c.norms.grad_p; })};
}

void write_trajectory_csv(const std::string& path, const TrajectoryRecord& rec) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "s,k,l2,linf,w1,w2,w3,grad_q,grad_p,E_sup,gradE_sup,boundary\n";
    out << std::setprecision(17);
    for (const auto& c : rec.checkpoints) {
        auto w = [&](int a) {
            auto it = c.norms.weighted.find(a);
            return it == c.norms.weighted.end() ? 0.0 : it->second;
        };
        out << c.s << ',' << c.k << ',' << c.norms.l2 << ',' << c.norms.linf << ',' << w(1) << ','
            << w(2) << ',' << w(3) << ',' << c.norms.grad_q << ',' << c.norms.grad_p << ','
            << c.E.sup() << ',' << c.grad_E << ',' << c.boundary << '\n';
    }
}

}  // namespace vp
