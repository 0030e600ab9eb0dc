#include "vp/run.hpp"

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "vp/field.hpp"
#include "vp/forward_solver.hpp"
#include "vp/lens.hpp"
#include "vp/scattering.hpp"
#include "vp/wave_operator.hpp"

namespace vp {

namespace {

// Flat key = value report, written in insertion order.
class Report {
  public:
    template <class T>
    void add(const std::string& key, const T& v) {
        std::ostringstream os;
        os << std::setprecision(10) << v;
        rows_.emplace_back(key, os.str());
    }
    void add(const std::string& key, bool v) { rows_.emplace_back(key, v ? "true" : "false"); }
    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        for (const auto& [k, v] : rows_) out << k << " = " << v << '\n';
    }

  private:
    std::vector<std::pair<std::string, std::string>> rows_;
};

SolverConfig solver_config(const RunConfig& c) {
    SolverConfig s;
    s.lambda = c.lambda;
    s.m = c.m;
    s.ds_uniform = c.ds_uniform;
    s.picard_tol = c.picard_tol;
    s.picard_max_iter = c.picard_max_iter;
    s.field_ceiling = c.field_ceiling;
    s.cadence = c.cadence;
    return s;
}

ScatteringConfig scattering_config(const RunConfig& c) {
    ScatteringConfig s;
    s.solver = solver_config(c);
    s.K = c.K;
    s.fit_lo = c.fit_lo;
    s.fit_hi = c.fit_hi;
    s.window = c.window;
    return s;
}

WaveConfig wave_config(const RunConfig& c) {
    WaveConfig w;
    w.lambda = c.lambda;
    w.T = c.T;
    w.m = c.wave_m;
    w.K0 = c.K0;
    w.picard_tol = c.wave_tol;
    w.picard_max_iter = c.wave_max_iter;
    w.c0 = c.data.c0;
    return w;
}

// max |a - b| / max |b| over |x|,|v| <= window
double window_relative_error(const DistributionGrid& a, const DistributionGrid& b, double window) {
    double e = 0.0, m = 0.0;
    const int nq = b.qa.n, np = b.pa.n;
    for (int i1 = 0; i1 < nq; ++i1)
        for (int i2 = 0; i2 < nq; ++i2)
            for (int j1 = 0; j1 < np; ++j1)
                for (int j2 = 0; j2 < np; ++j2) {
                    if (std::abs(b.qa.node(i1)) > window || std::abs(b.qa.node(i2)) > window ||
                        std::abs(b.pa.node(j1)) > window || std::abs(b.pa.node(j2)) > window)
                        continue;
                    e = std::max(e, std::abs(a(i1, i2, j1, j2) - b(i1, i2, j1, j2)));
                    m = std::max(m, std::abs(b(i1, i2, j1, j2)));
                }
    return m > 0.0 ? e / m : e;
}

void write_sigma_checkpoints(const std::string& path, const BackwardResult& b, double c0) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "s,A1,A2,A3,theta_bracket,theta_ode_residual,second_order,third_order,dwK_sup,second_ratio,third_ratio\n"
        << std::setprecision(12);
    for (const auto& c : b.checkpoints) {
        const double bF = std::hypot(1.0, c.s > -1.0 ? F_of_s(c.s) : 0.0);
        const double scale = c0 > 0 ? c0 * c0 : 1.0;
        out << c.s << ',' << c.A1 << ',' << c.A2 << ',' << c.A3 << ',' << int(c.theta_bracket) << ','
            << c.theta_ode_residual << ',' << c.second_order << ',' << c.third_order << ',' << c.dwK_sup << ','
            << c.second_order / (scale * std::pow(bF, 4)) << ',' << c.third_order / (scale * std::pow(bF, 5)) << '\n';
    }
}

void report_backward(Report& rep, const BackwardResult& b, double c0) {
    rep.add("backward.iterations", b.iterations);
    rep.add("backward.converged", b.converged);
    rep.add("backward.final_sup_diff", b.sup_diff.empty() ? 0.0 : b.sup_diff.back());
    double rmax = 0.0, amax = 0.0;
    bool bracket = true;
    for (double r : b.ratio) rmax = std::max(rmax, r);
    for (const auto& c : b.checkpoints) {
        amax = std::max({amax, c.A1, c.A2, c.A3});
        bracket = bracket && c.theta_bracket;
    }
    rep.add("backward.max_ratio", rmax);
    rep.add("backward.sigma_initial_norm", b.sigma0_norm);
    rep.add("backward.E_ref_w3", b.E_ref_w3);
    rep.add("backward.max_A", amax);
    rep.add("backward.A_bound", 4.0 * c0);
    rep.add("backward.theta_bracket", bracket);
}

int mode_simulate(const RunConfig& cfg, const std::string& out, Report& rep, std::ostream& log) {
    const auto g0 = make_data(cfg);
    auto sc = scattering_config(cfg);
    sc.solver.checkpoint_dir = out + "/checkpoints";
    log << "simulate: n = " << cfg.n << ", K = " << cfg.K << '\n';
    const auto run = run_scattering(g0, sc);
    write_scattering_json(out + "/scattering.json", run);
    write_rate_csv(out + "/rates.csv", run);
    write_vlns(out + "/mu_inf.vlns", run.profile.mu_inf);
    const auto& first = run.record.checkpoints.front().norms;
    const auto& last = run.record.checkpoints.back().norms;
    rep.add("l2_drift", (last.l2 - first.l2) / first.l2);
    rep.add("linf_overshoot", (last.linf - first.linf) / first.linf);
    rep.add("alpha", run.alpha.exponent);
    rep.add("beta", run.beta.exponent);
    rep.add("nu_tail_over_head", run.nu_head > 0 ? run.nu_tail / run.nu_head : 0.0);
    for (std::size_t i = 0; i < run.consistency.size(); ++i)
        rep.add("consistency_r" + std::to_string(sc.consistency_ks[i]), run.consistency[i]);
    rep.add("consistency_monotone", run.consistency_monotone);
    rep.add("theorem_A_rate", run.theorem_A.rate);
    rep.add("divergence_warning", run.profile.divergence_warning);
    return exit_ok;
}

int mode_wave(const RunConfig& cfg, const std::string& out, Report& rep, std::ostream& log) {
    const auto mu = make_data(cfg);
    const auto wc = wave_config(cfg);
    log << "wave: backward from s = -1 to " << wc.T << '\n';
    const auto wr = wave_operator(mu, wc, solver_config(cfg));
    write_wave_csv(out + "/wave_run.csv", wr.backward);
    write_sigma_checkpoints(out + "/sigma_checkpoints.csv", wr.backward, cfg.data.c0);
    write_vlns(out + "/sigma_T.vlns", wr.backward.sigma_T);
    write_vlns(out + "/mu0.vlns", wr.mu0);
    report_backward(rep, wr.backward, cfg.data.c0);
    if (cfg.roundtrip) {
        log << "wave: forward round trip\n";
        const auto fwd = run_scattering(wr.mu0, scattering_config(cfg));
        write_vlns(out + "/mu_inf_roundtrip.vlns", fwd.profile.mu_inf);
        rep.add("roundtrip_relative_error", window_relative_error(fwd.profile.mu_inf, mu, cfg.window));
    }
    return exit_ok;
}

int mode_scatter_map(const RunConfig& cfg, const std::string& out, Report& rep, std::ostream& log) {
    const auto mu_minus = make_data(cfg);
    log << "scatter-map: backward leg then forward extraction\n";
    const auto r = scattering_map(mu_minus, wave_config(cfg), scattering_config(cfg));
    write_wave_csv(out + "/wave_run.csv", r.backward);
    write_vlns(out + "/mu_plus.vlns", r.mu_plus);
    write_scattering_json(out + "/scattering.json", r.forward);
    report_backward(rep, r.backward, cfg.data.c0);
    rep.add("l2_minus", r.l2_minus);
    rep.add("l2_plus", r.l2_plus);
    rep.add("l2_relative_change", r.l2_relative_change);
    rep.add("E_mismatch", r.E_mismatch);
    return exit_ok;
}

int mode_verify_bounds(const RunConfig& cfg, const std::string& out, Report& rep, std::ostream& log) {
    const auto g = make_data(cfg);
    log << "verify-bounds: scale-wise and assembled field bounds\n";
    const auto q = LogQuadrature::make(cfg.quad_nodes);
    auto rows = verify_dyadic_bounds(g, q, q);
    const auto field_rows = verify_field_bound(g, cfg.bound_A, cfg.bound_theta);
    rows.insert(rows.end(), field_rows.begin(), field_rows.end());
    write_bound_csv(out + "/bounds.csv", rows);
    const auto E = solve_field(g);
    const auto Er = reconstruct_from_dyadic(density(g), q);
    rep.add("reconstruction_relative_error", E.sup() > 0 ? sup_diff(E, Er) / E.sup() : 0.0);
    rep.add("max_ratio", max_ratio(rows));
    rep.add("all_pass", all_pass(rows));
    return exit_ok;
}

int mode_diagnose(const RunConfig& cfg, const std::string& out, Report& rep, std::ostream& log) {
    const auto g0 = make_data(cfg);
    auto sc = solver_config(cfg);
    log << "diagnose: forward run to s = " << cfg.s_end << '\n';
    const auto res = evolve(g0, cfg.s_end, sc);
    write_trajectory_csv(out + "/trajectory.csv", res.record);
    const auto mom = moment_propagation_check(res.record, {1, 2, 3});
    for (std::size_t i = 0; i < mom.fits.size(); ++i) {
        rep.add(mom.fits[i].family + ".exponent", mom.fits[i].exponent);
        rep.add(mom.fits[i].family + ".constant_spread", mom.constant_spread[i]);
    }
    rep.add("moments_pass", mom.pass);
    for (const auto& f : derivative_diagnostics(res.record)) {
        rep.add(f.family + ".exponent", f.exponent);
        rep.add(f.family + ".pass", f.pass);
    }
    const auto pic = picard_lwp(g0, cfg.picard_S, sc, cfg.picard_steps);
    {
        std::ofstream csv(out + "/picard.csv");
        csv << "iterate,sup_diff,l2_diff,ratio\n" << std::setprecision(17);
        for (std::size_t i = 0; i < pic.sup_diff.size(); ++i)
            csv << i + 1 << ',' << pic.sup_diff[i] << ',' << pic.l2_diff[i] << ',' << (i ? pic.ratio[i - 1] : 0.0)
                << '\n';
    }
    rep.add("picard.B", pic.B);
    rep.add("picard.iterations", pic.iterations);
    rep.add("picard.converged", pic.converged);
    if (cfg.particles) {
        log << "diagnose: particle runs, N = " << cfg.N << '\n';
        ParticleConfig pc;
        pc.lambda = cfg.lambda;
        pc.m = cfg.particle_m;
        pc.K = cfg.particle_K;
        for (int d : {3, 2}) {
            const auto ens = gaussian_ensemble(d, cfg.N, cfg.particle_mass, cfg.particle_width, cfg.seed);
            const auto r = linear_scattering_d3(ens, pc);
            const std::string pre = "particles_d" + std::to_string(d);
            rep.add(pre + ".tail_over_head", r.tail_over_head);
            rep.add(pre + ".exponent", r.fit.exponent);
            rep.add(pre + ".summable", r.summable);
        }
    }
    return exit_ok;
}

}  // namespace

DistributionGrid make_data(const RunConfig& cfg) {
    const Axis q{cfg.n, cfg.L}, p{cfg.n, cfg.L};
    GaussianSpec spec;
    spec.amplitude = cfg.data.amplitude;
    spec.q_width = cfg.data.q_width;
    spec.p_width = cfg.data.p_width;
    const double off = cfg.data.center_offset * q.h();
    spec.q_center = {cfg.data.q_center[0] + off, cfg.data.q_center[1] + off};
    spec.p_center = {cfg.data.p_center[0] + off, cfg.data.p_center[1] + off};
    if (cfg.data.c0 > 0.0) {
        spec.amplitude = 1.0;
        const double S = sigma_initial_norm(gaussian(q, p, spec));
        spec.amplitude = cfg.data.c0 / S;
    }
    return gaussian(q, p, spec);
}

int run(const std::string& mode, const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
    using Mode = int (*)(const RunConfig&, const std::string&, Report&, std::ostream&);
    static const std::map<std::string, Mode> modes = {{"simulate", mode_simulate},
                                                      {"wave", mode_wave},
                                                      {"scatter-map", mode_scatter_map},
                                                      {"verify-bounds", mode_verify_bounds},
                                                      {"diagnose", mode_diagnose}};
    const auto it = modes.find(mode);
    if (it == modes.end()) {
        log << "unknown mode '" << mode << "'\n";
        return exit_usage;
    }
    if (!cfg.data.present) {
        log << mode << ": config has no data, nothing to do\n";
        return exit_ok;
    }
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    std::filesystem::create_directories(out_dir);
    Report rep;
    rep.add("mode", mode);
    rep.add("seed", cfg.seed);
    int code = exit_ok;
    try {
        code = it->second(cfg, out_dir, rep, log);
        rep.add("status", "ok");
    } catch (const NumericalFailure& e) {
        log << "numerical failure (" << e.code << "): " << e.what() << '\n';
        rep.add("status", "numerical_failure");
        rep.add("failure_code", e.code);
        rep.add("failure", e.what());
        code = exit_numerical;
    } catch (const SupportError& e) {
        log << "support violation: " << e.what() << '\n';
        rep.add("status", "numerical_failure");
        rep.add("failure_code", 31);
        rep.add("failure", e.what());
        code = exit_numerical;
    } catch (const DomainError& e) {
        log << "domain error: " << e.what() << '\n';
        rep.add("status", "numerical_failure");
        rep.add("failure_code", 32);
        rep.add("failure", e.what());
        code = exit_numerical;
    }
    rep.write(out_dir + "/report.txt");
    return code;
}

}  // namespace vp
