#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vp/config.hpp"
#include "vp/field.hpp"
#include "vp/forward_solver.hpp"
#include "vp/lens.hpp"
#include "vp/run.hpp"
#include "vp/scattering.hpp"
#include "vp/wave_operator.hpp"

namespace py = pybind11;
using namespace vp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array grid_to_array(const DistributionGrid& g) {
    Array a({g.qa.n, g.qa.n, g.pa.n, g.pa.n});
    std::copy(g.values.begin(), g.values.end(), a.mutable_data());
    return a;
}

DistributionGrid grid_from_array(const Array& a, double L, double Lp) {
    if (a.ndim() != 4 || a.shape(0) != a.shape(1) || a.shape(2) != a.shape(3))
        throw std::invalid_argument("expected an (n, n, m, m) array");
    DistributionGrid g(Axis{int(a.shape(0)), L}, Axis{int(a.shape(2)), Lp > 0 ? Lp : L});
    std::copy(a.data(), a.data() + a.size(), g.values.begin());
    return g;
}

Array plane_to_array(const std::vector<double>& v, int n) {
    Array a({n, n});
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Lens-frame Vlasov-Poisson solver: forward evolution, scattering profiles and wave operators.";

    py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<DistributionGrid>(m, "Grid")
        .def(py::init(&grid_from_array), py::arg("values"), py::arg("L"), py::arg("Lp") = 0.0)
        .def_property_readonly("n", [](const DistributionGrid& g) { return g.qa.n; })
        .def_property_readonly("L", [](const DistributionGrid& g) { return g.qa.L; })
        .def_property_readonly("Lp", [](const DistributionGrid& g) { return g.pa.L; })
        .def("array", &grid_to_array, "Copy of the samples as an (n, n, n, n) array.")
        .def("nodes", [](const DistributionGrid& g) {
            std::vector<double> x(g.qa.n);
            for (int i = 0; i < g.qa.n; ++i) x[i] = g.qa.node(i);
            return x;
        })
        .def("l2", [](const DistributionGrid& g) { return lebesgue_norm(g, 2); })
        .def("linf", [](const DistributionGrid& g) { return lebesgue_norm(g, 0); });

    m.def(
        "gaussian",
        [](int n, double L, double amplitude, double q_width, double p_width, std::array<double, 2> q_center,
           std::array<double, 2> p_center) {
            GaussianSpec sp;
            sp.amplitude = amplitude;
            sp.q_width = q_width;
            sp.p_width = p_width;
            sp.q_center = q_center;
            sp.p_center = p_center;
            return gaussian(Axis{n, L}, Axis{n, L}, sp);
        },
        py::arg("n"), py::arg("L"), py::arg("amplitude") = 1.0, py::arg("q_width") = 1.0,
        py::arg("p_width") = 1.0, py::arg("q_center") = std::array<double, 2>{0, 0},
        py::arg("p_center") = std::array<double, 2>{0, 0});

    m.def("f_of_s", &f_of_s);
    m.def("F_of_s", &F_of_s);
    m.def(
        "lens_forward",
        [](double t, std::vector<double> x, std::vector<double> v) {
            const auto c = LensChart(Flavor::hyperbolic, int(x.size())).forward(t, x, v);
            return py::make_tuple(c.time, c.a, c.b);
        },
        "(t, x, v) -> (s, q, p)");
    m.def(
        "lens_inverse",
        [](double s, std::vector<double> q, std::vector<double> p) {
            const auto c = LensChart(Flavor::hyperbolic, int(q.size())).inverse(s, q, p);
            return py::make_tuple(c.time, c.a, c.b);
        },
        "(s, q, p) -> (t, x, v)");

    m.def(
        "solve_field",
        [](const Array& rho, double L) {
            if (rho.ndim() != 2 || rho.shape(0) != rho.shape(1)) throw std::invalid_argument("expected (n, n)");
            Plane p(Axis{int(rho.shape(0)), L});
            std::copy(rho.data(), rho.data() + rho.size(), p.v.begin());
            const auto E = solve_field(p);
            return py::make_tuple(plane_to_array(E.c[0], E.axis.n), plane_to_array(E.c[1], E.axis.n));
        },
        py::arg("rho"), py::arg("L"), "Free-space field of a density on [-L, L]^2; returns (Ex, Ey).");
    m.def(
        "density", [](const DistributionGrid& g) { return plane_to_array(density(g).v, g.qa.n); },
        "Velocity integral of the squared distribution.");

    m.def(
        "evolve",
        [](const DistributionGrid& g0, double s_end, int m_steps, int lambda, bool field, double s_start) {
            SolverConfig cfg;
            cfg.m = m_steps;
            cfg.lambda = lambda;
            cfg.field_enabled = field;
            py::gil_scoped_release release;
            return evolve(g0, s_end, cfg, s_start).final;
        },
        py::arg("g0"), py::arg("s_end"), py::arg("m") = 16, py::arg("lam") = 1, py::arg("field") = true,
        py::arg("s_start") = 0.0);

    m.def(
        "run_scattering",
        [](const DistributionGrid& g0, int K, int m_steps, int lambda) {
            ScatteringConfig cfg;
            cfg.K = K;
            cfg.solver.m = m_steps;
            cfg.solver.lambda = lambda;
            ScatteringRun r;
            {
                py::gil_scoped_release release;
                r = run_scattering(g0, cfg);
            }
            py::dict d;
            d["mu_inf"] = r.profile.mu_inf;
            d["alpha"] = r.alpha.exponent;
            d["beta"] = r.beta.exponent;
            d["nu_tail_over_head"] = r.nu_head > 0 ? r.nu_tail / r.nu_head : 0.0;
            d["E_residuals"] = r.profile.E_residuals;
            d["nu_increments"] = r.profile.nu_increments;
            d["consistency"] = r.consistency;
            d["consistency_monotone"] = r.consistency_monotone;
            return d;
        },
        py::arg("g0"), py::arg("K") = 10, py::arg("m") = 16, py::arg("lam") = 1);

    m.def(
        "wave_operator",
        [](const DistributionGrid& mu_inf, double T, int m_steps, int K0, int lambda) {
            WaveConfig wc;
            wc.T = T;
            wc.m = m_steps;
            wc.K0 = K0;
            wc.lambda = lambda;
            SolverConfig fwd;
            fwd.lambda = lambda;
            WaveResult r;
            {
                py::gil_scoped_release release;
                r = wave_operator(mu_inf, wc, fwd);
            }
            py::dict d;
            d["mu0"] = r.mu0;
            d["gamma_T"] = r.gamma_T;
            d["iterations"] = r.backward.iterations;
            d["sup_diff"] = r.backward.sup_diff;
            d["ratio"] = r.backward.ratio;
            py::list cps;
            for (const auto& c : r.backward.checkpoints) {
                py::dict e;
                e["s"] = c.s;
                e["A"] = std::vector<double>{c.A1, c.A2, c.A3};
                e["theta_bracket"] = c.theta_bracket;
                cps.append(e);
            }
            d["checkpoints"] = cps;
            return d;
        },
        py::arg("mu_inf"), py::arg("T") = -0.5, py::arg("m") = 4, py::arg("K0") = 8, py::arg("lam") = 1,
        "Final data to data at t = 0.");

    m.def(
        "scattering_map",
        [](const DistributionGrid& mu_minus, double T, int m_steps, int K0, int K) {
            WaveConfig wc;
            wc.T = T;
            wc.m = m_steps;
            wc.K0 = K0;
            ScatteringConfig sc;
            sc.K = K;
            ScatteringMapResult r;
            {
                py::gil_scoped_release release;
                r = scattering_map(mu_minus, wc, sc);
            }
            py::dict d;
            d["mu_plus"] = r.mu_plus;
            d["l2_relative_change"] = r.l2_relative_change;
            d["E_mismatch"] = r.E_mismatch;
            return d;
        },
        py::arg("mu_minus"), py::arg("T") = -0.5, py::arg("m") = 4, py::arg("K0") = 8, py::arg("K") = 10);

    m.def("sigma_initial_norm", &sigma_initial_norm);

    m.def(
        "run",
        [](const std::string& mode, const std::string& config, const std::string& out) {
            const auto cfg = load_config(config);
            std::ostringstream log;
            const int code = run(mode, cfg, out, log);
            return py::make_tuple(code, log.str());
        },
        py::arg("mode"), py::arg("config"), py::arg("out"), "Same as the command-line tool; returns (exit code, log).");
}
