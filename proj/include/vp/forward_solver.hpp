#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vp/field.hpp"
#include "vp/phase_state.hpp"

namespace vp {

struct SolverConfig {
    int lambda = 1;             // +1 or -1
    int d = 2;
    double s_switch = 0.0;      // uniform steps on [0, s_switch], dyadic grading after
    double ds_uniform = 1.0 / 32;
    int m = 16;                 // steps per unit 2^-k inside the window [r_k, r_{k+1}]
    bool field_enabled = true;  // false: pure free transport
    double picard_tol = 1e-12;  // relative to ||gamma_0||_inf
    int picard_max_iter = 30;
    double field_ceiling = 1e3;
    int cadence = 0;            // extra checkpoint every `cadence` steps (0: only at r_k)
    std::string checkpoint_dir; // when set, gamma_rk{k}.vlns dumps are written there
    bool keep_snapshots = false;
};

class NumericalFailure : public std::runtime_error {
  public:
    NumericalFailure(const std::string& what, int code) : std::runtime_error(what), code(code) {}
    int code;
};

// r_k = 1 - 2^{-k}
double r_k(int k);
// k with r_k <= s < r_{k+1}
int dyadic_window(double s);
std::vector<double> time_mesh(double s0, double s1, const SolverConfig& cfg);

// Strang step: half free transport, kick with the field of the half-transported state
// at the midpoint time, half transport. `frozen` replaces that field when given;
// `mid_field` receives the field of the half-transported state.
void step_inplace(DistributionGrid& g, double s, double ds, const SolverConfig& cfg,
                  const ElectricField* frozen = nullptr, ElectricField* mid_field = nullptr);
DistributionGrid step(const DistributionGrid& g, double s, double ds, const SolverConfig& cfg);

struct Checkpoint {
    double s = 0.0;
    int k = -1;  // dyadic index when s = r_k
    NormReport norms;
    ElectricField E;
    double grad_E = 0.0;
    double boundary = 0.0;
};

struct TrajectoryRecord {
    std::vector<Checkpoint> checkpoints;
    std::vector<DistributionGrid> snapshots;  // at r_k, when kept
    std::vector<int> snapshot_k;
    double field_sup = 0.0;  // max |E| over all steps
};

struct EvolveResult {
    TrajectoryRecord record;
    DistributionGrid final;
};

using StepObserver = std::function<void(double s, const DistributionGrid&)>;
EvolveResult evolve(const DistributionGrid& g0, double s_end, const SolverConfig& cfg,
                    double s_start = 0.0, const StepObserver& observer = {});

struct PicardResult {
    DistributionGrid gamma_S;
    std::vector<double> sup_diff;  // d_n = ||gamma_n(S) - gamma_{n-1}(S)||_inf, n >= 1
    std::vector<double> l2_diff;
    std::vector<double> ratio;     // d_n / d_{n-1}, n >= 2
    bool converged = false;
    int iterations = 0;
    double B = 0.0;
};
// Iterates linear transports in the previous iterate's field, starting from phi_0 = 0.
// `steps` > 0 uses a uniform mesh of that many steps instead of the solver mesh.
PicardResult picard_lwp(const DistributionGrid& g0, double S, const SolverConfig& cfg, int steps = 0);

// B = ||g||_2 + ||<p>^3 g||_inf + ||grad_{q,p} g||_inf
double lwp_size(const DistributionGrid& g);

struct GrowthFit {
    std::string family;
    double exponent = 0.0;  // slope against ln <F(s)>
    double bound = 0.0;
    bool pass = true;
};
// ||<p>^a g(s)|| against eps (1 + <F>^a D^a): per-a constants and fitted exponents.
struct MomentReport {
    std::vector<GrowthFit> fits;
    std::vector<double> constant_spread;  // max/min of the measured constants, per a
    bool pass = true;
};
MomentReport moment_propagation_check(const TrajectoryRecord& rec, const std::vector<int>& exponents = {1, 2, 3});
std::vector<GrowthFit> derivative_diagnostics(const TrajectoryRecord& rec);

void write_trajectory_csv(const std::string& path, const TrajectoryRecord& rec);

// Least-squares slope and intercept of y against x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace vp
