#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vp/field.hpp"
#include "vp/forward_solver.hpp"
#include "vp/phase_state.hpp"

namespace vp {

// Least-squares fit of ln(value) = c + exponent * ln(1 - r_k) over k in [k_lo, k_hi].
// log_amplitude is the coefficient of an optional second regressor ln<ln(1 - r_k)>.
struct RateFit {
    std::string name;
    double exponent = 0.0;
    double constant = 0.0;
    int k_lo = 0;
    int k_hi = 0;
    double log_amplitude = 0.0;
    double log_exponent = 0.0;  // first-regressor slope when the log term is fitted jointly
};
RateFit fit_rate(const std::string& name, const std::vector<double>& values, int k_lo, int k_hi);

struct EInfinity {
    ElectricField E;
    std::vector<double> residuals;  // ||E(r_k) - E_inf||_inf, k = 0..K
    bool divergence_warning = false;
};
// Snapshots at consecutive r_0..r_K; one Richardson step assuming first-order error in 1 - s.
EInfinity extrapolate_E_infinity(const std::vector<ElectricField>& snapshots);

// Phi(s,q,p) = (q + (s-1)p + lam (s-1) F(s) E1(q), p + lam F(s) E1(q)).
std::array<double, 4> profile_map_Phi(double s, const std::array<double, 4>& qp, const ElectricField& E1,
                                      int lambda);
// nu(s) = gamma(s, Phi(s, .)) on the grid of gamma.
DistributionGrid extract_profile(const DistributionGrid& gamma, double s, const ElectricField& E1, int lambda);

struct PhysicalPoint {
    std::array<double, 2> X;
    std::array<double, 2> V;
};
// X = x cosh t + v sinh t - lam t e^{-t} E_inf(x+v), V = v cosh t + x sinh t + lam t e^{-t} E_inf(x+v).
PhysicalPoint physical_trajectory(double t, const std::array<double, 2>& x, const std::array<double, 2>& v,
                                  const ElectricField& E_inf, int lambda);

struct ScatteringProfile {
    DistributionGrid mu_inf;  // (x, v) labels
    ElectricField E_inf;
    std::vector<double> E_residuals;   // per k
    std::vector<double> nu_increments; // ||nu(r_{k+1}) - nu(r_k)||_inf, k = 0..K-1
    std::vector<double> nu_distance;   // ||nu(r_k) - mu_inf||_inf on the central window
    std::vector<RateFit> fits;
    bool divergence_warning = false;
};

struct TheoremAReport {
    std::vector<double> t;
    std::vector<double> backmapped_error;  // through the physical trajectories and the chart
    std::vector<double> profile_error;     // ||nu(r_k) - mu_inf|| on the same window
    double identification_gap = 0.0;       // max |backmapped - profile|
    double rate = 0.0;                     // fitted decay rate in e^{-t}
    bool pass = true;
};
// snapshots[i] is gamma at s = r_{ks[i]}; errors use the points with |x|,|v| <= window.
TheoremAReport verify_theorem_A(const std::vector<DistributionGrid>& snapshots, const std::vector<int>& ks,
                                const ScatteringProfile& profile, int lambda, double window = 3.0,
                                double t_lo = 1.5, double t_hi = 3.0, double min_rate = 0.8);

// ||E_inf - E[mu_inf]||_inf / ||E_inf||_inf, 0 when both vanish.
double verify_E_consistency(const DistributionGrid& mu_inf, const ElectricField& E_inf);

struct ScatteringConfig {
    SolverConfig solver;
    int K = 10;               // run to r_K
    int fit_lo = 3, fit_hi = 8;
    double window = 3.0;
    std::vector<int> consistency_ks{6, 7, 8};
    double s_start = 0.0;  // negative when the data come from a backward leg
};

struct ScatteringRun {
    ScatteringProfile profile;
    RateFit alpha;            // E residual rate
    RateFit beta;             // d nu / ds rate
    double nu_head = 0.0;     // increments k = 1..3
    double nu_tail = 0.0;     // increments k = 4..8
    std::vector<double> consistency;  // mismatch at consistency_ks
    bool consistency_monotone = true;
    TheoremAReport theorem_A;
    TrajectoryRecord record;
};
ScatteringRun run_scattering(const DistributionGrid& g0, const ScatteringConfig& cfg);

// ----- particle mode -----
struct ParticleEnsemble {
    int d = 3;
    std::vector<double> q, p;  // N*d, particle-major
    std::vector<double> w;
    std::size_t size() const { return w.size(); }
};
ParticleEnsemble gaussian_ensemble(int d, std::size_t N, double mass, double width, std::uint64_t seed);

struct ParticleConfig {
    int lambda = 1;
    int m = 8;           // leapfrog steps per dyadic window
    int K = 9;           // run to r_K
    double box = 16.0;   // softening length 0.01 * box / N^{1/d}
    bool interacting = true;
};

struct LinearScatteringReport {
    int d = 3;
    std::size_t N = 0;
    double softening = 0.0;
    std::vector<double> increments;  // mass-weighted mean |Y(r_{k+1}) - Y(r_k)|, k = 0..K-1
    double head = 0.0, tail = 0.0, tail_over_head = 0.0;
    RateFit fit;
    double mass_drift = 0.0;
    bool summable = false;  // tail/head < 0.2
};
// Uncorrected profile coordinates Y = (q + (1 - s) p, p) along the lens flow.
LinearScatteringReport linear_scattering_d3(const ParticleEnsemble& ens, const ParticleConfig& cfg);

void write_scattering_json(const std::string& path, const ScatteringRun& run);
void write_rate_csv(const std::string& path, const ScatteringRun& run);

}  // namespace vp
