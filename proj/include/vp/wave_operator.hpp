#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vp/field.hpp"
#include "vp/forward_solver.hpp"
#include "vp/phase_state.hpp"
#include "vp/scattering.hpp"

namespace vp {

// E_{-1} with derivative planes up to third order (central differences of the solved field).
struct ReferenceField {
    ElectricField E;
    std::array<Plane, 4> d1;   // dE_i/dx_j at i*2+j
    std::array<Plane, 8> d2;   // d^2E_i/dx_j dx_k at (i*2+j)*2+k
    std::array<Plane, 16> d3;  // ((i*2+j)*2+k)*2+l

    static ReferenceField make(const ElectricField& E);
    Eigen::Vector2d value(double x, double y) const;
    Eigen::Matrix2d grad(double x, double y) const;  // (i,j) = dE_i/dx_j
    double w3_norm() const;                          // max over orders 0..3 of the sup norms
};

// theta(s,z) = <z>/(1 + (s+1)<z>)
double theta_weight(double s, double z1, double z2);

// (q,p) <-> (w,z); at s = -1 both are the identity.
struct ChartPair {
    Eigen::Vector2d a, b;
};
ChartPair chart_from_gamma(const Eigen::Vector2d& q, const Eigen::Vector2d& p, double s,
                           const ReferenceField& ref, int lambda);
ChartPair chart_to_gamma(const Eigen::Vector2d& w, const Eigen::Vector2d& z, double s,
                         const ReferenceField& ref, int lambda);

struct KappaGradients {
    Eigen::Vector2d dw;  // grad_w K
    Eigen::Vector2d dz;  // grad_z K
};
// Evaluated through the difference E(s,q) - E_{-1}(w); E_s = nullptr means E(s,.) = E_{-1}.
// At s = -1 only grad_z K is meaningful and grad_w K is returned as zero.
KappaGradients kappa_gradients(double s, const Eigen::Vector2d& w, const Eigen::Vector2d& z,
                               const ElectricField* E_s, const ReferenceField& ref, int lambda);

// Density of gamma at time s from sigma on the (w,z) grid, and its field.
Plane sigma_density(const DistributionGrid& sigma, double s, const ReferenceField& ref, int lambda);
ElectricField sigma_field(const DistributionGrid& sigma, double s, const ReferenceField& ref, int lambda);

struct WaveConfig {
    int lambda = 1;
    double T = -0.5;
    int m = 4;          // steps per backward dyadic window
    int K0 = 8;         // first window is [-1, -1 + 2^{-K0-1}]
    double picard_tol = 1e-12;  // relative to ||sigma_{-1}||_inf
    int picard_max_iter = 12;
    double c0 = 1e-2;
    double contraction_limit = 0.5;
};

std::vector<double> backward_mesh(const WaveConfig& cfg);

// One Strang step of the frozen-field sigma transport on [s, s+ds].
void sigma_step(DistributionGrid& sigma, double s, double ds, const ElectricField& E_mid,
                const ReferenceField& ref, int lambda);

struct SigmaCheckpoint {
    double s = 0.0;
    double A1 = 0.0, A2 = 0.0, A3 = 0.0;
    bool theta_bracket = true;
    double theta_ode_residual = 0.0;
    double second_order = 0.0;  // ||grad_w grad_z K|| + ||theta grad_z^2 K|| + ||theta^{-1} grad_w^2 K||
    double third_order = 0.0;
    double dwK_sup = 0.0;
};

struct BackwardResult {
    DistributionGrid sigma_T;
    std::vector<double> sup_diff, l2_diff, ratio;
    bool converged = false;
    int iterations = 0;
    std::vector<SigmaCheckpoint> checkpoints;
    double E_ref_w3 = 0.0;
    double sigma0_norm = 0.0;  // left side of the initial-data condition
};
BackwardResult backward_picard(const DistributionGrid& sigma_m1, const WaveConfig& cfg);

SigmaCheckpoint commutator_diagnostics(const DistributionGrid& sigma, double s, const ElectricField& E_s,
                                       const ReferenceField& ref, int lambda);

// Norm sum of the initial-data condition on sigma_{-1}.
double sigma_initial_norm(const DistributionGrid& sigma);

// gamma(s,q,p) = sigma(s, w(q,p), z(q,p)) on the (q,p) grid of sigma.
DistributionGrid sigma_to_gamma(const DistributionGrid& sigma, double s, const ReferenceField& ref, int lambda);
// g(q,p) -> g(q,-p) on a symmetric velocity grid.
DistributionGrid reverse_velocity(const DistributionGrid& g);

struct WaveResult {
    BackwardResult backward;
    DistributionGrid gamma_T;  // lens data at s = T
    DistributionGrid mu0;      // physical data at t = 0
};
// mu_inf -> mu(0): backward solve from s = -1 with sigma_{-1}(w,z) = mu_inf(w,-z), forward to s = 0.
WaveResult wave_operator(const DistributionGrid& mu_inf, const WaveConfig& cfg, const SolverConfig& fwd);

struct ScatteringMapResult {
    BackwardResult backward;
    ScatteringRun forward;
    DistributionGrid mu_plus;
    ElectricField E_plus;
    double l2_minus = 0.0, l2_plus = 0.0;
    double l2_relative_change = 0.0;
    double E_mismatch = 0.0;
};
// mu_{-inf} -> mu_{+inf}: sigma_{-1} = mu_{-inf}, then the forward extraction from s = T.
ScatteringMapResult scattering_map(const DistributionGrid& mu_minus, const WaveConfig& cfg,
                                   const ScatteringConfig& fwd);

void write_wave_csv(const std::string& path, const BackwardResult& r);

}  // namespace vp
