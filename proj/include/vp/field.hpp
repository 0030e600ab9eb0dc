#pragma once

#include <string>
#include <vector>

#include "vp/grid.hpp"
#include "vp/phase_state.hpp"

namespace vp {

// Log-spaced trapezoid rule for integrals over (0, inf) in the measure dX/X.
// Weights already include the Jacobian: sum w_j g(X_j) ~ int g(X) dX/X.
struct LogQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
    static LogQuadrature make(int count = 64, double lo = 1e-3, double hi = 1e3);
};

// Radial bump chi(|x|) = c exp(-1/(1-u^2)), u = (|x| - 5/4)/(3/4), supported in 1/2 < |x| < 2.
struct BumpKernel {
    double c = 0.0;         // makes the 2D integral of chi equal to 1
    double c1 = 0.0;        // 1/(2 pi int chi(u) du): field reconstruction constant
    double cV = 0.0;        // int chi(u) du/u: velocity resolution constant
    double chi_max = 0.0;   // sup chi
    double dpsi_max = 0.0;  // sup of |d Psi_i/d z_j| for Psi(z) = (z/|z|) chi(|z|)

    double chi(double r) const;
    double dchi(double r) const;
    static const BumpKernel& get();
};

// E = (1/2pi) int (x-y)/|x-y|^2 rho(y) dy on the grid of rho.
ElectricField solve_field(const Plane& rho);
ElectricField solve_field(const DistributionGrid& g);

// Single-scale piece E_R = c1 int Psi((q-y)/R) rho(y) dy, with E = int E_R dR/R^2.
ElectricField dyadic_component(const Plane& rho, double R);
ElectricField dyadic_component(const DistributionGrid& g, double R);
// Velocity-localized piece E_{R,V}, with E = int int E_{R,V} dR/R^2 dV/V.
ElectricField dyadic_component_velocity(const DistributionGrid& g, double R, double V);
// Density filtered by the cell-averaged velocity bump chi(v/V) / cV.
Plane velocity_filtered_density(const DistributionGrid& g, double V);

ElectricField reconstruct_from_dyadic(const Plane& rho, const LogQuadrature& qR = LogQuadrature::make());
ElectricField reconstruct_from_dyadic_velocity(const DistributionGrid& g,
                                               const LogQuadrature& qR = LogQuadrature::make(),
                                               const LogQuadrature& qV = LogQuadrature::make(128));

// Discrete derivatives of a field: d[i][j] = d E_i / d x_j (central differences).
std::array<std::array<Plane, 2>, 2> field_gradient(const ElectricField& E);
double gradient_sup(const ElectricField& E);  // max entry of the derivative matrix
Plane divergence(const ElectricField& E);

// Bound verifier rows: (bound_id, params, lhs, rhs, ratio, pass).
struct BoundRow {
    std::string bound_id;
    std::string params;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    bool pass = true;
};
void write_bound_csv(const std::string& path, const std::vector<BoundRow>& rows);
bool all_pass(const std::vector<BoundRow>& rows);
double max_ratio(const std::vector<BoundRow>& rows, const std::string& prefix = "");

// Scale-wise bounds with the constants implied by the bump support.
// Rows: ER, dER (per R), ERV, dERV (per R,V) and tail estimates for the truncated R range.
std::vector<BoundRow> verify_dyadic_bounds(const DistributionGrid& g, const LogQuadrature& qR,
                                           const LogQuadrature& qV, double slack = 1.0);

// |E| and |grad E| against the A / theta bounds with constants assembled from the scale-wise ones.
std::vector<BoundRow> verify_field_bound(const DistributionGrid& g, double A, double theta);

// Modulus of continuity of E between two snapshots of one run; G_over_f = sup |G|/f.
BoundRow field_continuity_modulus(const DistributionGrid& g0, double s0,
                                  const DistributionGrid& g1, double s1, double G_over_f,
                                  double constant = 10.0);

}  // namespace vp
