#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fsplate/fields.hpp"

// Differential and boundary operators of the channel flow written on the
// reference domain Omega(etaS) through the vertical-stretch change of
// variables X: Omega(etaS) -> Omega(etaS + xi), together with their exact
// linear/quadratic splitting around a stationary state.
namespace fsplate::ops {

using geom::ChannelGrid;
using geom::DomainOps;
using geom::Field;
using geom::FluidField;
using geom::PlateProfile;

struct MatrixField {
  Field m[2][2];
  void setZero(int ns, int nz) {
    for (auto& r : m)
      for (auto& f : r) f = Field::Zero(ns, nz);
  }
};

// Cauchy stress T = -p I + 2 nu D(u) on the reference domain.
struct StressField {
  Field xx, xz, zz;
};
StressField stress_tensor(const DomainOps& ops, const FluidField& u,
                          const Field& p, double nu);

// Geometric factors of the stretch map sampled at the reference grid nodes.
// All map-side quantities are evaluated at the image point X(y) and reduce to
// identity data when xi == 0.
struct MapData {
  const ChannelGrid* grid = nullptr;
  PlateProfile eta_ref, xi, xi_t;
  Eigen::ArrayXd rho, rho_s, rho_ss, rho_sss;  // (1+eta)/(1+eta_ref) and s-derivatives
  Eigen::ArrayXd rho_t, rho_ts;                // time derivatives via xi_t
  Eigen::ArrayXd Nref_x, Nref_z, Nmov_x, Nmov_z;
  Field y2;  // physical vertical coordinate on the reference domain
};

MapData build_map(const ChannelGrid& grid, const PlateProfile& eta_ref,
                  const PlateProfile& xi, const PlateProfile& xi_t);

// Velocity values with first (and optionally second) physical derivatives on
// the reference domain.
struct VelocityDerivs {
  Field u[2];
  Field du[2][2];        // du[k][l] = d u_k / d y_l
  Field d2u[2][2][2];    // symmetrized second derivatives
  bool has_second = false;
};
VelocityDerivs velocity_derivs(const DomainOps& ref_ops, const FluidField& u,
                               bool second_order);

// K_eta u = (grad X) u; identity at xi == 0.
FluidField op_K(const MapData& md, const FluidField& u);

// Defect of the viscous operator (vanishes at xi == 0): the difference
// between the transformed and the flat div(2 nu D(.)) written on u.
FluidField op_lap_defect(const MapData& md, const VelocityDerivs& v, double nu);

// Full transformed viscous operator normalized to -nu Laplace at xi == 0.
FluidField op_L(const MapData& md, const VelocityDerivs& v, double nu);

// Pressure-gradient defect (I - cof grad X) grad p; zero at xi == 0.
FluidField op_grad_defect(const MapData& md, const Field& dp_dx, const Field& dp_dz);

// Transformed convection; equals -(u . grad) u at xi == 0.
FluidField op_N(const MapData& md, const VelocityDerivs& v);

// Map-velocity transport terms (linear in xi_t).
FluidField op_M(const MapData& md, const VelocityDerivs& v);

// First-order operator E with div E = lap_defect + F1.
MatrixField op_E(const MapData& md, const VelocityDerivs& v, double nu);
FluidField op_F1(const MapData& md, const VelocityDerivs& v, double nu);

// Spectral divergence of a matrix field, (div E)_i = d_m E_im.
FluidField divergence(const DomainOps& ref_ops, const MatrixField& E);

// Plate force correction H(u, eta_ref + xi); zero at xi == 0; mean-zero.
Eigen::VectorXd plate_force_H(const MapData& md, const VelocityDerivs& v, double nu);

// Mean-zero projected vertical traction pickup: T* zeta = M(|N| zeta_z(top)).
Eigen::VectorXd Tstar_top(const MapData& md, const Eigen::VectorXd& zeta_x_top,
                          const Eigen::VectorXd& zeta_z_top);

// Boundary operators: the transformed Navier expression W, the tangential
// mismatches V (components against the unnormalized reference tangents) and
// the tangential lift G with G . n = 0.
struct BoundaryOps {
  Eigen::MatrixXd W_top, W_bot;  // (ns x 2) vector values of the W operator
  Eigen::VectorXd V_top, V_bot;  // mismatch against unnormalized tangent
  Eigen::MatrixXd G_top, G_bot;  // tangential lift, (ns x 2)
};
BoundaryOps boundary_ops(const MapData& md, const VelocityDerivs& v,
                         const PlateProfile& xi_t, double nu, double beta1,
                         double beta2);

// ---------------------------------------------------------------------------
// Stationary state and the linear/quadratic splitting around it.

struct StationaryState {
  ChannelGrid grid;
  PlateProfile etaS;
  FluidField wS;
  Field pS;
  double nu = 0.1, alpha = 1.0, delta = 0.5, beta1 = 0.1, beta2 = 0.1;
  // Analytic stationary forcing; evaluated at physical points (x, height).
  std::function<Eigen::Vector2d(double, double)> fS;  // nullptr-like if absent
  std::function<double(double)> hS;
  double residual_norm = 0.0;

  static StationaryState zero(const ChannelGrid& grid, double nu, double alpha,
                              double delta, double beta1, double beta2);
  double wS_sup_norm() const;
};

// Plate coefficient space: real Fourier modes without the mean and Nyquist
// slots; dimension n_modes - 2.
int plate_coeff_dim(const ChannelGrid& grid);
Eigen::VectorXd plate_coeffs_to_values(const ChannelGrid& grid, const Eigen::VectorXd& c);
Eigen::VectorXd plate_values_to_coeffs(const ChannelGrid& grid, const Eigen::VectorXd& v);

// Gateaux differentiation (central differences + one Richardson step) of a
// scalar-parameter map returning a stacked matrix.
struct GateauxResult {
  Eigen::MatrixXd value;
  double rel_disagreement = 0.0;
  bool converged = true;
};
GateauxResult gateaux(const std::function<Eigen::MatrixXd(double)>& map,
                      double h = 1e-4, double tol_rel = 1e-6);

// The linear operators of the splitting, per plate coefficient direction.
struct LinearizedBlocks {
  std::vector<MatrixField> L1;          // matrix fields, from xi
  std::vector<FluidField> L21;          // vector fields, from xi
  std::vector<FluidField> L22;          // vector fields, from xi_t
  std::vector<Eigen::VectorXd> L3_top;  // tangential scalars (unnormalized tau)
  std::vector<Eigen::VectorXd> L3_bot;
  double max_rel_disagreement = 0.0;
  bool converged = true;

  MatrixField eval_L1(const ChannelGrid& g, const Eigen::VectorXd& xi_coeffs) const;
  FluidField eval_L21(const ChannelGrid& g, const Eigen::VectorXd& xi_coeffs) const;
  FluidField eval_L22(const ChannelGrid& g, const Eigen::VectorXd& xit_coeffs) const;
  Eigen::VectorXd eval_L3_top(const Eigen::VectorXd& xi_coeffs) const;
  Eigen::VectorXd eval_L3_bot(const Eigen::VectorXd& xi_coeffs) const;
};

LinearizedBlocks linearize(const StationaryState& st, double h = 1e-4,
                           double tol_rel = 1e-6);

// Volume map whose xi-linearization yields L^{2,1} and L^{2,2}:
// -F1(wS) + grad-defect(pS) + M(wS) + N(wS) + (wS.grad)wS + det fS(X) - fS.
FluidField volume_rest(const StationaryState& st, const PlateProfile& xi,
                       const PlateProfile& xi_t);

// Full nonlinear interior right-hand side acting on the perturbation,
// F(u, p, xi; u_t), before subtracting the linear part.
FluidField interior_F(const StationaryState& st, const MapData& md,
                      const FluidField& u, const Field& p,
                      const FluidField& u_t);

// Quadratic remainder triple of the perturbation system.
struct NonlinearResidual {
  FluidField interior;             // F + div NE + NF minus linear part
  Eigen::VectorXd bdy_top, bdy_bot;  // tangential scalars (unnormalized tau)
  Eigen::VectorXd plate;           // mean-zero field on omega
};
NonlinearResidual nonlinear_remainder(const StationaryState& st,
                                      const LinearizedBlocks& lin,
                                      const FluidField& u, const Field& p,
                                      const PlateProfile& xi,
                                      const PlateProfile& xi_t,
                                      const FluidField* u_t = nullptr);

// Individual quadratic channels (norm diagnostics for scaling studies).
struct ChannelNorms {
  double NE, NF, NG, Fcal, Hrem, Gbdy;
};
ChannelNorms remainder_channels(const StationaryState& st,
                                const LinearizedBlocks& lin, const FluidField& u,
                                const Field& p, const PlateProfile& xi,
                                const PlateProfile& xi_t, const FluidField* u_t = nullptr);

// Steady transformed momentum residual of a velocity/pressure pair living on
// the reference domain; equals det(grad X) times the physical residual
// composed with X.
FluidField steady_residual(const MapData& md, const DomainOps& ref_ops,
                           const FluidField& u, const Field& p, double nu);

}  // namespace fsplate::ops
