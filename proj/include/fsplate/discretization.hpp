#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fsplate/transform_ops.hpp"

// Spectral Galerkin reduction of the linearized coupled system to dense
// matrices on the divergence-free, trace-coupled subspace realizing the
// state space of the evolution problem.
namespace fsplate::disc {

using geom::ChannelGrid;
using geom::Field;
using geom::FluidField;
using geom::PlateProfile;
using ops::LinearizedBlocks;
using ops::StationaryState;

// Nodal matrices of the plate operators (Fourier multipliers) and the exact
// pairing matrices of their quadratic forms on omega.
struct PlateOperators {
  Eigen::MatrixXd A1, A2, A1_half, A1_quarter, A1_threequarter;
  Eigen::MatrixXd pair_mass;  // <a, b>_{L^2(omega)}
  Eigen::MatrixXd pair_A1;    // <A1^{1/2} a, A1^{1/2} b>
  Eigen::MatrixXd pair_A2;    // <A2^{1/2} a, A2^{1/2} b>
};
PlateOperators assemble_plate_ops(double alpha, double delta, const ChannelGrid& grid);

// Full-space coefficient layout: [ux nodes | uz nodes | xi1 nodes | xi2 nodes].
struct StateLayout {
  int ns = 0, nz = 0;
  int fluid() const { return 2 * ns * nz; }
  int total() const { return fluid() + 2 * ns; }
  int ux(int i, int j) const { return i * nz + j; }
  int uz(int i, int j) const { return ns * nz + i * nz + j; }
  int xi1(int i) const { return fluid() + i; }
  int xi2(int i) const { return fluid() + ns + i; }
};

// Constraint matrix and the orthonormal basis of its nullspace in the
// energy inner product.
struct Basis {
  StateLayout layout;
  Eigen::MatrixXd C;       // row-normalized constraints
  Eigen::VectorXd row_scale;
  Eigen::MatrixXd V;       // total x dim, M-orthonormal, C V = 0
  int rank = 0;
  double max_constraint_residual = 0.0;

  int dim() const { return static_cast<int>(V.cols()); }
};

struct ControlShape {
  std::string kind = "cos4";   // cos4 | zero
  Eigen::VectorXd m;           // weight on Gamma_0 nodes, sum ws m = 1
};
ControlShape make_control_shape(const ChannelGrid& grid, const std::string& kind);

// M v = m v - (int m v . n) m n on Gamma_0 (n = -e_z); rows are nodes,
// columns the two velocity components.
Eigen::MatrixXd apply_localizer(const ChannelGrid& grid, const ControlShape& shape,
                                const Eigen::MatrixXd& v);

struct Params {
  double nu = 0.1, alpha = 1.0, delta = 0.5, beta1 = 0.1, beta2 = 0.1;
  double lambda0 = 10.0;
};

struct DiscreteSystem {
  ChannelGrid grid;
  StateLayout layout;
  Params params;
  StationaryState stationary;
  LinearizedBlocks lin;
  PlateOperators plate;

  Eigen::MatrixXd Dx, Dz;        // physical derivative matrices (Q x Q)
  Eigen::VectorXd wq;            // volume quadrature weights (Q)
  Eigen::VectorXd wtop, wbot;    // boundary quadrature weights (ns)

  Eigen::MatrixXd M_full;        // energy Gram on the full space
  Eigen::MatrixXd A_full;        // weak form of the generator
  Eigen::MatrixXd A_adj_full;    // independently assembled adjoint weak form
  Basis basis;
  Eigen::MatrixXd A_red, A_adj_red;  // on the orthonormal basis

  // dissipation quadratic forms (reduced): 2 nu |D w|^2, friction, delta |grad xi2|^2
  Eigen::MatrixXd Q_visc_red, Q_fric_red, Q_grad2_red;

  ControlShape shape;
  std::vector<Eigen::MatrixXd> actuators;  // (ns x 2) boundary fields on Gamma_0
  Eigen::MatrixXd B_red;                   // dim x n_act

  // least-squares gradient inversion, shared by the pressure recovery and
  // the adjoint traction completion
  std::shared_ptr<Eigen::ColPivHouseholderQR<Eigen::MatrixXd>> grad_qr;

  int dim() const { return basis.dim(); }

  // Full-space vector <-> named parts.
  Eigen::VectorXd lift(const Eigen::VectorXd& reduced) const { return basis.V * reduced; }
  Eigen::VectorXd reduce(const Eigen::VectorXd& full) const {
    return basis.V.transpose() * (M_full * full);
  }
  FluidField fluid_part(const Eigen::VectorXd& full) const;
  Eigen::VectorXd xi1_part(const Eigen::VectorXd& full) const;
  Eigen::VectorXd xi2_part(const Eigen::VectorXd& full) const;

  // Energy-pairing of a forcing triple (interior f, tangential bdy data, plate h).
  Eigen::VectorXd pair_forcing(const FluidField& f, const Eigen::VectorXd& g_top,
                               const Eigen::VectorXd& g_bot,
                               const Eigen::VectorXd& h) const;

  // Norms of the components of a reduced state.
  double norm_H(const Eigen::VectorXd& reduced) const { return reduced.norm(); }
  double norm_fluid(const Eigen::VectorXd& reduced) const;
  double norm_xi1(const Eigen::VectorXd& reduced) const;   // A1^{1/2}-weighted
  double norm_xi2(const Eigen::VectorXd& reduced) const;
};

Basis build_basis(const ChannelGrid& grid, const StationaryState& st,
                  const PlateOperators& plate, const Eigen::MatrixXd& M_full,
                  double rank_tol = 1e-10);

DiscreteSystem assemble_AS(const StationaryState& st, double lambda0_override = -1.0);

// Lifting solve for one actuator field v on Gamma_0 and the induced control
// column (lambda0 - A) P D(M v).
struct LiftResult {
  Eigen::VectorXd W_full;   // lifted state (affine representative)
  Eigen::VectorXd reduced;  // P D(M v)
  Eigen::VectorXd column;   // control column in reduced coordinates
};
LiftResult control_column(const DiscreteSystem& sys, const Eigen::MatrixXd& v_bdy);

// Install actuators and assemble B.
void assemble_control(DiscreteSystem& sys, const ControlShape& shape,
                      const std::vector<Eigen::MatrixXd>& actuator_fields);

// B* by the traction-trace formula with adjoint pressure completion.
// Input: complex reduced vector and its eigenvalue; output (ns x 2) complex.
Eigen::MatrixXcd Bstar_trace(const DiscreteSystem& sys, const Eigen::VectorXcd& eps,
                             std::complex<double> lambda);
double Bstar_norm(const DiscreteSystem& sys, const Eigen::MatrixXcd& bstar);

// Post-hoc pressure recovery from the momentum residual of a trajectory
// point: grad p = rhs - d/dt u (least squares).
Eigen::MatrixXd pressure_recovery_operator(const DiscreteSystem& sys);
// Row scaling of the gradient stack (wall rows are down-weighted); must be
// applied to any right-hand side paired with the operator above.
void scale_gradient_rhs(const DiscreteSystem& sys, Eigen::VectorXd& grad_stack);
Field recover_pressure(const DiscreteSystem& sys, const Eigen::MatrixXd& pinv_like,
                       const Eigen::VectorXd& grad_stack);

// Plate-only reduced system (oracle configuration): per Fourier slot the
// block [[0, sqrt(alpha) kb^2], [-sqrt(alpha) kb^2, -delta kb^2]].
Eigen::MatrixXd plate_only_matrix(const ChannelGrid& grid, double alpha, double delta);

}  // namespace fsplate::disc
