#pragma once

#include <Eigen/Dense>
#include <stdexcept>

// Domains Omega(eta) over a horizontal torus, the vertical-stretch map
// between them, cofactor/Piola algebra and boundary frames.
namespace fsplate::geom {

// Profiles below this floor on 1+eta are rejected as domain shapes.
inline constexpr double kAdmissibilityFloor = 1e-6;

struct TorusGrid {
  int dim = 2;       // fluid dimension; the torus has dim-1 directions
  double L1 = 1.0;
  double L2 = 1.0;   // used when dim == 3
  int n_modes = 16;  // collocation points per torus direction, even, >= 4

  TorusGrid() = default;
  TorusGrid(int dim_, double L1_, int n_modes_, double L2_ = 1.0);

  int node_count() const { return dim == 2 ? n_modes : n_modes * n_modes; }
  Eigen::VectorXd nodes1() const;
  // Flattened index for dim==3: i1 * n_modes + i2.
};

// Scalar field on the torus (displacement eta or perturbation xi),
// stored at collocation nodes. Immutable by convention.
struct PlateProfile {
  TorusGrid grid;
  Eigen::VectorXd values;
  bool mean_zero = false;

  PlateProfile() = default;
  PlateProfile(const TorusGrid& g, Eigen::VectorXd v, bool mean_zero_flag);

  double mean() const;
  double max_abs() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
  bool admissible(double floor = kAdmissibilityFloor) const;
  void require_admissible(const char* what) const;

  // Spectral derivative along torus direction dir (0 or 1), given order.
  PlateProfile derivative(int dir, int order = 1) const;

  // Trigonometric interpolation at an arbitrary horizontal point.
  double eval(const Eigen::VectorXd& s) const;
  double eval_deriv(const Eigen::VectorXd& s, int dir) const;

  static PlateProfile zero(const TorusGrid& g);
};

struct ReferenceDomain {
  TorusGrid grid;
  int n_vertical = 24;
  PlateProfile etaS;  // 1 + etaS > 0 everywhere

  ReferenceDomain() = default;
  ReferenceDomain(const TorusGrid& g, int n_vertical_, PlateProfile etaS_);
};

// Outward frames on the top boundary Gamma(eta) and the bottom Gamma_0,
// sampled at the torus nodes. In dim==2 only tau1 is meaningful.
struct BoundaryFrame {
  // Each row: one torus node. Columns: spatial components (dim of them).
  Eigen::MatrixXd normal_top;      // unit outward n
  Eigen::MatrixXd unnormalized_top;  // N = (-grad eta, 1)
  Eigen::MatrixXd tau1_top;
  Eigen::MatrixXd tau2_top;        // dim==3 only
  Eigen::VectorXd norm_N;          // |N| = sqrt(1+|grad eta|^2)
  // Bottom frame is constant: n = -e_z, tau_i = e_i.
};

// X_{eta1,eta2}: Omega(eta1) -> Omega(eta2), y -> (y_h, y_z (1+eta2)/(1+eta1)).
Eigen::VectorXd domain_map(const PlateProfile& eta1, const PlateProfile& eta2,
                           const Eigen::VectorXd& y);

// Jacobian of the map above at y, and its determinant (1+eta2)/(1+eta1).
struct MapJacobian {
  Eigen::MatrixXd grad;  // dim x dim
  double det = 1.0;
};
MapJacobian map_jacobian(const PlateProfile& eta1, const PlateProfile& eta2,
                         const Eigen::VectorXd& y);

// Cofactor matrix: M * cof(M)^T = det(M) * I. Defined for 2x2 and 3x3.
Eigen::MatrixXd cofactor(const Eigen::MatrixXd& M);

BoundaryFrame boundary_frame(const PlateProfile& eta);

// Pointwise Piola transform: velocity U at the mapped point X(y) in
// Omega(eta_src) pulled to y in Omega(eta_dst) as (cof grad X)^T U(X(y)),
// X = X_{eta_dst, eta_src}. Horizontal components are scaled by
// (1+eta_src)/(1+eta_dst); the convention is pinned by tests.
Eigen::VectorXd piola_point(const PlateProfile& eta_src,
                            const PlateProfile& eta_dst,
                            const Eigen::VectorXd& y,
                            const Eigen::VectorXd& U_at_Xy);

// Normal traction component entering the plate equation, per node:
// -sqrt(1+|grad eta|^2) * (T n . e_z) with T = -p I + 2 nu D(U).
double traction_force_density(const Eigen::MatrixXd& gradU, double p, double nu,
                              const Eigen::VectorXd& N_unnormalized);

}  // namespace fsplate::geom
