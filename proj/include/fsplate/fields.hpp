#pragma once

#include <Eigen/Dense>

#include "fsplate/geometry.hpp"

// Tensor-product collocation for Omega(eta) in dim==2: Fourier nodes in s,
// Chebyshev-Gauss-Lobatto nodes in the scaled vertical coordinate
// z in [0,1], physical height x_z = z (1+eta(s)). Fields are stored as
// (n_s x n_z) matrices of nodal values.
namespace fsplate::geom {

struct ChannelGrid {
  TorusGrid torus;
  int n_vertical = 24;
  Eigen::VectorXd s;   // horizontal nodes
  Eigen::VectorXd z;   // template vertical nodes in [0,1], ascending
  Eigen::MatrixXd Ds;  // spectral d/ds on nodal values
  Eigen::MatrixXd Dz;  // spectral d/dz on nodal values
  Eigen::VectorXd ws;  // horizontal quadrature weights (uniform)
  Eigen::VectorXd wz;  // Clenshaw-Curtis weights on [0,1]

  ChannelGrid() = default;
  ChannelGrid(const TorusGrid& t, int n_vertical_);

  int ns() const { return torus.n_modes; }
  int nz() const { return n_vertical; }
  int nodes() const { return ns() * nz(); }
};

using Field = Eigen::MatrixXd;  // (n_s, n_z) nodal values

struct FluidField {
  Field ux;  // horizontal component
  Field uz;  // vertical component
};

// Differential and quadrature operators on Omega(eta) for fields in the
// pulled-back representation f(s, z) = F(s, z (1+eta(s))).
class DomainOps {
 public:
  DomainOps(const ChannelGrid& grid, const PlateProfile& eta);

  const ChannelGrid& grid() const { return *grid_; }
  const PlateProfile& eta() const { return eta_; }

  // Physical derivatives.
  Field dx(const Field& f) const;
  Field dz(const Field& f) const;

  // Volume quadrature: integral over Omega(eta) of the nodal data.
  double integrate(const Field& f) const;
  // Nodal quadrature weights as a field.
  const Field& weights() const { return w_; }

  // Physical vertical coordinate of each node.
  const Field& height() const { return x2_; }

  // Boundary traces (rows indexed by s-node).
  Eigen::VectorXd top(const Field& f) const { return f.col(grid_->nz() - 1); }
  Eigen::VectorXd bottom(const Field& f) const { return f.col(0); }

  double divergence_norm(const FluidField& u) const;

 private:
  const ChannelGrid* grid_ = nullptr;
  PlateProfile eta_;
  Eigen::VectorXd one_plus_;   // 1+eta at s-nodes
  Eigen::VectorXd eta_s_;      // d eta / ds
  Field w_;                    // quadrature weights incl. (1+eta)
  Field x2_;
};

// Piola transform of a velocity field sampled on the grid of Omega(eta_src)
// onto the grid of Omega(eta_dst): u~(y) = (cof grad X)^T U(X(y)) with
// X = X_{eta_dst, eta_src}. The stretch map sends grid nodes to grid nodes,
// so no interpolation is involved.
FluidField piola_transform(const ChannelGrid& grid, const FluidField& U,
                           const PlateProfile& eta_src,
                           const PlateProfile& eta_dst);

// Contact force field on omega: -sqrt(1+|grad eta|^2) (T(U,P) n . e_z) at the
// top boundary; mean_zero applies the L^2_0 projection M.
Eigen::VectorXd contact_force(const ChannelGrid& grid, const FluidField& U,
                              const Field& P, const PlateProfile& eta, double nu,
                              bool mean_zero_project);

}  // namespace fsplate::geom
