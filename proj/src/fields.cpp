#include "fsplate/fields.hpp"

#include "fsplate/chebyshev.hpp"
#include "fsplate/fourier.hpp"

namespace fsplate::geom {

ChannelGrid::ChannelGrid(const TorusGrid& t, int n_vertical_)
    : torus(t), n_vertical(n_vertical_) {
  if (t.dim != 2) throw std::invalid_argument("ChannelGrid: tensor grids are dim==2 only");
  s = fourier::nodes(t.n_modes, t.L1);
  z = cheb::nodes01(n_vertical);
  Ds = fourier::diff_matrix(t.n_modes, t.L1, 1);
  Dz = cheb::diff_matrix01(n_vertical);
  ws = Eigen::VectorXd::Constant(t.n_modes, fourier::node_weight(t.n_modes, t.L1));
  wz = cheb::cc_weights01(n_vertical);
}

DomainOps::DomainOps(const ChannelGrid& grid, const PlateProfile& eta)
    : grid_(&grid), eta_(eta) {
  eta_.require_admissible("DomainOps");
  one_plus_ = (1.0 + eta_.values.array()).matrix();
  eta_s_ = eta_.derivative(0).values;
  const int ns = grid.ns(), nz = grid.nz();
  w_.resize(ns, nz);
  x2_.resize(ns, nz);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      w_(i, j) = grid.ws[i] * grid.wz[j] * one_plus_[i];
      x2_(i, j) = grid.z[j] * one_plus_[i];
    }
}

Field DomainOps::dz(const Field& f) const {
  Field fz = f * grid_->Dz.transpose();
  fz.array().colwise() /= one_plus_.array();
  return fz;
}

Field DomainOps::dx(const Field& f) const {
  Field fs = grid_->Ds * f;
  Field fz = f * grid_->Dz.transpose();
  const int ns = grid_->ns(), nz = grid_->nz();
  for (int i = 0; i < ns; ++i) {
    double c = eta_s_[i] / one_plus_[i];
    for (int j = 0; j < nz; ++j) fs(i, j) -= grid_->z[j] * c * fz(i, j);
  }
  return fs;
}

double DomainOps::integrate(const Field& f) const {
  return (w_.array() * f.array()).sum();
}

double DomainOps::divergence_norm(const FluidField& u) const {
  Field div = dx(u.ux) + dz(u.uz);
  return std::sqrt((w_.array() * div.array().square()).sum());
}

FluidField piola_transform(const ChannelGrid& grid, const FluidField& U,
                           const PlateProfile& eta_src, const PlateProfile& eta_dst) {
  eta_src.require_admissible("piola_transform");
  eta_dst.require_admissible("piola_transform");
  if (U.ux.rows() != grid.ns() || U.ux.cols() != grid.nz())
    throw std::invalid_argument("piola_transform: field resolution does not match grid");
  const int ns = grid.ns(), nz = grid.nz();
  Eigen::ArrayXd es = eta_src.values.array(), ed = eta_dst.values.array();
  Eigen::ArrayXd rho = (1.0 + es) / (1.0 + ed);
  Eigen::ArrayXd dsrc = eta_src.derivative(0).values.array();
  Eigen::ArrayXd ddst = eta_dst.derivative(0).values.array();
  // d rho / ds from profile derivatives (avoids differentiating the quotient).
  Eigen::ArrayXd drho = (dsrc * (1.0 + ed) - (1.0 + es) * ddst) / ((1.0 + ed).square());
  FluidField out;
  out.ux.resize(ns, nz);
  out.uz.resize(ns, nz);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      double y2 = grid.z[j] * (1.0 + ed[i]);
      out.ux(i, j) = rho[i] * U.ux(i, j);
      out.uz(i, j) = -y2 * drho[i] * U.ux(i, j) + U.uz(i, j);
    }
  return out;
}

Eigen::VectorXd contact_force(const ChannelGrid& grid, const FluidField& U,
                              const Field& P, const PlateProfile& eta, double nu,
                              bool mean_zero_project) {
  DomainOps ops(grid, eta);
  Field ux_x = ops.dx(U.ux), ux_z = ops.dz(U.ux);
  Field uz_x = ops.dx(U.uz), uz_z = ops.dz(U.uz);
  BoundaryFrame frame = boundary_frame(eta);
  const int ns = grid.ns();
  Eigen::VectorXd h(ns);
  for (int i = 0; i < ns; ++i) {
    Eigen::MatrixXd g(2, 2);
    int jt = grid.nz() - 1;
    g << ux_x(i, jt), ux_z(i, jt), uz_x(i, jt), uz_z(i, jt);
    h[i] = traction_force_density(g, P(i, jt), nu, frame.unnormalized_top.row(i).transpose());
  }
  if (mean_zero_project) h.array() -= h.mean();
  return h;
}

}  // namespace fsplate::geom
