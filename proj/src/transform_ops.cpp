#include "fsplate/transform_ops.hpp"

#include <cmath>

#include "fsplate/fourier.hpp"

namespace fsplate::ops {

namespace {

Eigen::VectorXd mean_zero(Eigen::VectorXd v) {
  v.array() -= v.mean();
  return v;
}

// Per-node map factors, all evaluated at the image point X(y).
struct NodeMap {
  double det;
  double ddet[2];          // d det / d y_m
  double dX[2][2];         // dX[q][m] = d X_q / d y_m
  double b[2][2];          // cof grad X
  double a[2][2];
  double da[2][2][2];      // da[j][r][c] = d a_rc / d x_j at X
  double dda[2][2][2][2];  // dda[q][j][r][c], symmetric in (q, j)
  double dY[2][2];         // dY[m][j] = d Y_m / d x_j at X
  double ddY2[2][2];       // second derivatives of the vertical Y component
  double dtY[2];
  double dta[2][2];
};

NodeMap node_map(const MapData& md, int i, int j) {
  NodeMap n{};
  const double r = md.rho[i];
  const double rs = md.rho_s[i];
  const double rss = md.rho_ss[i];
  const double rsss = md.rho_sss[i];
  const double rt = md.rho_t[i];
  const double rts = md.rho_ts[i];
  const double y2 = md.y2(i, j);
  const double r2 = r * r, r3 = r2 * r;

  n.det = r;
  n.ddet[0] = rs;
  n.ddet[1] = 0.0;

  n.dX[0][0] = 1.0; n.dX[0][1] = 0.0;
  n.dX[1][0] = y2 * rs; n.dX[1][1] = r;

  n.b[0][0] = r; n.b[0][1] = -y2 * rs;
  n.b[1][0] = 0.0; n.b[1][1] = 1.0;

  n.a[0][0] = 1.0 / r; n.a[0][1] = 0.0;
  n.a[1][0] = y2 * rs / r; n.a[1][1] = 1.0;

  n.da[0][0][0] = -rs / r2;
  n.da[0][1][0] = y2 * (rss / r - 2.0 * rs * rs / r2);
  n.da[1][1][0] = rs / r2;
  // remaining da entries are zero

  n.dda[0][0][0][0] = -rss / r2 + 2.0 * rs * rs / r3;
  n.dda[0][0][1][0] = y2 * (rsss / r - 6.0 * rs * rss / r2 + 6.0 * rs * rs * rs / r3);
  n.dda[0][1][1][0] = rss / r2 - 2.0 * rs * rs / r3;
  n.dda[1][0][1][0] = n.dda[0][1][1][0];
  // remaining dda entries are zero

  n.dY[0][0] = 1.0; n.dY[0][1] = 0.0;
  n.dY[1][0] = -y2 * rs / r; n.dY[1][1] = 1.0 / r;

  n.ddY2[0][0] = -y2 * (rss / r - 2.0 * rs * rs / r2);
  n.ddY2[0][1] = -rs / r2;
  n.ddY2[1][0] = n.ddY2[0][1];
  n.ddY2[1][1] = 0.0;

  n.dtY[0] = 0.0;
  n.dtY[1] = -y2 * rt / r;

  n.dta[0][0] = -rt / r2; n.dta[0][1] = 0.0;
  n.dta[1][0] = y2 * (rts / r - 2.0 * rs * rt / r2); n.dta[1][1] = 0.0;
  return n;
}

inline double ddY(const NodeMap& n, int l, int j, int q) {
  return l == 1 ? n.ddY2[j][q] : 0.0;
}

// C2(i,k,l,m) coefficient of the second-order block shared by E and the
// viscous defect. The second group pairs the divergence index with the
// outer one so that the normal trace of E reproduces the plate force.
inline double C2(const NodeMap& n, int i, int k, int l, int m) {
  double s = 0.0;
  for (int j = 0; j < 2; ++j)
    s += n.det * (n.a[i][k] * n.dY[m][j] * n.dY[l][j] +
                  n.a[j][k] * n.dY[m][j] * n.dY[l][i]);
  return s;
}

inline double flat2(int i, int k, int l, int m) {
  return (i == k && m == l ? 1.0 : 0.0) + (m == k && l == i ? 1.0 : 0.0);
}

inline double C1r(const NodeMap& n, int i, int k, int m) {
  double s = 0.0;
  for (int j = 0; j < 2; ++j)
    s += n.det * (n.da[j][i][k] + n.da[i][j][k]) * n.dY[m][j];
  return s;
}

// First-order coefficient of the viscous defect.
inline double T1st(const NodeMap& n, int i, int k, int l) {
  double s = 0.0;
  for (int j = 0; j < 2; ++j)
    s += 2.0 * n.da[j][i][k] * n.dY[l][j] + n.da[i][j][k] * n.dY[l][j] +
         n.a[i][k] * ddY(n, l, j, j) + n.da[j][j][k] * n.dY[l][i] +
         n.a[j][k] * ddY(n, l, j, i);
  return n.det * s;
}

inline double T0c(const NodeMap& n, int i, int k) {
  double s = 0.0;
  for (int j = 0; j < 2; ++j) s += n.dda[j][j][i][k] + n.dda[j][i][j][k];
  return n.det * s;
}

// d/dy_m of a_rc(X) via the chain rule.
inline double a_prime(const NodeMap& n, int m, int r, int c) {
  double s = 0.0;
  for (int q = 0; q < 2; ++q) s += n.da[q][r][c] * n.dX[q][m];
  return s;
}

// d/dy_m of dY[l][j](X).
inline double dY_prime(const NodeMap& n, int m, int l, int j) {
  double s = 0.0;
  for (int q = 0; q < 2; ++q) s += ddY(n, l, j, q) * n.dX[q][m];
  return s;
}

inline double dda_prime(const NodeMap& n, int m, int dir, int r, int c) {
  double s = 0.0;
  for (int q = 0; q < 2; ++q) s += n.dda[q][dir][r][c] * n.dX[q][m];
  return s;
}

// sum_m d/dy_m C2(i,k,l,m)
inline double dC2(const NodeMap& n, int i, int k, int l) {
  double s = 0.0;
  for (int m = 0; m < 2; ++m)
    for (int j = 0; j < 2; ++j) {
      s += n.ddet[m] * (n.a[i][k] * n.dY[m][j] * n.dY[l][j] +
                        n.a[j][k] * n.dY[m][j] * n.dY[l][i]);
      s += n.det * (a_prime(n, m, i, k) * n.dY[m][j] * n.dY[l][j] +
                    a_prime(n, m, j, k) * n.dY[m][j] * n.dY[l][i]);
      s += n.det * (n.a[i][k] * dY_prime(n, m, m, j) * n.dY[l][j] +
                    n.a[j][k] * dY_prime(n, m, m, j) * n.dY[l][i]);
      s += n.det * (n.a[i][k] * n.dY[m][j] * dY_prime(n, m, l, j) +
                    n.a[j][k] * n.dY[m][j] * dY_prime(n, m, l, i));
    }
  return s;
}

// sum_m d/dy_m C1r(i,k,m)
inline double dC1r(const NodeMap& n, int i, int k) {
  double s = 0.0;
  for (int m = 0; m < 2; ++m)
    for (int j = 0; j < 2; ++j) {
      double base = n.da[j][i][k] + n.da[i][j][k];
      s += n.ddet[m] * base * n.dY[m][j];
      s += n.det * (dda_prime(n, m, j, i, k) + dda_prime(n, m, i, j, k)) * n.dY[m][j];
      s += n.det * base * dY_prime(n, m, m, j);
    }
  return s;
}

}  // namespace

StressField stress_tensor(const DomainOps& ops, const FluidField& u,
                          const Field& p, double nu) {
  Field ux_x = ops.dx(u.ux), ux_z = ops.dz(u.ux);
  Field uz_x = ops.dx(u.uz), uz_z = ops.dz(u.uz);
  StressField t;
  t.xx = -p + 2.0 * nu * ux_x;
  t.zz = -p + 2.0 * nu * uz_z;
  t.xz = nu * (ux_z + uz_x);
  return t;
}

MapData build_map(const ChannelGrid& grid, const PlateProfile& eta_ref,
                  const PlateProfile& xi, const PlateProfile& xi_t) {
  eta_ref.require_admissible("build_map: reference profile");
  MapData md;
  md.grid = &grid;
  md.eta_ref = eta_ref;
  md.xi = xi;
  md.xi_t = xi_t;
  const int ns = grid.ns(), nz = grid.nz();
  const double L = grid.torus.L1;

  Eigen::ArrayXd er = eta_ref.values.array();
  Eigen::ArrayXd er1 = eta_ref.derivative(0, 1).values.array();
  Eigen::ArrayXd er2 = eta_ref.derivative(0, 2).values.array();
  Eigen::ArrayXd er3 = eta_ref.derivative(0, 3).values.array();
  Eigen::ArrayXd x = xi.values.array();
  Eigen::ArrayXd x1 = fourier::derivative(xi.values, L, 1).array();
  Eigen::ArrayXd x2d = fourier::derivative(xi.values, L, 2).array();
  Eigen::ArrayXd x3d = fourier::derivative(xi.values, L, 3).array();
  Eigen::ArrayXd e = er + x;  // total eta
  if ((1.0 + e).minCoeff() <= geom::kAdmissibilityFloor)
    throw std::invalid_argument("build_map: total profile violates 1+eta > 0");

  // r = 1/(1+eta_ref) and derivatives
  Eigen::ArrayXd r = (1.0 + er).inverse();
  Eigen::ArrayXd r1 = -er1 * r.square();
  Eigen::ArrayXd r2 = -er2 * r.square() + 2.0 * er1.square() * r.pow(3);
  Eigen::ArrayXd r3 = -er3 * r.square() + 6.0 * er2 * er1 * r.pow(3) -
                      6.0 * er1.pow(3) * r.pow(4);
  Eigen::ArrayXd e1 = er1 + x1, e2t = er2 + x2d, e3t = er3 + x3d;

  md.rho = (1.0 + e) * r;
  md.rho_s = e1 * r + (1.0 + e) * r1;
  md.rho_ss = e2t * r + 2.0 * e1 * r1 + (1.0 + e) * r2;
  md.rho_sss = e3t * r + 3.0 * e2t * r1 + 3.0 * e1 * r2 + (1.0 + e) * r3;

  Eigen::ArrayXd xt = Eigen::ArrayXd::Zero(ns);
  Eigen::ArrayXd xt1 = Eigen::ArrayXd::Zero(ns);
  if (xi_t.values.size()) {
    xt = xi_t.values.array();
    xt1 = fourier::derivative(xi_t.values, L, 1).array();
  }
  md.rho_t = xt * r;
  md.rho_ts = xt1 * r + xt * r1;

  md.Nref_x = -er1;
  md.Nref_z = Eigen::ArrayXd::Ones(ns);
  md.Nmov_x = -e1;
  md.Nmov_z = Eigen::ArrayXd::Ones(ns);

  md.y2.resize(ns, nz);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) md.y2(i, j) = grid.z[j] * (1.0 + er[i]);
  return md;
}

VelocityDerivs velocity_derivs(const DomainOps& ref_ops, const FluidField& u,
                               bool second_order) {
  VelocityDerivs v;
  v.u[0] = u.ux;
  v.u[1] = u.uz;
  for (int k = 0; k < 2; ++k) {
    v.du[k][0] = ref_ops.dx(v.u[k]);
    v.du[k][1] = ref_ops.dz(v.u[k]);
  }
  if (second_order) {
    v.has_second = true;
    for (int k = 0; k < 2; ++k) {
      v.d2u[k][0][0] = ref_ops.dx(v.du[k][0]);
      v.d2u[k][1][1] = ref_ops.dz(v.du[k][1]);
      Field mixed = 0.5 * (ref_ops.dx(v.du[k][1]) + ref_ops.dz(v.du[k][0]));
      v.d2u[k][0][1] = mixed;
      v.d2u[k][1][0] = mixed;
    }
  }
  return v;
}

FluidField op_K(const MapData& md, const FluidField& u) {
  const int ns = md.grid->ns(), nz = md.grid->nz();
  FluidField out;
  out.ux.resize(ns, nz);
  out.uz.resize(ns, nz);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      NodeMap n = node_map(md, i, j);
      double uu[2] = {u.ux(i, j), u.uz(i, j)};
      out.ux(i, j) = n.dX[0][0] * uu[0] + n.dX[0][1] * uu[1];
      out.uz(i, j) = n.dX[1][0] * uu[0] + n.dX[1][1] * uu[1];
    }
  return out;
}

FluidField op_lap_defect(const MapData& md, const VelocityDerivs& v, double nu) {
  const int ns = md.grid->ns(), nz = md.grid->nz();
  FluidField out;
  out.ux.setZero(ns, nz);
  out.uz.setZero(ns, nz);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      NodeMap n = node_map(md, i, j);
      for (int ic = 0; ic < 2; ++ic) {
        double s = 0.0;
        for (int k = 0; k < 2; ++k) {
          for (int l = 0; l < 2; ++l) {
            for (int m = 0; m < 2; ++m)
              s += (C2(n, ic, k, l, m) - flat2(ic, k, l, m)) *
                   v.d2u[k][l][m](i, j);
            s += T1st(n, ic, k, l) * v.du[k][l](i, j);
          }
          s += T0c(n, ic, k) * v.u[k](i, j);
        }
        (ic == 0 ? out.ux : out.uz)(i, j) = nu * s;
      }
    }
  return out;
}

FluidField op_L(const MapData& md, const VelocityDerivs& v, double nu) {
  FluidField defect = op_lap_defect(md, v, nu);
  FluidField out;
  out.ux = -nu * (v.d2u[0][0][0] + v.d2u[0][1][1]) - defect.ux;
  out.uz = -nu * (v.d2u[1][0][0] + v.d2u[1][1][1]) - defect.uz;
  return out;
}

FluidField op_grad_defect(const MapData& md, const Field& dp_dx, const Field& dp_dz) {
  const int ns = md.grid->ns(), nz = md.grid->nz();
  FluidField out;
  out.ux.resize(ns, nz);
  out.uz.resize(ns, nz);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      NodeMap n = node_map(md, i, j);
      double dp[2] = {dp_dx(i, j), dp_dz(i, j)};
      out.ux(i, j) = (1.0 - n.b[0][0]) * dp[0] + (0.0 - n.b[0][1]) * dp[1];
      out.uz(i, j) = (0.0 - n.b[1][0]) * dp[0] + (1.0 - n.b[1][1]) * dp[1];
    }
  return out;
}

FluidField op_N(const MapData& md, const VelocityDerivs& v) {
  const int ns = md.grid->ns(), nz = md.grid->nz();
  FluidField out;
  out.ux.setZero(ns, nz);
  out.uz.setZero(ns, nz);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      NodeMap n = node_map(md, i, j);
      double uu[2] = {v.u[0](i, j), v.u[1](i, j)};
      for (int ic = 0; ic < 2; ++ic) {
        double s = 0.0;
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l) {
            for (int jj = 0; jj < 2; ++jj)
              s -= n.det * n.a[k][l] * n.da[k][ic][jj] * uu[l] * uu[jj];
            for (int m = 0; m < 2; ++m)
              for (int jj = 0; jj < 2; ++jj)
                s -= n.det * n.a[k][l] * n.a[ic][jj] * n.dY[m][k] * uu[l] *
                     v.du[jj][m](i, j);
          }
        (ic == 0 ? out.ux : out.uz)(i, j) = s;
      }
    }
  return out;
}

FluidField op_M(const MapData& md, const VelocityDerivs& v) {
  const int ns = md.grid->ns(), nz = md.grid->nz();
  FluidField out;
  out.ux.setZero(ns, nz);
  out.uz.setZero(ns, nz);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      NodeMap n = node_map(md, i, j);
      for (int ic = 0; ic < 2; ++ic) {
        double s = 0.0;
        for (int k = 0; k < 2; ++k) {
          for (int l = 0; l < 2; ++l)
            s -= n.det * n.a[ic][k] * v.du[k][l](i, j) * n.dtY[l];
          s -= n.det * n.dta[ic][k] * v.u[k](i, j);
        }
        (ic == 0 ? out.ux : out.uz)(i, j) = s;
      }
    }
  return out;
}

MatrixField op_E(const MapData& md, const VelocityDerivs& v, double nu) {
  const int ns = md.grid->ns(), nz = md.grid->nz();
  MatrixField E;
  E.setZero(ns, nz);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      NodeMap n = node_map(md, i, j);
      for (int ic = 0; ic < 2; ++ic)
        for (int m = 0; m < 2; ++m) {
          double s = 0.0;
          for (int k = 0; k < 2; ++k) {
            for (int l = 0; l < 2; ++l)
              s += (C2(n, ic, k, l, m) - flat2(ic, k, l, m)) * v.du[k][l](i, j);
            s += C1r(n, ic, k, m) * v.u[k](i, j);
          }
          E.m[ic][m](i, j) = nu * s;
        }
    }
  return E;
}

FluidField op_F1(const MapData& md, const VelocityDerivs& v, double nu) {
  const int ns = md.grid->ns(), nz = md.grid->nz();
  FluidField out;
  out.ux.setZero(ns, nz);
  out.uz.setZero(ns, nz);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nz; ++j) {
      NodeMap n = node_map(md, i, j);
      for (int ic = 0; ic < 2; ++ic) {
        double s = 0.0;
        for (int k = 0; k < 2; ++k) {
          for (int l = 0; l < 2; ++l)
            s += (dC2(n, ic, k, l) + C1r(n, ic, k, l) - T1st(n, ic, k, l)) *
                 v.du[k][l](i, j);
          s += (dC1r(n, ic, k) - T0c(n, ic, k)) * v.u[k](i, j);
        }
        (ic == 0 ? out.ux : out.uz)(i, j) = nu * s;
      }
    }
  return out;
}

FluidField divergence(const DomainOps& ref_ops, const MatrixField& E) {
  FluidField out;
  out.ux = ref_ops.dx(E.m[0][0]) + ref_ops.dz(E.m[0][1]);
  out.uz = ref_ops.dx(E.m[1][0]) + ref_ops.dz(E.m[1][1]);
  return out;
}

Eigen::VectorXd plate_force_H(const MapData& md, const VelocityDerivs& v, double nu) {
  const int ns = md.grid->ns();
  const int jt = md.grid->nz() - 1;
  Eigen::VectorXd h(ns);
  for (int i = 0; i < ns; ++i) {
    NodeMap n = node_map(md, i, jt);
    double Nr[2] = {md.Nref_x[i], md.Nref_z[i]};
    double Nm[2] = {md.Nmov_x[i], md.Nmov_z[i]};
    double s = 0.0;
    for (int jj = 0; jj < 2; ++jj)
      for (int k = 0; k < 2; ++k)
        s -= (n.da[jj][1][k] + n.da[1][jj][k]) * Nm[jj] * v.u[k](i, jt);
    for (int jj = 0; jj < 2; ++jj)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          s += ((k == 1 && jj == l ? Nr[jj] : 0.0) -
                n.a[1][k] * n.dY[l][jj] * Nm[jj]) *
               v.du[k][l](i, jt);
          s += ((l == 1 && jj == k ? Nr[jj] : 0.0) -
                n.a[jj][k] * n.dY[l][1] * Nm[jj]) *
               v.du[k][l](i, jt);
        }
    h[i] = nu * s;
  }
  return mean_zero(std::move(h));
}

Eigen::VectorXd Tstar_top(const MapData& md, const Eigen::VectorXd& /*zeta_x_top*/,
                          const Eigen::VectorXd& zeta_z_top) {
  const int ns = md.grid->ns();
  Eigen::VectorXd out(ns);
  for (int i = 0; i < ns; ++i) {
    double normN = std::hypot(md.Nref_x[i], md.Nref_z[i]);
    out[i] = normN * zeta_z_top[i];
  }
  return mean_zero(std::move(out));
}

BoundaryOps boundary_ops(const MapData& md, const VelocityDerivs& v,
                         const PlateProfile& xi_t, double nu, double beta1,
                         double beta2) {
  const int ns = md.grid->ns();
  const int nzm1 = md.grid->nz() - 1;
  BoundaryOps out;
  out.W_top.resize(ns, 2);
  out.W_bot.resize(ns, 2);
  out.V_top.resize(ns);
  out.V_bot.resize(ns);
  out.G_top.resize(ns, 2);
  out.G_bot.resize(ns, 2);

  Eigen::VectorXd xt = xi_t.values.size()
                           ? mean_zero(xi_t.values)
                           : Eigen::VectorXd::Zero(ns);

  for (int side = 0; side < 2; ++side) {
    const bool top = side == 0;
    const int jrow = top ? nzm1 : 0;
    const double beta = top ? beta2 : beta1;
    for (int i = 0; i < ns; ++i) {
      NodeMap n = node_map(md, i, jrow);
      // unit moved normal at the image point and reference frames
      double nm[2], nr[2], tau[2], taum[2];
      if (top) {
        double lm = std::hypot(md.Nmov_x[i], md.Nmov_z[i]);
        nm[0] = md.Nmov_x[i] / lm;
        nm[1] = md.Nmov_z[i] / lm;
        double lr = std::hypot(md.Nref_x[i], md.Nref_z[i]);
        nr[0] = md.Nref_x[i] / lr;
        nr[1] = md.Nref_z[i] / lr;
        tau[0] = 1.0;
        tau[1] = -md.Nref_x[i];  // (1, etaS')
        taum[0] = 1.0;
        taum[1] = -md.Nmov_x[i];  // (1, eta')
      } else {
        nm[0] = 0.0; nm[1] = -1.0;
        nr[0] = 0.0; nr[1] = -1.0;
        tau[0] = 1.0; tau[1] = 0.0;
        taum[0] = 1.0; taum[1] = 0.0;
      }
      double Txt[2] = {0.0, top ? xt[i] : 0.0};

      double W[2];
      for (int k = 0; k < 2; ++k) {
        double s = 0.0;
        for (int jj = 0; jj < 2; ++jj)
          for (int m = 0; m < 2; ++m)
            s += nu * nm[jj] * (n.da[jj][k][m] + n.da[k][jj][m]) * v.u[m](i, jrow);
        double sl = 0.0;
        for (int jj = 0; jj < 2; ++jj) sl += n.a[k][jj] * v.u[jj](i, jrow);
        s += beta * (sl - Txt[k]);
        for (int jj = 0; jj < 2; ++jj)
          for (int m = 0; m < 2; ++m)
            for (int q = 0; q < 2; ++q)
              s += nu * nm[jj] * (n.a[k][m] * v.du[m][q](i, jrow) * n.dY[q][jj] +
                                  n.a[jj][m] * v.du[m][q](i, jrow) * n.dY[q][k]);
        W[k] = s;
      }

      // flat Navier expression against the reference frame
      double flat[2];
      for (int k = 0; k < 2; ++k) {
        double s = beta * (v.u[k](i, jrow) - Txt[k]);
        for (int jj = 0; jj < 2; ++jj)
          s += nu * (v.du[k][jj](i, jrow) + v.du[jj][k](i, jrow)) * nr[jj];
        flat[k] = s;
      }

      double V = 0.0;
      for (int k = 0; k < 2; ++k)
        V += flat[k] * (tau[k] - taum[k]) + (flat[k] - W[k]) * taum[k];

      double tau2 = tau[0] * tau[0] + tau[1] * tau[1];
      if (top) {
        out.W_top.row(i) << W[0], W[1];
        out.V_top[i] = V;
        out.G_top.row(i) << V * tau[0] / tau2, V * tau[1] / tau2;
      } else {
        out.W_bot.row(i) << W[0], W[1];
        out.V_bot[i] = V;
        out.G_bot.row(i) << V * tau[0], V * tau[1];
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

StationaryState StationaryState::zero(const ChannelGrid& grid, double nu,
                                      double alpha, double delta, double beta1,
                                      double beta2) {
  StationaryState st;
  st.grid = grid;
  st.etaS = PlateProfile::zero(grid.torus);
  st.wS.ux = Field::Zero(grid.ns(), grid.nz());
  st.wS.uz = Field::Zero(grid.ns(), grid.nz());
  st.pS = Field::Zero(grid.ns(), grid.nz());
  st.nu = nu;
  st.alpha = alpha;
  st.delta = delta;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.residual_norm = 0.0;
  return st;
}

double StationaryState::wS_sup_norm() const {
  double m = 0.0;
  if (wS.ux.size()) m = std::max(wS.ux.cwiseAbs().maxCoeff(), wS.uz.cwiseAbs().maxCoeff());
  return m;
}

int plate_coeff_dim(const ChannelGrid& grid) { return grid.ns() - 2; }

Eigen::VectorXd plate_coeffs_to_values(const ChannelGrid& grid, const Eigen::VectorXd& c) {
  const int ns = grid.ns();
  Eigen::VectorXd slots = Eigen::VectorXd::Zero(ns);
  slots.segment(1, ns - 2) = c;
  return fourier::synthesis(ns) * slots;
}

Eigen::VectorXd plate_values_to_coeffs(const ChannelGrid& grid, const Eigen::VectorXd& v) {
  const int ns = grid.ns();
  Eigen::VectorXd slots = fourier::analysis(ns) * v;
  return slots.segment(1, ns - 2);
}

GateauxResult gateaux(const std::function<Eigen::MatrixXd(double)>& map, double h,
                      double tol_rel) {
  Eigen::MatrixXd d1 = (map(h) - map(-h)) / (2.0 * h);
  Eigen::MatrixXd d2 = (map(h / 2) - map(-h / 2)) / h;
  GateauxResult r;
  r.value = (4.0 * d2 - d1) / 3.0;
  double scale = r.value.norm();
  r.rel_disagreement = (r.value - d2).norm() / (scale > 0 ? scale : 1.0);
  r.converged = r.rel_disagreement <= tol_rel;
  return r;
}

namespace {

Eigen::MatrixXd stack_matrix(const MatrixField& E) {
  const auto ns = E.m[0][0].rows(), nz = E.m[0][0].cols();
  Eigen::MatrixXd out(ns, 4 * nz);
  out << E.m[0][0], E.m[0][1], E.m[1][0], E.m[1][1];
  return out;
}

MatrixField unstack_matrix(const Eigen::MatrixXd& s) {
  MatrixField E;
  const auto ns = s.rows();
  const auto nz = s.cols() / 4;
  E.m[0][0] = s.middleCols(0, nz);
  E.m[0][1] = s.middleCols(nz, nz);
  E.m[1][0] = s.middleCols(2 * nz, nz);
  E.m[1][1] = s.middleCols(3 * nz, nz);
  (void)ns;
  return E;
}

Eigen::MatrixXd stack_fluid(const FluidField& f) {
  Eigen::MatrixXd out(f.ux.rows(), 2 * f.ux.cols());
  out << f.ux, f.uz;
  return out;
}

FluidField unstack_fluid(const Eigen::MatrixXd& s) {
  FluidField f;
  const auto nz = s.cols() / 2;
  f.ux = s.middleCols(0, nz);
  f.uz = s.middleCols(nz, nz);
  return f;
}

PlateProfile scaled_profile(const ChannelGrid& grid, const Eigen::VectorXd& values,
                            double h) {
  PlateProfile p;
  p.grid = grid.torus;
  p.values = h * values;
  p.mean_zero = true;
  return p;
}

}  // namespace

FluidField volume_rest(const StationaryState& st, const PlateProfile& xi,
                       const PlateProfile& xi_t) {
  DomainOps ref_ops(st.grid, st.etaS);
  MapData md = build_map(st.grid, st.etaS, xi, xi_t);
  VelocityDerivs vS = velocity_derivs(ref_ops, st.wS, true);
  FluidField f1 = op_F1(md, vS, st.nu);
  Field pSx = ref_ops.dx(st.pS), pSz = ref_ops.dz(st.pS);
  FluidField gd = op_grad_defect(md, pSx, pSz);
  FluidField mm = op_M(md, vS);
  FluidField nn = op_N(md, vS);
  const int ns = st.grid.ns(), nz = st.grid.nz();
  FluidField out;
  out.ux.resize(ns, nz);
  out.uz.resize(ns, nz);
  // (wS . grad) wS
  Field conv_x = st.wS.ux.cwiseProduct(vS.du[0][0]) + st.wS.uz.cwiseProduct(vS.du[0][1]);
  Field conv_z = st.wS.ux.cwiseProduct(vS.du[1][0]) + st.wS.uz.cwiseProduct(vS.du[1][1]);
  out.ux = -f1.ux + gd.ux + mm.ux + nn.ux + conv_x;
  out.uz = -f1.uz + gd.uz + mm.uz + nn.uz + conv_z;
  if (st.fS) {
    Eigen::ArrayXd e = st.etaS.values.array() + xi.values.array();
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < nz; ++j) {
        double det = (1.0 + e[i]) / (1.0 + st.etaS.values[i]);
        double hgt = st.grid.z[j] * (1.0 + e[i]);  // image height
        Eigen::Vector2d fx = st.fS(st.grid.s[i], hgt);
        double hgt0 = st.grid.z[j] * (1.0 + st.etaS.values[i]);
        Eigen::Vector2d f0 = st.fS(st.grid.s[i], hgt0);
        out.ux(i, j) += det * fx[0] - f0[0];
        out.uz(i, j) += det * fx[1] - f0[1];
      }
  }
  return out;
}

LinearizedBlocks linearize(const StationaryState& st, double h, double tol_rel) {
  LinearizedBlocks lb;
  const int nd = plate_coeff_dim(st.grid);
  DomainOps ref_ops(st.grid, st.etaS);
  VelocityDerivs vS = velocity_derivs(ref_ops, st.wS, true);
  PlateProfile zero = PlateProfile::zero(st.grid.torus);
  const int ns = st.grid.ns();

  lb.L1.resize(nd);
  lb.L21.resize(nd);
  lb.L22.resize(nd);
  lb.L3_top.resize(nd);
  lb.L3_bot.resize(nd);
  Eigen::VectorXd etaS_s = st.etaS.derivative(0).values;

  Eigen::VectorXd kb = fourier::slot_wavenumbers(ns, st.grid.torus.L1);
  for (int d = 0; d < nd; ++d) {
    Eigen::VectorXd cdir = Eigen::VectorXd::Zero(nd);
    cdir[d] = 1.0;
    Eigen::VectorXd dirv = plate_coeffs_to_values(st.grid, cdir);
    // truncation of the central difference grows with the mode wavenumber
    double hd = h / std::max(1.0, kb[d + 1]);

    auto mapE = [&](double t) {
      MapData md = build_map(st.grid, st.etaS, scaled_profile(st.grid, dirv, t), zero);
      return stack_matrix(op_E(md, vS, st.nu));
    };
    GateauxResult gE = gateaux(mapE, hd, tol_rel);
    lb.L1[d] = unstack_matrix(gE.value);

    auto mapR = [&](double t) {
      return stack_fluid(volume_rest(st, scaled_profile(st.grid, dirv, t), zero));
    };
    GateauxResult gR = gateaux(mapR, hd, tol_rel);
    lb.L21[d] = unstack_fluid(gR.value);

    // L^{2,2} is exactly linear in xi_t; evaluate directly.
    lb.L22[d] = volume_rest(st, zero, scaled_profile(st.grid, dirv, 1.0));

    auto mapV = [&](double t) {
      MapData md = build_map(st.grid, st.etaS, scaled_profile(st.grid, dirv, t), zero);
      BoundaryOps b = boundary_ops(md, vS, zero, st.nu, st.beta1, st.beta2);
      Eigen::MatrixXd out(ns, 2);
      out.col(0) = b.V_top;
      out.col(1) = b.V_bot;
      return out;
    };
    GateauxResult gV = gateaux(mapV, hd, tol_rel);

    // L3 . tau = -lin V - (L1 n) . tau, per boundary.
    Eigen::VectorXd l3t(ns), l3b(ns);
    const int jt = st.grid.nz() - 1;
    for (int i = 0; i < ns; ++i) {
      double Nx = -etaS_s[i], Nz2 = 1.0;
      double nl = std::hypot(Nx, Nz2);
      double n_t[2] = {Nx / nl, Nz2 / nl};
      double tau_t[2] = {1.0, etaS_s[i]};
      double l1n[2];
      for (int r = 0; r < 2; ++r)
        l1n[r] = lb.L1[d].m[r][0](i, jt) * n_t[0] + lb.L1[d].m[r][1](i, jt) * n_t[1];
      l3t[i] = -gV.value(i, 0) - (l1n[0] * tau_t[0] + l1n[1] * tau_t[1]);
      double l1nb[2];
      for (int r = 0; r < 2; ++r)
        l1nb[r] = -lb.L1[d].m[r][1](i, 0);  // n = (0,-1) at the bottom
      l3b[i] = -gV.value(i, 1) - l1nb[0];
    }
    lb.L3_top[d] = l3t;
    lb.L3_bot[d] = l3b;

    lb.max_rel_disagreement = std::max(
        {lb.max_rel_disagreement, gE.rel_disagreement, gR.rel_disagreement,
         gV.rel_disagreement});
    lb.converged = lb.converged && gE.converged && gR.converged && gV.converged;
  }
  return lb;
}

MatrixField LinearizedBlocks::eval_L1(const ChannelGrid& g,
                                      const Eigen::VectorXd& c) const {
  MatrixField out;
  out.setZero(g.ns(), g.nz());
  for (int d = 0; d < static_cast<int>(L1.size()); ++d)
    if (c[d] != 0.0)
      for (int r = 0; r < 2; ++r)
        for (int cc = 0; cc < 2; ++cc) out.m[r][cc] += c[d] * L1[d].m[r][cc];
  return out;
}

FluidField LinearizedBlocks::eval_L21(const ChannelGrid& g,
                                      const Eigen::VectorXd& c) const {
  FluidField out;
  out.ux = Field::Zero(g.ns(), g.nz());
  out.uz = Field::Zero(g.ns(), g.nz());
  for (int d = 0; d < static_cast<int>(L21.size()); ++d)
    if (c[d] != 0.0) {
      out.ux += c[d] * L21[d].ux;
      out.uz += c[d] * L21[d].uz;
    }
  return out;
}

FluidField LinearizedBlocks::eval_L22(const ChannelGrid& g,
                                      const Eigen::VectorXd& c) const {
  FluidField out;
  out.ux = Field::Zero(g.ns(), g.nz());
  out.uz = Field::Zero(g.ns(), g.nz());
  for (int d = 0; d < static_cast<int>(L22.size()); ++d)
    if (c[d] != 0.0) {
      out.ux += c[d] * L22[d].ux;
      out.uz += c[d] * L22[d].uz;
    }
  return out;
}

Eigen::VectorXd LinearizedBlocks::eval_L3_top(const Eigen::VectorXd& c) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(L3_top.empty() ? 0 : L3_top[0].size());
  for (int d = 0; d < static_cast<int>(L3_top.size()); ++d)
    if (c[d] != 0.0) out += c[d] * L3_top[d];
  return out;
}

Eigen::VectorXd LinearizedBlocks::eval_L3_bot(const Eigen::VectorXd& c) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(L3_bot.empty() ? 0 : L3_bot[0].size());
  for (int d = 0; d < static_cast<int>(L3_bot.size()); ++d)
    if (c[d] != 0.0) out += c[d] * L3_bot[d];
  return out;
}

FluidField interior_F(const StationaryState& st, const MapData& md,
                      const FluidField& u, const Field& p, const FluidField& u_t) {
  DomainOps ref_ops(st.grid, st.etaS);
  FluidField tot;
  tot.ux = u.ux + st.wS.ux;
  tot.uz = u.uz + st.wS.uz;
  VelocityDerivs vt = velocity_derivs(ref_ops, tot, true);
  VelocityDerivs vu = velocity_derivs(ref_ops, u, true);
  Field ptot = p + st.pS;
  FluidField lap = op_lap_defect(md, vt, st.nu);
  FluidField gd = op_grad_defect(md, ref_ops.dx(ptot), ref_ops.dz(ptot));
  FluidField mm = op_M(md, vt);
  FluidField nn = op_N(md, vt);
  FluidField kt = op_K(md, u_t);
  VelocityDerivs vS = velocity_derivs(ref_ops, st.wS, false);
  Field oseen_x = u.ux.cwiseProduct(vS.du[0][0]) + u.uz.cwiseProduct(vS.du[0][1]) +
                  st.wS.ux.cwiseProduct(vu.du[0][0]) + st.wS.uz.cwiseProduct(vu.du[0][1]) +
                  st.wS.ux.cwiseProduct(vS.du[0][0]) + st.wS.uz.cwiseProduct(vS.du[0][1]);
  Field oseen_z = u.ux.cwiseProduct(vS.du[1][0]) + u.uz.cwiseProduct(vS.du[1][1]) +
                  st.wS.ux.cwiseProduct(vu.du[1][0]) + st.wS.uz.cwiseProduct(vu.du[1][1]) +
                  st.wS.ux.cwiseProduct(vS.du[1][0]) + st.wS.uz.cwiseProduct(vS.du[1][1]);
  FluidField out;
  out.ux = (u_t.ux - kt.ux) + lap.ux + gd.ux + mm.ux + nn.ux + oseen_x;
  out.uz = (u_t.uz - kt.uz) + lap.uz + gd.uz + mm.uz + nn.uz + oseen_z;
  if (st.fS) {
    const int ns = st.grid.ns(), nz = st.grid.nz();
    Eigen::ArrayXd e = st.etaS.values.array() + md.xi.values.array();
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < nz; ++j) {
        double det = (1.0 + e[i]) / (1.0 + st.etaS.values[i]);
        Eigen::Vector2d fx = st.fS(st.grid.s[i], st.grid.z[j] * (1.0 + e[i]));
        Eigen::Vector2d f0 =
            st.fS(st.grid.s[i], st.grid.z[j] * (1.0 + st.etaS.values[i]));
        out.ux(i, j) += det * fx[0] - f0[0];
        out.uz(i, j) += det * fx[1] - f0[1];
      }
  }
  return out;
}

namespace {

struct RemainderParts {
  MatrixField NE;
  FluidField NF;
  FluidField Fcal;
  Eigen::VectorXd bdy_top, bdy_bot;   // full boundary remainder
  Eigen::VectorXd NG_top, NG_bot;     // stationary-part boundary remainder
  Eigen::VectorXd Gbdy_top, Gbdy_bot; // perturbation boundary nonlinearity
  Eigen::VectorXd plate;              // full plate remainder
  Eigen::VectorXd Hrem;               // stationary-part plate remainder
};

RemainderParts remainder_parts(const StationaryState& st, const LinearizedBlocks& lin,
                               const FluidField& u, const Field& p,
                               const PlateProfile& xi, const PlateProfile& xi_t,
                               const FluidField* u_t) {
  DomainOps ref_ops(st.grid, st.etaS);
  const int ns = st.grid.ns(), nz = st.grid.nz();
  const int jt = nz - 1;
  MapData md = build_map(st.grid, st.etaS, xi, xi_t);
  Eigen::VectorXd xc = plate_values_to_coeffs(st.grid, xi.values);
  Eigen::VectorXd xtc = plate_values_to_coeffs(st.grid, xi_t.values);

  VelocityDerivs vS = velocity_derivs(ref_ops, st.wS, true);
  RemainderParts rp;

  // N_E = E(wS) - L1 xi
  rp.NE = op_E(md, vS, st.nu);
  MatrixField L1x = lin.eval_L1(st.grid, xc);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) rp.NE.m[r][c] -= L1x.m[r][c];

  // N_F = volume_rest - L21 xi - L22 xi_t
  FluidField vr = volume_rest(st, xi, xi_t);
  FluidField l21 = lin.eval_L21(st.grid, xc);
  FluidField l22 = lin.eval_L22(st.grid, xtc);
  rp.NF.ux = vr.ux - l21.ux - l22.ux;
  rp.NF.uz = vr.uz - l21.uz - l22.uz;

  // F(u, p, xi; u_t)
  FluidField zero_ut;
  zero_ut.ux = Field::Zero(ns, nz);
  zero_ut.uz = Field::Zero(ns, nz);
  const FluidField& ut = u_t ? *u_t : zero_ut;
  VelocityDerivs vu = velocity_derivs(ref_ops, u, true);
  {
    FluidField lap = op_lap_defect(md, vu, st.nu);
    FluidField gd = op_grad_defect(md, ref_ops.dx(p), ref_ops.dz(p));
    FluidField mm = op_M(md, vu);
    FluidField kt = op_K(md, ut);
    // F2 = N(u+wS) - N(wS) + (u.grad)wS + (wS.grad)u
    FluidField tot;
    tot.ux = u.ux + st.wS.ux;
    tot.uz = u.uz + st.wS.uz;
    VelocityDerivs vtot = velocity_derivs(ref_ops, tot, false);
    FluidField ntot = op_N(md, vtot);
    FluidField nS = op_N(md, vS);
    Field f2x = ntot.ux - nS.ux + u.ux.cwiseProduct(vS.du[0][0]) +
                u.uz.cwiseProduct(vS.du[0][1]) + st.wS.ux.cwiseProduct(vu.du[0][0]) +
                st.wS.uz.cwiseProduct(vu.du[0][1]);
    Field f2z = ntot.uz - nS.uz + u.ux.cwiseProduct(vS.du[1][0]) +
                u.uz.cwiseProduct(vS.du[1][1]) + st.wS.ux.cwiseProduct(vu.du[1][0]) +
                st.wS.uz.cwiseProduct(vu.du[1][1]);
    rp.Fcal.ux = (ut.ux - kt.ux) + lap.ux + gd.ux + mm.ux + f2x;
    rp.Fcal.uz = (ut.uz - kt.uz) + lap.uz + gd.uz + mm.uz + f2z;
  }

  // Boundary remainders. Stationary part first (xi_t rides with u).
  PlateProfile zero = PlateProfile::zero(st.grid.torus);
  BoundaryOps bS = boundary_ops(md, vS, zero, st.nu, st.beta1, st.beta2);
  // linear boundary values: -(L1 xi) n . tau - L3 xi
  Eigen::VectorXd linV_top(ns), linV_bot(ns);
  Eigen::VectorXd l3t = lin.eval_L3_top(xc), l3b = lin.eval_L3_bot(xc);
  Eigen::VectorXd etaS_s = st.etaS.derivative(0).values;
  for (int i = 0; i < ns; ++i) {
    double Nx = -etaS_s[i], Nz2 = 1.0;
    double nl = std::hypot(Nx, Nz2);
    double nt[2] = {Nx / nl, Nz2 / nl};
    double tau[2] = {1.0, etaS_s[i]};
    double l1n[2];
    for (int r = 0; r < 2; ++r)
      l1n[r] = L1x.m[r][0](i, jt) * nt[0] + L1x.m[r][1](i, jt) * nt[1];
    linV_top[i] = -(l1n[0] * tau[0] + l1n[1] * tau[1]) - l3t[i];
    double l1nb0 = -L1x.m[0][1](i, 0);
    linV_bot[i] = -l1nb0 - l3b[i];
  }
  rp.NG_top = bS.V_top - linV_top;
  rp.NG_bot = bS.V_bot - linV_bot;
  // add back the N_E n . tau part: NG = (V(wS) - lin) + (NE n).tau
  for (int i = 0; i < ns; ++i) {
    double Nx = -etaS_s[i], Nz2 = 1.0;
    double nl = std::hypot(Nx, Nz2);
    double nt[2] = {Nx / nl, Nz2 / nl};
    double tau[2] = {1.0, etaS_s[i]};
    double nen[2];
    for (int r = 0; r < 2; ++r)
      nen[r] = rp.NE.m[r][0](i, jt) * nt[0] + rp.NE.m[r][1](i, jt) * nt[1];
    rp.NG_top[i] += nen[0] * tau[0] + nen[1] * tau[1];
    rp.NG_bot[i] += -rp.NE.m[0][1](i, 0);
  }

  BoundaryOps bu = boundary_ops(md, vu, xi_t, st.nu, st.beta1, st.beta2);
  rp.Gbdy_top = bu.V_top;
  rp.Gbdy_bot = bu.V_bot;

  rp.bdy_top = bS.V_top + bu.V_top - linV_top;
  rp.bdy_bot = bS.V_bot + bu.V_bot - linV_bot;

  // Plate remainders: H(u+wS, eta) + T*(L1 xi n).
  FluidField tot;
  tot.ux = u.ux + st.wS.ux;
  tot.uz = u.uz + st.wS.uz;
  VelocityDerivs vtot = velocity_derivs(ref_ops, tot, false);
  Eigen::VectorXd Htot = plate_force_H(md, vtot, st.nu);
  Eigen::VectorXd HS = plate_force_H(md, vS, st.nu);
  Eigen::VectorXd l1n_x(ns), l1n_z(ns);
  for (int i = 0; i < ns; ++i) {
    double Nx = -etaS_s[i], Nz2 = 1.0;
    double nl = std::hypot(Nx, Nz2);
    double nt[2] = {Nx / nl, Nz2 / nl};
    l1n_x[i] = L1x.m[0][0](i, jt) * nt[0] + L1x.m[0][1](i, jt) * nt[1];
    l1n_z[i] = L1x.m[1][0](i, jt) * nt[0] + L1x.m[1][1](i, jt) * nt[1];
  }
  Eigen::VectorXd tsl1 = Tstar_top(md, l1n_x, l1n_z);
  rp.plate = Htot + tsl1;
  rp.Hrem = HS + tsl1;
  return rp;
}

}  // namespace

NonlinearResidual nonlinear_remainder(const StationaryState& st,
                                      const LinearizedBlocks& lin,
                                      const FluidField& u, const Field& p,
                                      const PlateProfile& xi, const PlateProfile& xi_t,
                                      const FluidField* u_t) {
  RemainderParts rp = remainder_parts(st, lin, u, p, xi, xi_t, u_t);
  DomainOps ref_ops(st.grid, st.etaS);
  FluidField divNE = divergence(ref_ops, rp.NE);
  NonlinearResidual out;
  out.interior.ux = rp.Fcal.ux + divNE.ux + rp.NF.ux;
  out.interior.uz = rp.Fcal.uz + divNE.uz + rp.NF.uz;
  out.bdy_top = rp.bdy_top;
  out.bdy_bot = rp.bdy_bot;
  out.plate = rp.plate;
  return out;
}

ChannelNorms remainder_channels(const StationaryState& st, const LinearizedBlocks& lin,
                                const FluidField& u, const Field& p,
                                const PlateProfile& xi, const PlateProfile& xi_t,
                                const FluidField* u_t) {
  RemainderParts rp = remainder_parts(st, lin, u, p, xi, xi_t, u_t);
  DomainOps ref_ops(st.grid, st.etaS);
  auto fnorm = [&](const Field& f) { return ref_ops.integrate(f.cwiseProduct(f)); };
  ChannelNorms c{};
  c.NE = std::sqrt(fnorm(rp.NE.m[0][0]) + fnorm(rp.NE.m[0][1]) + fnorm(rp.NE.m[1][0]) +
                   fnorm(rp.NE.m[1][1]));
  c.NF = std::sqrt(fnorm(rp.NF.ux) + fnorm(rp.NF.uz));
  c.Fcal = std::sqrt(fnorm(rp.Fcal.ux) + fnorm(rp.Fcal.uz));
  double wTop = 0.0, wBot = 0.0, gTop = 0.0, gBot = 0.0;
  Eigen::VectorXd etaS_s = st.etaS.derivative(0).values;
  for (int i = 0; i < st.grid.ns(); ++i) {
    double wt = st.grid.ws[i] * std::hypot(etaS_s[i], 1.0);
    double wb = st.grid.ws[i];
    wTop += wt * rp.NG_top[i] * rp.NG_top[i];
    wBot += wb * rp.NG_bot[i] * rp.NG_bot[i];
    gTop += wt * rp.Gbdy_top[i] * rp.Gbdy_top[i];
    gBot += wb * rp.Gbdy_bot[i] * rp.Gbdy_bot[i];
  }
  c.NG = std::sqrt(wTop + wBot);
  c.Gbdy = std::sqrt(gTop + gBot);
  double hn = 0.0;
  for (int i = 0; i < st.grid.ns(); ++i) hn += st.grid.ws[i] * rp.Hrem[i] * rp.Hrem[i];
  c.Hrem = std::sqrt(hn);
  return c;
}

FluidField steady_residual(const MapData& md, const DomainOps& ref_ops,
                           const FluidField& u, const Field& p, double nu) {
  VelocityDerivs v = velocity_derivs(ref_ops, u, true);
  Field px = ref_ops.dx(p), pz = ref_ops.dz(p);
  FluidField lap = op_lap_defect(md, v, nu);
  FluidField gd = op_grad_defect(md, px, pz);
  FluidField nn = op_N(md, v);
  FluidField out;
  // -div T(u, p) = grad p - nu (lap u + grad div u)
  out.ux = px - nu * (v.d2u[0][0][0] + v.d2u[0][1][1] + v.d2u[0][0][0] + v.d2u[1][0][1]) -
           lap.ux - gd.ux - nn.ux;
  out.uz = pz - nu * (v.d2u[1][0][0] + v.d2u[1][1][1] + v.d2u[0][0][1] + v.d2u[1][1][1]) -
           lap.uz - gd.uz - nn.uz;
  return out;
}

}  // namespace fsplate::ops
